import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import {
  decodeTensor,
  encodeTensor,
  fromFloat32,
  readTensor,
  tensor,
  TensorFileError,
  writeTensor,
} from "../src/tensorFile.js";

const hex = (bytes: Uint8Array) => Buffer.from(bytes).toString("hex");

const dir = mkdtempSync(join(tmpdir(), "hif8-tf-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

describe("container layout", () => {
  it("writes the golden header for a scalar code tensor", () => {
    const bytes = encodeTensor(tensor("hif8", Uint8Array.of(0x6e)));
    // magic, version, dtype, rank, one u32 dim, one payload byte
    expect(hex(bytes)).toBe("48463854" + "01" + "01" + "01" + "01000000" + "6e");
  });

  it("round-trips every dtype", () => {
    const tensors = [
      fromFloat32([1.5, -2.25, 0], [3, 1]),
      tensor("hif8", Uint8Array.from({ length: 256 }, (_, i) => i), [16, 16]),
      tensor("fp16", Uint16Array.of(0x3c00, 0xbc00, 0x7e00)),
      tensor("bf16", Uint16Array.of(0x3f80, 0xc000)),
    ];
    for (const t of tensors) {
      const back = decodeTensor(encodeTensor(t));
      expect(back.dtype).toBe(t.dtype);
      expect(back.dims).toEqual(t.dims);
      expect(hex(encodeTensor(back))).toBe(hex(encodeTensor(t)));
    }
  });

  it("round-trips through the filesystem", () => {
    const t = fromFloat32([0.40625, 32768], [2]);
    const path = join(dir, "t.hf8t");
    writeTensor(path, t);
    const back = readTensor(path);
    expect(Array.from(back.data as Float32Array)).toEqual([0.40625, 32768]);
  });

  it("supports zero-length dimensions", () => {
    const t = tensor("fp32", new Float32Array(0), [2, 0, 3]);
    expect(decodeTensor(encodeTensor(t)).dims).toEqual([2, 0, 3]);
  });
});

describe("validation", () => {
  const good = () => encodeTensor(fromFloat32([1, 2], [2]));

  it("rejects bad magic, version, dtype and rank", () => {
    const magic = good();
    magic[0] = 0x58;
    expect(() => decodeTensor(magic)).toThrow(TensorFileError);

    const version = good();
    version[4] = 2;
    expect(() => decodeTensor(version)).toThrow(/version/);

    const dtype = good();
    dtype[5] = 9;
    expect(() => decodeTensor(dtype)).toThrow(/dtype/);

    const rank = good();
    rank[6] = 0;
    expect(() => decodeTensor(rank)).toThrow(/rank/);
  });

  it("rejects truncated and trailing payloads", () => {
    expect(() => decodeTensor(good().subarray(0, 5))).toThrow(/truncated/);
    expect(() => decodeTensor(good().subarray(0, 9))).toThrow(TensorFileError);
    const extra = new Uint8Array(good().length + 1);
    extra.set(good());
    expect(() => decodeTensor(extra)).toThrow(/payload/);
  });

  it("rejects mismatched dims and data", () => {
    expect(() => tensor("fp32", new Float32Array(3), [2, 2])).toThrow(TensorFileError);
    expect(() => tensor("fp32", new Float32Array(3), [])).toThrow(TensorFileError);
    expect(() => tensor("fp16", new Float32Array(3) as never)).toThrow(/Uint16Array/);
  });
});
