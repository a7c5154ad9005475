/**
 * Reader/writer for the `.hf8t` tensor container.
 *
 * Layout: magic "HF8T", version byte (1), dtype byte, rank byte, then
 * rank little-endian u32 dims and the row-major payload.  This module
 * only moves bytes; float16/bfloat16 payloads stay as raw bit patterns
 * (Uint16Array) because all numeric interpretation belongs to the
 * backing library.
 */

import { readFileSync, writeFileSync } from "node:fs";

export type DType = "fp32" | "hif8" | "fp16" | "bf16";

export type TensorData = Float32Array | Uint8Array | Uint16Array;

export interface Tensor {
  dtype: DType;
  dims: number[];
  /** fp32 -> Float32Array; hif8 codes -> Uint8Array; fp16/bf16 bits -> Uint16Array. */
  data: TensorData;
}

export class TensorFileError extends Error {}

const MAGIC = [0x48, 0x46, 0x38, 0x54]; // "HF8T"
const VERSION = 1;

const DTYPE_CODE: Record<DType, number> = { fp32: 0, hif8: 1, fp16: 2, bf16: 3 };
const CODE_DTYPE: DType[] = ["fp32", "hif8", "fp16", "bf16"];
const ITEM_SIZE: Record<DType, number> = { fp32: 4, hif8: 1, fp16: 2, bf16: 2 };

function checkData(dtype: DType, data: TensorData): void {
  const want =
    dtype === "fp32" ? Float32Array : dtype === "hif8" ? Uint8Array : Uint16Array;
  if (!(data instanceof want)) {
    throw new TensorFileError(`${dtype} tensors need ${want.name} data`);
  }
}

/** Build a tensor, defaulting dims to [length]. */
export function tensor(dtype: DType, data: TensorData, dims?: number[]): Tensor {
  checkData(dtype, data);
  const shape = dims ?? [data.length];
  const count = shape.reduce((a, b) => a * b, 1);
  if (shape.length === 0 || count !== data.length) {
    throw new TensorFileError(`dims ${JSON.stringify(shape)} do not cover ${data.length} elements`);
  }
  return { dtype, dims: shape.slice(), data };
}

/** Convenience wrapper for float32 payloads. */
export function fromFloat32(values: Float32Array | number[], dims?: number[]): Tensor {
  const data = values instanceof Float32Array ? values : Float32Array.from(values);
  return tensor("fp32", data, dims);
}

export function encodeTensor(t: Tensor): Uint8Array {
  checkData(t.dtype, t.data);
  const rank = t.dims.length;
  if (rank === 0) throw new TensorFileError("rank must be >= 1");
  if (rank > 255) throw new TensorFileError(`rank ${rank} exceeds 255`);
  for (const d of t.dims) {
    if (!Number.isInteger(d) || d < 0 || d > 0xffffffff) {
      throw new TensorFileError(`dimension ${d} out of u32 range`);
    }
  }
  const headerLen = 7 + 4 * rank;
  const out = new Uint8Array(headerLen + t.data.byteLength);
  out.set(MAGIC, 0);
  out[4] = VERSION;
  out[5] = DTYPE_CODE[t.dtype];
  out[6] = rank;
  const view = new DataView(out.buffer);
  t.dims.forEach((d, i) => view.setUint32(7 + 4 * i, d, true));
  // Payload bytes are host-endian; the format is little-endian, which
  // matches every platform Node ships on.
  out.set(new Uint8Array(t.data.buffer, t.data.byteOffset, t.data.byteLength), headerLen);
  return out;
}

export function decodeTensor(bytes: Uint8Array): Tensor {
  if (bytes.length < 7) throw new TensorFileError("truncated header");
  if (!MAGIC.every((b, i) => bytes[i] === b)) {
    throw new TensorFileError("bad magic; not a tensor file");
  }
  if (bytes[4] !== VERSION) throw new TensorFileError(`unsupported version ${bytes[4]}`);
  const dtype = CODE_DTYPE[bytes[5]];
  if (dtype === undefined) throw new TensorFileError(`unknown dtype code ${bytes[5]}`);
  const rank = bytes[6];
  if (rank === 0) throw new TensorFileError("rank must be >= 1");
  const headerLen = 7 + 4 * rank;
  if (bytes.length < headerLen) throw new TensorFileError("truncated dims");
  const view = new DataView(bytes.buffer, bytes.byteOffset);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) dims.push(view.getUint32(7 + 4 * i, true));
  const count = dims.reduce((a, b) => a * b, 1);
  const payloadLen = count * ITEM_SIZE[dtype];
  if (bytes.length !== headerLen + payloadLen) {
    throw new TensorFileError(
      `payload is ${bytes.length - headerLen} bytes, expected ${payloadLen}`
    );
  }
  // Copy into a fresh aligned buffer before viewing as a typed array.
  const payload = new Uint8Array(payloadLen);
  payload.set(bytes.subarray(headerLen));
  const data: TensorData =
    dtype === "fp32"
      ? new Float32Array(payload.buffer)
      : dtype === "hif8"
        ? payload
        : new Uint16Array(payload.buffer);
  return { dtype, dims, data };
}

export function readTensor(path: string): Tensor {
  return decodeTensor(new Uint8Array(readFileSync(path)));
}

export function writeTensor(path: string, t: Tensor): void {
  writeFileSync(path, encodeTensor(t));
}
