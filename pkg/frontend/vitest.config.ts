import { defineConfig } from "vitest/config";

// Every test shells out to the backing executable, so give them room.
export default defineConfig({
  test: {
    testTimeout: 120_000,
  },
});
