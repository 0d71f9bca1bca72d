import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the fidelity test synthesizes a dataset and boots the real API server
    testTimeout: 300_000,
    hookTimeout: 300_000,
    fileParallelism: false,
  },
});
