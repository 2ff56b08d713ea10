import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the walkthrough spawns the real service and runs sandboxed code
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
