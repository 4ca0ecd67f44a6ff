import { defineConfig } from "vitest/config";

// The live test talks to a real service; giving the page that origin keeps
// fetch same-origin, exactly as when the service serves the page itself.
const serviceUrl = process.env.NNDIALOG_SERVICE_URL ?? "http://localhost:3000";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    environmentOptions: {
      happyDOM: { url: serviceUrl },
    },
  },
});
