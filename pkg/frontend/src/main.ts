import { createApiClient } from "./api.js";
import { mountExplorer } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  mountExplorer(document, createApiClient());
});
