// Entry point: resolve the API base URL and mount the app.
// Priority: ?api=<url> query parameter, then window.SNIPSEARCH_API,
// then same-origin.

import { createApp } from "./app.js";

declare global {
    interface Window {
        SNIPSEARCH_API?: string;
    }
}

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? window.SNIPSEARCH_API ?? "";

const root = document.getElementById("app");
if (!root) {
    throw new Error("missing #app mount point");
}
createApp(root, { apiBase });
