import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const service = params.get("service") ?? "http://127.0.0.1:8000";
const root = document.getElementById("app");
if (root) mountApp(root, service);
