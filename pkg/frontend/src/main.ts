import { ServiceClient } from "./api.js";
import { ReviewApp } from "./app.js";
import { ReviewSession } from "./session.js";

const params = new URLSearchParams(window.location.search);
const service = params.get("service") ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
const session = new ReviewSession(new ServiceClient(service));
new ReviewApp(root, session);
