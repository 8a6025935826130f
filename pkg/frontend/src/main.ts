import { ApiClient } from "./api.js";
import { ChatView } from "./chat.js";

// Entry point: ?session=<id> resumes an existing conversation, otherwise
// a fresh session is created on the service.
async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const api = new ApiClient("");
  const view = new ChatView(document, root, api);
  const sessionId = new URLSearchParams(window.location.search).get("session") ?? undefined;
  await view.start(sessionId);
}

void boot();
