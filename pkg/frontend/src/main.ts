/** Boot: collect token + coder id, register the session, start the app. */

import { ValidationApi } from "./api.js";
import { App } from "./app.js";
import { CodingSession } from "./session.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const params = new URLSearchParams(window.location.search);
  const token = params.get("token") ?? window.sessionStorage.getItem("study_token")
    ?? window.prompt("Study token:") ?? "";
  const coderId = params.get("coder") ?? window.sessionStorage.getItem("coder_id")
    ?? window.prompt("Your coder id:") ?? "";
  if (!token || !coderId) {
    root.innerHTML = "<p class='banner error'>A study token and coder id are required.</p>";
    return;
  }
  window.sessionStorage.setItem("study_token", token);
  window.sessionStorage.setItem("coder_id", coderId);

  const api = new ValidationApi(token);
  try {
    await api.registerSession(coderId);
    const scheme = await api.getScheme();
    const session = new CodingSession(api, scheme, coderId);
    const app = new App(root, api, scheme, session, coderId);
    await app.start();
  } catch (err) {
    root.innerHTML = `<div class="banner error">${String(err)}
      <button onclick="window.location.reload()">Retry</button></div>`;
  }
}

void boot();
