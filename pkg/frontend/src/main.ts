import { AgreementPoller } from "./agreement.js";
import { ApiClient } from "./api.js";
import { Session } from "./session.js";
import { AgreementView, LabelView } from "./ui.js";

interface Settings {
  sampleId: string;
  annotator: string;
  token: string | null;
}

function readSettings(): Settings | null {
  const params = new URLSearchParams(window.location.search);
  const stored = window.localStorage.getItem("forumstrata-annotator");
  const annotator = params.get("annotator") ?? stored ?? "";
  const sampleId = params.get("sample") ?? "sample";
  const token = params.get("token") ?? window.localStorage.getItem("forumstrata-token");
  if (!annotator) return null;
  window.localStorage.setItem("forumstrata-annotator", annotator);
  if (token) window.localStorage.setItem("forumstrata-token", token);
  return { sampleId, annotator, token };
}

function renderLogin(root: HTMLElement): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "login";
  form.innerHTML = `
    <h2>Annotator sign-in</h2>
    <label>Annotator id <input name="annotator" required></label>
    <label>Access token (if required) <input name="token"></label>
    <button type="submit">Start</button>
  `;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    const annotator = String(data.get("annotator") ?? "");
    const token = String(data.get("token") ?? "");
    const params = new URLSearchParams(window.location.search);
    params.set("annotator", annotator);
    if (token) params.set("token", token);
    window.location.search = params.toString();
  });
  root.appendChild(form);
}

function route(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const settings = readSettings();
  if (!settings) {
    renderLogin(root);
    return;
  }
  const api = new ApiClient("", settings.token);
  if (window.location.hash === "#/agreement") {
    const poller = new AgreementPoller(api, settings.sampleId);
    new AgreementView(root, api, settings.sampleId, poller).mount();
  } else {
    const session = new Session(api, settings.sampleId, settings.annotator);
    new LabelView(root, session).mount();
    void session.start();
  }
}

window.addEventListener("hashchange", () => window.location.reload());
route();
