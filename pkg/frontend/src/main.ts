import { Client } from "./api.js";
import { App } from "./app.js";

// One annotator per browser session: the name survives reloads of the
// same tab but a new tab starts fresh.
const SESSION_KEY = "annotator-id";

function boot(annotatorId: string): void {
  document.getElementById("start-view")!.hidden = true;
  document.getElementById("annotator-name")!.textContent = annotatorId;
  const app = new App(new Client(), annotatorId);
  app.start().catch((err) => {
    const line = document.getElementById("reject-status")!;
    line.hidden = false;
    line.textContent = `Could not load the batch: ${err}. Reload to retry.`;
  });
}

const saved = sessionStorage.getItem(SESSION_KEY);
if (saved) {
  boot(saved);
} else {
  const input = document.getElementById("annotator-input") as HTMLInputElement;
  const button = document.getElementById("start-button") as HTMLButtonElement;
  const begin = () => {
    const name = input.value.trim();
    if (!name) {
      return;
    }
    sessionStorage.setItem(SESSION_KEY, name);
    boot(name);
  };
  button.addEventListener("click", begin);
  input.addEventListener("keydown", (e) => {
    if (e.key === "Enter") {
      begin();
    }
  });
  input.focus();
}
