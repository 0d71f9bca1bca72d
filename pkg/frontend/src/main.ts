import { App } from "./app";

function boot(): void {
  const host = document.getElementById("app");
  if (host) new App(host);
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
