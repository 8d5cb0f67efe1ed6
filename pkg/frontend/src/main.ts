import { boot } from "./app.js";

const host = document.getElementById("app");
if (host) {
  boot(host, "").catch((err) => {
    host.textContent = `failed to load runs: ${err}`;
  });
}
