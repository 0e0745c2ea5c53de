import { GameApi } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const mount = document.getElementById("app");
if (!mount) throw new Error("missing #app mount point");

const app = new App(new GameApi(base), mount);
document.addEventListener("keydown", (event) => app.handleKey(event));
void app.showLobby();
