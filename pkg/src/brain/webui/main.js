import { ApiClient } from "./api.js";
import { CuratorController } from "./controller.js";
import { mount } from "./view.js";
const user = new URLSearchParams(window.location.search).get("user") ?? "curator";
const controller = new CuratorController(new ApiClient(user));
mount(document.getElementById("app"), controller);
