import { GatewayClient } from "./gateway.js";
import { ConsoleController } from "./controller.js";
import { render } from "./render.js";

const REFRESH_MS = 2000;

// served from the gateway's /console mount by default; ?gateway=http://host:port
// points the console somewhere else
const params = new URLSearchParams(window.location.search);
const base = params.get("gateway") ?? "";

const client = new GatewayClient(base);
const controller = new ConsoleController(client, () => render(controller));

const slider = document.getElementById("threshold-slider") as HTMLInputElement;
const entry = document.getElementById("threshold-entry") as HTMLInputElement;
const applyButton = document.getElementById("threshold-apply") as HTMLButtonElement;

slider.addEventListener("input", () => {
  const grid = controller.state.curve;
  if (!grid) return;
  const index = Number(slider.value);
  const point = grid[index];
  if (point) controller.setSlider(point.threshold);
});

slider.addEventListener("change", () => {
  const grid = controller.state.curve;
  if (!grid) return;
  const point = grid[Number(slider.value)];
  if (point) void controller.applyThreshold(point.threshold);
});

applyButton.addEventListener("click", () => {
  const value = Number(entry.value);
  if (!Number.isNaN(value)) void controller.applyThreshold(value);
});

entry.addEventListener("keydown", (event) => {
  if (event.key === "Enter") applyButton.click();
});

void controller.start();
window.setInterval(() => void controller.refresh(), REFRESH_MS);
