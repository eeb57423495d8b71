import type { ConsoleController } from "./controller.js";
import type { CurvePoint } from "./curve.js";
import { sliderBounds } from "./curve.js";
import { formatThreshold } from "./wire.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(value: number, digits = 3): string {
  return Number.isFinite(value) ? value.toFixed(digits) : String(value);
}

function curveSvg(points: CurvePoint[], markerIndex: number | null): string {
  const width = 560;
  const height = 300;
  const pad = 40;
  const costs = points.map((p) => p.expectedCost);
  const accs = points.map((p) => p.accuracy);
  const costLo = Math.min(...costs);
  const costHi = Math.max(...costs);
  const accLo = Math.min(...accs);
  const accHi = Math.max(...accs);
  const x = (c: number) =>
    pad + (costHi > costLo ? ((c - costLo) / (costHi - costLo)) * (width - 2 * pad) : (width - 2 * pad) / 2);
  const y = (a: number) =>
    height - pad - (accHi > accLo ? ((a - accLo) / (accHi - accLo)) * (height - 2 * pad) : (height - 2 * pad) / 2);

  const path = points.map((p, i) => `${i === 0 ? "M" : "L"}${x(p.expectedCost).toFixed(1)},${y(p.accuracy).toFixed(1)}`).join(" ");
  const dots = points
    .map((p, i) => {
      const marked = i === markerIndex;
      return `<circle cx="${x(p.expectedCost).toFixed(1)}" cy="${y(p.accuracy).toFixed(1)}" r="${marked ? 7 : 3.5}"
        class="${marked ? "marker" : "dot"}"><title>threshold ${formatThreshold(p.threshold)}
accuracy ${fmt(p.accuracy)} cost ${fmt(p.expectedCost)} student ${fmt(p.studentFraction, 2)}</title></circle>`;
    })
    .join("");
  return `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="accuracy versus cost trade-off curve">
    <line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" class="axis"/>
    <line x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}" class="axis"/>
    <text x="${width / 2}" y="${height - 8}" class="axis-label">expected cost</text>
    <text x="14" y="${height / 2}" class="axis-label" transform="rotate(-90 14 ${height / 2})">accuracy</text>
    <path d="${path}" class="curve"/>
    ${dots}
  </svg>`;
}

export function render(controller: ConsoleController): void {
  const state = controller.state;

  const banner = el<HTMLDivElement>("banner");
  banner.classList.toggle("show", !state.connected);
  banner.textContent = state.connected
    ? ""
    : `gateway unreachable${state.lastError ? `: ${state.lastError}` : ""}`;

  const toast = el<HTMLDivElement>("toast");
  toast.classList.toggle("show", state.connected && state.lastError !== null);
  toast.textContent = state.lastError ?? "";

  const slider = el<HTMLInputElement>("threshold-slider");
  const entry = el<HTMLInputElement>("threshold-entry");
  const applyButton = el<HTMLButtonElement>("threshold-apply");
  for (const control of [slider, entry, applyButton]) control.disabled = !state.connected;

  if (state.config) {
    el("policy-line").textContent =
      `${state.config.policy.score_type} policy, threshold ${formatThreshold(controller.ackedThreshold() ?? NaN)}, ` +
      `task ${state.config.task}, degraded mode ${state.config.degraded_mode}`;
  }

  const stats = state.stats;
  if (stats) {
    el("stat-total").textContent = String(stats.total);
    el("stat-fraction").textContent = fmt(stats.student_fraction, 2);
    el("stat-student-latency").textContent = `${fmt(stats.mean_student_latency_ms, 2)} ms`;
    el("stat-total-latency").textContent = `${fmt(stats.mean_total_latency_ms, 2)} ms`;
    el("stat-cost").textContent = fmt(stats.estimated_cost, 3);
    const gauge = el<HTMLDivElement>("fraction-fill");
    gauge.style.width = `${Math.round(stats.student_fraction * 100)}%`;
  }

  const curvePanel = el<HTMLDivElement>("curve-panel");
  if (state.curve && state.curve.length > 0) {
    const markerIndex = controller.markerIndex();
    curvePanel.innerHTML = curveSvg(state.curve, markerIndex);
    const marked = markerIndex !== null ? state.curve[markerIndex] : undefined;
    el("estimate-line").textContent = marked
      ? `calibrated estimate at threshold ${formatThreshold(marked.threshold)}: ` +
        `accuracy ${fmt(marked.accuracy)}, cost ${fmt(marked.expectedCost)}, student fraction ${fmt(marked.studentFraction, 2)}`
      : "";

    const thresholds = state.curve.map((p) => p.threshold);
    slider.min = "0";
    slider.max = String(thresholds.length - 1);
    slider.step = "1";
    const current = state.sliderThreshold;
    if (current !== null) {
      let nearest = 0;
      for (let i = 1; i < thresholds.length; i++) {
        const d = thresholds[i]! === current ? -1 : Math.abs(thresholds[i]! - current);
        const b = thresholds[nearest]! === current ? -1 : Math.abs(thresholds[nearest]! - current);
        if (!Number.isNaN(d) && (Number.isNaN(b) || d < b)) nearest = i;
      }
      slider.value = String(nearest);
      el("slider-label").textContent = `slider threshold ${formatThreshold(current)}`;
    }
    const bounds = sliderBounds(state.curve);
    entry.placeholder = `${formatThreshold(bounds.lo)} to ${formatThreshold(bounds.hi)}`;
  } else {
    curvePanel.innerHTML = `<p class="placeholder">no calibration artifact</p>`;
    el("estimate-line").textContent = "";
  }

  const ticker = el<HTMLTableSectionElement>("ticker-body");
  const rows = state.events
    .slice()
    .reverse()
    .map((entry_) => {
      if (entry_.kind === "gap") {
        return `<tr class="gap"><td colspan="4">${entry_.note}</td></tr>`;
      }
      return `<tr class="${entry_.route}">
        <td>${entry_.id ?? "(direct)"}</td>
        <td>${entry_.route}</td>
        <td>${fmt(entry_.score)}</td>
        <td>${fmt(entry_.latencyMs, 2)} ms</td>
      </tr>`;
    });
  ticker.innerHTML = rows.join("");
}
