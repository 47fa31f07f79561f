/** DOM wiring: slider and reference selector drive the live session;
 * charts and the mode banner render straight from the tick stream. */

import { drawPowerChart, drawRatioChart, drawVentilationChart } from "./charts.js";
import {
  buildBare,
  buildSetHumanPower,
  buildSetMStar,
  CommandGate,
} from "./commands.js";
import { createSession, SessionConnection } from "./connection.js";
import { exportCsv } from "./csv.js";
import { CockpitStore } from "./store.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function bindSession(baseUrl: string): Promise<void> {
  const store = new CockpitStore();
  const info = await createSession(baseUrl);
  const conn = new SessionConnection(baseUrl, info.session_id, store);
  const gate = new CommandGate(conn, () => store.commandsEnabled);

  const slider = el<HTMLInputElement>("power-slider");
  const sliderValue = el<HTMLSpanElement>("power-value");
  const mStarInput = el<HTMLInputElement>("mstar-input");
  const banner = el<HTMLDivElement>("mode-banner");
  const statusBox = el<HTMLDivElement>("status");
  const ratioCanvas = el<HTMLCanvasElement>("ratio-chart");
  const powerCanvas = el<HTMLCanvasElement>("power-chart");
  const ventCanvas = el<HTMLCanvasElement>("vent-chart");

  slider.max = String(info.p_human_max);
  mStarInput.min = String(info.eta);  // values below eta are not selectable
  mStarInput.max = "1";
  mStarInput.step = "0.01";

  slider.oninput = () => {
    store.setSlider(Number(slider.value));
    sliderValue.textContent = `${slider.value} W`;
    gate
      .issue(buildSetHumanPower(Number(slider.value), store.bounds))
      .catch((err) => console.warn(err));
  };
  mStarInput.onchange = () => {
    gate
      .issue(buildSetMStar(Number(mStarInput.value), store.bounds))
      .catch((err) => console.warn(err));
  };
  el<HTMLButtonElement>("pause-btn").onclick = () =>
    gate.issue(buildBare("pause")).catch(console.warn);
  el<HTMLButtonElement>("resume-btn").onclick = () =>
    gate.issue(buildBare("resume")).catch(console.warn);
  el<HTMLButtonElement>("reset-btn").onclick = () =>
    gate.issue(buildBare("reset")).catch(console.warn);
  el<HTMLButtonElement>("export-btn").onclick = () => {
    const blob = new Blob([exportCsv(store.visibleTicks())], {
      type: "text/csv",
    });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `cockpit_epoch${store.epoch}.csv`;
    a.click();
    URL.revokeObjectURL(a.href);
  };

  store.onChange(() => {
    const ticks = store.visibleTicks();
    drawRatioChart(ratioCanvas, ticks);
    drawPowerChart(powerCanvas, ticks);
    drawVentilationChart(ventCanvas, ticks);
    banner.textContent = store.modeBanner.toUpperCase();
    banner.className = `banner ${store.modeBanner}`;
    const live = store.status === "live";
    statusBox.textContent = live
      ? `live — session ${store.sessionId} epoch ${store.epoch}`
      : `${store.status.toUpperCase()} — data may be stale, commands disabled`;
    statusBox.className = live ? "status live" : "status stale";
    for (const id of ["power-slider", "mstar-input", "pause-btn",
                      "resume-btn", "reset-btn"]) {
      (el(id) as HTMLInputElement | HTMLButtonElement).disabled = !live;
    }
  });

  conn.connect();
}

const form = el<HTMLFormElement>("connect-form");
form.onsubmit = (ev) => {
  ev.preventDefault();
  const url = el<HTMLInputElement>("service-url").value.replace(/\/$/, "");
  bindSession(url).catch((err) => {
    el<HTMLDivElement>("status").textContent = `connection failed: ${err}`;
  });
};
