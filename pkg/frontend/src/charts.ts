/** Minimal canvas line charts: ratio vs reference, and powers with the
 * moving effort-threshold line. No chart library; the data volume is one
 * ring buffer. */

import type { TickMessage } from "./types.js";

interface Series {
  key: (r: TickMessage) => number;
  color: string;
  dash?: number[];
  label: string;
}

function drawSeries(
  ctx: CanvasRenderingContext2D,
  ticks: readonly TickMessage[],
  series: Series[],
  yMin: number,
  yMax: number,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  if (ticks.length < 2) return;
  const t0 = ticks[0].t;
  const t1 = ticks[ticks.length - 1].t;
  const sx = (t: number) => ((t - t0) / Math.max(t1 - t0, 1e-9)) * (width - 8) + 4;
  const sy = (v: number) =>
    height - 4 - ((v - yMin) / Math.max(yMax - yMin, 1e-9)) * (height - 8);

  ctx.font = "11px sans-serif";
  let legendX = 8;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    ticks.forEach((r, i) => {
      const x = sx(r.t);
      const y = sy(s.key(r));
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, legendX, 12);
    legendX += ctx.measureText(s.label).width + 14;
  }
}

export function drawRatioChart(
  canvas: HTMLCanvasElement,
  ticks: readonly TickMessage[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  drawSeries(
    ctx,
    ticks,
    [
      { key: (r) => r.m_star, color: "#555", dash: [5, 3], label: "m*" },
      { key: (r) => r.m, color: "#1460d8", label: "m" },
    ],
    0,
    1.05,
    canvas.width,
    canvas.height,
  );
}

export function drawPowerChart(
  canvas: HTMLCanvasElement,
  ticks: readonly TickMessage[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const peak = Math.max(
    10,
    ...ticks.map((r) =>
      Math.max(r.p_human_filt, r.p_motor_target, r.p_threshold),
    ),
  );
  drawSeries(
    ctx,
    ticks,
    [
      { key: (r) => r.p_human_filt, color: "#188038", label: "human W" },
      { key: (r) => r.p_motor_target, color: "#d81414", label: "motor target W" },
      { key: (r) => r.p_motor_actual, color: "#e8833a", label: "motor actual W" },
      // the cooperative/competitive boundary, moving with m*
      { key: (r) => r.p_threshold, color: "#111", dash: [2, 3], label: "threshold" },
    ],
    0,
    peak * 1.1,
    canvas.width,
    canvas.height,
  );
}

export function drawVentilationChart(
  canvas: HTMLCanvasElement,
  ticks: readonly TickMessage[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const peak = Math.max(20, ...ticks.map((r) => r.vr));
  drawSeries(
    ctx,
    ticks,
    [{ key: (r) => r.vr, color: "#8c2bd3", label: "ventilation L/min" }],
    0,
    peak * 1.1,
    canvas.width,
    canvas.height,
  );
}
