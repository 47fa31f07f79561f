/** Test fixtures: consistent tick messages without a live service. */

import type { HelloMessage, TickMessage } from "./types.js";

export function makeHello(overrides: Partial<HelloMessage> = {}): HelloMessage {
  return {
    type: "hello",
    session_id: "fixture",
    epoch: 0,
    latest_index: 0,
    dt_sample: 1,
    p_human_max: 400,
    eta: 0.2,
    ...overrides,
  };
}

/** Tick with self-consistent mode/threshold fields. */
export function makeTick(
  index: number,
  overrides: Partial<TickMessage> = {},
): TickMessage {
  const p_threshold = overrides.p_threshold ?? 133.125;
  const p_human_filt = overrides.p_human_filt ?? 95;
  const mode =
    overrides.mode ?? (p_human_filt > p_threshold ? "competitive" : "cooperative");
  const p_motor = overrides.p_motor_target ?? 116.1;
  return {
    type: "tick",
    epoch: 0,
    index,
    t: index,
    m_star: 0.45,
    m: p_human_filt / (p_motor + p_human_filt),
    p_human_raw: p_human_filt / 0.95,
    p_human_filt,
    p_motor_filt: p_motor,
    p_motor_target: p_motor,
    p_motor_actual: p_motor,
    y: 5,
    p_threshold,
    mode,
    vr: 0,
    idle: false,
    fault: false,
    ...overrides,
  };
}

/** A scripted crossing of the effort threshold: cooperative for
 * `before` ticks, competitive for `during`, cooperative again after. */
export function thresholdCrossing(
  before: number,
  during: number,
  after: number,
): TickMessage[] {
  const out: TickMessage[] = [];
  let index = 0;
  for (let i = 0; i < before; i++) out.push(makeTick(index++, { p_human_filt: 95 }));
  for (let i = 0; i < during; i++) out.push(makeTick(index++, { p_human_filt: 210 }));
  for (let i = 0; i < after; i++) out.push(makeTick(index++, { p_human_filt: 95 }));
  return out;
}
