/** Wire types mirroring the service protocol (docs/protocol.md). */

export type Mode = "cooperative" | "competitive";

export interface TickMessage {
  type: "tick";
  epoch: number;
  index: number;
  t: number;
  m_star: number;
  m: number;
  p_human_raw: number;
  p_human_filt: number;
  p_motor_filt: number;
  p_motor_target: number;
  p_motor_actual: number;
  y: number;
  p_threshold: number;
  mode: Mode;
  vr: number;
  idle: boolean;
  fault: boolean;
}

export interface HelloMessage {
  type: "hello";
  session_id: string;
  epoch: number;
  latest_index: number;
  dt_sample: number;
  p_human_max: number;
  eta: number;
}

export interface EpochMessage {
  type: "epoch";
  epoch: number;
}

export type StreamMessage = TickMessage | HelloMessage | EpochMessage;

export type CommandName =
  | "set_human_power"
  | "set_m_star"
  | "pause"
  | "resume"
  | "reset";

export interface CommandPayload {
  cmd: CommandName;
  value?: number;
}

export type ConnectionStatus = "connecting" | "live" | "stale" | "closed";
