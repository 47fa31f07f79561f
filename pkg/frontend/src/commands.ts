/** Validated command construction: the UI can only emit schema-valid
 * commands within the bounds the service advertised, and only while the
 * connection is live. */

import type { Bounds } from "./store.js";
import type { CommandPayload } from "./types.js";

export class CommandError extends Error {}

export function buildSetHumanPower(watts: number, bounds: Bounds): CommandPayload {
  if (!Number.isFinite(watts) || watts < 0 || watts > bounds.pHumanMax) {
    throw new CommandError(
      `human power ${watts} outside [0, ${bounds.pHumanMax}]`,
    );
  }
  return { cmd: "set_human_power", value: watts };
}

export function buildSetMStar(mStar: number, bounds: Bounds): CommandPayload {
  if (!Number.isFinite(mStar) || mStar < bounds.eta || mStar > 1) {
    throw new CommandError(`m* ${mStar} outside [${bounds.eta}, 1]`);
  }
  return { cmd: "set_m_star", value: mStar };
}

export function buildBare(cmd: "pause" | "resume" | "reset"): CommandPayload {
  return { cmd };
}

export interface CommandTransport {
  send(payload: CommandPayload): Promise<unknown>;
}

/** Gate that refuses to issue anything while the connection is not live. */
export class CommandGate {
  constructor(
    private transport: CommandTransport,
    private isLive: () => boolean,
  ) {}

  async issue(payload: CommandPayload): Promise<unknown> {
    if (!this.isLive()) {
      throw new CommandError("commands disabled: connection is not live");
    }
    return this.transport.send(payload);
  }
}
