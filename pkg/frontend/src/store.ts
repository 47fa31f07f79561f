/** Single state store: stream ingestion and user events serialize here.
 *
 * All displayed quantities come from tick messages; nothing is recomputed
 * client-side. Only ticks of the current epoch are retained, so charts
 * can never mix epochs.
 */

import { RingBuffer } from "./ringBuffer.js";
import type {
  ConnectionStatus,
  HelloMessage,
  Mode,
  StreamMessage,
  TickMessage,
} from "./types.js";

export const RING_CAPACITY = 600;

export interface Bounds {
  pHumanMax: number;
  eta: number;
  dtSample: number;
}

export interface BannerFlip {
  index: number;
  mode: Mode;
}

export class CockpitStore {
  readonly ticks = new RingBuffer<TickMessage>(RING_CAPACITY);
  status: ConnectionStatus = "connecting";
  epoch = 0;
  bounds: Bounds = { pHumanMax: 400, eta: 0.2, dtSample: 1 };
  sliderWatts = 0;
  mStarSelection: number | null = null;
  modeBanner: Mode = "cooperative";
  /** Banner transitions with the exact tick index they occurred at. */
  readonly bannerFlips: BannerFlip[] = [];
  sessionId: string | null = null;
  private listeners: (() => void)[] = [];

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  setStatus(status: ConnectionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.notify();
    }
  }

  setSlider(watts: number): void {
    this.sliderWatts = Math.min(Math.max(watts, 0), this.bounds.pHumanMax);
    this.notify();
  }

  ingest(msg: StreamMessage): void {
    switch (msg.type) {
      case "hello":
        this.applyHello(msg);
        break;
      case "epoch":
        this.startEpoch(msg.epoch);
        break;
      case "tick":
        this.applyTick(msg);
        break;
    }
    this.notify();
  }

  private applyHello(msg: HelloMessage): void {
    this.sessionId = msg.session_id;
    this.bounds = {
      pHumanMax: msg.p_human_max,
      eta: msg.eta,
      dtSample: msg.dt_sample,
    };
    if (msg.epoch !== this.epoch) this.startEpoch(msg.epoch);
  }

  private startEpoch(epoch: number): void {
    this.epoch = epoch;
    this.ticks.clear();
    this.bannerFlips.length = 0;
  }

  private applyTick(msg: TickMessage): void {
    if (msg.epoch < this.epoch) return; // stale tick from before a reset
    if (msg.epoch > this.epoch) this.startEpoch(msg.epoch); // missed marker
    const prev = this.ticks.last();
    this.ticks.push(msg);
    if (prev === undefined || prev.mode !== msg.mode) {
      if (prev !== undefined || msg.mode !== this.modeBanner) {
        this.bannerFlips.push({ index: msg.index, mode: msg.mode });
      }
      this.modeBanner = msg.mode;
    }
  }

  /** Ticks currently rendered (current epoch only, oldest first). */
  visibleTicks(): TickMessage[] {
    return this.ticks.toArray();
  }

  latest(): TickMessage | undefined {
    return this.ticks.last();
  }

  get commandsEnabled(): boolean {
    return this.status === "live";
  }
}
