import { describe, expect, it } from "vitest";

import { CSV_HEADER, exportCsv, parseCsv } from "./csv.js";
import { makeHello, makeTick } from "./fixtures.js";
import { CockpitStore } from "./store.js";

describe("CSV export", () => {
  it("uses exactly the simulator log header", () => {
    expect(CSV_HEADER).toBe(
      "t,m_star,m,p_human_raw,p_human_filt,p_motor_target," +
        "p_motor_actual,y,p_threshold,mode,vr",
    );
    expect(exportCsv([]).trim()).toBe(CSV_HEADER);
  });

  it("row count equals visible ticks", () => {
    const store = new CockpitStore();
    store.ingest(makeHello());
    for (let i = 0; i < 17; i++) store.ingest(makeTick(i));
    const doc = exportCsv(store.visibleTicks());
    expect(doc.trim().split("\n").length).toBe(1 + 17);
  });

  it("numbers survive the text round trip bit for bit", () => {
    // awkward doubles: thirds, tiny, large, negative exponents
    const values = [1 / 3, 0.1 + 0.2, 40.714285714285715, 1e-7, 12345.678901234567];
    const ticks = values.map((v, i) =>
      makeTick(i, { m: Math.min(v, 1), p_motor_target: v, y: v }),
    );
    const cols = parseCsv(exportCsv(ticks));
    ticks.forEach((tick, i) => {
      expect(Object.is(cols["p_motor_target"][i], tick.p_motor_target)).toBe(true);
      expect(Object.is(cols["y"][i], tick.y)).toBe(true);
      expect(Object.is(cols["m"][i], tick.m)).toBe(true);
    });
  });

  it("is stable across repeated exports while paused", () => {
    const store = new CockpitStore();
    store.ingest(makeHello());
    for (let i = 0; i < 9; i++) store.ingest(makeTick(i));
    // paused service produces no ticks; repeated clicks must match
    const first = exportCsv(store.visibleTicks());
    const second = exportCsv(store.visibleTicks());
    expect(second).toBe(first);
  });

  it("rejects foreign documents", () => {
    expect(() => parseCsv("a,b,c\n1,2,3")).toThrow();
  });
});
