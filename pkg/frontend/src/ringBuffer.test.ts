import { describe, expect, it } from "vitest";

import { RingBuffer } from "./ringBuffer.js";

describe("RingBuffer", () => {
  it("keeps insertion order below capacity", () => {
    const rb = new RingBuffer<number>(5);
    [1, 2, 3].forEach((v) => rb.push(v));
    expect(rb.toArray()).toEqual([1, 2, 3]);
    expect(rb.size).toBe(3);
    expect(rb.last()).toBe(3);
  });

  it("drops the oldest items at capacity", () => {
    const rb = new RingBuffer<number>(4);
    for (let i = 0; i < 10; i++) rb.push(i);
    expect(rb.toArray()).toEqual([6, 7, 8, 9]);
    expect(rb.size).toBe(4);
  });

  it("clears", () => {
    const rb = new RingBuffer<number>(3);
    rb.push(1);
    rb.clear();
    expect(rb.size).toBe(0);
    expect(rb.toArray()).toEqual([]);
    expect(rb.last()).toBeUndefined();
  });

  it("rejects nonsense capacity", () => {
    expect(() => new RingBuffer(0)).toThrow();
  });
});
