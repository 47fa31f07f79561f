/** CSV export of the visible tick window.
 *
 * The schema is identical to the simulator's log files, so an exported
 * window can be fed straight back through the offline tooling. Numbers
 * are serialized with the shortest representation that parses back to
 * the identical double, so values survive the text round trip bit for
 * bit.
 */

import type { TickMessage } from "./types.js";

export const CSV_HEADER =
  "t,m_star,m,p_human_raw,p_human_filt,p_motor_target," +
  "p_motor_actual,y,p_threshold,mode,vr";

export function exportCsv(ticks: readonly TickMessage[]): string {
  const lines = [CSV_HEADER];
  for (const r of ticks) {
    lines.push(
      [
        String(r.t),
        String(r.m_star),
        String(r.m),
        String(r.p_human_raw),
        String(r.p_human_filt),
        String(r.p_motor_target),
        String(r.p_motor_actual),
        String(r.y),
        String(r.p_threshold),
        r.mode,
        String(r.vr),
      ].join(","),
    );
  }
  return lines.join("\n") + "\n";
}

/** Parse an exported document back into the numeric columns (test aid). */
export function parseCsv(text: string): Record<string, (number | string)[]> {
  const lines = text.trim().split("\n");
  if (lines[0] !== CSV_HEADER) throw new Error("unexpected CSV header");
  const names = lines[0].split(",");
  const cols: Record<string, (number | string)[]> = {};
  for (const n of names) cols[n] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    names.forEach((n, i) => {
      cols[n].push(n === "mode" ? parts[i] : Number(parts[i]));
    });
  }
  return cols;
}
