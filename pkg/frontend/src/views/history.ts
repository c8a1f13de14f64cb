/** Version lineage panel. */

import type { HistoryEntryWire } from "../types.js";

export type HistoryRow = {
  label: string;
  provenance: string;
  decidedAt: string;
  summary: string;
};

export function historyView(entries: HistoryEntryWire[]): HistoryRow[] {
  return entries.map((e) => ({
    label: e.version === null ? "(decision)" : `v${e.version}`,
    provenance: e.provenance ?? (e.action ?? "-"),
    decidedAt: e.decided_at,
    summary: e.rationale_summary,
  }));
}
