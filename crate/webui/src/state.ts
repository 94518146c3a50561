// Pure screen logic, kept apart from the DOM so it can run under node.

import type { ItemView } from "./api.js";

export interface ItemState {
  item: ItemView;
  played: boolean;
  chosen: number | null;
  submitted: number;
}

export type Action =
  | { kind: "submit"; score: number }
  | { kind: "blocked"; notice: string }
  | { kind: "ignore" };

export const PLAY_FIRST = "Listen to the clip at least once before scoring.";

export function freshItem(item: ItemView, submitted: number): ItemState {
  return { item, played: false, chosen: item.previous_score ?? null, submitted };
}

/** Maps a key press to a score, or null when the key is not a shortcut. */
export function scoreForKey(key: string, rubricSize: number): number | null {
  if (!/^[0-9]$/.test(key)) return null;
  const n = Number(key);
  return n >= 1 && n <= rubricSize ? n : null;
}

/** A score attempt is only sent once the clip has been played. */
export function attemptScore(state: ItemState, score: number): Action {
  if (!state.played) return { kind: "blocked", notice: PLAY_FIRST };
  if (!state.item.rubric.some((r) => r.score === score)) return { kind: "ignore" };
  return { kind: "submit", score };
}

export function progressText(submitted: number, total: number): string {
  return `${submitted} of ${total} scored`;
}
