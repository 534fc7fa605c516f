/**
 * Highlighting state machine: click toggles a single word, click-and-drag
 * selects a run of words, clicking inside an existing highlight removes the
 * whole span. Selections are token-index ranges; they never overlap, and a
 * drag that touches existing highlights merges them into one long span.
 */

import { CharSpan, TokenBoundary, charSpanForTokenRange } from "./tokens.js";

/** Inclusive token-index range. */
export interface TokenRange {
  first: number;
  last: number;
}

export interface HighlightState {
  tokenCount: number;
  /** Sorted, non-overlapping. */
  selected: readonly TokenRange[];
  pendingDrag: { anchor: number; current: number } | null;
}

export function emptyState(tokenCount: number): HighlightState {
  return { tokenCount, selected: [], pendingDrag: null };
}

function checkIndex(state: HighlightState, index: number): void {
  if (!Number.isInteger(index) || index < 0 || index >= state.tokenCount) {
    throw new RangeError(`token index ${index} out of range (${state.tokenCount} tokens)`);
  }
}

function rangeIndexContaining(state: HighlightState, index: number): number {
  return state.selected.findIndex((r) => r.first <= index && index <= r.last);
}

export function isHighlighted(state: HighlightState, index: number): boolean {
  return rangeIndexContaining(state, index) >= 0;
}

function sortedInsert(ranges: readonly TokenRange[], range: TokenRange): TokenRange[] {
  const out = [...ranges, range];
  out.sort((a, b) => a.first - b.first);
  return out;
}

/**
 * Click behavior: an unhighlighted token becomes its own single-token span;
 * clicking anywhere inside an existing span removes that whole span.
 */
export function toggleToken(state: HighlightState, index: number): HighlightState {
  checkIndex(state, index);
  const hit = rangeIndexContaining(state, index);
  if (hit >= 0) {
    const selected = state.selected.filter((_, i) => i !== hit);
    return { ...state, selected, pendingDrag: null };
  }
  return {
    ...state,
    selected: sortedInsert(state.selected, { first: index, last: index }),
    pendingDrag: null,
  };
}

/**
 * Drag behavior: select [min, max] of the two endpoints; any existing spans
 * it touches are absorbed into one long span.
 */
export function dragSelect(
  state: HighlightState,
  anchorIndex: number,
  releaseIndex: number,
): HighlightState {
  checkIndex(state, anchorIndex);
  checkIndex(state, releaseIndex);
  let first = Math.min(anchorIndex, releaseIndex);
  let last = Math.max(anchorIndex, releaseIndex);
  const untouched: TokenRange[] = [];
  for (const r of state.selected) {
    if (r.first <= last && r.last >= first) {
      first = Math.min(first, r.first);
      last = Math.max(last, r.last);
    } else {
      untouched.push(r);
    }
  }
  return {
    ...state,
    selected: sortedInsert(untouched, { first, last }),
    pendingDrag: null,
  };
}

// -- drag-in-progress plumbing for the pointer handlers ---------------------

export function beginDrag(state: HighlightState, anchorIndex: number): HighlightState {
  checkIndex(state, anchorIndex);
  return { ...state, pendingDrag: { anchor: anchorIndex, current: anchorIndex } };
}

export function updateDrag(state: HighlightState, currentIndex: number): HighlightState {
  if (state.pendingDrag === null) return state;
  checkIndex(state, currentIndex);
  return { ...state, pendingDrag: { ...state.pendingDrag, current: currentIndex } };
}

/** Releasing on the anchor token is a click; anything longer is a drag. */
export function endDrag(state: HighlightState): HighlightState {
  const drag = state.pendingDrag;
  if (drag === null) return state;
  if (drag.anchor === drag.current) {
    return toggleToken({ ...state, pendingDrag: null }, drag.anchor);
  }
  return dragSelect({ ...state, pendingDrag: null }, drag.anchor, drag.current);
}

/** Character spans for submission, in document order (token-aligned). */
export function selectionCharSpans(
  state: HighlightState,
  tokens: readonly TokenBoundary[],
): CharSpan[] {
  return state.selected.map((r) => charSpanForTokenRange(tokens, r.first, r.last));
}

/** True when ranges are sorted, in bounds, and pairwise disjoint. */
export function invariantHolds(state: HighlightState): boolean {
  let previousLast = -1;
  for (const r of state.selected) {
    if (r.first < 0 || r.last >= state.tokenCount || r.first > r.last) return false;
    if (r.first <= previousLast) return false;
    previousLast = r.last;
  }
  return true;
}
