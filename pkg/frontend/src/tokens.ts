/**
 * Token arithmetic mirroring the server's rule: tokens are maximal runs of
 * non-whitespace characters over `title + " " + body`, and a highlight always
 * maps to whole tokens. The contract with the backend is pinned by the
 * snap_cases.json fixture.
 */

export interface TokenBoundary {
  start: number;
  end: number;
}

export interface CharSpan {
  start: number;
  end: number;
}

export function fullText(title: string, body: string): string {
  return `${title} ${body}`;
}

export function tokenize(text: string): TokenBoundary[] {
  const out: TokenBoundary[] = [];
  const re = /\S+/gu;
  let match: RegExpExecArray | null;
  while ((match = re.exec(text)) !== null) {
    out.push({ start: match.index, end: match.index + match[0].length });
  }
  return out;
}

/** Character span covering tokens [first, last] (inclusive token indices). */
export function charSpanForTokenRange(
  tokens: readonly TokenBoundary[],
  first: number,
  last: number,
): CharSpan {
  const lo = tokens[first];
  const hi = tokens[last];
  if (lo === undefined || hi === undefined || first > last) {
    throw new RangeError(`bad token range [${first}, ${last}] of ${tokens.length}`);
  }
  return { start: lo.start, end: hi.end };
}

/**
 * The token range a raw character selection widens to, or null if the
 * selection touches only whitespace. Same semantics as the server's snapping.
 */
export function tokenRangeForCharRange(
  tokens: readonly TokenBoundary[],
  rawStart: number,
  rawEnd: number,
): { first: number; last: number } | null {
  let first = -1;
  let last = -1;
  tokens.forEach((t, i) => {
    if (t.start < rawEnd && t.end > rawStart) {
      if (first < 0) first = i;
      last = i;
    }
  });
  return first < 0 ? null : { first, last };
}
