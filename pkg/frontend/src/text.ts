/** Offset bookkeeping between the service and the DOM.
 *
 * The service counts characters as Unicode code points, JavaScript
 * strings count UTF-16 units.  The two disagree as soon as a ruling
 * contains anything outside the BMP, so every offset that crosses the
 * wire goes through these helpers instead of being used raw.
 */

export interface Occurrence {
  start: number;
  end: number;
}

export function codePointLength(text: string): number {
  let n = 0;
  for (const _ of text) {
    n += 1;
  }
  return n;
}

/** UTF-16 index of the given code point index. */
export function toUtf16(text: string, cpIndex: number): number {
  if (cpIndex < 0) {
    throw new RangeError(`negative code point index ${cpIndex}`);
  }
  let cp = 0;
  let utf16 = 0;
  for (const ch of text) {
    if (cp === cpIndex) {
      return utf16;
    }
    cp += 1;
    utf16 += ch.length;
  }
  if (cp === cpIndex) {
    return utf16;
  }
  throw new RangeError(`code point index ${cpIndex} outside text of ${cp} code points`);
}

/** Code point index of the given UTF-16 index; refuses to split a
 * surrogate pair. */
export function toCodePoint(text: string, utf16Index: number): number {
  if (utf16Index < 0) {
    throw new RangeError(`negative string index ${utf16Index}`);
  }
  let cp = 0;
  let utf16 = 0;
  for (const ch of text) {
    if (utf16 === utf16Index) {
      return cp;
    }
    if (utf16 > utf16Index) {
      throw new RangeError(`string index ${utf16Index} splits a surrogate pair`);
    }
    cp += 1;
    utf16 += ch.length;
  }
  if (utf16 === utf16Index) {
    return cp;
  }
  throw new RangeError(`string index ${utf16Index} outside text of length ${utf16}`);
}

/** Convert many code point offsets in one pass; offsets must be sorted
 * ascending. */
export function toUtf16All(text: string, cpOffsets: number[]): number[] {
  const out: number[] = [];
  let at = 0;
  let cp = 0;
  let utf16 = 0;
  for (const ch of text) {
    while (at < cpOffsets.length && cpOffsets[at] === cp) {
      out.push(utf16);
      at += 1;
    }
    cp += 1;
    utf16 += ch.length;
  }
  while (at < cpOffsets.length && cpOffsets[at] === cp) {
    out.push(utf16);
    at += 1;
  }
  if (at < cpOffsets.length) {
    throw new RangeError(
      `code point offset ${cpOffsets[at]} outside text of ${cp} code points`,
    );
  }
  return out;
}

export function cpSlice(text: string, start: number, end: number): string {
  return text.slice(toUtf16(text, start), toUtf16(text, end));
}

/** Non-overlapping literal matches, reported as code point offsets. */
export function findOccurrences(text: string, query: string): Occurrence[] {
  if (!query) {
    return [];
  }
  const hits: Occurrence[] = [];
  let from = 0;
  for (;;) {
    const at = text.indexOf(query, from);
    if (at === -1) {
      break;
    }
    hits.push({
      start: toCodePoint(text, at),
      end: toCodePoint(text, at + query.length),
    });
    from = at + query.length;
  }
  return hits;
}
