/** Diverging cell colors, matching the server's SVG rendering byte for byte. */

const NEGATIVE_POLE: readonly number[] = [27, 120, 55]; // green
const POSITIVE_POLE: readonly number[] = [165, 15, 21]; // red
const WHITE: readonly number[] = [247, 247, 247];

export const MISSING_COLOR = "#b0b0b0";
export const DEFAULT_CLAMP = 0.15; // p.u.

/** Round half to even, as the server does; Math.round would drift at .5. */
export function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

/** Pure value-to-color mapping: green pole, white center, red pole. */
export function colorFor(value: number | null, clamp: number = DEFAULT_CLAMP): string {
  if (value === null) return MISSING_COLOR;
  const t = Math.max(-1, Math.min(1, value / clamp));
  const pole = t >= 0 ? POSITIVE_POLE : NEGATIVE_POLE;
  const a = Math.abs(t);
  const channels = WHITE.map((w, i) => roundHalfEven(w + ((pole[i] as number) - w) * a));
  return "#" + channels.map((c) => c.toString(16).padStart(2, "0")).join("");
}
