// Tension curve editing: pointer samples over the bar lanes become a
// per-bar vector of levels 0-9. The lane is split into ten uniform
// vertical bins, level 9 at the top; the last sample falling in a bar
// wins, so a monotone drag yields a monotone level vector.

export interface CurveSample {
  x: number; // pixels from the lane's left edge
  y: number; // pixels from the lane's top edge
}

export function levelFromY(y: number, laneHeight: number): number {
  const fraction = 1 - y / laneHeight;
  const level = Math.floor(fraction * 10);
  return Math.max(0, Math.min(9, level));
}

export function barFromX(x: number, laneWidth: number, bars: number): number {
  const bar = Math.floor((x / laneWidth) * bars) + 1;
  return Math.max(1, Math.min(bars, bar));
}

/** Convert a drag gesture into per-bar tension levels. Bars the drag
 * never touched are absent, so they fall back to their current level. */
export function curveToLevels(
  samples: CurveSample[],
  laneWidth: number,
  laneHeight: number,
  bars: number,
): Record<number, number> {
  const levels: Record<number, number> = {};
  for (const sample of samples) {
    const bar = barFromX(sample.x, laneWidth, bars);
    levels[bar] = levelFromY(sample.y, laneHeight);
  }
  return levels;
}
