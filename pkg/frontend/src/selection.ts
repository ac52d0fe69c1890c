// Region selection over the track x bar grid. Bars are 1-based within
// the analyzed window; tracks are 0..2. The minimum region is a single
// cell, a bar-header click selects the whole bar across all tracks.

export interface Cell {
  track: number;
  bar: number;
}

const keyOf = (cell: Cell) => `${cell.track}:${cell.bar}`;

export class RegionSelection {
  private cells = new Map<string, Cell>();

  constructor(
    public trackCount: number,
    public barCount: number,
  ) {}

  clear(): void {
    this.cells.clear();
  }

  has(track: number, bar: number): boolean {
    return this.cells.has(keyOf({ track, bar }));
  }

  get size(): number {
    return this.cells.size;
  }

  toggleCell(track: number, bar: number): void {
    if (!Number.isInteger(track) || track < 0 || track >= this.trackCount) return;
    if (!Number.isInteger(bar) || bar < 1 || bar > this.barCount) return;
    const key = keyOf({ track, bar });
    if (this.cells.has(key)) this.cells.delete(key);
    else this.cells.set(key, { track, bar });
  }

  /** Bar-header click: the whole bar, every track ("all"). */
  selectWholeBar(bar: number): void {
    for (let track = 0; track < this.trackCount; track++) {
      if (!this.has(track, bar)) this.toggleCell(track, bar);
    }
  }

  /** Drag across one track's bars. */
  selectRange(track: number, fromBar: number, toBar: number): void {
    const [lo, hi] = fromBar <= toBar ? [fromBar, toBar] : [toBar, fromBar];
    for (let bar = lo; bar <= hi; bar++) {
      if (!this.has(track, bar)) this.toggleCell(track, bar);
    }
  }

  list(): Cell[] {
    return [...this.cells.values()].sort(
      (a, b) => a.track - b.track || a.bar - b.bar,
    );
  }

  selectedTracks(): number[] {
    return [...new Set(this.list().map((cell) => cell.track))].sort();
  }

  selectedBars(): number[] {
    return [...new Set(this.list().map((cell) => cell.bar))].sort((a, b) => a - b);
  }
}
