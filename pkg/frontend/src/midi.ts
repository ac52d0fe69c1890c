// Just enough standard-MIDI-file reading to draw piano rolls, schedule
// playback and diff an exported file against the uploaded one. All
// bytes come from the service, never from local file parsing.

export interface Note {
  onset: number;
  pitch: number;
  duration: number;
  velocity: number;
}

export interface ParsedMidi {
  ppq: number;
  tempoUs: number;
  numerator: number;
  denominator: number;
  tracks: Note[][];
}

class Reader {
  pos = 0;
  constructor(private data: Uint8Array) {}

  u8(): number {
    return this.data[this.pos++];
  }

  peek(): number {
    return this.data[this.pos];
  }

  u16(): number {
    return (this.u8() << 8) | this.u8();
  }

  u32(): number {
    return (this.u16() << 16) | this.u16();
  }

  bytes(n: number): Uint8Array {
    const slice = this.data.subarray(this.pos, this.pos + n);
    this.pos += n;
    return slice;
  }

  vlq(): number {
    let value = 0;
    for (let i = 0; i < 4; i++) {
      const byte = this.u8();
      value = (value << 7) | (byte & 0x7f);
      if (!(byte & 0x80)) return value;
    }
    throw new Error("bad variable-length quantity");
  }

  get eof(): boolean {
    return this.pos >= this.data.length;
  }
}

function ascii(bytes: Uint8Array): string {
  return String.fromCharCode(...bytes);
}

export function parseMidi(data: Uint8Array): ParsedMidi {
  const reader = new Reader(data);
  if (ascii(reader.bytes(4)) !== "MThd") throw new Error("not a MIDI file");
  const headerLength = reader.u32();
  const format = reader.u16();
  const chunkCount = reader.u16();
  const division = reader.u16();
  if (format > 1) throw new Error(`unsupported format ${format}`);
  if (division & 0x8000) throw new Error("SMPTE division unsupported");
  reader.bytes(headerLength - 6);

  const result: ParsedMidi = {
    ppq: division,
    tempoUs: 500_000,
    numerator: 4,
    denominator: 4,
    tracks: [],
  };
  let sawTempo = false;
  let sawTimesig = false;

  for (let chunk = 0; chunk < chunkCount && !reader.eof; chunk++) {
    if (ascii(reader.bytes(4)) !== "MTrk") {
      const length = reader.u32();
      reader.bytes(length);
      continue;
    }
    const length = reader.u32();
    const track = new Reader(reader.bytes(length));
    const notes: Note[] = [];
    // same-pitch notes may overlap; close the oldest first
    const open = new Map<number, { onset: number; velocity: number }[]>();
    let tick = 0;
    let status = 0;

    const close = (key: number, at: number) => {
      const stack = open.get(key);
      if (!stack || stack.length === 0) return;
      const started = stack.shift()!;
      notes.push({
        onset: started.onset,
        pitch: key & 0x7f,
        duration: Math.max(1, at - started.onset),
        velocity: started.velocity,
      });
    };

    while (!track.eof) {
      tick += track.vlq();
      if (track.peek() & 0x80) status = track.u8();
      if (status === 0xff) {
        const metaType = track.u8();
        const metaLength = track.vlq();
        const payload = track.bytes(metaLength);
        if (metaType === 0x51 && metaLength >= 3 && !sawTempo) {
          result.tempoUs = (payload[0] << 16) | (payload[1] << 8) | payload[2];
          sawTempo = true;
        } else if (metaType === 0x58 && metaLength >= 2 && !sawTimesig) {
          result.numerator = payload[0];
          result.denominator = 1 << payload[1];
          sawTimesig = true;
        } else if (metaType === 0x2f) {
          break;
        }
        status = 0;
      } else if (status === 0xf0 || status === 0xf7) {
        track.bytes(track.vlq());
        status = 0;
      } else {
        const kind = status & 0xf0;
        const channel = status & 0x0f;
        if (kind === 0xc0 || kind === 0xd0) {
          track.u8();
          continue;
        }
        const d1 = track.u8();
        const d2 = track.u8();
        if (channel === 9) continue; // percussion is out of scope
        const key = (channel << 8) | d1;
        if (kind === 0x90 && d2 > 0) {
          if (!open.has(key)) open.set(key, []);
          open.get(key)!.push({ onset: tick, velocity: d2 });
        } else if (kind === 0x80 || (kind === 0x90 && d2 === 0)) {
          close(key, tick);
        }
      }
    }
    for (const key of open.keys()) {
      while (open.get(key)!.length) close(key, tick);
    }
    if (notes.length) {
      notes.sort((a, b) => a.onset - b.onset || a.pitch - b.pitch);
      result.tracks.push(notes);
    }
  }
  return result;
}

export function barTicks(midi: ParsedMidi): number {
  return (midi.numerator * 4 * midi.ppq) / midi.denominator;
}

export function barCount(midi: ParsedMidi): number {
  const end = Math.max(
    1,
    ...midi.tracks.flat().map((note) => note.onset + note.duration),
  );
  return Math.ceil(end / barTicks(midi));
}

type Segment = [number, number, number, number]; // start, end, pitch, velocity

function clippedSegments(
  notes: Note[],
  spans: Array<[number, number]>,
): Segment[] {
  const segments: Segment[] = [];
  for (const note of notes) {
    let pieces: Array<[number, number]> = [[note.onset, note.onset + note.duration]];
    for (const [lo, hi] of spans) {
      const next: Array<[number, number]> = [];
      for (const [start, end] of pieces) {
        if (end <= lo || start >= hi) {
          next.push([start, end]);
          continue;
        }
        if (start < lo) next.push([start, lo]);
        if (end > hi) next.push([hi, end]);
      }
      pieces = next;
    }
    for (const [start, end] of pieces) {
      segments.push([start, end, note.pitch, note.velocity]);
    }
  }
  segments.sort(
    (a, b) => a[0] - b[0] || a[1] - b[1] || a[2] - b[2] || a[3] - b[3],
  );
  return segments;
}

/** True when two files sound identical outside the given (track, bar)
 * cells; notes crossing a cell edge are compared by their outside part. */
export function equalOutsideCells(
  before: ParsedMidi,
  after: ParsedMidi,
  cells: Array<{ track: number; bar: number }>,
  originBar = 1,
): boolean {
  if (before.tracks.length > after.tracks.length) return false;
  const width = barTicks(before);
  const trackCount = Math.max(before.tracks.length, after.tracks.length);
  for (let index = 0; index < trackCount; index++) {
    const spans: Array<[number, number]> = cells
      .filter((cell) => cell.track === index)
      .map((cell) => {
        const start = (originBar - 1 + cell.bar - 1) * width;
        return [start, start + width];
      });
    const a = clippedSegments(before.tracks[index] ?? [], spans);
    const b = clippedSegments(after.tracks[index] ?? [], spans);
    if (JSON.stringify(a) !== JSON.stringify(b)) return false;
  }
  return true;
}

export function sameNotes(a: ParsedMidi, b: ParsedMidi): boolean {
  return equalOutsideCells(a, b, []) && equalOutsideCells(b, a, []);
}
