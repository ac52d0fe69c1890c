// Wire protocol message shapes (docs/protocol.md in the repo root).

export type Role = "melody" | "bass" | "harmony" | "empty";

export interface MetreMsg {
  numerator: number;
  denominator: number;
}

export interface KeyMsg {
  tonic: number;
  mode: "major" | "minor";
  confidence: number;
  name: string;
}

export interface SummaryMsg {
  track_count: number;
  bar_count: number;
  metre: MetreMsg;
  tempo_bpm: number;
  key: KeyMsg;
}

export interface TrackBarMsg {
  track: number;
  role: string;
  bar: number;
  density: number;
  polyphony: number;
  occupation: number;
  density_level: number;
  polyphony_level: number;
  occupation_level: number;
}

export interface BarTensionMsg {
  bar: number;
  tensile_strain: number;
  cloud_diameter: number;
  cloud_momentum: number;
  tension_level: number;
}

export interface AnalysisMsg {
  summary: SummaryMsg;
  origin_bar: number;
  window_bars: number;
  key: KeyMsg;
  track_bars: TrackBarMsg[];
  tension: BarTensionMsg[];
}

export interface LevelsMsg {
  density: number;
  polyphony: number;
  occupation: number;
}

export interface CellMsg {
  track: number;
  bar: number;
}

export interface CellResultMsg {
  track: number;
  bar: number;
  levels: LevelsMsg;
  deltas: Record<string, number>;
}

export interface InfillResponse {
  analysis: AnalysisMsg;
  midi_b64: string;
  achieved: CellResultMsg[];
  tension_deltas: Record<string, number>;
}

export interface ServiceErrorBody {
  code: string;
  detail: string;
  message: string;
}
