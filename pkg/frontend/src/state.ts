// UI session state machine. The view is a pure projection of the last
// service responses plus uncommitted widget values (selection, slider
// overrides, drawn tension curve); refresh() rebuilds it from the
// service. At most one request is in flight, and while an infill result
// is pending only keep/discard (and playback) are allowed.

import { parseMidi, type ParsedMidi } from "./midi.js";
import { RegionSelection } from "./selection.js";
import type {
  AnalysisMsg,
  InfillResponse,
  LevelsMsg,
  Role,
  SummaryMsg,
} from "./types.js";
import { base64ToBytes, ServiceClient } from "./wire.js";

export type Phase = "empty" | "loaded" | "analyzed" | "pending";

export interface SessionView {
  phase: Phase;
  summary: SummaryMsg | null;
  analysis: AnalysisMsg | null;
  roles: Role[];
  originBar: number;
  selection: RegionSelection | null;
  levelOverrides: Record<number, Partial<LevelsMsg>>;
  tensionCurve: Record<number, number>;
  pendingMidi: ParsedMidi | null;
  committedMidi: ParsedMidi | null;
  busy: boolean;
}

export class SessionController {
  private sessionId: string | null = null;
  private summary: SummaryMsg | null = null;
  private analysis: AnalysisMsg | null = null;
  private roles: Role[] = [];
  private originBar = 1;
  private selection: RegionSelection | null = null;
  private levelOverrides: Record<number, Partial<LevelsMsg>> = {};
  private tensionCurve: Record<number, number> = {};
  private pending: InfillResponse | null = null;
  private committedMidi: ParsedMidi | null = null;
  private busy = false;
  private listeners: Array<() => void> = [];

  constructor(private client: ServiceClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get view(): SessionView {
    let phase: Phase = "empty";
    if (this.pending) phase = "pending";
    else if (this.analysis) phase = "analyzed";
    else if (this.summary) phase = "loaded";
    return {
      phase,
      summary: this.summary,
      analysis: this.analysis,
      roles: this.roles,
      originBar: this.originBar,
      selection: this.selection,
      levelOverrides: this.levelOverrides,
      tensionCurve: this.tensionCurve,
      pendingMidi: this.pending ? parseMidi(base64ToBytes(this.pending.midi_b64)) : null,
      committedMidi: this.committedMidi,
      busy: this.busy,
    };
  }

  private async exclusive<T>(work: () => Promise<T>): Promise<T> {
    if (this.busy) throw new Error("a request is already in flight");
    this.busy = true;
    this.emit();
    try {
      return await work();
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  async loadFile(bytes: Uint8Array): Promise<SummaryMsg> {
    return this.exclusive(async () => {
      const created = await this.client.createSession(bytes);
      this.sessionId = created.session_id;
      this.summary = created.summary;
      this.analysis = null;
      this.pending = null;
      this.selection = null;
      this.levelOverrides = {};
      this.tensionCurve = {};
      this.roles = [];
      this.committedMidi = null;
      return created.summary;
    });
  }

  async setRoles(roles: Role[]): Promise<void> {
    const id = this.requireSession();
    await this.exclusive(async () => {
      await this.client.setRoles(id, roles);
      this.roles = roles;
    });
  }

  async analyze(originBar: number): Promise<AnalysisMsg> {
    const id = this.requireSession();
    return this.exclusive(async () => {
      const analysis = await this.client.analyze(id, originBar);
      this.applyAnalysis(analysis, originBar);
      this.committedMidi = parseMidi(await this.client.exportMidi(id));
      return analysis;
    });
  }

  private applyAnalysis(analysis: AnalysisMsg, originBar: number): void {
    this.analysis = analysis;
    this.originBar = originBar;
    this.selection = new RegionSelection(3, analysis.window_bars);
    this.levelOverrides = {};
    this.tensionCurve = {};
  }

  /** Rebuild every server-derived part of the view from the service;
   * uncommitted widget values survive. */
  async refresh(): Promise<void> {
    const id = this.requireSession();
    await this.exclusive(async () => {
      const analysis = await this.client.analyze(id, this.originBar);
      this.analysis = analysis;
      this.committedMidi = parseMidi(await this.client.exportMidi(id));
    });
  }

  setLevelOverride(track: number, metric: keyof LevelsMsg, level: number): void {
    if (!this.levelOverrides[track]) this.levelOverrides[track] = {};
    this.levelOverrides[track][metric] = level;
    this.emit();
  }

  setTensionCurve(levels: Record<number, number>): void {
    this.tensionCurve = { ...this.tensionCurve, ...levels };
    this.emit();
  }

  clearTensionCurve(): void {
    this.tensionCurve = {};
    this.emit();
  }

  /** Current levels of a track's first selected bar, with overrides. */
  effectiveLevels(track: number): LevelsMsg {
    const analysis = this.analysis;
    const selection = this.selection;
    const bars = selection
      ? selection
          .list()
          .filter((cell) => cell.track === track)
          .map((cell) => cell.bar)
      : [];
    const bar = bars[0] ?? 1;
    const record = analysis?.track_bars.find(
      (entry) => entry.track === track && entry.bar === bar,
    );
    const current: LevelsMsg = record
      ? {
          density: record.density_level,
          polyphony: record.polyphony_level,
          occupation: record.occupation_level,
        }
      : { density: 0, polyphony: 0, occupation: 0 };
    return { ...current, ...this.levelOverrides[track] };
  }

  async infill(seed: number): Promise<InfillResponse> {
    const id = this.requireSession();
    const selection = this.selection;
    if (!this.analysis || !selection) throw new Error("analyze first");
    if (selection.size === 0) throw new Error("select at least one cell");
    if (this.pending) throw new Error("resolve the pending result first");
    return this.exclusive(async () => {
      const trackLevels: Record<number, LevelsMsg> = {};
      for (const track of selection.selectedTracks()) {
        trackLevels[track] = this.effectiveLevels(track);
      }
      const tensionLevels: Record<number, number> = {};
      for (const bar of selection.selectedBars()) {
        if (this.tensionCurve[bar] !== undefined) {
          tensionLevels[bar] = this.tensionCurve[bar];
        }
      }
      const response = await this.client.infill(id, {
        region: selection.list(),
        trackLevels,
        tensionLevels,
        seed,
      });
      this.pending = response;
      return response;
    });
  }

  /** keep=true commits the pending result; keep=false discards it. */
  async resolve(keep: boolean): Promise<void> {
    const id = this.requireSession();
    if (!this.pending) throw new Error("nothing pending");
    await this.exclusive(async () => {
      await this.client.resolve(id, keep);
      if (keep && this.pending) {
        this.analysis = this.pending.analysis;
        this.committedMidi = parseMidi(base64ToBytes(this.pending.midi_b64));
      }
      this.pending = null;
    });
  }

  async exportMidi(): Promise<Uint8Array> {
    const id = this.requireSession();
    return this.exclusive(() => this.client.exportMidi(id));
  }

  private requireSession(): string {
    if (!this.sessionId) throw new Error("no session loaded");
    return this.sessionId;
  }
}
