// Software preview synthesis: plain oscillators with a short envelope,
// scheduled on the Web Audio clock. Fidelity is explicitly a non-goal;
// this exists so a result can be auditioned before keep/discard.

import type { Note, ParsedMidi } from "./midi.js";
import { barTicks } from "./midi.js";

export interface ScheduledNote {
  at: number; // seconds from playback start
  duration: number; // seconds
  frequency: number; // Hz
  gain: number;
}

export function pitchToFrequency(pitch: number): number {
  return 440 * Math.pow(2, (pitch - 69) / 12);
}

export function secondsPerTick(tempoUs: number, ppq: number): number {
  return tempoUs / 1e6 / ppq;
}

export function scheduleNotes(
  midi: ParsedMidi,
  fromBar = 1,
  toBar?: number,
): ScheduledNote[] {
  const perTick = secondsPerTick(midi.tempoUs, midi.ppq);
  const width = barTicks(midi);
  const start = (fromBar - 1) * width;
  const end = toBar !== undefined ? toBar * width : Number.POSITIVE_INFINITY;
  const schedule: ScheduledNote[] = [];
  for (const track of midi.tracks) {
    for (const note of track) {
      if (note.onset < start || note.onset >= end) continue;
      schedule.push({
        at: (note.onset - start) * perTick,
        duration: Math.max(0.05, note.duration * perTick),
        frequency: pitchToFrequency(note.pitch),
        gain: (note.velocity / 127) * 0.25,
      });
    }
  }
  schedule.sort((a, b) => a.at - b.at);
  return schedule;
}

export class PreviewPlayer {
  private context: AudioContext | null = null;
  private active: Array<{ osc: OscillatorNode; env: GainNode }> = [];

  play(midi: ParsedMidi, fromBar = 1, toBar?: number): void {
    this.stop();
    const context = this.context ?? new AudioContext();
    this.context = context;
    const now = context.currentTime + 0.05;
    for (const note of scheduleNotes(midi, fromBar, toBar)) {
      const osc = context.createOscillator();
      const env = context.createGain();
      osc.type = "triangle";
      osc.frequency.value = note.frequency;
      env.gain.setValueAtTime(0, now + note.at);
      env.gain.linearRampToValueAtTime(note.gain, now + note.at + 0.01);
      env.gain.setTargetAtTime(0, now + note.at + note.duration, 0.03);
      osc.connect(env).connect(context.destination);
      osc.start(now + note.at);
      osc.stop(now + note.at + note.duration + 0.2);
      this.active.push({ osc, env });
    }
  }

  stop(): void {
    for (const { osc, env } of this.active) {
      try {
        osc.stop();
      } catch {
        // already stopped
      }
      osc.disconnect();
      env.disconnect();
    }
    this.active = [];
  }
}

export type { Note };
