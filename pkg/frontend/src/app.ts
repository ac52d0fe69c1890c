// DOM wiring: file loading, role dropdowns, window picking, the
// track x bar selection grid (piano rolls), level sliders, the
// drawable tension lane, infill / keep / discard / export / play.

import { PreviewPlayer } from "./audio.js";
import { curveToLevels, type CurveSample } from "./curve.js";
import { barTicks, type ParsedMidi } from "./midi.js";
import { SessionController } from "./state.js";
import type { LevelsMsg, Role } from "./types.js";
import { ServiceClient, ServiceError } from "./wire.js";

const TRACK_NAMES = ["track 1", "track 2", "track 3"];
const METRICS: Array<keyof LevelsMsg> = ["density", "polyphony", "occupation"];
const LANE_HEIGHT = 96;
const TENSION_HEIGHT = 120;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<HTMLElement | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) node.append(child);
  return node;
}

export function mountApp(root: HTMLElement, serviceUrl: string): void {
  const controller = new SessionController(new ServiceClient(serviceUrl));
  const player = new PreviewPlayer();

  const status = el("div", { class: "status" }, "load a MIDI file to begin");
  const meta = el("div", { class: "meta" });
  const fileInput = el("input", { type: "file", accept: ".mid,.midi" });
  const roleSelects = TRACK_NAMES.map((name) => {
    const select = el("select", { title: `${name} role` });
    for (const role of ["melody", "bass", "harmony", "empty"]) {
      select.append(el("option", { value: role }, role));
    }
    return select;
  });
  const startBar = el("input", { type: "number", min: "1", value: "1" });
  const analyzeButton = el("button", {}, "Calculate controls");
  const seedInput = el("input", { type: "number", value: "1" });
  const infillButton = el("button", { disabled: "" }, "Start infilling");
  const keepButton = el("button", { disabled: "" }, "Keep");
  const discardButton = el("button", { disabled: "" }, "Discard");
  const playButton = el("button", { disabled: "" }, "Play window");
  const stopButton = el("button", {}, "Stop");
  const exportButton = el("button", { disabled: "" }, "Export MIDI");
  const clearCurveButton = el("button", {}, "Clear tension curve");

  const barHeader = el("div", { class: "bar-header" });
  const lanes = TRACK_NAMES.map(() =>
    el("canvas", { class: "lane", height: String(LANE_HEIGHT) }),
  );
  const laneLabels = TRACK_NAMES.map((name) => el("div", { class: "lane-label" }, name));
  const sliderPanel = el("div", { class: "sliders" });
  const tensionCanvas = el("canvas", {
    class: "tension",
    height: String(TENSION_HEIGHT),
  });

  root.append(
    el(
      "section",
      { class: "toolbar" },
      fileInput,
      ...roleSelects,
      el("label", {}, "start bar ", startBar),
      analyzeButton,
    ),
    meta,
    status,
    el(
      "section",
      { class: "grid" },
      barHeader,
      ...lanes.flatMap((lane, index) => [laneLabels[index], lane]),
    ),
    el("h3", {}, "Track controls (levels 0-9 for selected tracks)"),
    sliderPanel,
    el("h3", {}, "Bar tension (drag to draw the target curve)"),
    tensionCanvas,
    clearCurveButton,
    el(
      "section",
      { class: "actions" },
      el("label", {}, "seed ", seedInput),
      infillButton,
      playButton,
      stopButton,
      keepButton,
      discardButton,
      exportButton,
    ),
  );

  const report = (error: unknown) => {
    if (error instanceof ServiceError) {
      status.textContent = `${error.code}: ${error.message}`;
    } else {
      status.textContent = String(error);
    }
  };

  const run = (work: () => Promise<unknown>) => {
    work().catch(report);
  };

  // ---- rendering -----------------------------------------------------

  const laneWidth = () => Math.max(320, root.clientWidth - 140);

  function windowSlice(midi: ParsedMidi): { startTick: number; bars: number } {
    const view = controller.view;
    const bars = view.analysis?.window_bars ?? 1;
    const origin = view.originBar;
    return { startTick: (origin - 1) * barTicks(midi), bars };
  }

  function drawLane(index: number): void {
    const canvas = lanes[index];
    const view = controller.view;
    const midi = view.pendingMidi ?? view.committedMidi;
    canvas.width = laneWidth();
    const ctx = canvas.getContext("2d");
    if (!ctx || !view.analysis || !midi) return;
    const { startTick, bars } = windowSlice(midi);
    const span = bars * barTicks(midi);
    const scaleX = canvas.width / span;
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, canvas.width, canvas.height);

    for (let bar = 1; bar <= bars; bar++) {
      const x = ((bar - 1) * span) / bars * scaleX;
      if (view.selection?.has(index, bar)) {
        ctx.fillStyle = "rgba(96, 165, 250, 0.25)";
        ctx.fillRect(x, 0, canvas.width / bars, canvas.height);
      }
      ctx.strokeStyle = "#2c3440";
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, canvas.height);
      ctx.stroke();
    }

    const notes = midi.tracks[index] ?? [];
    const visible = notes.filter(
      (note) =>
        note.onset < startTick + span && note.onset + note.duration > startTick,
    );
    const pitches = visible.map((n) => n.pitch);
    const low = Math.min(36, ...pitches);
    const high = Math.max(84, ...pitches);
    ctx.fillStyle = view.pendingMidi ? "#f59e0b" : "#34d399";
    for (const note of visible) {
      const x = (Math.max(0, note.onset - startTick)) * scaleX;
      const w = Math.max(
        2,
        (Math.min(note.onset + note.duration, startTick + span) -
          Math.max(note.onset, startTick)) * scaleX,
      );
      const y =
        canvas.height -
        ((note.pitch - low) / Math.max(1, high - low)) * (canvas.height - 6) -
        4;
      ctx.fillRect(x, y, w, 4);
    }
  }

  function drawBarHeader(): void {
    barHeader.replaceChildren();
    const bars = controller.view.analysis?.window_bars ?? 0;
    const origin = controller.view.originBar;
    for (let bar = 1; bar <= bars; bar++) {
      const button = el("button", { class: "bar-button" }, String(origin + bar - 1));
      button.addEventListener("click", () => {
        controller.view.selection?.selectWholeBar(bar);
        render();
      });
      barHeader.append(button);
    }
  }

  function drawSliders(): void {
    sliderPanel.replaceChildren();
    const view = controller.view;
    const tracks = view.selection?.selectedTracks() ?? [];
    if (!tracks.length) {
      sliderPanel.append(el("em", {}, "select cells in the grid first"));
      return;
    }
    for (const track of tracks) {
      const role = view.roles[track] ?? "empty";
      const group = el("div", { class: "slider-group" });
      group.append(el("strong", {}, `${TRACK_NAMES[track]} (${role})`));
      const levels = controller.effectiveLevels(track);
      for (const metric of METRICS) {
        const slider = el("input", {
          type: "range",
          min: "0",
          max: "9",
          step: "1",
          value: String(levels[metric]),
        });
        const value = el("span", { class: "slider-value" }, String(levels[metric]));
        slider.addEventListener("input", () => {
          value.textContent = slider.value;
          controller.setLevelOverride(track, metric, Number(slider.value));
        });
        group.append(el("label", { class: "slider" }, `${metric} `, slider, value));
      }
      sliderPanel.append(group);
    }
  }

  function drawTension(): void {
    const view = controller.view;
    tensionCanvas.width = laneWidth();
    const ctx = tensionCanvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, tensionCanvas.width, tensionCanvas.height);
    const analysis = view.analysis;
    if (!analysis) return;
    const bars = analysis.window_bars;
    const cellWidth = tensionCanvas.width / bars;

    for (let level = 0; level <= 9; level++) {
      const y = tensionCanvas.height * (1 - level / 10);
      ctx.strokeStyle = level % 5 ? "#1b212b" : "#2c3440";
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(tensionCanvas.width, y);
      ctx.stroke();
    }

    // read-only raw overlays, scaled into the lane
    const overlays: Array<[keyof typeof analysis.tension[0], string]> = [
      ["tensile_strain", "#64748b"],
      ["cloud_diameter", "#475569"],
      ["cloud_momentum", "#334155"],
    ];
    for (const [field, colour] of overlays) {
      const values = analysis.tension.map((t) => Number(t[field]));
      const peak = Math.max(0.001, ...values);
      ctx.strokeStyle = colour;
      ctx.beginPath();
      values.forEach((value, i) => {
        const x = (i + 0.5) * cellWidth;
        const y = tensionCanvas.height * (1 - value / peak) * 0.95;
        i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
      });
      ctx.stroke();
    }

    // the editable level curve: computed levels underneath, drawn curve on top
    analysis.tension.forEach((t, i) => {
      const drawn = view.tensionCurve[i + 1];
      const level = drawn ?? t.tension_level;
      const x = i * cellWidth;
      const y = tensionCanvas.height * (1 - level / 10);
      ctx.fillStyle = drawn !== undefined ? "#f87171" : "#60a5fa";
      ctx.fillRect(x + 2, y - 2, cellWidth - 4, 4);
    });
  }

  function render(): void {
    const view = controller.view;
    if (view.summary) {
      const s = view.summary;
      meta.textContent =
        `tracks ${s.track_count} | bars ${s.bar_count} | ` +
        `metre ${s.metre.numerator}/${s.metre.denominator} | ` +
        `tempo ${s.tempo_bpm.toFixed(1)} bpm | key ${s.key.name} ` +
        `(confidence ${s.key.confidence.toFixed(2)})`;
    }
    const pending = view.phase === "pending";
    infillButton.disabled =
      view.busy || pending || !view.analysis || !view.selection?.size;
    keepButton.disabled = view.busy || !pending;
    discardButton.disabled = view.busy || !pending;
    playButton.disabled = !(view.pendingMidi ?? view.committedMidi);
    exportButton.disabled = view.busy || !view.summary;
    analyzeButton.disabled = view.busy || !view.summary || pending;
    drawBarHeader();
    lanes.forEach((_, index) => drawLane(index));
    drawSliders();
    drawTension();
  }

  controller.onChange(render);

  // ---- interactions --------------------------------------------------

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    run(async () => {
      const bytes = new Uint8Array(await file.arrayBuffer());
      const summary = await controller.loadFile(bytes);
      const usable = Math.min(3, summary.track_count);
      roleSelects.forEach((select, index) => {
        select.disabled = index >= usable;
      });
      startBar.max = String(summary.bar_count);
      status.textContent =
        summary.bar_count > 16
          ? "more than 16 bars: pick a start bar, assign roles, then calculate"
          : "assign roles, then calculate controls";
    });
  });

  analyzeButton.addEventListener("click", () => {
    run(async () => {
      const view = controller.view;
      const count = view.summary ? Math.min(3, view.summary.track_count) : 0;
      const roles = roleSelects.slice(0, count).map((s) => s.value as Role);
      await controller.setRoles(roles);
      await controller.analyze(Number(startBar.value) || 1);
      status.textContent = "select cells to infill (click cells, bar numbers, or drag)";
    });
  });

  lanes.forEach((canvas, track) => {
    let dragFrom: number | null = null;
    const barAt = (event: MouseEvent) => {
      const bars = controller.view.analysis?.window_bars ?? 1;
      const rect = canvas.getBoundingClientRect();
      const x = event.clientX - rect.left;
      return Math.max(1, Math.min(bars, Math.floor((x / rect.width) * bars) + 1));
    };
    canvas.addEventListener("mousedown", (event) => {
      dragFrom = barAt(event);
    });
    canvas.addEventListener("mouseup", (event) => {
      const selection = controller.view.selection;
      if (!selection || controller.view.phase === "pending") return;
      const bar = barAt(event);
      if (dragFrom !== null && bar !== dragFrom) {
        selection.selectRange(track, dragFrom, bar);
      } else {
        selection.toggleCell(track, bar);
      }
      dragFrom = null;
      render();
    });
  });

  let drawing = false;
  let samples: CurveSample[] = [];
  const sampleAt = (event: MouseEvent): CurveSample => {
    const rect = tensionCanvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  };
  tensionCanvas.addEventListener("mousedown", (event) => {
    drawing = true;
    samples = [sampleAt(event)];
  });
  tensionCanvas.addEventListener("mousemove", (event) => {
    if (drawing) samples.push(sampleAt(event));
  });
  const finishCurve = () => {
    if (!drawing) return;
    drawing = false;
    const bars = controller.view.analysis?.window_bars ?? 0;
    if (!bars) return;
    const rect = tensionCanvas.getBoundingClientRect();
    controller.setTensionCurve(curveToLevels(samples, rect.width, rect.height, bars));
  };
  tensionCanvas.addEventListener("mouseup", finishCurve);
  tensionCanvas.addEventListener("mouseleave", finishCurve);
  clearCurveButton.addEventListener("click", () => controller.clearTensionCurve());

  infillButton.addEventListener("click", () => {
    run(async () => {
      await controller.infill(Number(seedInput.value) || 0);
      status.textContent = "listen to the result, then keep or discard it";
    });
  });

  keepButton.addEventListener("click", () => {
    run(async () => {
      await controller.resolve(true);
      status.textContent = "kept: the next infilling builds on this result";
    });
  });

  discardButton.addEventListener("click", () => {
    run(async () => {
      await controller.resolve(false);
      status.textContent = "discarded: back to the previous state";
    });
  });

  playButton.addEventListener("click", () => {
    const view = controller.view;
    const midi = view.pendingMidi ?? view.committedMidi;
    if (!midi) return;
    const origin = view.originBar;
    const bars = view.analysis?.window_bars ?? 1;
    player.play(midi, origin, origin + bars - 1);
  });
  stopButton.addEventListener("click", () => player.stop());

  exportButton.addEventListener("click", () => {
    run(async () => {
      const bytes = await controller.exportMidi();
      const blob = new Blob([bytes.slice()], { type: "audio/midi" });
      const link = el("a", {
        href: URL.createObjectURL(blob),
        download: "midifill-export.mid",
      });
      link.click();
      URL.revokeObjectURL(link.href);
      status.textContent = "exported the committed result";
    });
  });

  render();
}
