"""Per-track, per-bar controllability attributes and 0-9 level bins.

Raw attributes per bar and track:

* density    - count of note onsets in the bar
* occupation - fraction of the bar during which at least one note sounds
* polyphony  - mean simultaneous note count, averaged over sounding ticks
               only (0 for a silent bar)

Each raw value maps to a level 0-9 through the bin-edge table below; the
table is the single place to recalibrate. A level is the index of the
half-open bin ``[edge[i], edge[i+1])`` containing the value; the top bin
is right-closed so the maximum raw value still lands on level 9.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .model import NoteEvent, ScoreWindow

# 11 edges per metric = 10 bins; the last edge is the nominal ceiling used
# for bin midpoints, values beyond it saturate at level 9
LEVEL_EDGES: dict[str, tuple[float, ...]] = {
    "density": (0, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32),
    "polyphony": (0, 1, 1.2, 1.6, 2, 2.5, 3, 4, 5, 6, 8),
    "occupation": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    "tension": (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0),
}

METRIC_KINDS = tuple(LEVEL_EDGES)


def quantize_level(raw: float, metric_kind: str) -> int:
    """Level 0-9 of a raw attribute value; monotone and saturating."""
    edges = LEVEL_EDGES[metric_kind]
    if raw < 0:
        raw = 0.0
    return min(9, bisect_right(edges, raw) - 1)


def level_midpoint(level: int, metric_kind: str) -> float:
    """Centre of a level's bin, used as a generation target."""
    edges = LEVEL_EDGES[metric_kind]
    return (edges[level] + edges[level + 1]) / 2


@dataclass(frozen=True)
class RawTrackMetrics:
    density: float
    polyphony: float
    occupation: float


@dataclass(frozen=True)
class ControlLevels:
    density_level: int
    polyphony_level: int
    occupation_level: int

    def __post_init__(self) -> None:
        for name in ("density_level", "polyphony_level", "occupation_level"):
            value = getattr(self, name)
            if not 0 <= value <= 9:
                raise ValueError(f"{name} {value} outside 0..9")

    @classmethod
    def from_raw(cls, raw: RawTrackMetrics) -> "ControlLevels":
        return cls(
            density_level=quantize_level(raw.density, "density"),
            polyphony_level=quantize_level(raw.polyphony, "polyphony"),
            occupation_level=quantize_level(raw.occupation, "occupation"),
        )


def bar_metrics(events: tuple[NoteEvent, ...], lo: int, hi: int) -> RawTrackMetrics:
    """Raw metrics of one track over the tick range [lo, hi).

    Events may extend past the range; only the overlapping part counts
    for occupation and polyphony, while density counts onsets inside.
    """
    width = hi - lo
    density = sum(1 for ev in events if lo <= ev.onset < hi)
    spans = [
        (max(ev.onset, lo), min(ev.offset, hi))
        for ev in events
        if ev.onset < hi and ev.offset > lo
    ]
    if not spans:
        return RawTrackMetrics(density=float(density), polyphony=0.0, occupation=0.0)
    boundaries = sorted({t for span in spans for t in span})
    occupied = 0
    weighted = 0
    for seg_lo, seg_hi in zip(boundaries, boundaries[1:]):
        count = sum(1 for s, e in spans if s <= seg_lo and e >= seg_hi)
        if count > 0:
            occupied += seg_hi - seg_lo
            weighted += count * (seg_hi - seg_lo)
    polyphony = weighted / occupied if occupied else 0.0
    return RawTrackMetrics(
        density=float(density),
        polyphony=polyphony,
        occupation=occupied / width,
    )


def raw_metrics(window: ScoreWindow, track_index: int) -> list[RawTrackMetrics]:
    """Per-bar raw metrics for one track of a window."""
    events = window.tracks[track_index].events
    return [
        bar_metrics(events, *window.bar_span(bar))
        for bar in range(1, window.length + 1)
    ]


def window_levels(window: ScoreWindow) -> list[list[tuple[RawTrackMetrics, ControlLevels]]]:
    """``[track][bar]`` grid of raw metrics and their levels."""
    grid: list[list[tuple[RawTrackMetrics, ControlLevels]]] = []
    for index in range(len(window.tracks)):
        row = [(raw, ControlLevels.from_raw(raw)) for raw in raw_metrics(window, index)]
        grid.append(row)
    return grid
