"""Region-based regeneration of (track, bar) cells under control targets.

``infill`` replaces the selected cells' content with whatever the
generator port produces, leaves everything else bit-identical, and
reports the achieved control levels recomputed from the result (never
echoed from the targets). A note reaching into a regenerated bar is
truncated at the bar line; its part outside the region is untouched.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import CellOutOfRange, EmptyRegion, GeneratorFailure, NoNotes
from .keys import KeyEstimate, estimate_key
from .metrics import ControlLevels, bar_metrics, window_levels
from .model import NoteEvent, ScoreWindow, Track, TrackRole
from .tension import TensionValue, tension_profile

Cell = tuple[int, int]  # (track index 0-2, 1-based bar within window)


@dataclass(frozen=True)
class RoleConstraint:
    low: int  # lowest allowed MIDI pitch
    high: int  # highest allowed MIDI pitch
    min_stack: int  # minimum simultaneous notes while sounding
    max_stack: int  # maximum simultaneous notes


ROLE_CONSTRAINTS: dict[TrackRole, RoleConstraint] = {
    TrackRole.MELODY: RoleConstraint(60, 84, 1, 1),
    TrackRole.BASS: RoleConstraint(28, 52, 1, 1),
    TrackRole.HARMONY: RoleConstraint(48, 72, 2, 5),
    TrackRole.EMPTY: RoleConstraint(36, 84, 1, 5),
}


@dataclass(frozen=True)
class RegionSpec:
    """Set of (track, bar) cells to regenerate; minimum one cell."""

    cells: frozenset[Cell]

    @classmethod
    def of(cls, cells) -> "RegionSpec":
        return cls(cells=frozenset(cells))

    @classmethod
    def whole_bar(cls, bar: int, track_count: int = 3) -> "RegionSpec":
        return cls(cells=frozenset((t, bar) for t in range(track_count)))

    def bars(self) -> tuple[int, ...]:
        return tuple(sorted({bar for _, bar in self.cells}))

    def tracks(self) -> tuple[int, ...]:
        return tuple(sorted({track for track, _ in self.cells}))

    def cells_of_track(self, track: int) -> tuple[Cell, ...]:
        return tuple(sorted(c for c in self.cells if c[0] == track))


def validate_region(window: ScoreWindow, region: RegionSpec) -> RegionSpec:
    """Check that every cell addresses a real track and in-window bar.

    Empty-role tracks are legitimate targets.
    """
    if not region.cells:
        raise EmptyRegion("region has no cells")
    for track, bar in region.cells:
        if not 0 <= track < len(window.tracks):
            raise CellOutOfRange(f"track {track} outside 0..{len(window.tracks) - 1}")
        if not 1 <= bar <= window.length:
            raise CellOutOfRange(f"bar {bar} outside 1..{window.length}")
    return region


@dataclass(frozen=True)
class ControlTarget:
    """Steering targets: one level triple per selected track, one tension
    level per selected bar. Anything unspecified defaults to the current
    computed level."""

    track_levels: Mapping[int, ControlLevels] = field(default_factory=dict)
    tension_levels: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for bar, level in self.tension_levels.items():
            if not 0 <= level <= 9:
                raise ValueError(f"tension level {level} for bar {bar} outside 0..9")


@dataclass(frozen=True)
class ResolvedTargets:
    """Per-cell effective targets after defaults are filled in."""

    cell_levels: Mapping[Cell, ControlLevels]
    bar_tension: Mapping[int, int]


def resolve_targets(
    window: ScoreWindow, region: RegionSpec, targets: ControlTarget
) -> ResolvedTargets:
    """Fill in defaults: a track without an explicit target takes the
    current levels of its lowest selected bar (one triple per track, so
    the resolved targets survive the per-track wire format); a bar
    without a tension target keeps its current tension level."""
    grid = window_levels(window)
    profile = tension_profile_or_flat(window)
    track_defaults: dict[int, ControlLevels] = {}
    for track in region.tracks():
        explicit = targets.track_levels.get(track)
        if explicit is not None:
            track_defaults[track] = explicit
        else:
            first_bar = region.cells_of_track(track)[0][1]
            track_defaults[track] = grid[track][first_bar - 1][1]
    cell_levels: dict[Cell, ControlLevels] = {
        (track, bar): track_defaults[track] for track, bar in sorted(region.cells)
    }
    bar_tension: dict[int, int] = {}
    for bar in region.bars():
        explicit = targets.tension_levels.get(bar)
        bar_tension[bar] = (
            explicit if explicit is not None else profile[bar - 1].tension_level
        )
    return ResolvedTargets(cell_levels=cell_levels, bar_tension=bar_tension)


def window_key(window: ScoreWindow) -> KeyEstimate:
    """Key of a window; an all-empty window defaults to C major."""
    try:
        return estimate_key(window)
    except NoNotes:
        return KeyEstimate(tonic=0, mode="major", confidence=0.0)


def tension_profile_or_flat(window: ScoreWindow) -> list[TensionValue]:
    return tension_profile(window, window_key(window))


class GeneratorPort(ABC):
    """Extension point producing new events for selected cells.

    Implementations must be deterministic in (inputs, seed), emit events
    strictly inside each cell's bar (window-relative ticks) and respect
    the role constraints table.
    """

    @abstractmethod
    def generate(
        self,
        window: ScoreWindow,
        region: RegionSpec,
        targets: ResolvedTargets,
        key: KeyEstimate,
        seed: int,
    ) -> dict[Cell, tuple[NoteEvent, ...]]:
        ...


def check_cell_output(
    window: ScoreWindow, cell: Cell, events: Sequence[NoteEvent]
) -> None:
    """Raise GeneratorFailure when cell output breaks port invariants."""
    track, bar = cell
    lo, hi = window.bar_span(bar)
    constraint = ROLE_CONSTRAINTS[window.tracks[track].role]
    for ev in events:
        if ev.onset < lo or ev.offset > hi:
            raise GeneratorFailure(
                f"cell {cell}: event at {ev.onset} leaves bar [{lo},{hi})"
            )
        if not constraint.low <= ev.pitch <= constraint.high:
            raise GeneratorFailure(
                f"cell {cell}: pitch {ev.pitch} outside register "
                f"{constraint.low}..{constraint.high}"
            )
    if events:
        boundaries = sorted({t for ev in events for t in (ev.onset, ev.offset)})
        for seg_lo, seg_hi in zip(boundaries, boundaries[1:]):
            count = sum(1 for ev in events if ev.onset <= seg_lo and ev.offset >= seg_hi)
            if count > constraint.max_stack:
                raise GeneratorFailure(
                    f"cell {cell}: {count} simultaneous notes exceeds "
                    f"{constraint.max_stack}"
                )
            if 0 < count < constraint.min_stack:
                raise GeneratorFailure(
                    f"cell {cell}: {count} simultaneous notes below "
                    f"{constraint.min_stack}"
                )


def replace_cell_events(
    window: ScoreWindow, cell: Cell, events: Sequence[NoteEvent]
) -> ScoreWindow:
    """New window with one cell's bar content replaced.

    Existing notes crossing the bar edges are clipped so their
    out-of-cell parts survive.
    """
    track_index, bar = cell
    lo, hi = window.bar_span(bar)
    kept: list[NoteEvent] = []
    for ev in window.tracks[track_index].events:
        if ev.offset <= lo or ev.onset >= hi:
            kept.append(ev)
            continue
        if ev.onset < lo:
            kept.append(NoteEvent(ev.onset, ev.pitch, lo - ev.onset, ev.velocity))
        if ev.offset > hi:
            kept.append(NoteEvent(hi, ev.pitch, ev.offset - hi, ev.velocity))
    kept.extend(events)
    tracks = list(window.tracks)
    tracks[track_index] = Track.from_events(kept, role=tracks[track_index].role)
    return window.with_tracks(tracks)


@dataclass(frozen=True)
class InfillResult:
    new_window: ScoreWindow
    key: KeyEstimate
    seed: int
    achieved_levels: Mapping[Cell, ControlLevels]
    achieved_tension: Mapping[int, TensionValue]  # all window bars, 1-based
    level_deltas: Mapping[Cell, dict[str, int]]
    tension_deltas: Mapping[int, int]  # selected bars only
    failed_cells: frozenset[Cell] = frozenset()

    @property
    def failed(self) -> bool:
        return bool(self.failed_cells)


def _achieved(
    window: ScoreWindow,
    region: RegionSpec,
    targets: ResolvedTargets,
    key: KeyEstimate,
) -> tuple[dict[Cell, ControlLevels], dict[int, TensionValue], dict[Cell, dict[str, int]], dict[int, int]]:
    levels: dict[Cell, ControlLevels] = {}
    deltas: dict[Cell, dict[str, int]] = {}
    for cell in sorted(region.cells):
        track, bar = cell
        raw = bar_metrics(window.tracks[track].events, *window.bar_span(bar))
        got = ControlLevels.from_raw(raw)
        want = targets.cell_levels[cell]
        levels[cell] = got
        deltas[cell] = {
            "density": abs(got.density_level - want.density_level),
            "polyphony": abs(got.polyphony_level - want.polyphony_level),
            "occupation": abs(got.occupation_level - want.occupation_level),
        }
    profile = tension_profile(window, key)
    tension = {bar: profile[bar - 1] for bar in range(1, window.length + 1)}
    tension_deltas = {
        bar: abs(tension[bar].tension_level - want)
        for bar, want in targets.bar_tension.items()
    }
    return levels, tension, deltas, tension_deltas


def infill(
    window: ScoreWindow,
    region: RegionSpec,
    targets: ControlTarget,
    seed: int,
    generator: GeneratorPort,
) -> InfillResult:
    """Regenerate the region under the targets; pure in (inputs, seed).

    Generator failures do not raise: the input window comes back
    unchanged with the failing cells flagged.
    """
    region = validate_region(window, region)
    resolved = resolve_targets(window, region, targets)
    key = window_key(window)
    try:
        produced = generator.generate(window, region, resolved, key, seed)
        new_window = window
        for cell in sorted(produced):
            if cell not in region.cells:
                raise GeneratorFailure(f"generator wrote to cell {cell} outside region")
            check_cell_output(window, cell, produced[cell])
            new_window = replace_cell_events(new_window, cell, produced[cell])
    except GeneratorFailure as failure:
        levels, tension, deltas, tension_deltas = _achieved(
            window, region, resolved, key
        )
        return InfillResult(
            new_window=window,
            key=key,
            seed=seed,
            achieved_levels=levels,
            achieved_tension=tension,
            level_deltas=deltas,
            tension_deltas=tension_deltas,
            failed_cells=frozenset(region.cells),
        )
    levels, tension, deltas, tension_deltas = _achieved(
        new_window, region, resolved, key
    )
    return InfillResult(
        new_window=new_window,
        key=key,
        seed=seed,
        achieved_levels=levels,
        achieved_tension=tension,
        level_deltas=deltas,
        tension_deltas=tension_deltas,
    )
