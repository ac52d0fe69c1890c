"""Deterministic baseline generator.

Desk-scale stand-in for a learned infilling model: for each selected
cell it samples candidate bars on a sixteenth-note grid from a context
pitch vocabulary, then keeps the candidate whose recomputed control
levels and bar tension come closest to the targets. Cells are processed
bar by bar (bass, harmony, melody within a bar) so later cells condition
on already regenerated material, while each cell draws from its own
counter-derived random stream so sampling is order-independent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .engine import (
    Cell,
    GeneratorPort,
    RegionSpec,
    ResolvedTargets,
    ROLE_CONSTRAINTS,
    RoleConstraint,
    check_cell_output,
    replace_cell_events,
)
from .errors import GeneratorFailure
from .keys import KeyEstimate
from .metrics import ControlLevels, bar_metrics, level_midpoint, quantize_level
from .model import NoteEvent, ScoreWindow, TrackRole
from .tension import bar_strain

GENERATED_VELOCITY = 80

_MASK = (1 << 64) - 1

# bar-internal processing order: tonal floor first
_ROLE_ORDER = {
    TrackRole.BASS: 0,
    TrackRole.HARMONY: 1,
    TrackRole.MELODY: 2,
    TrackRole.EMPTY: 3,
}


def _splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def cell_seed(seed: int, cell: Cell) -> int:
    """Per-cell stream seed; depends only on (seed, cell), not on the
    order cells are processed in."""
    track, bar = cell
    state = _splitmix64(seed & _MASK)
    state = _splitmix64(state ^ ((track + 1) * 0x517C_C1B7_2722_0A95))
    state = _splitmix64(state ^ ((bar + 1) * 0x2545_F491_4F6C_DD1D))
    return state


@dataclass(frozen=True)
class BaselineConfig:
    candidates: int = 32
    grid_division: int = 16  # subdivisions of a whole note
    # error weights for (density, polyphony, occupation, tension)
    error_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)


class BaselineGenerator(GeneratorPort):
    def __init__(self, config: BaselineConfig | None = None) -> None:
        self.config = config or BaselineConfig()

    def generate(
        self,
        window: ScoreWindow,
        region: RegionSpec,
        targets: ResolvedTargets,
        key: KeyEstimate,
        seed: int,
    ) -> dict[Cell, tuple[NoteEvent, ...]]:
        working = window
        produced: dict[Cell, tuple[NoteEvent, ...]] = {}
        ordered = sorted(
            region.cells,
            key=lambda c: (c[1], _ROLE_ORDER[window.tracks[c[0]].role], c[0]),
        )
        for cell in ordered:
            events = self._fill_cell(working, cell, targets, key, seed)
            produced[cell] = events
            working = replace_cell_events(working, cell, events)
        return produced

    def _fill_cell(
        self,
        working: ScoreWindow,
        cell: Cell,
        targets: ResolvedTargets,
        key: KeyEstimate,
        seed: int,
    ) -> tuple[NoteEvent, ...]:
        track, bar = cell
        role = working.tracks[track].role
        constraint = ROLE_CONSTRAINTS[role]
        rng = random.Random(cell_seed(seed, cell))
        lo, hi = working.bar_span(bar)
        grid = self._grid(working, bar)
        pools = self._vocab_pools(working, cell, constraint, key)
        want = targets.cell_levels[cell]
        tension_target = targets.bar_tension.get(bar)

        best: tuple[NoteEvent, ...] | None = None
        best_error = float("inf")
        for index in range(self.config.candidates):
            pool = pools[index % len(pools)]
            events = self._candidate(rng, pool, grid, lo, hi, want, constraint)
            try:
                check_cell_output(working, cell, events)
            except GeneratorFailure:
                continue
            error = self._error(working, cell, events, want, tension_target, key, lo, hi)
            if error < best_error:
                best = events
                best_error = error
        if best is None:
            raise GeneratorFailure(f"no valid candidate for cell {cell}")
        return best

    def _grid(self, window: ScoreWindow, bar: int) -> list[int]:
        lo, hi = window.bar_span(bar)
        metre = window.metre
        steps = max(1, metre.numerator * self.config.grid_division // metre.denominator)
        return sorted({lo + (hi - lo) * i // steps for i in range(steps)})

    def _vocab_pools(
        self,
        working: ScoreWindow,
        cell: Cell,
        constraint: RoleConstraint,
        key: KeyEstimate,
    ) -> list[list[int]]:
        """Three pitch pools the candidates rotate through: surrounding
        context, key scale tones, full chromatic register."""
        track, bar = cell
        lo, hi = working.bar_span(bar)
        context: set[int] = set()
        for ev in working.tracks[track].events:
            if ev.offset <= lo or ev.onset >= hi:
                context.add(ev.pitch)
        for other, tr in enumerate(working.tracks):
            if other == track:
                continue
            for ev in tr.events:
                if ev.onset < hi and ev.offset > lo:
                    context.add(ev.pitch)
        in_register = [p for p in sorted(context) if constraint.low <= p <= constraint.high]
        scale = key.scale_pitch_classes()
        diatonic = [
            p for p in range(constraint.low, constraint.high + 1) if p % 12 in scale
        ]
        chromatic = list(range(constraint.low, constraint.high + 1))
        pools = [in_register or diatonic, diatonic, chromatic]
        return pools

    def _candidate(
        self,
        rng: random.Random,
        pool: list[int],
        grid: list[int],
        lo: int,
        hi: int,
        want: ControlLevels,
        constraint: RoleConstraint,
    ) -> tuple[NoteEvent, ...]:
        density_mid = level_midpoint(want.density_level, "density")
        occupation_mid = level_midpoint(want.occupation_level, "occupation")
        jitter = rng.choice((-1, 0, 0, 1))
        if constraint.max_stack == 1:
            stack = 1
        else:
            polyphony_mid = level_midpoint(want.polyphony_level, "polyphony")
            stack = round(polyphony_mid) + rng.choice((-1, 0, 0, 1))
            stack = max(constraint.min_stack, min(constraint.max_stack, stack))
        slots = round(density_mid / stack) + jitter
        slots = max(0, min(len(grid), slots))
        if slots == 0:
            return ()
        chosen = sorted(rng.sample(range(len(grid)), slots))
        if occupation_mid >= 0.45 and 0 not in chosen:
            chosen[0] = 0  # sustained textures anchor on the downbeat
            chosen = sorted(set(chosen))
        positions = [grid[i] for i in chosen]
        per_note = occupation_mid * (hi - lo) / len(positions)
        events: list[NoteEvent] = []
        previous_pitch: int | None = None
        for i, pos in enumerate(positions):
            limit = (positions[i + 1] if i + 1 < len(positions) else hi) - pos
            duration = round(per_note * rng.uniform(0.85, 1.15))
            duration = max(1, min(limit, duration))
            if stack == 1:
                pitch = self._step_pitch(rng, pool, previous_pitch)
                previous_pitch = pitch
                events.append(NoteEvent(pos, pitch, duration, GENERATED_VELOCITY))
            else:
                for pitch in self._chord_pitches(rng, pool, stack):
                    events.append(NoteEvent(pos, pitch, duration, GENERATED_VELOCITY))
        events.sort()
        return tuple(events)

    @staticmethod
    def _step_pitch(rng: random.Random, pool: list[int], previous: int | None) -> int:
        if previous is None:
            return rng.choice(pool)
        near = [p for p in pool if abs(p - previous) <= 7]
        return rng.choice(near or pool)

    @staticmethod
    def _chord_pitches(rng: random.Random, pool: list[int], stack: int) -> list[int]:
        if len(pool) >= stack:
            return sorted(rng.sample(pool, stack))
        # pool too small: spread duplicates across octaves where possible
        pitches = set(pool)
        candidates = [p + 12 for p in pool] + [p - 12 for p in pool]
        for extra in candidates:
            if len(pitches) >= stack:
                break
            pitches.add(extra)
        return sorted(pitches)[:stack]

    def _error(
        self,
        working: ScoreWindow,
        cell: Cell,
        events: tuple[NoteEvent, ...],
        want: ControlLevels,
        tension_target: int | None,
        key: KeyEstimate,
        lo: int,
        hi: int,
    ) -> float:
        raw = bar_metrics(events, lo, hi)
        got = ControlLevels.from_raw(raw)
        w_density, w_polyphony, w_occupation, w_tension = self.config.error_weights
        error = (
            w_density * abs(got.density_level - want.density_level)
            + w_polyphony * abs(got.polyphony_level - want.polyphony_level)
            + w_occupation * abs(got.occupation_level - want.occupation_level)
        )
        if tension_target is not None:
            track, bar = cell
            strain = bar_strain(
                working,
                bar,
                key,
                extra=[(ev.pitch, float(ev.duration)) for ev in events],
                exclude_track=track,
            )
            error += w_tension * abs(quantize_level(strain, "tension") - tension_target)
        return float(error)
