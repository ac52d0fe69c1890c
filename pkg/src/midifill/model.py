"""Tick-accurate score model: notes, tracks, bars, windows and roles.

All time values are integer ticks at the owning score's ppq; nothing is
ever resampled, so a score that came from a file can be written back
bit-equivalently. Every type here is an immutable value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    BarOutOfRange,
    DuplicateRole,
    RoleCountMismatch,
    UnsupportedMetre,
)

MAX_TRACKS = 3
MAX_WINDOW_BARS = 16

DEFAULT_TEMPO_US = 500_000  # 120 bpm


@dataclass(frozen=True, order=True)
class NoteEvent:
    """One sounding note. Field order gives (onset, pitch) sort order."""

    onset: int
    pitch: int
    duration: int
    velocity: int = 80

    def __post_init__(self) -> None:
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside 0..127")
        if self.onset < 0:
            raise ValueError(f"onset {self.onset} negative")
        if self.duration < 1:
            raise ValueError(f"duration {self.duration} < 1")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside 1..127")

    @property
    def offset(self) -> int:
        return self.onset + self.duration

    def shifted(self, delta: int) -> "NoteEvent":
        return replace(self, onset=self.onset + delta)


@dataclass(frozen=True)
class Metre:
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if self.numerator < 1:
            raise UnsupportedMetre(f"numerator {self.numerator} < 1")
        if self.denominator not in (1, 2, 4, 8, 16):
            raise UnsupportedMetre(
                f"denominator {self.denominator} not a power of two in 1..16"
            )

    def bar_ticks(self, ppq: int) -> int:
        """Bar length in ticks; must come out integral."""
        ticks = Fraction(self.numerator * 4, self.denominator) * ppq
        if ticks.denominator != 1 or ticks <= 0:
            raise UnsupportedMetre(
                f"bar of {self.numerator}/{self.denominator} at ppq {ppq} "
                f"is not an integer tick count"
            )
        return int(ticks)

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


class TrackRole(Enum):
    MELODY = "melody"
    BASS = "bass"
    HARMONY = "harmony"
    EMPTY = "empty"

    @classmethod
    def parse(cls, text: str) -> "TrackRole":
        key = text.strip().lower()
        aliases = {"m": cls.MELODY, "b": cls.BASS, "h": cls.HARMONY, "e": cls.EMPTY}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown track role {text!r}") from None


def _merge_same_pitch(events: Iterable[NoteEvent]) -> tuple[NoteEvent, ...]:
    """Sort events and merge same-pitch overlapping ones into their union.

    Touching notes (offset == next onset) are kept separate; only genuine
    overlaps merge. The merged note keeps the earlier note's velocity.
    """
    by_pitch: dict[int, list[NoteEvent]] = {}
    for ev in events:
        by_pitch.setdefault(ev.pitch, []).append(ev)
    merged: list[NoteEvent] = []
    for pitch, evs in by_pitch.items():
        evs.sort(key=lambda e: (e.onset, e.offset))
        current = evs[0]
        for nxt in evs[1:]:
            if nxt.onset < current.offset:
                end = max(current.offset, nxt.offset)
                current = replace(current, duration=end - current.onset)
            else:
                merged.append(current)
                current = nxt
        merged.append(current)
    merged.sort()
    return tuple(merged)


@dataclass(frozen=True)
class Track:
    role: TrackRole = TrackRole.EMPTY
    events: tuple[NoteEvent, ...] = ()

    @classmethod
    def from_events(
        cls, events: Iterable[NoteEvent], role: TrackRole = TrackRole.EMPTY
    ) -> "Track":
        """Build a track, sorting and merging same-pitch overlaps."""
        evs = list(events)
        if not evs:
            return cls(role=role)
        return cls(role=role, events=_merge_same_pitch(evs))

    def with_role(self, role: TrackRole) -> "Track":
        return replace(self, role=role)

    @property
    def end_tick(self) -> int:
        return max((ev.offset for ev in self.events), default=0)


@dataclass(frozen=True)
class Score:
    """Multi-track score with a single tempo and metre.

    ``tempo_us`` is the tempo meta value (microseconds per quarter note);
    keeping the integer rather than a bpm float makes round-trips exact.
    """

    ppq: int
    tempo_us: int = DEFAULT_TEMPO_US
    metre: Metre = field(default_factory=lambda: Metre(4, 4))
    tracks: tuple[Track, ...] = ()
    end_tick: int = 0

    def __post_init__(self) -> None:
        if self.ppq < 1:
            raise ValueError(f"ppq {self.ppq} < 1")
        if self.tempo_us < 1:
            raise ValueError(f"tempo_us {self.tempo_us} < 1")
        if len(self.tracks) > MAX_TRACKS:
            raise ValueError(f"more than {MAX_TRACKS} tracks")
        notes_end = max((t.end_tick for t in self.tracks), default=0)
        if self.end_tick < notes_end:
            object.__setattr__(self, "end_tick", notes_end)
        self.bar_ticks  # validate metre against ppq eagerly

    @property
    def bpm(self) -> float:
        return 60_000_000 / self.tempo_us

    @property
    def bar_ticks(self) -> int:
        return self.metre.bar_ticks(self.ppq)

    @property
    def bar_count(self) -> int:
        return max(1, math.ceil(self.end_tick / self.bar_ticks))

    @property
    def roles(self) -> tuple[TrackRole, ...]:
        return tuple(t.role for t in self.tracks)

    def events_of(self, track_index: int) -> tuple[NoteEvent, ...]:
        return self.tracks[track_index].events


def bar_partition(score: Score) -> list[tuple[int, int]]:
    """Half-open, equal-length tick ranges covering every event.

    The last bar is padded up to a full bar even when the final note stops
    mid-bar, so the ranges always tile ``bar_count * bar_ticks`` ticks.
    """
    width = score.bar_ticks
    return [(i * width, (i + 1) * width) for i in range(score.bar_count)]


def assign_roles(score: Score, roles: Sequence[TrackRole]) -> Score:
    """Attach roles to tracks and pad the score to three tracks.

    Synthetic empty tracks make up the difference so that infilling can
    target them later.
    """
    if len(roles) != len(score.tracks):
        raise RoleCountMismatch(
            f"{len(roles)} roles for {len(score.tracks)} tracks"
        )
    seen: set[TrackRole] = set()
    for role in roles:
        if role is TrackRole.EMPTY:
            continue
        if role in seen:
            raise DuplicateRole(f"role {role.value} assigned twice")
        seen.add(role)
    tracks = [t.with_role(r) for t, r in zip(score.tracks, roles)]
    while len(tracks) < MAX_TRACKS:
        tracks.append(Track(role=TrackRole.EMPTY))
    return replace(score, tracks=tuple(tracks))


@dataclass(frozen=True)
class ClipRecord:
    """A note that crossed the window edge: the original (absolute ticks)
    and the clipped residue that went into the window (relative ticks)."""

    original: NoteEvent
    residue: NoteEvent


@dataclass(frozen=True)
class ScoreWindow:
    """A view of up to 16 consecutive bars, in window-relative ticks.

    Boundary-crossing notes are clipped at the window edges and the
    originals kept in ``clips`` so that merging an untouched window back
    restores the parent score exactly.
    """

    ppq: int
    tempo_us: int
    metre: Metre
    origin_bar: int
    length: int
    tracks: tuple[Track, ...]
    clips: tuple[tuple[ClipRecord, ...], ...] = ()

    @property
    def bar_ticks(self) -> int:
        return self.metre.bar_ticks(self.ppq)

    @property
    def start_tick(self) -> int:
        """Absolute tick of the window start in the parent score."""
        return (self.origin_bar - 1) * self.bar_ticks

    @property
    def end_tick(self) -> int:
        """Window length in ticks (relative)."""
        return self.length * self.bar_ticks

    @property
    def roles(self) -> tuple[TrackRole, ...]:
        return tuple(t.role for t in self.tracks)

    def bar_span(self, bar: int) -> tuple[int, int]:
        """Relative tick range of a 1-based in-window bar."""
        if not 1 <= bar <= self.length:
            raise BarOutOfRange(f"bar {bar} outside window of {self.length}")
        return ((bar - 1) * self.bar_ticks, bar * self.bar_ticks)

    def events_of(self, track_index: int) -> tuple[NoteEvent, ...]:
        return self.tracks[track_index].events

    def events_in_bar(self, track_index: int, bar: int) -> tuple[NoteEvent, ...]:
        lo, hi = self.bar_span(bar)
        return tuple(
            ev
            for ev in self.tracks[track_index].events
            if ev.onset < hi and ev.offset > lo
        )

    def with_tracks(self, tracks: Sequence[Track]) -> "ScoreWindow":
        return replace(self, tracks=tuple(tracks))


def slice_window(score: Score, origin_bar: int, max_bars: int = MAX_WINDOW_BARS) -> ScoreWindow:
    """Cut a window of at most ``max_bars`` bars starting at ``origin_bar``."""
    if origin_bar < 1 or origin_bar > score.bar_count:
        raise BarOutOfRange(
            f"origin bar {origin_bar} outside 1..{score.bar_count}"
        )
    length = min(max_bars, score.bar_count - origin_bar + 1)
    width = score.bar_ticks
    start = (origin_bar - 1) * width
    end = start + length * width
    win_tracks: list[Track] = []
    clip_lists: list[tuple[ClipRecord, ...]] = []
    for track in score.tracks:
        inside: list[NoteEvent] = []
        clips: list[ClipRecord] = []
        for ev in track.events:
            if ev.offset <= start or ev.onset >= end:
                continue
            if ev.onset >= start and ev.offset <= end:
                inside.append(ev.shifted(-start))
            else:
                lo = max(ev.onset, start)
                hi = min(ev.offset, end)
                residue = NoteEvent(
                    onset=lo - start,
                    pitch=ev.pitch,
                    duration=hi - lo,
                    velocity=ev.velocity,
                )
                inside.append(residue)
                clips.append(ClipRecord(original=ev, residue=residue))
        inside.sort()
        win_tracks.append(Track(role=track.role, events=tuple(inside)))
        clip_lists.append(tuple(clips))
    return ScoreWindow(
        ppq=score.ppq,
        tempo_us=score.tempo_us,
        metre=score.metre,
        origin_bar=origin_bar,
        length=length,
        tracks=tuple(win_tracks),
        clips=tuple(clip_lists),
    )


def merge_window(score: Score, window: ScoreWindow) -> Score:
    """Write a window back into its parent score.

    Content outside the window span is untouched. Clipped boundary notes
    whose residue is still present in the window are restored to their
    original extent; if the residue was replaced, the out-of-window part
    of the original survives as a truncated note.
    """
    if len(window.tracks) != len(score.tracks):
        raise ValueError(
            f"window has {len(window.tracks)} tracks, score has {len(score.tracks)}"
        )
    width = score.bar_ticks
    start = (window.origin_bar - 1) * width
    end = start + window.length * width
    new_tracks: list[Track] = []
    for idx, track in enumerate(score.tracks):
        result: list[NoteEvent] = [
            ev for ev in track.events if ev.offset <= start or ev.onset >= end
        ]
        remaining = list(window.tracks[idx].events)
        for record in window.clips[idx] if idx < len(window.clips) else ():
            try:
                remaining.remove(record.residue)
            except ValueError:
                # residue was replaced: keep the fragments outside the window
                orig = record.original
                if orig.onset < start:
                    result.append(replace(orig, duration=start - orig.onset))
                if orig.offset > end:
                    result.append(
                        NoteEvent(
                            onset=end,
                            pitch=orig.pitch,
                            duration=orig.offset - end,
                            velocity=orig.velocity,
                        )
                    )
            else:
                result.append(record.original)
        result.extend(ev.shifted(start) for ev in remaining)
        new_tracks.append(Track.from_events(result, role=window.tracks[idx].role))
    notes_end = max((t.end_tick for t in new_tracks), default=0)
    return replace(
        score, tracks=tuple(new_tracks), end_tick=max(score.end_tick, notes_end)
    )


def window_to_score(window: ScoreWindow) -> Score:
    """A window as a standalone score (used to ship windows over the wire)."""
    return Score(
        ppq=window.ppq,
        tempo_us=window.tempo_us,
        metre=window.metre,
        tracks=window.tracks,
        end_tick=window.end_tick,
    )


def window_of_whole(score: Score, bars: int | None = None) -> ScoreWindow:
    """Window spanning the given number of bars from bar 1, uncapped.

    Used when a score that *is* a window (received over the wire) has to
    be re-viewed as one; ``bars`` pads past the last sounding note.
    """
    length = bars if bars is not None else score.bar_count
    if length < score.bar_count:
        raise BarOutOfRange(
            f"cannot view {score.bar_count}-bar score as {length} bars"
        )
    return ScoreWindow(
        ppq=score.ppq,
        tempo_us=score.tempo_us,
        metre=score.metre,
        origin_bar=1,
        length=length,
        tracks=score.tracks,
        clips=tuple(() for _ in score.tracks),
    )
