"""Key estimation by Krumhansl-Schmuckler profile correlation.

The duration-weighted pitch-class histogram of everything sounding is
correlated (Pearson) against the 24 rotated Krumhansl-Kessler profiles;
the best-scoring key wins. Ties break toward the lower tonic pitch
class, major before minor. Sums use ``math.fsum`` so the scores are
exactly invariant under transposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import NoNotes
from .model import NoteEvent, Score, ScoreWindow

# Krumhansl & Kessler probe-tone profiles ("Cognitive Foundations of
# Musical Pitch", p. 30)
MAJOR_PROFILE = (6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88)
MINOR_PROFILE = (6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17)

PITCH_NAMES = ("C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B")

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
MINOR_SCALE = (0, 2, 3, 5, 7, 8, 10)


@dataclass(frozen=True)
class KeyEstimate:
    tonic: int  # pitch class 0-11
    mode: str  # "major" | "minor"
    confidence: float  # best correlation clamped into [0, 1]

    @property
    def name(self) -> str:
        return f"{PITCH_NAMES[self.tonic]} {self.mode}"

    def scale_pitch_classes(self) -> tuple[int, ...]:
        degrees = MAJOR_SCALE if self.mode == "major" else MINOR_SCALE
        return tuple((self.tonic + d) % 12 for d in degrees)


def pitch_class_histogram(events: Iterable[NoteEvent]) -> list[float]:
    histogram = [0.0] * 12
    for ev in events:
        histogram[ev.pitch % 12] += ev.duration
    return histogram


def _correlation(histogram: list[float], profile: tuple[float, ...], tonic: int) -> float:
    """Pearson correlation of the histogram with the profile rotated to
    the tonic; 0 when either side has no variance."""
    n = 12
    xs = histogram
    ys = [profile[(pc - tonic) % 12] for pc in range(12)]
    sum_x = math.fsum(xs)
    sum_y = math.fsum(ys)
    sum_xx = math.fsum(x * x for x in xs)
    sum_yy = math.fsum(y * y for y in ys)
    sum_xy = math.fsum(x * y for x, y in zip(xs, ys))
    var_x = n * sum_xx - sum_x * sum_x
    var_y = n * sum_yy - sum_y * sum_y
    if var_x <= 0 or var_y <= 0:
        return 0.0
    return (n * sum_xy - sum_x * sum_y) / math.sqrt(var_x * var_y)


def estimate_key_from_histogram(histogram: list[float]) -> KeyEstimate:
    best: tuple[float, int, int] | None = None  # (-score, tonic, mode_rank)
    best_score = -math.inf
    for mode_rank, (mode, profile) in enumerate(
        (("major", MAJOR_PROFILE), ("minor", MINOR_PROFILE))
    ):
        for tonic in range(12):
            score = _correlation(histogram, profile, tonic)
            rank = (-score, tonic, mode_rank)
            if best is None or rank < best:
                best = rank
                best_score = score
    assert best is not None
    _, tonic, mode_rank = best
    return KeyEstimate(
        tonic=tonic,
        mode="major" if mode_rank == 0 else "minor",
        confidence=min(1.0, max(0.0, best_score)),
    )


def estimate_key(source: ScoreWindow | Score) -> KeyEstimate:
    """Estimate the key of a window (or whole score)."""
    events = [ev for track in source.tracks for ev in track.events]
    if not events:
        raise NoNotes("cannot estimate a key without notes")
    return estimate_key_from_histogram(pitch_class_histogram(events))
