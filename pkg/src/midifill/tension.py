"""Spiral-array geometry and per-bar tonal tension.

Pitch classes are embedded on a helix along the line of fifths: index k
(C = 0, ascending fifths) sits at ``(r*sin(k*pi/2), r*cos(k*pi/2), k*h)``
with radius r = 1 and rise per fifth h = sqrt(2/15). A bar is a cloud of
pitch points weighted by sounding duration; three quantities are read
off the geometry:

* cloud diameter  - max pairwise distance of the bar's pitch points
* tensile strain  - distance from the bar's centre of effect to the key
                    centre
* cloud momentum  - distance between consecutive bars' centres of effect

The key centre combines the tonic, dominant and subdominant triad
centres with weights (0.6, 0.2, 0.2); each triad centre weights its
(root, fifth, third) the same way. Enharmonic spelling is resolved by
picking the line-of-fifths index closest to the key tonic (window
``[tonic-5, tonic+6]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyCloud
from .keys import KeyEstimate
from .metrics import quantize_level
from .model import ScoreWindow

SPIRAL_RADIUS = 1.0
FIFTH_RISE = math.sqrt(2.0 / 15.0)

# weights for (root, fifth, third) within a triad and for
# (tonic, dominant, subdominant) triads within a key centre
CHORD_WEIGHTS = (0.6, 0.2, 0.2)
KEY_WEIGHTS = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class SpiralPoint:
    x: float
    y: float
    z: float

    def distance(self, other: "SpiralPoint") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2
            + (self.y - other.y) ** 2
            + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class TensionValue:
    tensile_strain: float
    cloud_diameter: float
    cloud_momentum: float
    tension_level: int


def spiral_position(k: int) -> SpiralPoint:
    """Spiral-array point of line-of-fifths index k (C = 0)."""
    angle = k * math.pi / 2.0
    return SpiralPoint(
        x=SPIRAL_RADIUS * math.sin(angle),
        y=SPIRAL_RADIUS * math.cos(angle),
        z=k * FIFTH_RISE,
    )


def tonic_fifth_index(tonic_pc: int) -> int:
    """Line-of-fifths index of a tonic pitch class, spelled nearest C."""
    return -5 + ((7 * tonic_pc + 5) % 12)


def fifth_index(pitch_class: int, tonic_index: int) -> int:
    """Line-of-fifths index of a pitch class, spelled nearest the tonic."""
    lo = tonic_index - 5
    return lo + ((7 * pitch_class - lo) % 12)


def weighted_mean(points: Sequence[SpiralPoint], weights: Sequence[float]) -> SpiralPoint:
    total = math.fsum(weights)
    if not points or total <= 0:
        raise EmptyCloud("no weighted points")
    return SpiralPoint(
        x=math.fsum(p.x * w for p, w in zip(points, weights)) / total,
        y=math.fsum(p.y * w for p, w in zip(points, weights)) / total,
        z=math.fsum(p.z * w for p, w in zip(points, weights)) / total,
    )


def triad_center(root_index: int, mode: str) -> SpiralPoint:
    third = root_index + 4 if mode == "major" else root_index - 3
    points = [spiral_position(root_index), spiral_position(root_index + 1), spiral_position(third)]
    return weighted_mean(points, CHORD_WEIGHTS)


def key_center(key: KeyEstimate) -> SpiralPoint:
    """Centre of effect of a key.

    Major keys combine the I, V and IV triads; minor keys use i, V
    (major dominant) and iv.
    """
    tonic = tonic_fifth_index(key.tonic)
    if key.mode == "major":
        triads = [
            triad_center(tonic, "major"),
            triad_center(tonic + 1, "major"),
            triad_center(tonic - 1, "major"),
        ]
    else:
        triads = [
            triad_center(tonic, "minor"),
            triad_center(tonic + 1, "major"),
            triad_center(tonic - 1, "minor"),
        ]
    return weighted_mean(triads, KEY_WEIGHTS)


def cloud_center(
    pitches: Iterable[int], weights: Iterable[float], key: KeyEstimate
) -> SpiralPoint:
    """Duration-weighted centre of effect of a set of pitches."""
    tonic = tonic_fifth_index(key.tonic)
    points = [spiral_position(fifth_index(p % 12, tonic)) for p in pitches]
    return weighted_mean(points, list(weights))


def cloud_diameter(points: Sequence[SpiralPoint]) -> float:
    if len(points) < 2:
        return 0.0
    return max(
        points[i].distance(points[j])
        for i in range(len(points))
        for j in range(i + 1, len(points))
    )


def _bar_cloud(
    window: ScoreWindow, bar: int, tonic_index: int
) -> tuple[list[SpiralPoint], list[float]]:
    """Pitch points of everything sounding in a bar, weighted by the
    number of ticks each note overlaps the bar."""
    lo, hi = window.bar_span(bar)
    points: list[SpiralPoint] = []
    weights: list[float] = []
    for track in window.tracks:
        for ev in track.events:
            overlap = min(ev.offset, hi) - max(ev.onset, lo)
            if overlap > 0:
                points.append(spiral_position(fifth_index(ev.pitch % 12, tonic_index)))
                weights.append(float(overlap))
    return points, weights


def tension_profile(window: ScoreWindow, key: KeyEstimate) -> list[TensionValue]:
    """Per-bar tension values for a window under an estimated key.

    Empty bars carry zeros and do not update the momentum reference, so
    momentum is always measured against the last sounding bar.
    """
    center = key_center(key)
    tonic = tonic_fifth_index(key.tonic)
    profile: list[TensionValue] = []
    previous_center: SpiralPoint | None = None
    for bar in range(1, window.length + 1):
        points, weights = _bar_cloud(window, bar, tonic)
        if not points:
            profile.append(
                TensionValue(
                    tensile_strain=0.0,
                    cloud_diameter=0.0,
                    cloud_momentum=0.0,
                    tension_level=quantize_level(0.0, "tension"),
                )
            )
            continue
        bar_center = weighted_mean(points, weights)
        distinct = list({(p.x, p.y, p.z): p for p in points}.values())
        strain = bar_center.distance(center)
        momentum = (
            bar_center.distance(previous_center) if previous_center is not None else 0.0
        )
        profile.append(
            TensionValue(
                tensile_strain=strain,
                cloud_diameter=cloud_diameter(distinct),
                cloud_momentum=momentum,
                tension_level=quantize_level(strain, "tension"),
            )
        )
        previous_center = bar_center
    return profile


def bar_strain(
    window: ScoreWindow,
    bar: int,
    key: KeyEstimate,
    extra: Sequence[tuple[int, float]] = (),
    exclude_track: int | None = None,
) -> float:
    """Tensile strain of one bar, optionally swapping one track's content.

    ``extra`` is (pitch, weight) pairs standing in for the excluded
    track; used by generators to score candidate bars. Returns 0 for an
    empty cloud.
    """
    tonic = tonic_fifth_index(key.tonic)
    lo, hi = window.bar_span(bar)
    points: list[SpiralPoint] = []
    weights: list[float] = []
    for index, track in enumerate(window.tracks):
        if index == exclude_track:
            continue
        for ev in track.events:
            overlap = min(ev.offset, hi) - max(ev.onset, lo)
            if overlap > 0:
                points.append(spiral_position(fifth_index(ev.pitch % 12, tonic)))
                weights.append(float(overlap))
    for pitch, weight in extra:
        points.append(spiral_position(fifth_index(pitch % 12, tonic)))
        weights.append(weight)
    if not points:
        return 0.0
    return weighted_mean(points, weights).distance(key_center(key))
