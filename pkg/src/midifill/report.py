"""Analysis report: metadata, per-(track,bar) levels, per-bar tension.

One canonical structure feeds both the service's analysis responses and
the CLI's line-delimited report files (see docs/report_format.md).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .engine import tension_profile_or_flat, window_key
from .keys import KeyEstimate, estimate_key
from .metrics import ControlLevels, RawTrackMetrics, window_levels
from .model import Metre, Score, ScoreWindow
from .tension import TensionValue


@dataclass(frozen=True)
class MetaSummary:
    track_count: int
    bar_count: int
    metre: Metre
    tempo_bpm: float
    key: KeyEstimate


@dataclass(frozen=True)
class TrackBarRecord:
    track: int
    role: str
    bar: int  # 1-based, window-relative
    raw: RawTrackMetrics
    levels: ControlLevels


@dataclass(frozen=True)
class AnalysisReport:
    summary: MetaSummary
    origin_bar: int
    window_bars: int
    key: KeyEstimate  # key of the analyzed window
    track_bars: tuple[TrackBarRecord, ...]
    tension: tuple[TensionValue, ...]  # index 0 = first window bar


def summarize(score: Score) -> MetaSummary:
    return MetaSummary(
        track_count=len(score.tracks),
        bar_count=score.bar_count,
        metre=score.metre,
        tempo_bpm=score.bpm,
        key=estimate_key(score),
    )


def analyze_window(score: Score, window: ScoreWindow) -> AnalysisReport:
    key = window_key(window)
    grid = window_levels(window)
    records = [
        TrackBarRecord(
            track=index,
            role=window.tracks[index].role.value,
            bar=bar,
            raw=grid[index][bar - 1][0],
            levels=grid[index][bar - 1][1],
        )
        for index in range(len(window.tracks))
        for bar in range(1, window.length + 1)
    ]
    return AnalysisReport(
        summary=summarize(score),
        origin_bar=window.origin_bar,
        window_bars=window.length,
        key=key,
        track_bars=tuple(records),
        tension=tuple(tension_profile_or_flat(window)),
    )


def key_dict(key: KeyEstimate) -> dict:
    return {
        "tonic": key.tonic,
        "mode": key.mode,
        "confidence": key.confidence,
        "name": key.name,
    }


def report_lines(report: AnalysisReport) -> list[str]:
    """Serialize a report as line-delimited JSON records."""
    lines = [
        json.dumps(
            {
                "type": "meta",
                "tracks": report.summary.track_count,
                "bars": report.summary.bar_count,
                "metre": str(report.summary.metre),
                "tempo_bpm": report.summary.tempo_bpm,
                "origin_bar": report.origin_bar,
                "window_bars": report.window_bars,
            }
        ),
        json.dumps({"type": "key", **key_dict(report.key)}),
    ]
    for record in report.track_bars:
        lines.append(
            json.dumps(
                {
                    "type": "track_bar",
                    "track": record.track,
                    "role": record.role,
                    "bar": record.bar,
                    "density": record.raw.density,
                    "polyphony": record.raw.polyphony,
                    "occupation": record.raw.occupation,
                    "density_level": record.levels.density_level,
                    "polyphony_level": record.levels.polyphony_level,
                    "occupation_level": record.levels.occupation_level,
                }
            )
        )
    for bar, value in enumerate(report.tension, start=1):
        lines.append(
            json.dumps(
                {
                    "type": "bar_tension",
                    "bar": bar,
                    "tensile_strain": value.tensile_strain,
                    "cloud_diameter": value.cloud_diameter,
                    "cloud_momentum": value.cloud_momentum,
                    "tension_level": value.tension_level,
                }
            )
        )
    return lines
