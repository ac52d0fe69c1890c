"""Interactive MIDI infilling workstation.

Parse multi-track MIDI into a tick-accurate score, compute per-track and
per-bar control attributes (note density, polyphony, occupation rate,
tonal tension), regenerate selected track-by-bar cells under target
levels through a pluggable generator, and drive the whole loop from a
session service, a CLI or the bundled web client.
"""

from .engine import (
    ControlTarget,
    GeneratorPort,
    InfillResult,
    RegionSpec,
    infill,
    validate_region,
)
from .baseline import BaselineConfig, BaselineGenerator
from .keys import KeyEstimate, estimate_key
from .metrics import ControlLevels, RawTrackMetrics, quantize_level, raw_metrics
from .midi_io import parse_midi, serialize_midi
from .model import (
    Metre,
    NoteEvent,
    Score,
    ScoreWindow,
    Track,
    TrackRole,
    assign_roles,
    bar_partition,
    merge_window,
    slice_window,
)
from .remote import RemoteGenerator
from .report import AnalysisReport, MetaSummary, analyze_window, summarize
from .sessions import ServiceConfig, SessionManager
from .tension import TensionValue, spiral_position, tension_profile

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "BaselineConfig",
    "BaselineGenerator",
    "ControlLevels",
    "ControlTarget",
    "GeneratorPort",
    "InfillResult",
    "KeyEstimate",
    "MetaSummary",
    "Metre",
    "NoteEvent",
    "RawTrackMetrics",
    "RegionSpec",
    "RemoteGenerator",
    "Score",
    "ScoreWindow",
    "ServiceConfig",
    "SessionManager",
    "TensionValue",
    "Track",
    "TrackRole",
    "analyze_window",
    "assign_roles",
    "bar_partition",
    "estimate_key",
    "infill",
    "merge_window",
    "parse_midi",
    "quantize_level",
    "raw_metrics",
    "serialize_midi",
    "slice_window",
    "spiral_position",
    "summarize",
    "tension_profile",
    "validate_region",
]
