"""Session state machine: load, analyze, infill, commit/revert, export.

Sessions are in-memory, one history stack per session with the loaded
score at the bottom. An infill produces a *pending* result that must be
resolved exactly once: keeping pushes it as the new head, discarding
drops it. Mutating operations on one session are serialized by a lock;
analysis always reads the committed head, never a pending result.
"""

from __future__ import annotations

import base64
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import BaselineConfig, BaselineGenerator
from .engine import ControlTarget, GeneratorPort, InfillResult, RegionSpec, infill
from .errors import (
    ConcurrentRequest,
    GeneratorFailure,
    NothingPending,
    RolesNotSet,
    SchemaError,
    StateError,
    UnknownSession,
)
from .midi_io import parse_midi, serialize_midi
from .model import (
    MAX_TRACKS,
    Score,
    TrackRole,
    assign_roles,
    merge_window,
    slice_window,
)
from .remote import RemoteGenerator
from .report import AnalysisReport, MetaSummary, analyze_window, summarize

MAX_MIDI_PAYLOAD = 1 << 20  # 1 MiB, per the wire protocol


@dataclass
class ServiceConfig:
    ttl_seconds: float = 3600.0
    snapshot_dir: Path | None = None
    default_remote: str | None = None
    remote_timeout: float = 10.0
    generator: BaselineConfig = field(default_factory=BaselineConfig)

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        raw = json.loads(path.read_text())
        known = {"ttl_seconds", "snapshot_dir", "default_remote", "remote_timeout",
                 "candidates", "grid_division"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        generator = BaselineConfig(
            candidates=raw.get("candidates", BaselineConfig.candidates),
            grid_division=raw.get("grid_division", BaselineConfig.grid_division),
        )
        return cls(
            ttl_seconds=raw.get("ttl_seconds", 3600.0),
            snapshot_dir=Path(raw["snapshot_dir"]) if raw.get("snapshot_dir") else None,
            default_remote=raw.get("default_remote"),
            remote_timeout=raw.get("remote_timeout", 10.0),
            generator=generator,
        )


@dataclass
class PendingResult:
    merged: Score
    result: InfillResult
    origin_bar: int


@dataclass
class Session:
    session_id: str
    history: list[Score]
    roles: list[TrackRole] | None = None
    origin_bar: int | None = None
    pending: PendingResult | None = None
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.RLock = field(default_factory=threading.RLock)

    @property
    def head(self) -> Score:
        return self.history[-1]

    def current_score(self) -> Score:
        """Head with the stored roles applied (padded to three tracks)."""
        head = self.head
        if self.roles is None:
            return head
        padded = list(self.roles) + [TrackRole.EMPTY] * MAX_TRACKS
        return assign_roles(head, padded[: len(head.tracks)])


class SessionManager:
    def __init__(self, config: ServiceConfig | None = None) -> None:
        self.config = config or ServiceConfig()
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._baseline = BaselineGenerator(self.config.generator)
        if self.config.snapshot_dir:
            self.config.snapshot_dir.mkdir(parents=True, exist_ok=True)

    # -- bookkeeping ----------------------------------------------------

    def _evict_idle(self) -> None:
        deadline = time.monotonic() - self.config.ttl_seconds
        with self._lock:
            stale = [
                sid for sid, s in self._sessions.items() if s.last_access < deadline
            ]
            for sid in stale:
                del self._sessions[sid]

    def _get(self, session_id: str) -> Session:
        self._evict_idle()
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"no session {session_id!r}")
            session.last_access = time.monotonic()
            return session

    def session_count(self) -> int:
        self._evict_idle()
        with self._lock:
            return len(self._sessions)

    # -- operations -----------------------------------------------------

    def create_session(self, midi: bytes) -> tuple[str, MetaSummary]:
        if len(midi) > MAX_MIDI_PAYLOAD:
            raise SchemaError(
                f"MIDI payload of {len(midi)} bytes exceeds {MAX_MIDI_PAYLOAD}"
            )
        self._evict_idle()
        score = parse_midi(midi)
        session_id = secrets.token_hex(8)
        session = Session(session_id=session_id, history=[score])
        with self._lock:
            self._sessions[session_id] = session
        return session_id, summarize(score)

    def set_roles(self, session_id: str, roles: list[TrackRole]) -> None:
        session = self._get(session_id)
        with session.lock:
            # validates length and duplicates against the current head
            assign_roles(session.head, roles)
            session.roles = list(roles)

    def analyze(self, session_id: str, origin_bar: int) -> AnalysisReport:
        session = self._get(session_id)
        with session.lock:
            if session.roles is None:
                raise RolesNotSet("set roles before analyzing")
            score = session.current_score()
            window = slice_window(score, origin_bar)
            session.origin_bar = origin_bar
            return analyze_window(score, window)

    def request_infill(
        self,
        session_id: str,
        region: RegionSpec,
        targets: ControlTarget,
        seed: int,
        generator: str = "baseline",
        remote_endpoint: str | None = None,
    ) -> tuple[AnalysisReport, bytes, InfillResult]:
        session = self._get(session_id)
        with session.lock:
            if session.roles is None:
                raise RolesNotSet("set roles before infilling")
            if session.origin_bar is None:
                raise StateError("analyze before infilling")
            if session.pending is not None:
                raise ConcurrentRequest("a pending result awaits resolve")
            score = session.current_score()
            window = slice_window(score, session.origin_bar)
            port = self._select_generator(generator, remote_endpoint)
            result = infill(window, region, targets, seed & ((1 << 64) - 1), port)
            if result.failed:
                raise GeneratorFailure(
                    f"generator failed for cells {sorted(result.failed_cells)}"
                )
            merged = merge_window(score, result.new_window)
            session.pending = PendingResult(
                merged=merged, result=result, origin_bar=session.origin_bar
            )
            report = analyze_window(merged, slice_window(merged, session.origin_bar))
            return report, serialize_midi(merged), result

    def _select_generator(
        self, generator: str, remote_endpoint: str | None
    ) -> GeneratorPort:
        if generator == "baseline":
            return self._baseline
        if generator == "remote":
            endpoint = remote_endpoint or self.config.default_remote
            if not endpoint:
                raise SchemaError("remote generator requested but no endpoint configured")
            return RemoteGenerator(endpoint, timeout=self.config.remote_timeout)
        raise SchemaError(f"unknown generator {generator!r}")

    def resolve(self, session_id: str, keep: bool) -> None:
        session = self._get(session_id)
        with session.lock:
            if session.pending is None:
                raise NothingPending("no pending result to resolve")
            if keep:
                session.history.append(session.pending.merged)
                self._snapshot(session)
            session.pending = None

    def export(self, session_id: str) -> bytes:
        session = self._get(session_id)
        with session.lock:
            return serialize_midi(session.head)

    def history_depth(self, session_id: str) -> int:
        session = self._get(session_id)
        with session.lock:
            return len(session.history)

    # -- persistence ----------------------------------------------------

    def _snapshot(self, session: Session) -> None:
        directory = self.config.snapshot_dir
        if not directory:
            return
        payload = {
            "session_id": session.session_id,
            "roles": [r.value for r in session.roles] if session.roles else None,
            "origin_bar": session.origin_bar,
            "midi_b64": base64.b64encode(serialize_midi(session.head)).decode("ascii"),
        }
        path = directory / f"{session.session_id}.json"
        path.write_text(json.dumps(payload))

    def load_snapshots(self) -> int:
        """Restore committed sessions from the snapshot directory."""
        directory = self.config.snapshot_dir
        if not directory or not directory.is_dir():
            return 0
        restored = 0
        for path in sorted(directory.glob("*.json")):
            payload = json.loads(path.read_text())
            score = parse_midi(base64.b64decode(payload["midi_b64"]))
            session = Session(
                session_id=payload["session_id"],
                history=[score],
                roles=(
                    [TrackRole(r) for r in payload["roles"]]
                    if payload.get("roles")
                    else None
                ),
                origin_bar=payload.get("origin_bar"),
            )
            with self._lock:
                self._sessions[session.session_id] = session
            restored += 1
        return restored
