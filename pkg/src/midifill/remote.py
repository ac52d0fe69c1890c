"""Remote generator adapter.

Ships the window (as a standalone MIDI payload), the region and the
targets to a server speaking the session wire protocol's ``/generate``
endpoint, then validates the returned events against the port
invariants before accepting them. Only the MIDI file and the control
information cross the wire.
"""

from __future__ import annotations

import base64

import httpx

from .engine import (
    Cell,
    GeneratorPort,
    RegionSpec,
    ResolvedTargets,
    check_cell_output,
)
from .errors import GeneratorFailure, InvalidRemoteOutput, ProtocolError, RemoteTimeout
from .keys import KeyEstimate
from .midi_io import _parse, serialize_midi
from .model import NoteEvent, ScoreWindow, window_of_whole, window_to_score

DEFAULT_TIMEOUT = 10.0


def window_payload(window: ScoreWindow) -> str:
    return base64.b64encode(serialize_midi(window_to_score(window))).decode("ascii")


def decode_window(midi_b64: str, bars: int) -> ScoreWindow:
    """Rebuild a shipped window, tolerating empty tracks and trailing
    silent bars."""
    data = base64.b64decode(midi_b64)
    score = _parse(data, require_notes=False, keep_empty=True)
    return window_of_whole(score, bars)


class RemoteGenerator(GeneratorPort):
    """GeneratorPort that proxies to another server's ``/generate``."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        client: httpx.Client | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._client = client

    def generate(
        self,
        window: ScoreWindow,
        region: RegionSpec,
        targets: ResolvedTargets,
        key: KeyEstimate,
        seed: int,
    ) -> dict[Cell, tuple[NoteEvent, ...]]:
        body = {
            "midi_b64": window_payload(window),
            "bars": window.length,
            "roles": [track.role.value for track in window.tracks],
            "region": [{"track": t, "bar": b} for t, b in sorted(region.cells)],
            # resolved targets are uniform per track, so any cell's triple
            # represents its track on the wire
            "track_levels": {
                str(track): {
                    "density": levels.density_level,
                    "polyphony": levels.polyphony_level,
                    "occupation": levels.occupation_level,
                }
                for (track, _), levels in sorted(targets.cell_levels.items())
            },
            "tension_levels": {str(b): v for b, v in targets.bar_tension.items()},
            "seed": seed,
        }
        payload = self._post(body)
        return self._extract(window, region, payload)

    def _post(self, body: dict) -> dict:
        try:
            if self._client is not None:
                response = self._client.post(
                    f"{self.endpoint}/generate", json=body, timeout=self.timeout
                )
            else:
                with httpx.Client(timeout=self.timeout) as client:
                    response = client.post(f"{self.endpoint}/generate", json=body)
        except httpx.TimeoutException as exc:
            raise RemoteTimeout(f"{self.endpoint}/generate: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProtocolError(f"{self.endpoint}/generate: {exc}") from exc
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolError("response is not JSON") from exc
        if response.status_code != 200:
            code = (payload.get("error") or {}).get("code", response.status_code)
            raise ProtocolError(f"remote error {code}")
        if "midi_b64" not in payload:
            raise ProtocolError("response missing midi_b64")
        return payload

    def _extract(
        self, window: ScoreWindow, region: RegionSpec, payload: dict
    ) -> dict[Cell, tuple[NoteEvent, ...]]:
        try:
            returned = decode_window(payload["midi_b64"], window.length)
        except Exception as exc:
            raise InvalidRemoteOutput(f"unparseable result MIDI: {exc}") from exc
        if len(returned.tracks) != len(window.tracks):
            raise InvalidRemoteOutput(
                f"result has {len(returned.tracks)} tracks, expected {len(window.tracks)}"
            )
        region_bars_by_track = {
            track: {bar for t, bar in region.cells if t == track}
            for track in range(len(window.tracks))
        }
        produced: dict[Cell, tuple[NoteEvent, ...]] = {}
        for track in range(len(window.tracks)):
            bars = region_bars_by_track[track]
            expected_outside = self._outside_segments(window, track, bars)
            got_outside = self._outside_segments(returned, track, bars)
            if expected_outside != got_outside:
                raise InvalidRemoteOutput(
                    f"track {track}: content outside the region changed"
                )
            for bar in bars:
                lo, hi = window.bar_span(bar)
                events = tuple(
                    ev
                    for ev in returned.tracks[track].events
                    if ev.onset >= lo and ev.offset <= hi
                )
                cell = (track, bar)
                try:
                    check_cell_output(window, cell, events)
                except GeneratorFailure as exc:
                    raise InvalidRemoteOutput(str(exc)) from exc
                produced[cell] = events
        return produced

    @staticmethod
    def _outside_segments(
        window: ScoreWindow, track: int, region_bars: set[int]
    ) -> tuple[tuple[int, int, int, int], ...]:
        """Note segments of a track clipped out of its region bars,
        normalized for comparison."""
        spans = sorted(window.bar_span(bar) for bar in region_bars)
        segments: list[tuple[int, int, int, int]] = []
        for ev in window.tracks[track].events:
            pieces = [(ev.onset, ev.offset)]
            for lo, hi in spans:
                next_pieces: list[tuple[int, int]] = []
                for start, end in pieces:
                    if end <= lo or start >= hi:
                        next_pieces.append((start, end))
                        continue
                    if start < lo:
                        next_pieces.append((start, lo))
                    if end > hi:
                        next_pieces.append((hi, end))
                pieces = next_pieces
            for start, end in pieces:
                segments.append((start, end, ev.pitch, ev.velocity))
        return tuple(sorted(segments))
