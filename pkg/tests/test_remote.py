import base64

import httpx
import pytest
from fastapi.testclient import TestClient

from midifill.baseline import BaselineGenerator
from midifill.engine import (
    ControlTarget,
    RegionSpec,
    infill,
    resolve_targets,
    window_key,
)
from midifill.errors import InvalidRemoteOutput, ProtocolError, RemoteTimeout
from midifill.midi_io import parse_midi, serialize_midi
from midifill.model import NoteEvent, Track, TrackRole, slice_window, window_to_score
from midifill.remote import RemoteGenerator
from midifill.service import create_app
from midifill.sessions import SessionManager

from conftest import ev, make_score

ROLES3 = [TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY]


def three_track_score(bars=8, ppq=480):
    width = 4 * ppq
    melody = [ev(b * width, 62 + (b % 5), ppq) for b in range(bars)]
    bass = [ev(b * width, 38 + (b % 4), 2 * ppq) for b in range(bars)]
    harmony = [ev(b * width, p, 2 * ppq) for b in range(bars) for p in (60, 64, 67)]
    return make_score([melody, bass, harmony], ppq=ppq, roles=ROLES3)


@pytest.fixture
def loopback():
    with TestClient(create_app(SessionManager())) as client:
        yield RemoteGenerator("http://testserver", client=client)


def test_loopback_equals_local_baseline(loopback):
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(0, 2), (2, 3)])
    targets = ControlTarget()
    seed = 31337
    local = infill(window, region, targets, seed, BaselineGenerator())
    remote = infill(window, region, targets, seed, loopback)
    assert not local.failed and not remote.failed
    local_bytes = serialize_midi(window_to_score(local.new_window))
    remote_bytes = serialize_midi(window_to_score(remote.new_window))
    assert local_bytes == remote_bytes
    assert local.achieved_levels == remote.achieved_levels


def test_loopback_multi_cell_track_with_default_targets(loopback):
    # several cells on one track, no explicit targets: the per-track
    # default must survive the per-track wire format unchanged
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(0, 2), (0, 5), (0, 7), (2, 4), (2, 5)])
    seed = 904
    local = infill(window, region, ControlTarget(), seed, BaselineGenerator())
    remote = infill(window, region, ControlTarget(), seed, loopback)
    assert serialize_midi(window_to_score(local.new_window)) == serialize_midi(
        window_to_score(remote.new_window)
    )
    assert local.achieved_levels == remote.achieved_levels
    assert local.level_deltas == remote.level_deltas


def test_default_targets_uniform_per_track():
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(1, 2), (1, 6)])
    resolved = resolve_targets(window, region, ControlTarget())
    assert resolved.cell_levels[(1, 2)] == resolved.cell_levels[(1, 6)]


def test_loopback_preserves_even_empty_windows_tracks(loopback):
    # region on a track that is empty in the window
    score = three_track_score()
    empty_harmony = score.tracks[2].__class__(role=TrackRole.HARMONY)
    score = score.__class__(
        ppq=score.ppq,
        tempo_us=score.tempo_us,
        metre=score.metre,
        tracks=(score.tracks[0], score.tracks[1], empty_harmony),
        end_tick=score.end_tick,
    )
    window = slice_window(score, 1)
    region = RegionSpec.of([(2, 1)])
    local = infill(window, region, ControlTarget(), 7, BaselineGenerator())
    remote = infill(window, region, ControlTarget(), 7, loopback)
    assert serialize_midi(window_to_score(local.new_window)) == serialize_midi(
        window_to_score(remote.new_window)
    )


class TamperingClient:
    """Wraps a TestClient and moves one returned note outside the region."""

    def __init__(self, inner: TestClient):
        self.inner = inner

    def post(self, url, json=None, timeout=None):
        response = self.inner.post(url, json=json)
        payload = response.json()
        score = parse_midi(base64.b64decode(payload["midi_b64"]))
        tracks = list(score.tracks)
        # bar 1 of track 0 was not part of the region in the test below
        tampered = Track.from_events(
            list(tracks[0].events) + [NoteEvent(0, 64, 100)], role=tracks[0].role
        )
        tracks[0] = tampered
        new_score = score.__class__(
            ppq=score.ppq,
            tempo_us=score.tempo_us,
            metre=score.metre,
            tracks=tuple(tracks),
            end_tick=score.end_tick,
        )
        payload["midi_b64"] = base64.b64encode(serialize_midi(new_score)).decode()
        request = httpx.Request("POST", url)
        return httpx.Response(200, json=payload, request=request)


def test_tampered_response_rejected():
    with TestClient(create_app(SessionManager())) as client:
        generator = RemoteGenerator("http://testserver", client=TamperingClient(client))
        window = slice_window(three_track_score(), 1)
        region = RegionSpec.of([(0, 3)])
        with pytest.raises(InvalidRemoteOutput):
            generator.generate(
                window,
                region,
                resolve_targets(window, region, ControlTarget()),
                window_key(window),
                1,
            )
        # through infill it degrades to a flagged failure, window unchanged
        result = infill(window, region, ControlTarget(), 1, generator)
        assert result.failed
        assert result.new_window == window


def test_timeout_maps_to_remote_timeout():
    def raise_timeout(request):
        raise httpx.ConnectTimeout("simulated", request=request)

    transport = httpx.MockTransport(raise_timeout)
    client = httpx.Client(transport=transport, base_url="http://model")
    generator = RemoteGenerator("http://model", client=client)
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(0, 1)])
    result = infill(window, region, ControlTarget(), 0, generator)
    assert result.failed
    with pytest.raises(RemoteTimeout):
        generator.generate(
            window, region, resolve_targets(window, region, ControlTarget()),
            window_key(window), 0,
        )


def test_http_error_maps_to_protocol_error():
    def refuse(request):
        return httpx.Response(500, json={"error": {"code": "BOOM"}})

    client = httpx.Client(transport=httpx.MockTransport(refuse), base_url="http://model")
    generator = RemoteGenerator("http://model", client=client)
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(0, 1)])
    with pytest.raises(ProtocolError):
        generator.generate(
            window, region, resolve_targets(window, region, ControlTarget()),
            window_key(window), 0,
        )


def test_non_json_response_is_protocol_error():
    def text_response(request):
        return httpx.Response(200, text="<html>hello</html>")

    client = httpx.Client(transport=httpx.MockTransport(text_response), base_url="http://model")
    generator = RemoteGenerator("http://model", client=client)
    window = slice_window(three_track_score(), 1)
    region = RegionSpec.of([(0, 1)])
    with pytest.raises(ProtocolError):
        generator.generate(
            window, region, resolve_targets(window, region, ControlTarget()),
            window_key(window), 0,
        )
