import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midifill.errors import BarOutOfRange, DuplicateRole, RoleCountMismatch, UnsupportedMetre
from midifill.model import (
    Metre,
    NoteEvent,
    Track,
    TrackRole,
    assign_roles,
    bar_partition,
    merge_window,
    slice_window,
)

from conftest import ev, make_score, random_score


def test_note_event_validation():
    with pytest.raises(ValueError):
        NoteEvent(onset=-1, pitch=60, duration=1)
    with pytest.raises(ValueError):
        NoteEvent(onset=0, pitch=128, duration=1)
    with pytest.raises(ValueError):
        NoteEvent(onset=0, pitch=60, duration=0)
    with pytest.raises(ValueError):
        NoteEvent(onset=0, pitch=60, duration=1, velocity=0)


def test_metre_bar_ticks():
    assert Metre(4, 4).bar_ticks(480) == 1920
    assert Metre(3, 4).bar_ticks(480) == 1440
    assert Metre(6, 8).bar_ticks(480) == 1440
    with pytest.raises(UnsupportedMetre):
        Metre(7, 16).bar_ticks(6)
    with pytest.raises(UnsupportedMetre):
        Metre(4, 3)


def test_bar_partition_two_bars():
    score = make_score([[ev(0, 60, 480), ev(1920, 60, 1920)]])
    assert bar_partition(score) == [(0, 1920), (1920, 3840)]


def test_bar_partition_padded_last_bar():
    score = make_score([[ev(0, 60, 1500)]], metre=(3, 4))
    assert score.end_tick == 1500
    assert bar_partition(score) == [(0, 1440), (1440, 2880)]


def test_bar_partition_ceil_oracle(rng):
    for _ in range(50):
        score = random_score(rng)
        ranges = bar_partition(score)
        width = score.bar_ticks
        assert len(ranges) == -(-score.end_tick // width)  # ceil division
        assert ranges[0][0] == 0
        assert all(hi - lo == width for lo, hi in ranges)
        assert all(ranges[i][1] == ranges[i + 1][0] for i in range(len(ranges) - 1))
        for track in score.tracks:
            for event in track.events:
                assert 0 <= event.onset < ranges[-1][1]


def test_assign_roles_accepts_three():
    score = make_score([[ev(0, 62, 480)], [ev(0, 40, 480)], [ev(0, 50, 480)]])
    roled = assign_roles(score, [TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY])
    assert roled.roles == (TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY)


def test_assign_roles_duplicate_rejected():
    score = make_score([[ev(0, 62, 480)], [ev(0, 40, 480)], [ev(0, 50, 480)]])
    with pytest.raises(DuplicateRole):
        assign_roles(score, [TrackRole.MELODY, TrackRole.MELODY, TrackRole.BASS])


def test_assign_roles_pads_to_three():
    score = make_score([[ev(0, 62, 480)]])
    roled = assign_roles(score, [TrackRole.MELODY])
    assert len(roled.tracks) == 3
    assert roled.roles == (TrackRole.MELODY, TrackRole.EMPTY, TrackRole.EMPTY)
    assert roled.tracks[1].events == ()


def test_assign_roles_wrong_count():
    score = make_score([[ev(0, 62, 480)]])
    with pytest.raises(RoleCountMismatch):
        assign_roles(score, [TrackRole.MELODY, TrackRole.BASS])


def test_assign_roles_empty_may_repeat():
    score = make_score([[ev(0, 62, 480)], [ev(0, 40, 480)], [ev(0, 50, 480)]])
    roled = assign_roles(score, [TrackRole.MELODY, TrackRole.EMPTY, TrackRole.EMPTY])
    assert roled.roles == (TrackRole.MELODY, TrackRole.EMPTY, TrackRole.EMPTY)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.sampled_from(
            [TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY, TrackRole.EMPTY]
        ),
        min_size=3,
        max_size=3,
    )
)
def test_assign_roles_permutation_checked(roles):
    score = make_score([[ev(0, 62, 480)], [ev(0, 40, 480)], [ev(0, 50, 480)]])
    non_empty = [r for r in roles if r is not TrackRole.EMPTY]
    if len(non_empty) != len(set(non_empty)):
        with pytest.raises(DuplicateRole):
            assign_roles(score, roles)
    else:
        assert assign_roles(score, roles).roles == tuple(roles)


def test_assign_roles_idempotent(rng):
    for _ in range(20):
        score = random_score(rng)
        roles = list(score.roles)
        once = assign_roles(score, roles)
        twice = assign_roles(once, list(once.roles))
        assert once == twice


def test_window_lengths():
    long_score = make_score([[ev(0, 60, 480), ev(31 * 1920, 60, 480)]])
    assert long_score.bar_count == 32
    assert slice_window(long_score, 1).length == 16

    short_score = make_score([[ev(0, 60, 480), ev(7 * 1920, 60, 480)]])
    assert slice_window(short_score, 1).length == 8

    mid_score = make_score([[ev(0, 60, 480), ev(19 * 1920 + 100, 60, 480)]])
    assert mid_score.bar_count == 20
    window = slice_window(mid_score, 10)
    assert window.length == min(16, 20 - 10 + 1) == 11


def test_window_out_of_range():
    score = make_score([[ev(0, 60, 480)]])
    with pytest.raises(BarOutOfRange):
        slice_window(score, 0)
    with pytest.raises(BarOutOfRange):
        slice_window(score, 2)


def test_window_clips_boundary_notes():
    # note crossing the window start and one crossing the end
    events = [ev(1000, 60, 2000), ev(17 * 1920 - 500, 64, 1000), ev(30 * 1920, 70, 480)]
    score = make_score([events])
    window = slice_window(score, 2)  # bars 2..17, ticks [1920, 32640)
    track = window.tracks[0]
    assert track.events[0] == ev(0, 60, 1080)  # head clipped at window start
    tail = track.events[-1]
    assert tail.pitch == 64
    assert tail.offset == window.end_tick  # clipped at window end
    assert len(window.clips[0]) == 2


def test_merge_untouched_restores_exactly(rng):
    for _ in range(40):
        score = random_score(rng)
        origin = rng.randrange(1, score.bar_count + 1)
        window = slice_window(score, origin)
        merged = merge_window(score, window)
        assert merged == score


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_merge_untouched_restores_exactly_hypothesis(data):
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    score = random_score(rng)
    origin = data.draw(st.integers(1, score.bar_count))
    window = slice_window(score, origin)
    assert merge_window(score, window) == score


def test_merge_with_replaced_bar_keeps_outside():
    # one note spans bars 1-3; regenerating bar 2 must keep bar 1 and 3 parts
    score = make_score([[ev(0, 60, 3 * 1920), ev(3 * 1920, 62, 480)]])
    window = slice_window(score, 1)
    lo, hi = window.bar_span(2)
    new_events = [ev(lo, 64, 480)]
    kept = []
    for event in window.tracks[0].events:
        if event.offset <= lo or event.onset >= hi:
            kept.append(event)
            continue
        if event.onset < lo:
            kept.append(NoteEvent(event.onset, event.pitch, lo - event.onset))
        if event.offset > hi:
            kept.append(NoteEvent(hi, event.pitch, event.offset - hi))
    replaced = window.with_tracks(
        [Track.from_events(kept + new_events, role=window.tracks[0].role)]
    )
    merged = merge_window(score, replaced)
    spans = [(e.onset, e.offset, e.pitch) for e in merged.tracks[0].events]
    assert (0, 1920, 60) in spans  # bar-1 fragment of the long note
    assert (2 * 1920, 3 * 1920, 60) in spans  # bar-3 fragment
    assert (1920, 1920 + 480, 64) in spans  # the new note
    assert (3 * 1920, 3 * 1920 + 480, 62) in spans  # untouched neighbour


def test_window_to_bar_span():
    score = make_score([[ev(0, 60, 480)] * 1])
    window = slice_window(score, 1)
    assert window.bar_span(1) == (0, 1920)
    with pytest.raises(BarOutOfRange):
        window.bar_span(2)
