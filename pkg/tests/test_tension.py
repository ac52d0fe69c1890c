import math

import numpy as np
import pytest

from midifill.errors import EmptyCloud
from midifill.keys import KeyEstimate
from midifill.model import slice_window
from midifill.tension import (
    FIFTH_RISE,
    cloud_center,
    cloud_diameter,
    fifth_index,
    key_center,
    spiral_position,
    tension_profile,
    tonic_fifth_index,
    weighted_mean,
)

from conftest import ev, make_score

C_MAJOR = KeyEstimate(tonic=0, mode="major", confidence=1.0)


def np_spiral(k: int) -> np.ndarray:
    """Oracle: direct spiral coordinate computation, numpy path."""
    return np.array(
        [np.sin(k * np.pi / 2), np.cos(k * np.pi / 2), k * np.sqrt(2.0 / 15.0)]
    )


def as_array(p) -> np.ndarray:
    return np.array([p.x, p.y, p.z])


def test_spiral_reference_points():
    c = spiral_position(0)
    assert (c.x, c.y, c.z) == (0.0, 1.0, 0.0)
    g = spiral_position(1)
    assert (g.x, g.y, g.z) == pytest.approx((1.0, 0.0, FIFTH_RISE))
    e = spiral_position(4)
    assert abs(e.x) < 1e-12 and abs(e.y - 1.0) < 1e-12
    assert e.z == pytest.approx(4 * FIFTH_RISE)


def test_spiral_matches_numpy_oracle():
    for k in range(-6, 7):
        assert as_array(spiral_position(k)) == pytest.approx(np_spiral(k), abs=1e-12)


def test_points_lie_on_cylinder():
    for k in range(-12, 13):
        p = spiral_position(k)
        assert p.x**2 + p.y**2 == pytest.approx(1.0, abs=1e-12)


def test_fifth_index_window():
    tonic = tonic_fifth_index(0)
    assert tonic == 0
    # C major spellings: F=-1 ... B=5
    assert fifth_index(5, tonic) == -1
    assert fifth_index(7, tonic) == 1
    assert fifth_index(4, tonic) == 4
    assert fifth_index(6, tonic) == 6  # F# at the sharp edge of the window
    for pc in range(12):
        k = fifth_index(pc, tonic)
        assert tonic - 5 <= k <= tonic + 6
        assert (7 * k) % 12 == pc


def test_cloud_center_singleton():
    center = cloud_center([60], [1.0], C_MAJOR)
    assert as_array(center) == pytest.approx(np_spiral(0))


def test_cloud_center_two_points():
    center = cloud_center([60, 67], [1.0, 1.0], C_MAJOR)
    assert as_array(center) == pytest.approx((np_spiral(0) + np_spiral(1)) / 2)


def test_cloud_center_weighted_oracle():
    # C:E:G with durations 2:1:1
    expected = (2 * np_spiral(0) + np_spiral(4) + np_spiral(1)) / 4
    center = cloud_center([60, 64, 67], [2.0, 1.0, 1.0], C_MAJOR)
    assert as_array(center) == pytest.approx(expected)


def test_cloud_center_empty():
    with pytest.raises(EmptyCloud):
        cloud_center([], [], C_MAJOR)
    with pytest.raises(EmptyCloud):
        weighted_mean([], [])


def test_unison_bar_diameter_zero():
    score = make_score([[ev(0, 60, 960), ev(960, 72, 960)]])
    window = slice_window(score, 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[0].cloud_diameter == 0.0


def test_key_center_cloud_strain_near_zero():
    # duration-weight the seven C-major key-center tones by the center's
    # own combined weights (x25): F3 C10 G6 D1 A1 E3 B1
    weights = {65: 3, 60: 10, 67: 6, 62: 1, 69: 1, 64: 3, 71: 1}
    events = [ev(0, pitch, 40 * w) for pitch, w in weights.items()]
    window = slice_window(make_score([events]), 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[0].tensile_strain < 1e-9
    assert profile[0].tension_level == 0


def test_triad_strain_below_tritone_strain():
    triad = [ev(0, 60, 1920), ev(0, 64, 1920), ev(0, 67, 1920)]
    tritone = [ev(0, 60, 1920), ev(0, 66, 1920)]
    window = slice_window(make_score([triad + [e.shifted(1920) for e in tritone]]), 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[0].tensile_strain < profile[1].tensile_strain

    # independent oracle: numpy pairwise computation of both quantities
    key_pts = {**{-1: 0.12, 0: 0.40, 1: 0.24, 2: 0.04, 3: 0.04, 4: 0.12, 5: 0.04}}
    key_ce = sum(w * np_spiral(k) for k, w in key_pts.items())
    triad_ce = (np_spiral(0) + np_spiral(4) + np_spiral(1)) / 3
    tritone_ce = (np_spiral(0) + np_spiral(6)) / 2
    assert np.linalg.norm(triad_ce - key_ce) == pytest.approx(
        profile[0].tensile_strain, abs=1e-12
    )
    assert np.linalg.norm(tritone_ce - key_ce) == pytest.approx(
        profile[1].tensile_strain, abs=1e-12
    )


def test_tritone_diameter_larger_than_triad():
    triad = [ev(0, 60, 1920), ev(0, 64, 1920), ev(0, 67, 1920)]
    tritone = [ev(1920, 60, 1920), ev(1920, 66, 1920)]
    window = slice_window(make_score([triad + tritone]), 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[1].cloud_diameter > profile[0].cloud_diameter
    # oracle: max pairwise distances over the spiral coordinates
    triad_pts = [np_spiral(k) for k in (0, 1, 4)]
    oracle_triad = max(
        np.linalg.norm(a - b) for i, a in enumerate(triad_pts) for b in triad_pts[i + 1 :]
    )
    oracle_tritone = np.linalg.norm(np_spiral(0) - np_spiral(6))
    assert profile[0].cloud_diameter == pytest.approx(oracle_triad, abs=1e-12)
    assert profile[1].cloud_diameter == pytest.approx(oracle_tritone, abs=1e-12)


def test_diameter_octave_invariant():
    low = [ev(0, 48, 1920), ev(0, 52, 1920), ev(0, 55, 1920)]
    high = [ev(1920, 72, 1920), ev(1920, 88, 1920), ev(1920, 79, 1920)]
    window = slice_window(make_score([low + high]), 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[0].cloud_diameter == pytest.approx(profile[1].cloud_diameter)


def test_identical_bars_zero_momentum():
    bar = [ev(0, 60, 480), ev(480, 64, 480), ev(960, 67, 960)]
    events = bar + [e.shifted(1920) for e in bar]
    window = slice_window(make_score([events]), 1)
    profile = tension_profile(window, C_MAJOR)
    assert profile[0].cloud_momentum == 0.0  # first bar has no reference
    assert profile[1].cloud_momentum == 0.0


def test_empty_bar_zeroes_and_momentum_skips():
    bar = [ev(0, 60, 1920)]
    shifted = [ev(2 * 1920, 66, 1920)]  # bar 2 empty, bar 3 different cloud
    window = slice_window(make_score([bar + shifted]), 1)
    profile = tension_profile(window, C_MAJOR)
    empty = profile[1]
    assert (empty.tensile_strain, empty.cloud_diameter, empty.cloud_momentum) == (
        0.0,
        0.0,
        0.0,
    )
    assert empty.tension_level == 0
    # bar 3 momentum measured against bar 1, the last sounding bar
    expected = np.linalg.norm(np_spiral(6) - np_spiral(0))
    assert profile[2].cloud_momentum == pytest.approx(expected, abs=1e-12)


def test_cross_bar_note_weighted_by_overlap():
    # a whole note spanning two bars contributes half its length to each
    events = [ev(0, 60, 3840), ev(1920, 67, 1920)]
    window = slice_window(make_score([events]), 1)
    profile = tension_profile(window, C_MAJOR)
    oracle = (np_spiral(0) + np_spiral(1)) / 2  # equal weights in bar 2
    key_pts = {-1: 0.12, 0: 0.40, 1: 0.24, 2: 0.04, 3: 0.04, 4: 0.12, 5: 0.04}
    key_ce = sum(w * np_spiral(k) for k, w in key_pts.items())
    assert profile[1].tensile_strain == pytest.approx(
        np.linalg.norm(oracle - key_ce), abs=1e-12
    )


def test_key_center_matches_weight_table():
    # the production nested construction equals the flat weighted sum
    key_pts = {-1: 0.12, 0: 0.40, 1: 0.24, 2: 0.04, 3: 0.04, 4: 0.12, 5: 0.04}
    expected = sum(w * np_spiral(k) for k, w in key_pts.items())
    assert as_array(key_center(C_MAJOR)) == pytest.approx(expected, abs=1e-12)


def test_minor_key_center_uses_harmonic_dominant():
    a_minor = KeyEstimate(tonic=9, mode="minor", confidence=1.0)
    # i = A C E -> indexes 3, 0, 4; V = E G# B -> 4, 8, 5; iv = D F A -> 2, -1, 3
    pts = {
        3: 0.6 * 0.6 + 0.2 * 0.2,  # A in i and iv
        4: 0.6 * 0.2 + 0.2 * 0.6,  # E in i and V
        0: 0.6 * 0.2,  # C third of i
        5: 0.2 * 0.2,  # B fifth of V
        8: 0.2 * 0.2,  # G# third of V
        2: 0.2 * 0.6,  # D root of iv
        -1: 0.2 * 0.2,  # F third of iv
    }
    expected = sum(w * np_spiral(k) for k, w in pts.items())
    assert as_array(key_center(a_minor)) == pytest.approx(expected, abs=1e-12)
