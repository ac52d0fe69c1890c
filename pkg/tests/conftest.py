import random

import pytest

from midifill.model import Metre, NoteEvent, Score, Track, TrackRole

ROLE_RANGES = {
    TrackRole.MELODY: (60, 84),
    TrackRole.BASS: (28, 52),
    TrackRole.HARMONY: (48, 72),
}


def ev(onset: int, pitch: int, duration: int, velocity: int = 80) -> NoteEvent:
    return NoteEvent(onset=onset, pitch=pitch, duration=duration, velocity=velocity)


def make_score(
    track_events: list[list[NoteEvent]],
    ppq: int = 480,
    metre: tuple[int, int] = (4, 4),
    tempo_us: int = 500_000,
    roles: list[TrackRole] | None = None,
) -> Score:
    tracks = []
    for index, events in enumerate(track_events):
        role = roles[index] if roles else TrackRole.EMPTY
        tracks.append(Track.from_events(events, role=role))
    return Score(
        ppq=ppq, tempo_us=tempo_us, metre=Metre(*metre), tracks=tuple(tracks)
    )


def random_notes(
    rng: random.Random,
    bars: int,
    bar_ticks: int,
    count: int,
    low: int = 36,
    high: int = 84,
) -> list[tuple[int, int, int, int]]:
    """Random (onset, pitch, duration, velocity) tuples inside the piece."""
    total = bars * bar_ticks
    notes = []
    for _ in range(count):
        onset = rng.randrange(0, max(1, total - 1))
        duration = rng.randrange(1, max(2, min(bar_ticks, total - onset)))
        notes.append((onset, rng.randrange(low, high + 1), duration, rng.randrange(1, 128)))
    return notes


def random_score(rng: random.Random, roles: bool = True) -> Score:
    ppq = rng.choice((96, 240, 480, 960))
    metre = rng.choice(((4, 4), (3, 4)))
    bar_ticks = Metre(*metre).bar_ticks(ppq)
    bars = rng.randrange(1, 33)
    n_tracks = rng.randrange(1, 4)
    role_pool = [TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY]
    track_events = []
    picked_roles = []
    for t in range(n_tracks):
        role = role_pool[t]
        low, high = ROLE_RANGES[role]
        count = rng.randrange(1, 3 * bars + 2)
        tuples = random_notes(rng, bars, bar_ticks, count, low, high)
        track_events.append([ev(*n) for n in tuples])
        picked_roles.append(role)
    return make_score(
        track_events,
        ppq=ppq,
        metre=metre,
        tempo_us=rng.choice((500_000, 400_000, 600_000, 750_000)),
        roles=picked_roles if roles else None,
    )


def _grid(bars: int, bar_ticks: int, per_bar: int) -> list[int]:
    positions = []
    for bar in range(bars):
        base = bar * bar_ticks
        positions += [base + bar_ticks * i // per_bar for i in range(per_bar)]
    return positions


def _mono_stream(
    rng: random.Random, bars: int, bar_ticks: int, per_bar: int, low: int, high: int
) -> list[NoteEvent]:
    """Monophonic line: onsets on a grid, durations never past the next."""
    grid = _grid(bars, bar_ticks, per_bar)
    onsets = sorted(rng.sample(grid, max(1, int(len(grid) * rng.uniform(0.1, 0.5)))))
    events = []
    pitch = rng.randrange(low, high + 1)
    for i, onset in enumerate(onsets):
        gap = (onsets[i + 1] if i + 1 < len(onsets) else bars * bar_ticks) - onset
        duration = max(1, int(gap * rng.uniform(0.4, 1.0)))
        step = rng.choice((-4, -2, -1, 0, 1, 2, 4, 5))
        pitch = min(high, max(low, pitch + step))
        events.append(NoteEvent(onset, pitch, duration, rng.randrange(50, 110)))
    return events


def _chord_stream(
    rng: random.Random, bars: int, bar_ticks: int, low: int, high: int
) -> list[NoteEvent]:
    """Block chords, one or two per bar, some bars silent."""
    events = []
    for bar in range(bars):
        if rng.random() < 0.15:
            continue
        base = bar * bar_ticks
        positions = sorted(rng.sample((0, bar_ticks // 2), rng.randrange(1, 3)))
        for i, offset in enumerate(positions):
            limit = (positions[i + 1] if i + 1 < len(positions) else bar_ticks) - offset
            duration = max(1, int(limit * rng.uniform(0.5, 1.0)))
            root = rng.randrange(low, high - 8)
            size = rng.randrange(2, 5)
            intervals = rng.choice(((0, 4, 7, 10), (0, 3, 7, 10), (0, 5, 7, 12)))
            for interval in intervals[:size]:
                events.append(
                    NoteEvent(base + offset, min(high, root + interval), duration, 80)
                )
    return events


def plausible_score(rng: random.Random) -> Score:
    """Score whose tracks behave like their roles: monophonic melody and
    bass, chordal harmony. Used by generation tests, where steering
    targets are perturbations of the current levels."""
    ppq = rng.choice((240, 480, 960))
    metre = rng.choice(((4, 4), (3, 4)))
    bar_ticks = Metre(*metre).bar_ticks(ppq)
    bars = rng.randrange(2, 25)
    per_bar = 4 * metre[0] // metre[1] * 2  # eighth grid
    melody = _mono_stream(rng, bars, bar_ticks, per_bar, 60, 84)
    bass = _mono_stream(rng, bars, bar_ticks, max(2, per_bar // 2), 28, 52)
    harmony = _chord_stream(rng, bars, bar_ticks, 48, 72)
    track_events = [melody, bass, harmony][: rng.randrange(1, 4)]
    roles = [TrackRole.MELODY, TrackRole.BASS, TrackRole.HARMONY][: len(track_events)]
    score = make_score(track_events, ppq=ppq, metre=metre, roles=roles)
    # keep the intended bar count even when the last bars came out silent
    return Score(
        ppq=score.ppq,
        tempo_us=score.tempo_us,
        metre=score.metre,
        tracks=score.tracks,
        end_tick=bars * bar_ticks,
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
