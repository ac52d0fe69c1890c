"""Standard MIDI file codec: format 0/1 reader, format 1 writer.

The reader resolves note-on/note-off pairs into :class:`NoteEvent`,
coerces zero-length notes to one tick, merges same-pitch overlaps,
skips channel-10 percussion and keeps only the first three eligible
tracks. The writer emits one conductor chunk (tempo + time signature at
tick 0) followed by one chunk per track, with running status.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedMidi, NoNotes, UnsupportedMetre
from .model import (
    DEFAULT_TEMPO_US,
    MAX_TRACKS,
    Metre,
    NoteEvent,
    Score,
    Track,
    TrackRole,
)

PERCUSSION_CHANNEL = 9

_HEADER_MAGIC = b"MThd"
_TRACK_MAGIC = b"MTrk"


@dataclass
class _RawTrack:
    notes: list[tuple[int, int, int, int, int]]  # onset, pitch, dur, vel, channel
    tempos: list[tuple[int, int]]  # tick, us_per_quarter
    timesigs: list[tuple[int, int, int]]  # tick, numerator, denominator


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MalformedMidi("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MalformedMidi("variable-length quantity longer than four bytes")


def _parse_track_chunk(data: bytes) -> _RawTrack:
    notes: list[tuple[int, int, int, int, int]] = []
    tempos: list[tuple[int, int]] = []
    timesigs: list[tuple[int, int, int]] = []
    # several same-pitch notes may be open at once; note-off closes the
    # oldest so overlaps survive into the merge step
    open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    tick = 0
    pos = 0
    status = 0

    def close(channel: int, pitch: int, at: int) -> None:
        stack = open_notes.get((channel, pitch))
        if not stack:
            return
        onset, velocity = stack.pop(0)
        duration = max(1, at - onset)
        notes.append((onset, pitch, duration, velocity, channel))

    while pos < len(data):
        delta, pos = _read_vlq(data, pos)
        tick += delta
        if pos >= len(data):
            raise MalformedMidi("event truncated")
        byte = data[pos]
        if byte & 0x80:
            status = byte
            pos += 1
        elif status == 0:
            raise MalformedMidi("data byte with no running status")
        kind = status & 0xF0
        channel = status & 0x0F
        if status == 0xFF:
            if pos >= len(data):
                raise MalformedMidi("meta event truncated")
            meta_type = data[pos]
            pos += 1
            length, pos = _read_vlq(data, pos)
            payload = data[pos : pos + length]
            if len(payload) < length:
                raise MalformedMidi("meta payload truncated")
            pos += length
            if meta_type == 0x51 and length >= 3:
                tempos.append((tick, int.from_bytes(payload[:3], "big")))
            elif meta_type == 0x58 and length >= 2:
                timesigs.append((tick, payload[0], 1 << payload[1]))
            elif meta_type == 0x2F:
                break
            status = 0  # meta/sysex cancel running status
        elif status in (0xF0, 0xF7):
            length, pos = _read_vlq(data, pos)
            pos += length
            if pos > len(data):
                raise MalformedMidi("sysex truncated")
            status = 0
        elif kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            if pos + 2 > len(data):
                raise MalformedMidi("channel event truncated")
            d1, d2 = data[pos], data[pos + 1]
            pos += 2
            if kind == 0x90 and d2 > 0:
                open_notes.setdefault((channel, d1), []).append((tick, d2))
            elif kind == 0x80 or (kind == 0x90 and d2 == 0):
                close(channel, d1, tick)
        elif kind in (0xC0, 0xD0):
            pos += 1
            if pos > len(data):
                raise MalformedMidi("channel event truncated")
        else:
            raise MalformedMidi(f"unknown status byte 0x{status:02x}")

    last_tick = tick
    for (channel, pitch), stack in list(open_notes.items()):
        while stack:
            close(channel, pitch, last_tick)
    return _RawTrack(notes=notes, tempos=tempos, timesigs=timesigs)


def _parse(
    data: bytes, *, require_notes: bool = True, keep_empty: bool = False
) -> Score:
    if len(data) < 14 or data[:4] != _HEADER_MAGIC:
        raise MalformedMidi("missing MThd header")
    header_len = int.from_bytes(data[4:8], "big")
    if header_len < 6:
        raise MalformedMidi(f"header length {header_len} < 6")
    fmt = int.from_bytes(data[8:10], "big")
    ntrks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if fmt not in (0, 1):
        raise MalformedMidi(f"format {fmt} not supported (only 0 and 1)")
    if division & 0x8000:
        raise MalformedMidi("SMPTE time division not supported")
    if division == 0:
        raise MalformedMidi("zero ticks-per-quarter")
    ppq = division

    raw_tracks: list[_RawTrack] = []
    pos = 8 + header_len
    while pos < len(data) and len(raw_tracks) < ntrks:
        if pos + 8 > len(data):
            raise MalformedMidi("truncated chunk header")
        magic = data[pos : pos + 4]
        length = int.from_bytes(data[pos + 4 : pos + 8], "big")
        body = data[pos + 8 : pos + 8 + length]
        if len(body) < length:
            raise MalformedMidi("truncated track chunk")
        pos += 8 + length
        if magic == _TRACK_MAGIC:
            raw_tracks.append(_parse_track_chunk(body))
        # alien chunk types are skipped per the SMF spec
    if not raw_tracks:
        raise MalformedMidi("no track chunks")

    tempo_events = [
        (tick, i, j)
        for i, rt in enumerate(raw_tracks)
        for j, (tick, _) in enumerate(rt.tempos)
    ]
    tempo_us = DEFAULT_TEMPO_US
    if tempo_events:
        tick, i, j = min(tempo_events)
        tempo_us = raw_tracks[i].tempos[j][1]

    timesig_events = sorted(
        (tick, i, j)
        for i, rt in enumerate(raw_tracks)
        for j, (tick, _, _) in enumerate(rt.timesigs)
    )
    metre = Metre(4, 4)
    if timesig_events:
        tick, i, j = timesig_events[0]
        _, num, den = raw_tracks[i].timesigs[j]
        metre = Metre(num, den)
        for tick, i, j in timesig_events[1:]:
            _, n2, d2 = raw_tracks[i].timesigs[j]
            if (n2, d2) != (num, den):
                raise UnsupportedMetre(
                    f"time signature changes from {num}/{den} to {n2}/{d2}"
                )

    # group notes into logical tracks: one per chunk (format 1) or one per
    # channel (format 0), percussion channel dropped either way
    note_groups: list[list[tuple[int, int, int, int, int]]] = []
    if fmt == 0:
        by_channel: dict[int, list[tuple[int, int, int, int, int]]] = {}
        for note in raw_tracks[0].notes:
            by_channel.setdefault(note[4], []).append(note)
        for channel in sorted(by_channel):
            if channel != PERCUSSION_CHANNEL:
                note_groups.append(by_channel[channel])
    else:
        chunks = raw_tracks
        if keep_empty and chunks and not chunks[0].notes:
            chunks = chunks[1:]  # leading conductor chunk
        for rt in chunks:
            melodic = [n for n in rt.notes if n[4] != PERCUSSION_CHANNEL]
            if melodic or keep_empty:
                note_groups.append(melodic)
    if not keep_empty:
        note_groups = [g for g in note_groups if g]

    note_groups = note_groups[:MAX_TRACKS]
    if require_notes and not any(note_groups):
        raise NoNotes("no sounding notes in the first three eligible tracks")

    tracks = tuple(
        Track.from_events(
            NoteEvent(onset=o, pitch=p, duration=d, velocity=max(1, min(127, v)))
            for o, p, d, v, _ in group
        )
        for group in note_groups
    )
    end_tick = max((t.end_tick for t in tracks), default=0)
    score = Score(
        ppq=ppq, tempo_us=tempo_us, metre=metre, tracks=tracks, end_tick=end_tick
    )
    score.bar_ticks  # UnsupportedMetre if the bar is not integral in ticks
    return score


def parse_midi(data: bytes) -> Score:
    """Parse a standard MIDI file (format 0 or 1) into a :class:`Score`."""
    return _parse(data)


def _vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def _conductor_chunk(score: Score) -> bytes:
    dd = score.metre.denominator.bit_length() - 1
    body = b"".join(
        [
            _vlq(0),
            bytes([0xFF, 0x58, 0x04, score.metre.numerator, dd, 24, 8]),
            _vlq(0),
            bytes([0xFF, 0x51, 0x03]) + score.tempo_us.to_bytes(3, "big"),
            _vlq(0),
            bytes([0xFF, 0x2F, 0x00]),
        ]
    )
    return _TRACK_MAGIC + len(body).to_bytes(4, "big") + body


def _track_chunk(track: Track, channel: int) -> bytes:
    # note-offs sort before note-ons at the same tick so touching
    # same-pitch notes never read as overlapping
    messages: list[tuple[int, int, int, int]] = []  # tick, is_on, pitch, vel
    for ev in track.events:
        messages.append((ev.onset, 1, ev.pitch, ev.velocity))
        messages.append((ev.offset, 0, ev.pitch, 0))
    messages.sort()
    parts: list[bytes] = []
    tick = 0
    running = -1
    for at, is_on, pitch, vel in messages:
        parts.append(_vlq(at - tick))
        tick = at
        status = (0x90 if is_on else 0x80) | channel
        if status != running:
            parts.append(bytes([status]))
            running = status
        parts.append(bytes([pitch, vel]))
    parts.append(_vlq(0) + bytes([0xFF, 0x2F, 0x00]))
    body = b"".join(parts)
    return _TRACK_MAGIC + len(body).to_bytes(4, "big") + body


def serialize_midi(score: Score) -> bytes:
    """Write a :class:`Score` as a format-1 standard MIDI file."""
    if score.tempo_us > 0xFFFFFF:
        raise ValueError(f"tempo {score.tempo_us}us does not fit a tempo event")
    chunks = [_conductor_chunk(score)]
    for index, track in enumerate(score.tracks):
        chunks.append(_track_chunk(track, channel=index))
    header = (
        _HEADER_MAGIC
        + (6).to_bytes(4, "big")
        + (1).to_bytes(2, "big")
        + (len(chunks)).to_bytes(2, "big")
        + score.ppq.to_bytes(2, "big")
    )
    return header + b"".join(chunks)
