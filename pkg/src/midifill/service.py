"""HTTP wire protocol for the session loop (see docs/protocol.md).

JSON request/response bodies with base64 MIDI payload fields; every
failure maps to one of eight typed error codes in a uniform envelope.
The stateless ``/generate`` endpoint exposes the baseline generator
using the same message vocabulary, so one server can act as another's
remote model.
"""

from __future__ import annotations

import base64
import binascii
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .baseline import BaselineGenerator
from .engine import ControlTarget, InfillResult, RegionSpec, infill
from .errors import GeneratorFailure, MidifillError, SchemaError
from .metrics import ControlLevels
from .model import TrackRole, window_to_score
from .remote import decode_window
from .midi_io import serialize_midi
from .report import AnalysisReport, key_dict
from .sessions import MAX_MIDI_PAYLOAD, ServiceConfig, SessionManager

_STATUS = {
    "SCHEMA_ERROR": 400,
    "MALFORMED_MIDI": 422,
    "NO_NOTES": 422,
    "UNSUPPORTED_METRE": 422,
    "ROLE_ERROR": 422,
    "RANGE_ERROR": 422,
    "STATE_ERROR": 409,
    "GENERATOR_FAILURE": 502,
}


class MetreMsg(BaseModel):
    numerator: int
    denominator: int


class KeyMsg(BaseModel):
    tonic: int = Field(ge=0, le=11)
    mode: Literal["major", "minor"]
    confidence: float
    name: str


class SummaryMsg(BaseModel):
    track_count: int
    bar_count: int
    metre: MetreMsg
    tempo_bpm: float
    key: KeyMsg


class CreateSessionRequest(BaseModel):
    midi_b64: str


class CreateSessionResponse(BaseModel):
    session_id: str
    summary: SummaryMsg


class SetRolesRequest(BaseModel):
    session_id: str
    roles: list[Literal["melody", "bass", "harmony", "empty"]] = Field(
        min_length=1, max_length=3
    )


class OkResponse(BaseModel):
    ok: bool = True


class AnalyzeRequest(BaseModel):
    session_id: str
    origin_bar: int = Field(ge=1)


class TrackBarMsg(BaseModel):
    track: int
    role: str
    bar: int
    density: float
    polyphony: float
    occupation: float
    density_level: int
    polyphony_level: int
    occupation_level: int


class BarTensionMsg(BaseModel):
    bar: int
    tensile_strain: float
    cloud_diameter: float
    cloud_momentum: float
    tension_level: int


class AnalysisMsg(BaseModel):
    summary: SummaryMsg
    origin_bar: int
    window_bars: int
    key: KeyMsg
    track_bars: list[TrackBarMsg]
    tension: list[BarTensionMsg]


class CellMsg(BaseModel):
    track: int = Field(ge=0, le=2)
    bar: int = Field(ge=1)


class LevelsMsg(BaseModel):
    density: int = Field(ge=0, le=9)
    polyphony: int = Field(ge=0, le=9)
    occupation: int = Field(ge=0, le=9)


class InfillRequest(BaseModel):
    session_id: str
    region: list[CellMsg] = Field(min_length=1)
    track_levels: dict[int, LevelsMsg] = Field(default_factory=dict)
    tension_levels: dict[int, int] = Field(default_factory=dict)
    seed: int = 0
    generator: Literal["baseline", "remote"] = "baseline"
    remote_endpoint: str | None = None

    def control_target(self) -> ControlTarget:
        for bar, level in self.tension_levels.items():
            if not 0 <= level <= 9:
                raise SchemaError(f"tension level {level} for bar {bar} outside 0..9")
        return ControlTarget(
            track_levels={
                t: ControlLevels(m.density, m.polyphony, m.occupation)
                for t, m in self.track_levels.items()
            },
            tension_levels=dict(self.tension_levels),
        )


class CellResultMsg(BaseModel):
    track: int
    bar: int
    levels: LevelsMsg
    deltas: dict[str, int]


class InfillResponse(BaseModel):
    analysis: AnalysisMsg
    midi_b64: str
    achieved: list[CellResultMsg]
    tension_deltas: dict[int, int]


class ResolveRequest(BaseModel):
    session_id: str
    keep: bool


class ExportRequest(BaseModel):
    session_id: str


class ExportResponse(BaseModel):
    midi_b64: str


class GenerateRequest(BaseModel):
    midi_b64: str
    bars: int = Field(ge=1, le=16)
    roles: list[Literal["melody", "bass", "harmony", "empty"]] = Field(
        min_length=1, max_length=3
    )
    region: list[CellMsg] = Field(min_length=1)
    track_levels: dict[int, LevelsMsg] = Field(default_factory=dict)
    tension_levels: dict[int, int] = Field(default_factory=dict)
    seed: int = 0


class GenerateResponse(BaseModel):
    midi_b64: str
    achieved: list[CellResultMsg]


def _decode_payload(midi_b64: str) -> bytes:
    try:
        data = base64.b64decode(midi_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise SchemaError(f"midi_b64 is not valid base64: {exc}") from exc
    if len(data) > MAX_MIDI_PAYLOAD:
        raise SchemaError(
            f"MIDI payload of {len(data)} bytes exceeds {MAX_MIDI_PAYLOAD}"
        )
    return data


def _summary_msg(report: AnalysisReport) -> SummaryMsg:
    s = report.summary
    return SummaryMsg(
        track_count=s.track_count,
        bar_count=s.bar_count,
        metre=MetreMsg(numerator=s.metre.numerator, denominator=s.metre.denominator),
        tempo_bpm=s.tempo_bpm,
        key=KeyMsg(**key_dict(s.key)),
    )


def _analysis_msg(report: AnalysisReport) -> AnalysisMsg:
    return AnalysisMsg(
        summary=_summary_msg(report),
        origin_bar=report.origin_bar,
        window_bars=report.window_bars,
        key=KeyMsg(**key_dict(report.key)),
        track_bars=[
            TrackBarMsg(
                track=r.track,
                role=r.role,
                bar=r.bar,
                density=r.raw.density,
                polyphony=r.raw.polyphony,
                occupation=r.raw.occupation,
                density_level=r.levels.density_level,
                polyphony_level=r.levels.polyphony_level,
                occupation_level=r.levels.occupation_level,
            )
            for r in report.track_bars
        ],
        tension=[
            BarTensionMsg(
                bar=i,
                tensile_strain=t.tensile_strain,
                cloud_diameter=t.cloud_diameter,
                cloud_momentum=t.cloud_momentum,
                tension_level=t.tension_level,
            )
            for i, t in enumerate(report.tension, start=1)
        ],
    )


def _achieved_msgs(result: InfillResult) -> list[CellResultMsg]:
    return [
        CellResultMsg(
            track=track,
            bar=bar,
            levels=LevelsMsg(
                density=levels.density_level,
                polyphony=levels.polyphony_level,
                occupation=levels.occupation_level,
            ),
            deltas=result.level_deltas[(track, bar)],
        )
        for (track, bar), levels in sorted(result.achieved_levels.items())
    ]


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager or SessionManager(ServiceConfig())
    app = FastAPI(title="midifill session service", docs_url=None, redoc_url=None)
    app.state.manager = manager
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(MidifillError)
    async def _domain_error(_: Request, exc: MidifillError) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 500),
            content={
                "error": {
                    "code": exc.code,
                    "detail": type(exc).__name__,
                    "message": str(exc),
                }
            },
        )

    @app.exception_handler(RequestValidationError)
    async def _schema_error(_: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS["SCHEMA_ERROR"],
            content={
                "error": {
                    "code": "SCHEMA_ERROR",
                    "detail": "RequestValidationError",
                    "message": str(exc.errors()[:3]),
                }
            },
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": manager.session_count()}

    @app.post("/create-session", response_model=CreateSessionResponse)
    def create_session(body: CreateSessionRequest) -> CreateSessionResponse:
        midi = _decode_payload(body.midi_b64)
        session_id, summary = manager.create_session(midi)
        s = summary
        return CreateSessionResponse(
            session_id=session_id,
            summary=SummaryMsg(
                track_count=s.track_count,
                bar_count=s.bar_count,
                metre=MetreMsg(
                    numerator=s.metre.numerator, denominator=s.metre.denominator
                ),
                tempo_bpm=s.tempo_bpm,
                key=KeyMsg(**key_dict(s.key)),
            ),
        )

    @app.post("/set-roles", response_model=OkResponse)
    def set_roles(body: SetRolesRequest) -> OkResponse:
        roles = [TrackRole(r) for r in body.roles]
        manager.set_roles(body.session_id, roles)
        return OkResponse()

    @app.post("/analyze", response_model=AnalysisMsg)
    def analyze(body: AnalyzeRequest) -> AnalysisMsg:
        report = manager.analyze(body.session_id, body.origin_bar)
        return _analysis_msg(report)

    @app.post("/infill", response_model=InfillResponse)
    def do_infill(body: InfillRequest) -> InfillResponse:
        region = RegionSpec.of((c.track, c.bar) for c in body.region)
        report, midi, result = manager.request_infill(
            body.session_id,
            region,
            body.control_target(),
            body.seed,
            generator=body.generator,
            remote_endpoint=body.remote_endpoint,
        )
        return InfillResponse(
            analysis=_analysis_msg(report),
            midi_b64=base64.b64encode(midi).decode("ascii"),
            achieved=_achieved_msgs(result),
            tension_deltas=dict(result.tension_deltas),
        )

    @app.post("/resolve", response_model=OkResponse)
    def resolve(body: ResolveRequest) -> OkResponse:
        manager.resolve(body.session_id, body.keep)
        return OkResponse()

    @app.post("/export", response_model=ExportResponse)
    def export(body: ExportRequest) -> ExportResponse:
        midi = manager.export(body.session_id)
        return ExportResponse(midi_b64=base64.b64encode(midi).decode("ascii"))

    @app.post("/generate", response_model=GenerateResponse)
    def generate(body: GenerateRequest) -> GenerateResponse:
        _decode_payload(body.midi_b64)  # size gate
        window = decode_window(body.midi_b64, body.bars)
        if len(body.roles) != len(window.tracks):
            raise SchemaError(
                f"{len(body.roles)} roles for {len(window.tracks)} tracks"
            )
        tracks = [
            t.with_role(TrackRole(r)) for t, r in zip(window.tracks, body.roles)
        ]
        window = window.with_tracks(tracks)
        region = RegionSpec.of((c.track, c.bar) for c in body.region)
        for bar, level in body.tension_levels.items():
            if not 0 <= level <= 9:
                raise SchemaError(f"tension level {level} for bar {bar} outside 0..9")
        targets = ControlTarget(
            track_levels={
                t: ControlLevels(m.density, m.polyphony, m.occupation)
                for t, m in body.track_levels.items()
            },
            tension_levels=dict(body.tension_levels),
        )
        result = infill(
            window, region, targets, body.seed, BaselineGenerator(manager.config.generator)
        )
        if result.failed:
            raise GeneratorFailure(
                f"generator failed for cells {sorted(result.failed_cells)}"
            )
        payload = base64.b64encode(
            serialize_midi(window_to_score(result.new_window))
        ).decode("ascii")
        return GenerateResponse(midi_b64=payload, achieved=_achieved_msgs(result))

    return app
