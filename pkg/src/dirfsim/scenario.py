"""Scenario schema, validation, and YAML round-trip.

A scenario file fully determines a simulation run: unknown fields are
rejected, every default is applied on load, and the effective configuration
serializes back to an equivalent file (the echo written next to outputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass

import yaml

from .errors import ScenarioParseError, ScenarioValidationError
from .geometry import ApDescriptor, ApLayout, Vec3
from .radio import ChannelParams, LossParams, DEFAULT_RATE_TABLE
from .scheduler import SchedulerConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GridLayoutConfig:
    kind: str = "grid"
    rows: int = 2
    cols: int = 3
    spacing_m: float | None = 5.0      # None: fit the grid to the room box
    ceiling_m: float = 3.0
    beamwidth_deg: float = 120.0       # wide enough to main-lobe a 5 m cell from 3 m
    boresight_gain_db: float = 9.0


@dataclass(frozen=True)
class ExplicitApConfig:
    id: int = 0
    position: tuple[float, float, float] = (0.0, 0.0, 3.0)
    boresight: tuple[float, float, float] = (0.0, 0.0, -1.0)
    beamwidth_deg: float = 120.0
    boresight_gain_db: float = 9.0


@dataclass(frozen=True)
class ExplicitLayoutConfig:
    kind: str = "explicit"
    aps: tuple[ExplicitApConfig, ...] = ()


@dataclass(frozen=True)
class RoomConfig:
    x: tuple[float, float] = (0.0, 15.0)
    y: tuple[float, float] = (0.0, 10.0)


@dataclass(frozen=True)
class TraceConfig:
    kind: str = "tour"                 # straight | tour | random_waypoint | cell_waypoint | points
    speed_mps: float = 1.4             # the moderate-walk default (about 3.13 mph)
    cell: int = 0                      # cell_waypoint only: AP cell to roam
    points: tuple[tuple[float, float, float, float], ...] = ()   # (t, x, y, z)


@dataclass(frozen=True)
class WorkloadConfig:
    kind: str = "tcp"                  # tcp: with retransmission, udp: without
    packet_bits: int = 11680
    duration_s: float | None = None    # None: full scenario horizon
    offered_mbps: float | None = None  # udp only; None picks 1.1x the top rate


@dataclass(frozen=True)
class ClientConfig:
    trace: TraceConfig = field(default_factory=TraceConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)


@dataclass(frozen=True)
class SelectorPolicyConfig:
    policy: str = "direction"          # direction | greedy_snr
    mode: str = "relative"             # relative | literal
    direction_window_s: float = 1.0
    estimation: str = "estimated"      # estimated | exact


@dataclass(frozen=True)
class EstimatorSettings:
    learning_rate: float = 0.05
    max_iters: int = 5000
    grad_tol: float = 1e-7
    pair_strategy: str = "auto"
    snr_scale: str = "linear"


@dataclass(frozen=True)
class AntennaConfig:
    back_lobe_db: float = -10.0


@dataclass(frozen=True)
class ServerConfig:
    """Bulk-source behavior: saturate the link, back off on ECN echoes."""

    backhaul_factor: float = 1.08      # source cap relative to the link rate
    ecn_rate_factor: float = 0.97      # clamp relative to the link rate during an episode
    ecn_hold_s: float = 2.0            # episode persists this long past the last echo
    # loss rate fed into the marking formula; the congestion loop sees the
    # wired path (link-layer retries hide channel loss), so 0 by default.
    # null switches to the channel's loss probability at the client position.
    marking_loss_p: float | None = 0.0


@dataclass(frozen=True)
class Scenario:
    schema_version: int = SCHEMA_VERSION
    seed: int = 1
    mode: str = "dirf"                 # dirf | omrf
    bandwidth_mhz: int = 20
    duration_s: float = 30.0
    switch_latency_s: float = 0.030
    rto_s: float = 0.200
    scheduler_enabled: bool = True
    client_height_m: float = 1.0
    layout: GridLayoutConfig | ExplicitLayoutConfig = field(default_factory=GridLayoutConfig)
    room: RoomConfig | None = None
    channel: ChannelParams = field(default_factory=ChannelParams)
    antenna: AntennaConfig = field(default_factory=AntennaConfig)
    loss: LossParams = field(default_factory=LossParams)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    selector: SelectorPolicyConfig = field(default_factory=SelectorPolicyConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    clients: tuple[ClientConfig, ...] = (ClientConfig(),)


# -- derived geometry ------------------------------------------------------------

def effective_room(sc: Scenario) -> RoomConfig:
    if sc.room is not None:
        return sc.room
    lay = sc.layout
    if isinstance(lay, GridLayoutConfig) and lay.spacing_m is not None:
        return RoomConfig(x=(0.0, lay.cols * lay.spacing_m), y=(0.0, lay.rows * lay.spacing_m))
    aps = build_layout(sc)
    xs = [ap.position.x for ap in aps.aps]
    ys = [ap.position.y for ap in aps.aps]
    return RoomConfig(x=(min(xs) - 2.5, max(xs) + 2.5), y=(min(ys) - 2.5, max(ys) + 2.5))


def build_layout(sc: Scenario) -> ApLayout:
    """Materialize the declared AP layout (dirf-mode geometry)."""
    lay = sc.layout
    if isinstance(lay, ExplicitLayoutConfig):
        aps = [ApDescriptor(id=a.id, position=Vec3(*a.position), boresight=Vec3(*a.boresight),
                            beamwidth_deg=a.beamwidth_deg, boresight_gain_db=a.boresight_gain_db)
               for a in lay.aps]
        return ApLayout(aps)
    if lay.spacing_m is not None:
        dx = dy = lay.spacing_m
        x0 = y0 = lay.spacing_m / 2.0
    else:
        room = sc.room if sc.room is not None else RoomConfig()
        dx = (room.x[1] - room.x[0]) / lay.cols
        dy = (room.y[1] - room.y[0]) / lay.rows
        x0, y0 = room.x[0] + dx / 2.0, room.y[0] + dy / 2.0
    aps = []
    for col in range(lay.cols):
        for row in range(lay.rows):
            aps.append(ApDescriptor(
                id=col * lay.rows + row,
                position=Vec3(x0 + col * dx, y0 + row * dy, lay.ceiling_m),
                boresight=Vec3(0.0, 0.0, -1.0),
                beamwidth_deg=lay.beamwidth_deg,
                boresight_gain_db=lay.boresight_gain_db))
    return ApLayout(aps)


def omni_layout(sc: Scenario) -> ApLayout:
    """Single omni AP at the room center (the comparison baseline)."""
    room = effective_room(sc)
    ceiling = sc.layout.ceiling_m if isinstance(sc.layout, GridLayoutConfig) else 3.0
    center = Vec3((room.x[0] + room.x[1]) / 2.0, (room.y[0] + room.y[1]) / 2.0, ceiling)
    return ApLayout([ApDescriptor(id=0, position=center, boresight=Vec3(0, 0, -1),
                                  beamwidth_deg=180.0, boresight_gain_db=0.0)])


# -- dict <-> dataclass plumbing --------------------------------------------------

_TUPLE_FIELDS = {"position", "boresight", "x", "y", "points", "aps", "clients"}


def _to_plain(obj):
    if is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def scenario_to_dict(sc: Scenario) -> dict:
    return _to_plain(sc)


def scenario_to_yaml(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)


def _build(cls, data, path):
    """Construct a dataclass from a mapping, rejecting unknown fields."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioValidationError(path or "<root>", f"expected a mapping, got {type(data).__name__}")
    allowed = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(allowed)
    if unknown:
        raise ScenarioValidationError(
            f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0],
            "unknown field")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _convert(cls, name, value, sub)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ScenarioValidationError(path or cls.__name__, str(exc)) from exc


def _convert(cls, name, value, path):
    if cls is Scenario:
        if name == "layout":
            kind = (value or {}).get("kind", "grid")
            if kind == "grid":
                return _build(GridLayoutConfig, value, path)
            if kind == "explicit":
                return _build(ExplicitLayoutConfig, value, path)
            raise ScenarioValidationError(f"{path}.kind", f"unknown layout kind {kind!r}")
        if name == "room":
            if value is None:
                return None
            return _build_room(value, path)
        nested = {
            "channel": ChannelParams, "antenna": AntennaConfig, "loss": LossParams,
            "scheduler": SchedulerConfig, "estimator": EstimatorSettings,
            "selector": SelectorPolicyConfig, "server": ServerConfig,
        }
        if name in nested:
            return _build(nested[name], value, path)
        if name == "clients":
            if not isinstance(value, list):
                raise ScenarioValidationError(path, "clients must be a list")
            return tuple(_build(ClientConfig, c, f"{path}[{i}]") for i, c in enumerate(value))
    if cls is ClientConfig:
        if name == "trace":
            out = _build(TraceConfig, value, path)
            return out
        if name == "workload":
            return _build(WorkloadConfig, value, path)
    if cls is ExplicitLayoutConfig and name == "aps":
        return tuple(_build(ExplicitApConfig, a, f"{path}[{i}]") for i, a in enumerate(value))
    if cls is ExplicitApConfig and name in ("position", "boresight"):
        return _triple(value, path)
    if cls is TraceConfig and name == "points":
        return tuple(tuple(float(x) for x in row) for row in (value or ()))
    return value


def _triple(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioValidationError(path, "expected [x, y, z]")
    return tuple(float(v) for v in value)


def _build_room(value, path):
    room = _build(RoomConfig, value, path)
    return RoomConfig(x=tuple(float(v) for v in room.x), y=tuple(float(v) for v in room.y))


def scenario_from_dict(data: dict) -> Scenario:
    sc = _build(Scenario, data, "")
    validate_scenario(sc)
    return sc


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file; every default applied explicitly."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark else ""
        raise ScenarioParseError(f"{path}{where}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top level must be a mapping")
    return scenario_from_dict(data)


def loads_scenario(text: str) -> Scenario:
    data = yaml.safe_load(text)
    return scenario_from_dict(data or {})


def validate_scenario(sc: Scenario) -> None:
    def bad(fieldname, problem):
        raise ScenarioValidationError(fieldname, problem)

    if sc.schema_version != SCHEMA_VERSION:
        bad("schema_version", f"expected {SCHEMA_VERSION}, got {sc.schema_version}")
    if sc.mode not in ("dirf", "omrf"):
        bad("mode", f"must be dirf or omrf, got {sc.mode!r}")
    if sc.bandwidth_mhz not in DEFAULT_RATE_TABLE.bandwidths():
        bad("bandwidth_mhz", f"must be one of {DEFAULT_RATE_TABLE.bandwidths()}")
    if not (sc.duration_s > 0 and math.isfinite(sc.duration_s)):
        bad("duration_s", "must be > 0")
    if sc.switch_latency_s < 0:
        bad("switch_latency_s", "must be >= 0")
    if sc.rto_s <= 0:
        bad("rto_s", "must be > 0")
    if sc.client_height_m < 0:
        bad("client_height_m", "must be >= 0")
    if not sc.clients:
        bad("clients", "at least one client is required")
    if sc.selector.policy not in ("direction", "greedy_snr"):
        bad("selector.policy", f"unknown policy {sc.selector.policy!r}")
    if sc.selector.mode not in ("relative", "literal"):
        bad("selector.mode", f"unknown mode {sc.selector.mode!r}")
    if sc.selector.estimation not in ("estimated", "exact"):
        bad("selector.estimation", f"unknown estimation {sc.selector.estimation!r}")
    if sc.selector.direction_window_s <= 0:
        bad("selector.direction_window_s", "must be > 0")
    if not (0 < sc.server.ecn_rate_factor <= 1.0):
        bad("server.ecn_rate_factor", "must be in (0, 1]")
    if sc.server.backhaul_factor < 1.0:
        bad("server.backhaul_factor", "must be >= 1")
    if sc.server.ecn_hold_s < 0:
        bad("server.ecn_hold_s", "must be >= 0")
    if sc.server.marking_loss_p is not None and not 0.0 <= sc.server.marking_loss_p < 1.0:
        bad("server.marking_loss_p", "must be in [0, 1) or null")
    for i, client in enumerate(sc.clients):
        tr = client.trace
        if tr.kind not in ("straight", "tour", "random_waypoint", "cell_waypoint", "points"):
            bad(f"clients[{i}].trace.kind", f"unknown kind {tr.kind!r}")
        if tr.kind == "cell_waypoint" and tr.cell < 0:
            bad(f"clients[{i}].trace.cell", "must be a valid AP id")
        if tr.kind == "points":
            if len(tr.points) < 2:
                bad(f"clients[{i}].trace.points", "needs at least 2 samples")
        elif tr.speed_mps <= 0:
            bad(f"clients[{i}].trace.speed_mps", f"speed must be > 0, got {tr.speed_mps}")
        wl = client.workload
        if wl.kind not in ("tcp", "udp"):
            bad(f"clients[{i}].workload.kind", f"unknown kind {wl.kind!r}")
        if wl.packet_bits <= 0:
            bad(f"clients[{i}].workload.packet_bits", "must be > 0")
        if wl.duration_s is not None and wl.duration_s < 0:
            bad(f"clients[{i}].workload.duration_s", "must be >= 0")
        if wl.offered_mbps is not None and wl.offered_mbps <= 0:
            bad(f"clients[{i}].workload.offered_mbps", "must be > 0")
    if isinstance(sc.layout, GridLayoutConfig):
        lay = sc.layout
        if lay.rows < 1 or lay.cols < 1:
            bad("layout.rows", "grid needs rows >= 1 and cols >= 1")
        if lay.spacing_m is not None and lay.spacing_m <= 0:
            bad("layout.spacing_m", "must be > 0 (or null to fit the room)")
        if lay.spacing_m is None and sc.room is None:
            bad("layout.spacing_m", "null spacing requires an explicit room")
        if lay.ceiling_m <= 0:
            bad("layout.ceiling_m", "must be > 0")
    else:
        if not sc.layout.aps:
            bad("layout.aps", "explicit layout needs at least one AP")
    if sc.room is not None:
        if sc.room.x[1] <= sc.room.x[0] or sc.room.y[1] <= sc.room.y[0]:
            bad("room", "room extents must be non-empty")
