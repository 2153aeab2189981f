"""Blockage records: capture, run-lifetime cache, text rendering and JSON export."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path

import jsonschema

FALLBACK_TEXT = (
    "Blockage report\n"
    "\n"
    "There are no reports for this run.\n"
    "Possible reasons: no detected blockages, data loss or cache reset.\n"
)

CATEGORIES = (
    ("Game context", ("scene_name", "timestamp", "tick", "agent", "removed")),
    ("Player state", ("player_position", "player_speed")),
    ("Environment state", ("skybox_variant", "latest_ground_z", "tile_length")),
    ("Generation parameters", ("spawn_percentage", "x_range", "clear_width", "jitter", "y_offset")),
    ("Scanner context", ("tile_position", "probe_position", "ray_spacing", "hit_count")),
    ("Blocking objects", ("blocking_objects",)),
)


class InvalidReport(ValueError):
    pass


@dataclass
class BlockingObject:
    name: str
    position: list[float]
    size: list[float]
    layer: str


@dataclass
class BlockageReport:
    scene_name: str
    timestamp: str
    tick: int
    player_position: list[float]
    player_speed: float
    skybox_variant: int
    latest_ground_z: float
    tile_length: float
    spawn_percentage: float
    x_range: list[float]
    clear_width: float
    jitter: float
    y_offset: float
    tile_position: float
    probe_position: list[float]
    ray_spacing: float
    hit_count: int
    agent: str
    removed: bool
    blocking_objects: list[BlockingObject] = field(default_factory=list)

    def validate(self) -> None:
        if self.agent not in ("aerial", "ground"):
            raise InvalidReport(f"unknown agent {self.agent!r}")
        if self.removed and self.agent != "aerial":
            raise InvalidReport("only the aerial agent may remove objects")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BlockageReport":
        names = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in names}
        kwargs["blocking_objects"] = [BlockingObject(**b) for b in data.get("blocking_objects", [])]
        return cls(**kwargs)


def timestamp_for(origin: datetime, sim_time: float) -> str:
    return (origin + timedelta(seconds=sim_time)).isoformat(timespec="milliseconds")


def build_report(state, result, removed: bool = False) -> BlockageReport:
    cfg = state.config
    player = state.player
    z_row = result.first_blocked_row_z if result.first_blocked_row_z is not None else result.segment_z
    tile = next((t for t in state.tiles if t.z <= z_row <= t.z_end), None)
    nearest_offset = 0.0
    if result.blockers:
        first = min(result.blockers, key=lambda b: (abs(b["position"][2] - z_row), b["owner_id"]))
        obj = state.objects.get(first["owner_id"])
        nearest_offset = obj.y_offset if obj is not None else 0.0
    probe = list(result.probe_origin) if result.probe_origin else [cfg.lane_center, cfg.aerial_height, z_row]
    return BlockageReport(
        scene_name=cfg.label,
        timestamp=timestamp_for(state.clock_origin, state.time),
        tick=state.tick,
        player_position=list(player.position),
        player_speed=state.player_speed,
        skybox_variant=state.theme.current_index,
        latest_ground_z=state.tiles[-1].z if state.tiles else 0.0,
        tile_length=cfg.tile_length,
        spawn_percentage=cfg.p_spawn,
        x_range=list(cfg.x_range),
        clear_width=2 * cfg.clear_half_width,
        jitter=cfg.z_jitter,
        y_offset=nearest_offset,
        tile_position=tile.z if tile is not None else result.segment_z,
        probe_position=probe,
        ray_spacing=result.ray_spacing,
        hit_count=result.hit_count,
        agent=result.agent,
        removed=removed,
        blocking_objects=[BlockingObject(b["root_name"], list(b["position"]), list(b["size"]), b["layer"])
                          for b in result.blockers],
    )


def report_blockage(cache: list, report: BlockageReport) -> int:
    """Append to the cache after validation; returns the new entry's index."""
    report.validate()
    cache.append(report)
    return len(cache) - 1


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.3f}"
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_fmt(v) for v in value) + ")"
    return str(value)


def render_text(cache) -> str:
    if not cache:
        return FALLBACK_TEXT
    lines = ["Blockage report", f"{len(cache)} report(s)", ""]
    for n, report in enumerate(cache, 1):
        data = report.to_dict() if isinstance(report, BlockageReport) else report
        lines.append(f"=== Report {n} ===")
        for heading, keys in CATEGORIES:
            lines.append(f"[{heading}]")
            for key in keys:
                if key == "blocking_objects":
                    objs = data[key]
                    if not objs:
                        lines.append("  (none identified)")
                    for obj in objs:
                        lines.append(f"  - {obj['name']} layer={obj['layer']} "
                                     f"position={_fmt(obj['position'])} size={_fmt(obj['size'])}")
                else:
                    lines.append(f"  {key.replace('_', ' ')}: {_fmt(data[key])}")
        lines.append("")
    return "\n".join(lines)


def load_schema() -> dict:
    text = resources.files("runnerpcg").joinpath("data/blockage_report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_reports(data) -> None:
    jsonschema.validate(data, load_schema())


def dumps_reports(cache) -> str:
    return json.dumps([r.to_dict() for r in cache], indent=2) + "\n"


def export_json(cache, path) -> Path:
    path = Path(path)
    try:
        path.write_text(dumps_reports(cache), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write reports to {path}: {exc}") from exc
    return path


def load_reports(path) -> list[BlockageReport]:
    """Parse and schema-check a reports file; raises ValueError on malformed content."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc.msg})") from exc
    try:
        validate_reports(data)
    except jsonschema.ValidationError as exc:
        raise ValueError(f"{path}: schema violation: {exc.message}") from exc
    reports = [BlockageReport.from_dict(d) for d in data]
    for r in reports:
        r.validate()
    return reports


EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
