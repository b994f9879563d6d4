"""Instance file format and the run manifest embedded in every emitted file."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional

from . import __version__
from .core import Agent, Instance, Point


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    seed: Optional[int]
    tool_version: str = __version__
    timestamp: str = ""

    @classmethod
    def now(cls, command: str, parameters: dict, seed: Optional[int] = None) -> "RunManifest":
        ts = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
        return cls(command, parameters, seed, __version__, ts)

    def as_dict(self) -> dict:
        return asdict(self)


def _point_json(p: Optional[Point]) -> Optional[dict]:
    return None if p is None else {"x": p.x, "y": p.y}


def instance_to_dict(instance: Instance) -> dict:
    return {
        "agents": [{"x": a.location.x, "y": a.location.y, "w": a.weight}
                   for a in instance.agents],
        "prediction": _point_json(instance.prediction),
        "confidence": instance.confidence,
    }


def _num(v: Any, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{what} must be a number, got {v!r}")
    return float(v)


def instance_from_dict(data: Any) -> Instance:
    """Parse the instance schema; unknown top-level keys (manifest, metadata) are ignored."""
    if not isinstance(data, dict) or not isinstance(data.get("agents"), list):
        raise InstanceFormatError("instance must be an object with an 'agents' list")
    try:
        agents = tuple(
            Agent(Point(_num(a["x"], "x"), _num(a["y"], "y")), _num(a.get("w", 1.0), "w"))
            for a in data["agents"])
        pred = data.get("prediction")
        prediction = None if pred is None else Point(_num(pred["x"], "x"), _num(pred["y"], "y"))
        conf = data.get("confidence")
        return Instance(agents, prediction, None if conf is None else _num(conf, "confidence"))
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc!r}") from exc
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def load_instance(path: str | Path) -> Instance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f"cannot read instance file {path}: {exc}") from exc
    return instance_from_dict(data)


def dump_json(obj: dict) -> str:
    # floats go through repr, which keeps 17 significant digits
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def render_csv(manifest: RunManifest, columns: list[str], rows: Iterable[dict]) -> str:
    """CSV text with the manifest as a leading ``#`` comment line."""
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest.as_dict(), sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else _cell(row[k])) for k in columns})
    return buf.getvalue()


def _cell(v: Any) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Inverse of :func:`render_csv`: (manifest, rows as string dicts)."""
    lines = text.splitlines()
    manifest = {}
    if lines and lines[0].startswith("# manifest: "):
        manifest = json.loads(lines[0][len("# manifest: "):])
        lines = lines[1:]
    return manifest, list(csv.DictReader(lines))
