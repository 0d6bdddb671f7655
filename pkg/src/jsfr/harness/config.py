"""Experiment configuration: nested dataclasses <-> JSON.

A config file is a JSON object with ``schema_version`` and any subset of the
sections below; missing keys take the documented defaults.  Angles and other
numbers in ``sweep`` may be written as arithmetic strings using ``pi``
(e.g. ``"pi/4"``).
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

import numpy as np

from ..channel import LinkSpec, SopState
from ..core import RrcSpec
from ..dsp import CpeSpec, MimoMode, MimoSpec
from ..frontend import Scheme
from ..recovery import GrKind, GrSpec, SelectMode
from ..txchain import CarrierSpec, FrameSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ReceiverSpec:
    """Front-end and detection options.

    detectors: 4 = every branch has a photodiode; 3 = one branch is left out
    (2x2 / hybrid) and either rebuilt from the identities (``reconstruct``)
    or simply not used.  A 3x3 coupler always has three.
    """

    scheme: Scheme = Scheme.COUPLER_2X2
    polarizations: int = 2
    detectors: int = 4
    reconstruct: bool = True
    select: SelectMode = SelectMode.ALL
    electrical_snr_db: float | None = None
    obpf: bool = True
    obpf_margin: float = 0.02  # fraction of baud beyond the occupied band
    foe: bool = True
    capture_shift: bool = True


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian sweep; ``axes`` maps an axis name to a list of values or to
    ``{"start": .., "stop": .., "num": ..}`` (inclusive linspace)."""

    axes: dict = field(default_factory=dict)
    worst_over: tuple = ()  # axes to reduce with max(BER) in summaries


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    name: str = "custom"
    frame: FrameSpec = FrameSpec()
    rrc: RrcSpec = RrcSpec(rolloff=0.01, span=64, sps=4)
    carrier: CarrierSpec = CarrierSpec()
    link: LinkSpec = LinkSpec()
    sop: SopState = SopState()
    laser_offset_hz: float = 0.0
    linewidth_hz: float = 0.0
    rx: ReceiverSpec = ReceiverSpec()
    gr: GrSpec = GrSpec()
    mimo: MimoSpec = MimoSpec()
    cpe: CpeSpec = CpeSpec()
    sweep: SweepSpec = SweepSpec()
    trials_per_point: int = 1
    seed: int = 1

    def to_dict(self):
        return _plain(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        ver = d.get("schema_version", SCHEMA_VERSION)
        if ver != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {ver}")
        try:
            return _build(cls, d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    def with_point(self, point):
        """Copy with sweep-axis values applied."""
        cfg = self
        for name, value in (point or {}).items():
            cfg = apply_axis(cfg, name, value)
        return cfg


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "value") and isinstance(obj, str):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


_NESTED = {
    "frame": FrameSpec, "rrc": RrcSpec, "carrier": CarrierSpec, "link": LinkSpec,
    "sop": SopState, "rx": ReceiverSpec, "gr": GrSpec, "mimo": MimoSpec, "cpe": CpeSpec,
    "sweep": SweepSpec,
}
_ENUMS = {("rx", "scheme"): Scheme, ("rx", "select"): SelectMode, ("gr", "kind"): GrKind,
          ("mimo", "mode"): MimoMode}


def _build(cls, d, section=None):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section or 'config'}: {sorted(unknown)}")
    kw = {}
    for k, v in d.items():
        if section is None and k in _NESTED:
            if not isinstance(v, dict):
                raise ConfigError(f"section {k} must be an object")
            kw[k] = _build(_NESTED[k], v, k)
        elif (section, k) in _ENUMS:
            kw[k] = _ENUMS[(section, k)](v)
        elif section == "sweep" and k == "worst_over":
            kw[k] = tuple(v)
        else:
            kw[k] = v
    return cls(**kw)


# -- sweep axes --------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def parse_number(v):
    """Number or arithmetic string with ``pi`` -> float."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return v
    if not isinstance(v, str):
        raise ConfigError(f"not a number: {v!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"bad numeric expression {v!r}")

    try:
        return float(ev(ast.parse(v, mode="eval")))
    except SyntaxError as exc:
        raise ConfigError(f"bad numeric expression {v!r}") from exc


def axis_values(spec):
    if isinstance(spec, dict):
        try:
            start, stop, num = parse_number(spec["start"]), parse_number(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"linspace axis needs start/stop/num, missing {exc}") from None
        return [float(v) for v in np.linspace(start, stop, num)]
    if isinstance(spec, (list, tuple)):
        return [v if isinstance(v, str) and v in _STRING_AXIS_VALUES else parse_number(v) for v in spec]
    raise ConfigError(f"bad axis spec {spec!r}")


_STRING_AXIS_VALUES = {s.value for s in Scheme}

# axis name -> (section, field); None section = top-level field
AXES = {
    "alpha": ("sop", "alpha"), "theta": ("sop", "theta"),
    "osnr_db": ("link", "osnr_db"), "fiber_km": ("link", "fiber_km"), "dgd_ps": ("link", "dgd_ps"),
    "cspr_db": ("carrier", "cspr_db"), "xi": ("carrier", "xi"),
    "taps": ("mimo", "taps"), "polarizations": ("rx", "polarizations"),
    "scheme": ("rx", "scheme"), "detectors": ("rx", "detectors"),
    "electrical_snr_db": ("rx", "electrical_snr_db"),
    "laser_offset_hz": (None, "laser_offset_hz"), "linewidth_hz": (None, "linewidth_hz"),
}


def apply_axis(cfg, name, value):
    if name == "dgd_symbols":
        return apply_axis(cfg, "dgd_ps", float(value) / cfg.frame.baud * 1e12)
    if name not in AXES:
        raise ConfigError(f"unknown sweep axis {name!r}")
    section, attr = AXES[name]
    if attr in ("taps", "polarizations", "detectors"):
        value = int(value)
    if attr == "scheme":
        value = Scheme(value)
    if section is None:
        return replace(cfg, **{attr: value})
    return replace(cfg, **{section: replace(getattr(cfg, section), **{attr: value})})


def sweep_points(cfg):
    """Cartesian product of the sweep axes, first axis slowest."""
    axes = cfg.sweep.axes
    if not axes:
        return [{}]
    names = list(axes)
    grids = [axis_values(axes[n]) for n in names]
    for n in names:
        if n not in AXES and n != "dgd_symbols":
            raise ConfigError(f"unknown sweep axis {n!r}")
    mesh = np.meshgrid(*[np.arange(len(g)) for g in grids], indexing="ij")
    flat = [m.ravel() for m in mesh]
    return [{n: grids[j][flat[j][i]] for j, n in enumerate(names)} for i in range(flat[0].size)]


def validate(cfg):
    """Raise ConfigError for settings the pipeline cannot run."""
    if cfg.rx.polarizations not in (1, 2):
        raise ConfigError("rx.polarizations must be 1 or 2")
    if cfg.rx.detectors not in (3, 4):
        raise ConfigError("rx.detectors must be 3 or 4")
    if cfg.rrc.sps < 4:
        raise ConfigError("generation needs at least 4 samples per symbol")
    if cfg.trials_per_point < 1:
        raise ConfigError("trials_per_point must be >= 1")
    sweep_points(cfg)
    return cfg


def is_dataclass_instance(x):
    return is_dataclass(x) and not isinstance(x, type)
