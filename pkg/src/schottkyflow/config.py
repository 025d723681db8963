"""Run configuration: one strict JSON document per batch run.

Unknown keys are rejected everywhere, every number must be finite, and the
parsed object round-trips losslessly, so a configuration hash identifies a
run.  Schemes come either as named fixtures, as disk-pairing parameters
(the canonical form), or as explicit matrices with both disks spelled out.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .coding import SchottkyScheme
from .geometry import Disk, MoebiusMap
from . import fixtures


class ConfigError(ValueError):
    """Configuration rejected: unknown keys, bad shapes or non-finite values."""


def _require_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {context}")


def _finite(value, context: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{context} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{context} must be finite, got {value!r}")
    return out


def _complex_pair(value, context: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(_finite(value, context), 0.0)
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{context} must be [re, im]")
    return complex(_finite(value[0], context), _finite(value[1], context))


@dataclass
class GridConfig:
    pressure_s: tuple[float, float, int] = (0.0, 2.0, 21)
    gap_b: tuple[float, ...] = (0.0, 1.0, -1.0, 5.0, -5.0, 20.0, -20.0)
    gap_k: tuple[int, ...] = (0, 1, -1, 3, -3)
    stability_a: tuple[float, ...] = (-0.05, -0.02, 0.0, 0.02, 0.05)
    stability_b: float = 5.0
    stability_k: int = 1
    geodesic_T: tuple[float, ...] = (8.0, 14.0, 18.0, 23.0)
    correlation_t: tuple[float, float, float] = (0.0, 16.0, 0.25)


@dataclass
class NcpConfig:
    epsilons: tuple[float, ...] = (0.1, 0.01)
    directions: int = 8
    points: int = 200000
    word_length: int = 30
    centers: int = 8


@dataclass
class LnicConfig:
    word_length: int = 3
    base_points: int = 5
    omegas: int = 16


@dataclass
class CorrelationConfig:
    xi: float = 0.5
    k_terms: int = 30
    character: int = 1
    coefficient: complex = 0.7
    profile: str = "bump"


@dataclass
class RunConfig:
    scheme_spec: dict = field(default_factory=lambda: {"fixture": "fix-a"})
    depth: int = 8
    seed: int = 7
    iterations: int = 100
    threads: int = 0
    output_dir: str = "out"
    cylinder_capacity: int = 10**7
    geodesic_capacity: int = 10**5
    rpf_tol: float = 1e-13
    dimension_tol: float = 1e-12
    grids: GridConfig = field(default_factory=GridConfig)
    ncp: NcpConfig = field(default_factory=NcpConfig)
    lnic: LnicConfig = field(default_factory=LnicConfig)
    correlation: CorrelationConfig = field(default_factory=CorrelationConfig)
    raw: dict = field(default_factory=dict)

    def build_scheme(self) -> SchottkyScheme:
        return build_scheme(self.scheme_spec)

    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def build_scheme(spec: dict) -> SchottkyScheme:
    _require_keys(spec, {"fixture", "rank", "generators"}, "scheme")
    if "fixture" in spec:
        if set(spec) != {"fixture"}:
            raise ConfigError("a fixture scheme takes no other keys")
        try:
            return fixtures.by_name(spec["fixture"])
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    if "generators" not in spec:
        raise ConfigError("scheme needs either a fixture name or generators")
    gens_spec = spec["generators"]
    if not isinstance(gens_spec, list) or not gens_spec:
        raise ConfigError("scheme generators must be a nonempty list")
    rank = spec.get("rank", len(gens_spec))
    if rank != len(gens_spec):
        raise ConfigError(f"rank {rank} does not match {len(gens_spec)} generators")
    gens, sources, targets = [], [], []
    for i, g in enumerate(gens_spec):
        ctx = f"generator {i}"
        if not isinstance(g, dict):
            raise ConfigError(f"{ctx} must be an object")
        _require_keys(g, {"pairing", "matrix", "source_disk", "target_disk"}, ctx)
        if "pairing" in g:
            if set(g) != {"pairing"}:
                raise ConfigError(f"{ctx}: pairing form takes no other keys")
            p = g["pairing"]
            _require_keys(p, {"source_center", "target_center", "radius"},
                          f"{ctx} pairing")
            cm = _complex_pair(p["source_center"], f"{ctx} source_center")
            cp = _complex_pair(p["target_center"], f"{ctx} target_center")
            rad = _finite(p["radius"], f"{ctx} radius")
            gens.append(MoebiusMap.disk_pairing(cm, cp, rad))
            sources.append(Disk(cm, rad))
            targets.append(Disk(cp, rad))
        else:
            for key in ("matrix", "source_disk", "target_disk"):
                if key not in g:
                    raise ConfigError(f"{ctx} needs {key} in explicit form")
            m = g["matrix"]
            _require_keys(m, {"a", "b", "c", "d"}, f"{ctx} matrix")
            gens.append(MoebiusMap(*(_complex_pair(m[k], f"{ctx} matrix {k}")
                                     for k in "abcd")))
            disks = []
            for key in ("source_disk", "target_disk"):
                d = g[key]
                _require_keys(d, {"center", "radius"}, f"{ctx} {key}")
                disks.append(Disk(_complex_pair(d["center"], f"{ctx} {key} center"),
                                  _finite(d["radius"], f"{ctx} {key} radius")))
            sources.append(disks[0])
            targets.append(disks[1])
    try:
        return SchottkyScheme(gens, sources, targets)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _int(value, context: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{context} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{context} must be >= {minimum}")
    return value


def _float_list(value, context: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{context} must be a nonempty list")
    return tuple(_finite(v, context) for v in value)


def _int_list(value, context: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{context} must be a nonempty list")
    return tuple(_int(v, context) for v in value)


def _range_spec(value, context: str, keys=("min", "max", "points")):
    _require_keys(value, set(keys), context)
    out = []
    for k in keys:
        if k not in value:
            raise ConfigError(f"{context} needs {k}")
        out.append(_int(value[k], f"{context} {k}") if k == "points"
                   else _finite(value[k], f"{context} {k}"))
    return tuple(out)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    _require_keys(data, {"scheme", "depth", "seed", "iterations", "threads",
                         "output_dir", "capacity", "tolerances", "grids",
                         "ncp", "lnic", "correlation"}, "configuration")
    cfg = RunConfig(raw=data)
    if "scheme" in data:
        cfg.scheme_spec = data["scheme"]
        build_scheme(cfg.scheme_spec)  # validate shape eagerly
    if "depth" in data:
        cfg.depth = _int(data["depth"], "depth", 1)
    if "seed" in data:
        cfg.seed = _int(data["seed"], "seed", 0)
    if "iterations" in data:
        cfg.iterations = _int(data["iterations"], "iterations", 20)
    if "threads" in data:
        cfg.threads = _int(data["threads"], "threads", 0)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        cfg.output_dir = data["output_dir"]
    if "capacity" in data:
        cap = data["capacity"]
        _require_keys(cap, {"cylinders", "geodesic_classes"}, "capacity")
        if "cylinders" in cap:
            cfg.cylinder_capacity = _int(cap["cylinders"], "capacity cylinders", 100)
        if "geodesic_classes" in cap:
            cfg.geodesic_capacity = _int(cap["geodesic_classes"],
                                         "capacity geodesic_classes", 1)
    if "tolerances" in data:
        tol = data["tolerances"]
        _require_keys(tol, {"rpf", "dimension"}, "tolerances")
        if "rpf" in tol:
            cfg.rpf_tol = _finite(tol["rpf"], "tolerances rpf")
        if "dimension" in tol:
            cfg.dimension_tol = _finite(tol["dimension"], "tolerances dimension")
    if "grids" in data:
        g = data["grids"]
        _require_keys(g, {"pressure_s", "gap_b", "gap_k", "stability_a",
                          "stability_b", "stability_k", "geodesic_T",
                          "correlation_t"}, "grids")
        grids = cfg.grids
        if "pressure_s" in g:
            grids.pressure_s = _range_spec(g["pressure_s"], "grids pressure_s")
        if "gap_b" in g:
            grids.gap_b = _float_list(g["gap_b"], "grids gap_b")
        if "gap_k" in g:
            grids.gap_k = _int_list(g["gap_k"], "grids gap_k")
        if "stability_a" in g:
            grids.stability_a = _float_list(g["stability_a"], "grids stability_a")
        if "stability_b" in g:
            grids.stability_b = _finite(g["stability_b"], "grids stability_b")
        if "stability_k" in g:
            grids.stability_k = _int(g["stability_k"], "grids stability_k")
        if "geodesic_T" in g:
            grids.geodesic_T = _float_list(g["geodesic_T"], "grids geodesic_T")
        if "correlation_t" in g:
            grids.correlation_t = _range_spec(
                g["correlation_t"], "grids correlation_t", ("min", "max", "step"))
    if "ncp" in data:
        n = data["ncp"]
        _require_keys(n, {"epsilons", "directions", "points", "word_length",
                          "centers"}, "ncp")
        if "epsilons" in n:
            cfg.ncp.epsilons = _float_list(n["epsilons"], "ncp epsilons")
        if "directions" in n:
            cfg.ncp.directions = _int(n["directions"], "ncp directions", 1)
        if "points" in n:
            cfg.ncp.points = _int(n["points"], "ncp points", 100)
        if "word_length" in n:
            cfg.ncp.word_length = _int(n["word_length"], "ncp word_length", 1)
        if "centers" in n:
            cfg.ncp.centers = _int(n["centers"], "ncp centers", 1)
    if "lnic" in data:
        l = data["lnic"]
        _require_keys(l, {"word_length", "base_points", "omegas"}, "lnic")
        if "word_length" in l:
            cfg.lnic.word_length = _int(l["word_length"], "lnic word_length", 2)
        if "base_points" in l:
            cfg.lnic.base_points = _int(l["base_points"], "lnic base_points", 1)
        if "omegas" in l:
            cfg.lnic.omegas = _int(l["omegas"], "lnic omegas", 2)
    if "correlation" in data:
        c = data["correlation"]
        _require_keys(c, {"xi", "k_terms", "character", "coefficient", "profile"},
                      "correlation")
        if "xi" in c:
            cfg.correlation.xi = _finite(c["xi"], "correlation xi")
        if "k_terms" in c:
            cfg.correlation.k_terms = _int(c["k_terms"], "correlation k_terms", 10)
        if "character" in c:
            cfg.correlation.character = _int(c["character"], "correlation character")
        if "coefficient" in c:
            cfg.correlation.coefficient = _complex_pair(
                c["coefficient"], "correlation coefficient")
        if "profile" in c:
            if c["profile"] not in ("bump", "flat"):
                raise ConfigError("correlation profile must be 'bump' or 'flat'")
            cfg.correlation.profile = c["profile"]
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from None
    return config_from_dict(data)
