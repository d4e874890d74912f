"""Random instances and the JSON instance format.

Instance file::

    {"depth": 2, "arity": 2, "mu": [...], "nu": [...],
     "alpha": {"0:0": 0.5, "1:1": 0.25}, "f": [...], "g": [...]}

``arity`` is an int or a per-level list; cubes missing from ``alpha`` get 0.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .lattice import ExponentPair, Lattice, Measure, as_function, build_lattice
from .operator import as_coefficients
from .testing_conditions import testing_report

__all__ = [
    "MEASURE_MODELS",
    "ALPHA_MODELS",
    "FUNCTION_MODELS",
    "InstanceSpec",
    "Instance",
    "generate_instance",
    "load_instance",
    "instance_from_dict",
    "InstanceFormatError",
]

MEASURE_MODELS = ("uniform", "log-uniform", "sparse")
ALPHA_MODELS = ("dense", "sparse", "normalized")
FUNCTION_MODELS = ("random", "power-law", "indicator")


@dataclass(frozen=True)
class InstanceSpec:
    depth: int = 3
    arity: int | tuple[int, ...] = 2
    seed: int = 0
    measure_model: str = "log-uniform"
    zero_prob: float = 0.2
    alpha_model: str = "dense"
    alpha_density: float = 0.3
    normalize: bool = False
    normalize_p: float = 2.0
    function_model: str = "random"
    power: float = 1.5

    def __post_init__(self):
        if isinstance(self.depth, bool) or not isinstance(self.depth, (int, np.integer)) or self.depth < 0:
            raise ValueError(f"depth must be a nonnegative integer, got {self.depth!r}")
        if self.measure_model not in MEASURE_MODELS:
            raise ValueError(f"measure_model must be one of {MEASURE_MODELS}, got {self.measure_model!r}")
        if self.alpha_model not in ALPHA_MODELS:
            raise ValueError(f"alpha_model must be one of {ALPHA_MODELS}, got {self.alpha_model!r}")
        if self.function_model not in FUNCTION_MODELS:
            raise ValueError(f"function_model must be one of {FUNCTION_MODELS}, got {self.function_model!r}")
        if not 0.0 <= self.zero_prob <= 0.3:
            raise ValueError("zero_prob must lie in [0, 0.3]")
        if not 0.0 < self.alpha_density <= 1.0:
            raise ValueError("alpha_density must lie in (0, 1]")
        if not self.power > 0:
            raise ValueError("power must be positive")
        ExponentPair(self.normalize_p)
        if not isinstance(self.arity, (int, np.integer)):
            object.__setattr__(self, "arity", tuple(int(a) for a in self.arity))

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["arity"], tuple):
            d["arity"] = list(d["arity"])
        return d


@dataclass
class Instance:
    lattice: Lattice
    mu: Measure
    nu: Measure
    alpha: np.ndarray
    f: np.ndarray
    g: np.ndarray
    arity: int | list[int] = 2
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        lat = self.lattice
        return {
            "depth": lat.depth,
            "arity": self.arity,
            "mu": self.mu.atom_mass.tolist(),
            "nu": self.nu.atom_mass.tolist(),
            "alpha": {lat.cube_id(i): float(v) for i, v in enumerate(self.alpha) if v != 0},
            "f": self.f.tolist(),
            "g": self.g.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _masses(rng: np.random.Generator, n: int, spec: InstanceSpec) -> np.ndarray:
    if spec.measure_model == "uniform":
        return rng.uniform(0.0, 1.0, n)
    m = 10.0 ** rng.uniform(-3.0, 3.0, n)
    if spec.measure_model == "sparse":
        zero = rng.random(n) < spec.zero_prob
        m[zero] = 0.0
    return m


def _function(rng: np.random.Generator, lat: Lattice, spec: InstanceSpec) -> np.ndarray:
    n = lat.n_atoms
    if spec.function_model == "random":
        return rng.uniform(0.0, 1.0, n)
    if spec.function_model == "indicator":
        i = int(rng.integers(lat.n_cubes))
        out = np.zeros(n)
        out[lat.lo[i]:lat.hi[i]] = 1.0
        return out
    # power-law concentration around a random atom: the value at x decays
    # like (atoms in the smallest cube holding x and the centre)^(-power)
    centre = int(rng.integers(n))
    size = np.full(n, float(n))
    for c in lat.ancestors(int(lat.leaf_cube[centre]))[::-1]:
        size[lat.lo[c]:lat.hi[c]] = lat.hi[c] - lat.lo[c]
    return size ** (-spec.power) * rng.uniform(0.5, 1.0, n)


def generate_instance(spec: InstanceSpec) -> Instance:
    """Deterministic random instance; the same InstanceSpec always gives the same data."""
    arity = spec.arity if isinstance(spec.arity, (int, np.integer)) else list(spec.arity)
    lat = build_lattice(spec.depth, arity)
    rng = np.random.default_rng(spec.seed)
    mu = Measure(lat, _masses(rng, lat.n_atoms, spec))
    nu = Measure(lat, _masses(rng, lat.n_atoms, spec))
    alpha = rng.uniform(0.0, 1.0, lat.n_cubes)
    if spec.alpha_model == "sparse":
        alpha[rng.random(lat.n_cubes) >= spec.alpha_density] = 0.0
    f = _function(rng, lat, spec)
    g = _function(rng, lat, spec)
    meta = {"spec": spec.to_dict()}
    if spec.normalize or spec.alpha_model == "normalized":
        c2 = testing_report(alpha, mu, nu, ExponentPair(spec.normalize_p)).c2
        if c2 > 0:
            alpha = alpha / c2
        meta["normalized_by"] = c2
    return Instance(lat, mu, nu, alpha, f, g, arity, meta)


class InstanceFormatError(ValueError):
    """An instance document is malformed."""


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance must be a JSON object")
    missing = [k for k in ("depth", "mu", "nu") if k not in doc]
    if missing:
        raise InstanceFormatError(f"missing keys: {', '.join(missing)}")
    try:
        arity = doc.get("arity", 2)
        lat = build_lattice(int(doc["depth"]), arity)
        mu = Measure(lat, doc["mu"])
        nu = Measure(lat, doc["nu"])
        alpha = as_coefficients(lat, doc.get("alpha", {}))
        f = as_function(lat, doc.get("f", np.ones(lat.n_atoms)))
        g = as_function(lat, doc.get("g", np.ones(lat.n_atoms)))
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(str(exc)) from exc
    return Instance(lat, mu, nu, alpha, np.array(f), np.array(g), arity)


def load_instance(path: str | Path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)
