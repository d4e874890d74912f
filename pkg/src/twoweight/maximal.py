"""Dyadic maximal function, Carleson constants and the embedding inequality.

The embedding inequality is checked twice: directly, and through the
level-set chain

    Σ_{Q: avg_Q > λ} w_Q  <=  C μ(E_λ)  <=  C μ(M f > λ)

integrated against ``d(λ^p)``.  On a finite lattice the integrand is a step
function of ``λ`` that only jumps at the distinct values of ``|avg_Q f|``,
so the layer-cake integrals are finite sums.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .lattice import ExponentPair, Lattice, Measure, as_function, averages, weighted_norm

__all__ = [
    "as_weights",
    "maximal_function",
    "verify_maximal_bound",
    "carleson_constant",
    "carleson_embed_check",
    "level_set_cubes",
    "level_set_chain",
]

REL = 1e-9


def as_weights(lattice: Lattice, w) -> np.ndarray:
    if isinstance(w, dict):
        out = np.zeros(lattice.n_cubes)
        for cube, v in w.items():
            out[lattice.index(cube)] = float(v)
    else:
        out = np.array(w, dtype=float)
        if out.shape != (lattice.n_cubes,):
            raise ValueError(f"expected {lattice.n_cubes} weights, got shape {out.shape}")
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        raise ValueError("Carleson weights must be finite and nonnegative")
    return out


def maximal_function(mu: Measure, f) -> np.ndarray:
    """``M f(x) = max_{I ∋ x} |avg_I f|``; zero-mass cubes contribute 0."""
    lat = mu.lattice
    return lat.cubes_to_atoms(lat.downward_max(np.abs(averages(mu, f))))


@dataclass(frozen=True)
class MaximalCheck:
    ratio: float
    bound: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def verify_maximal_bound(mu: Measure, f, e: ExponentPair) -> MaximalCheck:
    """Ratio ``‖M f‖_p / ‖f‖_p`` against the bound ``p'``."""
    f = as_function(mu.lattice, f)
    p = e.p
    nf = weighted_norm(f, mu.atom_mass, p)
    if nf == 0:
        return MaximalCheck(0.0, e.p_conj, True)
    nm = weighted_norm(maximal_function(mu, f), mu.atom_mass, p)
    ratio = nm / nf
    return MaximalCheck(ratio, e.p_conj, bool(ratio <= e.p_conj + REL))


def carleson_constant(w, mu: Measure) -> tuple[float, str | None]:
    """Best ``C`` in ``Σ_{I ⊆ J} w_I <= C μ(J)`` and a cube attaining it.

    Returns ``inf`` when some zero-mass cube carries positive weight below it.
    """
    lat = mu.lattice
    sums = lat.upward(as_weights(lat, w))
    tot = mu.cube_total
    infinite = np.flatnonzero((tot == 0) & (sums > 0))
    if infinite.size:
        return math.inf, lat.cube_id(int(infinite[0]))
    ratios = np.divide(sums, tot, out=np.zeros_like(sums), where=tot > 0)
    if not np.any(ratios > 0):
        return 0.0, None
    i = int(np.argmax(ratios))
    return float(ratios[i]), lat.cube_id(i)


@dataclass(frozen=True)
class EmbeddingCheck:
    lhs: float
    C: float
    bound: float
    holds: bool
    vacuous: bool
    witness: str | None

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["C"]):
            d["C"] = d["bound"] = None
        return d


def carleson_embed_check(w, mu: Measure, f, e: ExponentPair) -> EmbeddingCheck:
    """``Σ_I avg_I(f)^p w_I <= p'^p C ‖f‖_p^p`` for ``f >= 0``."""
    lat = mu.lattice
    f = as_function(lat, f)
    if np.any(f < 0):
        raise ValueError("the embedding check needs f >= 0")
    w = as_weights(lat, w)
    lhs = float(np.sum(averages(mu, f) ** e.p * w))
    C, witness = carleson_constant(w, mu)
    if math.isinf(C):
        return EmbeddingCheck(lhs, C, math.inf, True, True, witness)
    bound = e.p_conj**e.p * C * float(np.dot(f**e.p, mu.atom_mass))
    holds = lhs <= bound + REL * max(lhs, bound)
    return EmbeddingCheck(lhs, C, bound, bool(holds), False, witness)


def level_set_cubes(mu: Measure, f, lam: float) -> list[int]:
    """Maximal cubes with ``|avg_Q f| > lam``, in breadth-first order."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return _maximal_above(mu.lattice, np.abs(averages(mu, f)), lam)


def _maximal_above(lat: Lattice, avg: np.ndarray, lam: float) -> list[int]:
    above = avg > lam
    # cubes above lambda whose ancestors are all below it
    hits = lat.downward(above.astype(float))
    return [int(i) for i in np.flatnonzero(above & (hits == 1))]


@dataclass(frozen=True)
class LevelSetChain:
    levels: int
    lhs: float
    lhs_layer_cake: float
    maximal_integral: float
    chain_holds: bool
    identity_holds: bool
    bound: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def level_set_chain(w, mu: Measure, f, e: ExponentPair) -> LevelSetChain:
    """Replay the maximal-function route to the embedding inequality.

    For every distinct positive value ``v_i`` of ``|avg_Q f|`` (sorted), on
    ``λ ∈ [v_{i-1}, v_i)`` the cubes with average above ``λ`` are those with
    average ``>= v_i``.  Checks, at every such level,
    ``Σ w_Q <= C μ(E_λ) <= C μ(M f > λ)``, then that the layer-cake sum equals
    the direct sum and is at most ``C ∫ (M f)^p dμ <= C p'^p ‖f‖_p^p``.
    """
    lat = mu.lattice
    w = as_weights(lat, w)
    f = as_function(lat, f)
    p = e.p
    avg = np.abs(averages(mu, f))
    C, _ = carleson_constant(w, mu)
    Mf = maximal_function(mu, f)
    lhs = float(np.sum(avg**p * w))
    maximal_integral = float(np.dot(Mf**p, mu.atom_mass))
    if math.isinf(C):
        return LevelSetChain(0, lhs, lhs, maximal_integral, True, True, math.inf, True)

    values = np.unique(avg[avg > 0])
    chain_ok = True
    layer = 0.0
    mass_layer = 0.0
    prev = 0.0
    for v in values:
        lam = prev if prev > 0 else v / 2
        cubes = _maximal_above(lat, avg, lam)
        E_mask = np.zeros(lat.n_atoms, dtype=bool)
        for q in cubes:
            E_mask[lat.lo[q]:lat.hi[q]] = True
        w_sum = float(w[avg > lam].sum())
        mu_E = float(np.dot(E_mask, mu.atom_mass))
        mu_M = float(np.dot(Mf > lam, mu.atom_mass))
        inside = bool(np.all(Mf[E_mask] > lam))
        chain_ok &= inside
        chain_ok &= w_sum <= C * mu_E * (1 + REL) + REL * w_sum
        chain_ok &= mu_E <= mu_M * (1 + REL)
        step = v**p - prev**p
        layer += step * w_sum
        mass_layer += step * mu_M
        prev = v
    identity = abs(layer - lhs) <= 1e-9 * max(layer, lhs) or layer == lhs
    mass_identity = abs(mass_layer - maximal_integral) <= 1e-9 * max(mass_layer, maximal_integral)
    bound = C * e.p_conj**p * float(np.dot(np.abs(f) ** p, mu.atom_mass))
    holds = (
        chain_ok
        and layer <= C * mass_layer * (1 + REL) + REL * layer
        and C * maximal_integral <= bound * (1 + REL) + REL * C * maximal_integral
    )
    return LevelSetChain(
        int(values.size), lhs, float(layer), maximal_integral, bool(chain_ok),
        bool(identity and (mass_identity or mass_layer == maximal_integral)), float(bound), bool(holds),
    )
