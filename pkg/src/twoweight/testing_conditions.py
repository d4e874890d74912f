"""Best constants in the indicator-tested (Sawyer-type) conditions."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .lattice import ExponentPair, Lattice, Measure, check_same_lattice
from .operator import as_coefficients

__all__ = [
    "TestingReport",
    "local_testing_ratios",
    "testing_constant_forward",
    "testing_constant_dual",
    "testing_report",
]


@dataclass(frozen=True)
class TestingReport:
    __test__ = False

    c2_forward: float
    c2_dual: float
    c2: float
    worst_cube_forward: str | None
    worst_cube_dual: str | None

    def to_dict(self) -> dict:
        return asdict(self)


def local_testing_ratios(alpha: np.ndarray, outer: Measure, inner: Measure, q: float) -> np.ndarray:
    """For every cube ``I0``: ``∫_{I0} (Σ_{I ⊆ I0} alpha_I outer(I) 1_I)^q d inner / outer(I0)``.

    Cubes with ``outer(I0) = 0`` get 0: every term of their inner sum carries a
    factor ``outer(I) = 0``.  The inner sums are rebuilt from scratch for each
    starting level, so no partial sums are differenced.
    """
    lat: Lattice = outer.lattice
    weights = alpha * outer.cube_total
    out = np.zeros(lat.n_cubes)
    leaf_level = lat.level[lat.leaf_cube]
    for k in range(lat.depth + 1):
        s, e = lat.level_blocks[k]
        path = lat.downward(weights, start_level=k)
        atom_vals = path[lat.leaf_cube]
        integrand = np.where(leaf_level >= k, atom_vals**q * inner.atom_mass, 0.0)
        # cubes of one level cover disjoint, increasing atom ranges
        sums = np.add.reduceat(integrand, lat.lo[s:e])
        tot = outer.cube_total[s:e]
        np.divide(sums, tot, out=out[s:e], where=tot > 0)
    return out


def _best(ratios: np.ndarray, q: float, lat: Lattice) -> tuple[float, str | None]:
    if not np.any(ratios > 0):
        return 0.0, None
    i = int(np.argmax(ratios))
    return float(ratios[i] ** (1.0 / q)), lat.cube_id(i)


def testing_constant_forward(alpha, mu: Measure, nu: Measure, e: ExponentPair) -> tuple[float, str | None]:
    """Smallest ``C`` with ``∫_{I0} (Σ_{I⊆I0} α_I μ(I) 1_I)^p dν ≤ C^p μ(I0)`` for all cubes, and a witness."""
    lat = check_same_lattice(mu, nu)
    a = as_coefficients(lat, alpha)
    return _best(local_testing_ratios(a, mu, nu, e.p), e.p, lat)


def testing_constant_dual(alpha, mu: Measure, nu: Measure, e: ExponentPair) -> tuple[float, str | None]:
    """Same as the forward constant with the roles of (μ, p) and (ν, p′) exchanged."""
    lat = check_same_lattice(mu, nu)
    a = as_coefficients(lat, alpha)
    return _best(local_testing_ratios(a, nu, mu, e.p_conj), e.p_conj, lat)


def testing_report(alpha, mu: Measure, nu: Measure, e: ExponentPair) -> TestingReport:
    cf, wf = testing_constant_forward(alpha, mu, nu, e)
    cd, wd = testing_constant_dual(alpha, mu, nu, e)
    return TestingReport(cf, cd, max(cf, cd), wf, wd)
