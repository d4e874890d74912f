"""Embedding constant estimates and the two-sided comparison with the testing constant.

Two independent routes to the best constant in the bilinear embedding:

* :func:`exact_norm_p2` builds the dense kernel of the operator from lowest
  common ancestors of atom pairs and takes its largest singular value.  Only
  meaningful for ``p = 2``.
* :func:`norm_lower_bound` runs batched alternating maximization of the
  bilinear form over the nonnegative unit balls, for any ``p``.  It only ever
  reports values attained by concrete functions, so it is a lower bound.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse.linalg import svds

from .lattice import ExponentPair, Lattice, Measure, check_same_lattice
from .operator import apply_T, apply_T_adjoint, as_coefficients
from .testing_conditions import testing_report

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_ATOM_CAP",
    "ResourceLimitError",
    "SandwichReport",
    "constant_k",
    "lca_kernel",
    "exact_norm_p2",
    "norm_lower_bound",
    "theorem_sandwich_check",
]

DEFAULT_ATOM_CAP = 4096
_DENSE_SVD_LIMIT = 512


class ResourceLimitError(RuntimeError):
    """The instance has more atoms than the configured dense-kernel cap."""


def constant_k(p: float) -> float:
    """Upper constant ``K(p)`` in ``C1 <= K(p) C2``.

    Sum of the half-bound ``2^{1+1/p} p' + 4 p'^p`` and the same expression
    with ``p`` and ``p'`` exchanged.
    """
    e = ExponentPair(p)
    p, q = e.p, e.p_conj
    return 2 ** (1 + 1 / p) * q + 4 * q**p + 2 ** (1 + 1 / q) * p + 4 * p**q


def lca_kernel(alpha, lattice: Lattice) -> np.ndarray:
    """``B[j, k] = Σ_{I ⊇ LCA(j, k)} alpha_I`` as a dense atoms x atoms matrix."""
    a = as_coefficients(lattice, alpha)
    beta = lattice.downward(a)
    anc = lattice.atom_membership()
    B = np.full((lattice.n_atoms, lattice.n_atoms), beta[0])
    # deepest level at which the two atoms still share a cube wins
    for k in range(1, lattice.depth + 1):
        row = anc[k]
        same = (row[:, None] == row[None, :]) & (row[:, None] >= 0)
        if not same.any():
            break
        B = np.where(same, beta[np.maximum(row, 0)][:, None], B)
    return B


def exact_norm_p2(alpha, mu: Measure, nu: Measure, cap: int = DEFAULT_ATOM_CAP) -> float:
    """Operator norm from ``L^2(mu)`` to ``L^2(nu)``.

    Largest singular value of ``diag(sqrt nu) B diag(sqrt mu)`` with ``B`` the
    LCA kernel.  Dense SVD for small instances, ARPACK above that.
    """
    lat = check_same_lattice(mu, nu)
    if lat.n_atoms > cap:
        raise ResourceLimitError(f"{lat.n_atoms} atoms exceeds the dense-kernel cap {cap}")
    S = lca_kernel(alpha, lat)
    S *= np.sqrt(nu.atom_mass)[:, None]
    S *= np.sqrt(mu.atom_mass)[None, :]
    if not np.any(S):
        return 0.0
    if lat.n_atoms <= _DENSE_SVD_LIMIT:
        return float(np.linalg.svd(S, compute_uv=False)[0])
    v0 = np.ones(lat.n_atoms)
    return float(svds(S, k=1, tol=1e-12, v0=v0, return_singular_vectors=False)[0])


def _col_norms(m: Measure, F: np.ndarray, q: float) -> np.ndarray:
    return (np.abs(F) ** q * m.atom_mass[:, None]).sum(axis=0) ** (1.0 / q)


def _normalise(m: Measure, F: np.ndarray, q: float) -> np.ndarray:
    n = _col_norms(m, F, q)
    return np.divide(F, n, out=np.zeros_like(F), where=n > 0)


def norm_lower_bound(
    alpha,
    mu: Measure,
    nu: Measure,
    e: ExponentPair,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 20000,
    rtol: float = 1e-10,
) -> float:
    """Best value of ``Σ α_I ∫_I f dμ ∫_I g dν / (‖f‖_p ‖g‖_p')`` found by alternating maximization.

    Starts from the indicator of every cube (as ``f`` and as ``g``) and from
    ``restarts`` random nonnegative functions; all starts are iterated as one
    batch.  For fixed ``f`` the optimal ``g`` is ``(T f)^{p-1}`` and the value
    is ``‖T f‖_p / ‖f‖_p``; for fixed ``g`` symmetrically with the adjoint.
    """
    lat = check_same_lattice(mu, nu)
    a = as_coefficients(lat, alpha)
    p, q = e.p, e.p_conj
    if not np.any(a) or mu.total == 0 or nu.total == 0:
        return 0.0

    n = lat.n_atoms
    ind = np.zeros((n, lat.n_cubes))
    for i in range(lat.n_cubes):
        ind[lat.lo[i]:lat.hi[i], i] = 1.0
    rng = np.random.default_rng(seed)
    # one row per restart, so a larger ``restarts`` only appends starts
    rand = rng.random((max(int(restarts), 0), n)).T

    # f-side starts: indicators and random; g-side starts: indicators,
    # turned into f-side starts by one adjoint half-step.
    F = np.concatenate([ind, rand], axis=1)
    Gs = _normalise(nu, ind, q)
    H = apply_T_adjoint(a, nu, Gs)
    best = float(np.max(_col_norms(mu, H, q), initial=0.0))
    F = np.concatenate([F, np.maximum(H, 0.0) ** (q - 1.0)], axis=1)

    prev = np.full(F.shape[1], -1.0)
    for it in range(max_iter):
        F = _normalise(mu, F, p)
        TF = apply_T(a, mu, F)
        val_f = _col_norms(nu, TF, p)
        G = _normalise(nu, np.maximum(TF, 0.0) ** (p - 1.0), q)
        H = apply_T_adjoint(a, nu, G)
        val_g = _col_norms(mu, H, q)
        vals = np.maximum(val_f, val_g)
        best = max(best, float(vals.max(initial=0.0)))

        done = (vals == 0) | (np.abs(vals - prev) <= rtol * vals)
        keep = ~done
        if not keep.any():
            break
        F = np.maximum(H[:, keep], 0.0) ** (q - 1.0)
        prev = vals[keep]
    else:
        logger.warning("alternating maximization hit max_iter=%d", max_iter)
    return best


@dataclass(frozen=True)
class SandwichReport:
    p: float
    c2: float
    c1_lower: float | None
    c1_exact_p2: float | None
    k_of_p: float
    holds: bool
    lower_holds: bool
    upper_holds: bool

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def c1(self) -> float:
        return self.c1_exact_p2 if self.c1_exact_p2 is not None else self.c1_lower


def _leq(lhs: float, rhs: float, rel: float) -> bool:
    return lhs <= rhs + rel * max(abs(lhs), abs(rhs))


def theorem_sandwich_check(
    alpha,
    mu: Measure,
    nu: Measure,
    e: ExponentPair,
    restarts: int = 8,
    seed: int = 0,
    cap: int = DEFAULT_ATOM_CAP,
    rel: float = 1e-9,
    lower_bound: bool = True,
) -> SandwichReport:
    """Evaluate ``C2 <= C1 <= K(p) C2`` on one instance.

    At ``p = 2`` the exact norm is used when the instance fits under ``cap``;
    otherwise the alternating-maximization lower bound stands in for ``C1``.
    ``lower_bound=False`` skips the iteration when the exact value is available.
    """
    c2 = testing_report(alpha, mu, nu, e).c2
    exact = None
    if e.p == 2.0 and mu.lattice.n_atoms <= cap:
        exact = exact_norm_p2(alpha, mu, nu, cap=cap)
    if lower_bound or exact is None:
        c1_lower = norm_lower_bound(alpha, mu, nu, e, restarts=restarts, seed=seed)
    else:
        c1_lower = None
    c1 = exact if exact is not None else c1_lower
    k = constant_k(e.p)
    lower = _leq(c2, c1, rel)
    upper = _leq(c1, k * c2, rel)
    return SandwichReport(e.p, c2, c1_lower, exact, k, lower and upper, lower, upper)
