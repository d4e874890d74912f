"""The positive dyadic operator, its formal adjoint and the bilinear embedding form."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .lattice import Lattice, Measure, StructuralError, as_function, check_same_lattice, integrals

__all__ = [
    "as_coefficients",
    "apply_T",
    "apply_T_adjoint",
    "bilinear_form",
    "pairing",
]


def as_coefficients(lattice: Lattice, alpha) -> np.ndarray:
    """Dense per-cube coefficient array from an array or a sparse ``{cube: value}`` mapping.

    Cubes absent from a mapping get 0.  Negative or non-finite coefficients are rejected.
    """
    if isinstance(alpha, Mapping):
        a = np.zeros(lattice.n_cubes)
        for cube, v in alpha.items():
            a[lattice.index(cube)] = float(v)
    else:
        a = np.array(alpha, dtype=float)
        if a.shape != (lattice.n_cubes,):
            raise StructuralError(f"expected {lattice.n_cubes} coefficients, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError("coefficients must be finite and nonnegative")
    return a


def _apply(alpha: np.ndarray, m: Measure, f) -> np.ndarray:
    lat = m.lattice
    alpha = as_coefficients(lat, alpha)
    ints = integrals(m, f)
    weighted = ints * alpha.reshape((-1,) + (1,) * (ints.ndim - 1))
    return lat.cubes_to_atoms(lat.downward(weighted))


def apply_T(alpha, mu: Measure, f) -> np.ndarray:
    """``T f(x) = Σ_{I ∋ x} alpha_I (∫_I f dmu)``.

    ``f`` may carry a trailing batch axis (atoms x k).
    """
    return _apply(alpha, mu, f)


def apply_T_adjoint(alpha, nu: Measure, g) -> np.ndarray:
    """Formal adjoint: same kernel with ``nu`` integrating ``g``."""
    return _apply(alpha, nu, g)


def pairing(m: Measure, f, g) -> float:
    """``∫ f g dm``."""
    f = as_function(m.lattice, f)
    g = as_function(m.lattice, g)
    return float(np.sum(f * g * m.atom_mass))


def bilinear_form(alpha, mu: Measure, nu: Measure, f, g) -> float:
    """``Σ_I alpha_I |∫_I f dmu| |∫_I g dnu|``."""
    lat = check_same_lattice(mu, nu)
    alpha = as_coefficients(lat, alpha)
    return float(np.sum(alpha * np.abs(integrals(mu, f)) * np.abs(integrals(nu, g))))
