"""Stopping cubes, corona pieces and a numeric replay of the half-sum bound.

Given a family ``L`` of cubes and ``f >= 0``, the stopping children of a cube
``J`` are the maximal strict sub-cubes ``I`` in ``L`` whose ``mu``-average of
``f`` is at least twice that of ``J``.  Starting from the maximal cubes of
``L`` and recursing gives the stopping family; the corona piece of ``J`` is
everything in ``L`` below ``J`` that is not below one of its stopping
children.

:func:`proposition_certificate` evaluates each step of the estimate

    Σ_{I∈L} α_I ∫_I f dμ ∫_I g dν  <=  A ‖f‖_p ‖g‖_p'  +  B ‖f‖_p^p,
    A = 2^{1+1/p} p',  B = 4 p'^p

on concrete data and records whether every intermediate inequality holds.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import (
    ExponentPair,
    Lattice,
    Measure,
    StructuralError,
    as_function,
    averages,
    check_same_lattice,
    integrals,
    weighted_norm,
)
from .operator import as_coefficients
from .testing_conditions import local_testing_ratios

__all__ = [
    "Corona",
    "CoronaProperties",
    "CertificateTrace",
    "as_cube_set",
    "split_condition",
    "build_corona",
    "verify_corona_properties",
    "compute_F",
    "proposition_constants",
    "proposition_certificate",
]

REL = 1e-9


def _leq(lhs: float, rhs: float, rel: float = REL) -> bool:
    return bool(lhs <= rhs + rel * max(abs(lhs), abs(rhs)))


def as_cube_set(lattice: Lattice, cubes: Iterable[int | str] | None) -> frozenset[int]:
    """Cube indices from ids or indices; ``None`` means every cube."""
    if cubes is None:
        return frozenset(range(lattice.n_cubes))
    return frozenset(lattice.index(c) for c in cubes)


@dataclass
class Corona:
    lattice: Lattice
    family: frozenset[int]
    generations: list[list[int]]
    stopping_children: dict[int, list[int]]
    corona_piece: dict[int, list[int]]
    stopped_region: dict[int, np.ndarray]  # boolean atom mask of G(J)

    @property
    def stopping_cubes(self) -> list[int]:
        return [j for gen in self.generations for j in gen]

    def to_dict(self) -> dict:
        ids = self.lattice.cube_id
        return {
            "generations": [[ids(j) for j in gen] for gen in self.generations],
            "stopping_children": {ids(j): [ids(i) for i in ch] for j, ch in self.stopping_children.items()},
            "corona_piece": {ids(j): [ids(i) for i in pc] for j, pc in self.corona_piece.items()},
        }

    def tree_lines(self) -> list[str]:
        """Indented listing of the stopping cubes, one line per cube."""
        ids = self.lattice.cube_id
        lines: list[str] = []

        def walk(j: int, depth: int) -> None:
            lines.append(f"{'  ' * depth}{ids(j)}  piece={len(self.corona_piece[j])}")
            for i in self.stopping_children[j]:
                walk(i, depth + 1)

        for j in self.generations[0] if self.generations else []:
            walk(j, 0)
        return lines


def build_corona(lat: Lattice, L, mu: Measure, f) -> Corona:
    """Stopping-cube construction for ``(mu, f)`` on the family ``L``.

    Selection uses ``>=``.  When ``∫_J f dmu = 0`` the cube has no stopping
    children.
    """
    if mu.lattice is not lat:
        raise StructuralError("measure and lattice do not match")
    f = as_function(lat, f)
    if np.any(f < 0):
        raise ValueError("stopping construction needs f >= 0")
    fam = as_cube_set(lat, L)
    if not fam:
        raise ValueError("the cube family L is empty")
    avg = averages(mu, f)
    ints = integrals(mu, f)

    in_fam = np.zeros(lat.n_cubes, dtype=bool)
    in_fam[list(fam)] = True
    # maximal members of L: no strict ancestor in L
    covered = lat.downward(in_fam.astype(float)) - in_fam
    first = sorted(int(i) for i in np.flatnonzero(in_fam & (covered == 0)))

    children: dict[int, list[int]] = {}
    pieces: dict[int, list[int]] = {}
    regions: dict[int, np.ndarray] = {}
    generations = [first]
    frontier = first
    while frontier:
        nxt: list[int] = []
        for j in frontier:
            stop: list[int] = []
            piece: list[int] = [j]
            if ints[j] > 0:
                thresh = 2.0 * avg[j]
                stack = list(reversed(lat.children(j)))
                while stack:
                    i = stack.pop()
                    if in_fam[i] and avg[i] >= thresh:
                        stop.append(i)
                        continue
                    if in_fam[i]:
                        piece.append(i)
                    stack.extend(reversed(lat.children(i)))
            else:
                piece.extend(i for i in lat.descendants(j)[1:] if in_fam[i])
            mask = np.zeros(lat.n_atoms, dtype=bool)
            for i in stop:
                mask[lat.lo[i]:lat.hi[i]] = True
            children[j] = sorted(stop)
            pieces[j] = sorted(piece)
            regions[j] = mask
            nxt.extend(stop)
        nxt.sort()
        if nxt:
            generations.append(nxt)
        frontier = nxt
    return Corona(lat, fam, generations, children, pieces, regions)


@dataclass
class CoronaProperties:
    average_bound: bool
    stopped_mass: bool
    carleson: bool
    partition: bool
    carleson_constant: float
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.average_bound and self.stopped_mass and self.carleson and self.partition

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def verify_corona_properties(c: Corona, mu: Measure, f) -> CoronaProperties:
    """Check the four structural facts about a corona; failures are listed, not raised."""
    lat = c.lattice
    avg = averages(mu, f)
    ints = integrals(mu, f)
    failures: list[str] = []
    ids = lat.cube_id

    avg_ok = True
    mass_ok = True
    for j in c.stopping_cubes:
        if ints[j] > 0:
            bad = [i for i in c.corona_piece[j] if not avg[i] < 2 * avg[j] * (1 + REL)]
            if bad:
                avg_ok = False
                failures.append(f"average bound fails in piece of {ids(j)} at {ids(bad[0])}")
        g_mass = float(np.dot(c.stopped_region[j], mu.atom_mass))
        if not _leq(g_mass, mu.cube_total[j] / 2):
            mass_ok = False
            failures.append(f"mu(G({ids(j)})) = {g_mass:g} > mu/2")

    w = np.zeros(lat.n_cubes)
    w[c.stopping_cubes] = mu.cube_total[c.stopping_cubes]
    sums = lat.upward(w)
    tot = mu.cube_total
    carl_ok = True
    ratios = np.divide(sums, tot, out=np.zeros_like(sums), where=tot > 0)
    if np.any((tot == 0) & (sums > 0)):
        carl_ok = False
        failures.append("positive stopping mass inside a zero-mass cube")
    const = float(ratios.max(initial=0.0))
    bad_j = np.flatnonzero(sums > 2 * tot + REL * np.maximum(sums, 2 * tot))
    if bad_j.size:
        carl_ok = False
        failures.append(f"Carleson condition with constant 2 fails at {ids(int(bad_j[0]))}")

    seen: list[int] = [i for j in c.stopping_cubes for i in c.corona_piece[j]]
    part_ok = len(seen) == len(set(seen)) and set(seen) == set(c.family)
    if not part_ok:
        failures.append("corona pieces do not partition L")
    return CoronaProperties(avg_ok, mass_ok, carl_ok, part_ok, const, failures)


def compute_F(c: Corona, J: int | str, alpha, mu: Measure, f) -> np.ndarray:
    """``F = Σ_{I in piece(J)} α_I (∫_I f dμ) 1_I`` as an atom function."""
    lat = c.lattice
    j = lat.index(J)
    if j not in c.corona_piece:
        raise ValueError(f"{lat.cube_id(j)} is not a stopping cube")
    a = as_coefficients(lat, alpha)
    piece = c.corona_piece[j]
    w = np.zeros(lat.n_cubes)
    w[piece] = a[piece] * integrals(mu, f)[piece]
    return lat.cubes_to_atoms(lat.downward(w))


def split_condition(mu: Measure, nu: Measure, f, g, e: ExponentPair) -> np.ndarray:
    """Per-cube flag: ``avg_mu(f)^p mu(I) >= avg_nu(g)^p' nu(I)`` (ties count as true).

    This is the splitting inequality written with averages, so zero-mass cubes
    contribute 0 on their side.
    """
    lhs = np.abs(averages(mu, f)) ** e.p * mu.cube_total
    rhs = np.abs(averages(nu, g)) ** e.p_conj * nu.cube_total
    return lhs >= rhs


def proposition_constants(e: ExponentPair) -> tuple[float, float]:
    p, q = e.p, e.p_conj
    return 2 ** (1 + 1 / p) * q, 4 * q**p


@dataclass
class CertificateTrace:
    p: float
    a_const: float
    b_const: float
    records: list[dict]
    totals: dict[str, float]
    checks: dict[str, bool]
    violations: list[str]
    pass_: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return d


def _close(a: float, b: float, rel: float) -> bool:
    return bool(abs(a - b) <= rel * max(abs(a), abs(b)))


def proposition_certificate(
    L,
    alpha,
    mu: Measure,
    nu: Measure,
    f,
    g,
    e: ExponentPair,
    rel: float = REL,
    identity_rel: float = 1e-12,
) -> CertificateTrace:
    """Replay the half-sum estimate on ``L`` step by step.

    Preconditions (checked, reported on failure with the offending cube):
    ``f, g >= 0``; the splitting inequality on every cube of ``L``; the
    testing inequality with constant 1 for ``alpha`` restricted to ``L``.
    """
    lat = check_same_lattice(mu, nu)
    f = as_function(lat, f)
    g = as_function(lat, g)
    a_full = as_coefficients(lat, alpha)
    fam = as_cube_set(lat, L)
    ids = lat.cube_id
    p, q = e.p, e.p_conj
    A, B = proposition_constants(e)
    violations: list[str] = []
    checks: dict[str, bool] = {}

    def check(name: str, ok: bool, where: str | None = None) -> None:
        checks[name] = checks.get(name, True) and bool(ok)
        if not ok:
            violations.append(name if where is None else f"{name} at {where}")

    a = np.zeros(lat.n_cubes)
    fam_list = sorted(fam)
    a[fam_list] = a_full[fam_list]

    if np.any(f < 0) or np.any(g < 0):
        check("nonnegative_inputs", False)
    split = split_condition(mu, nu, f, g, e)
    bad = [i for i in fam_list if not split[i]]
    check("precondition_split", not bad, ids(bad[0]) if bad else None)
    ratios = local_testing_ratios(a, mu, nu, p)
    worst = int(np.argmax(ratios))
    check("precondition_testing", _leq(float(ratios[worst]), 1.0, rel), ids(worst))

    norm_f = weighted_norm(f, mu.atom_mass, p)
    norm_g = weighted_norm(g, nu.atom_mass, q)
    ints_f = integrals(mu, f)
    ints_g = integrals(nu, g)
    avg_f = averages(mu, f)
    avg_g = averages(nu, g)
    lhs_total = float(np.sum(a * ints_f * ints_g))
    if not fam:
        return CertificateTrace(p, A, B, [], {"lhs": 0.0}, checks, violations, not violations)

    c = build_corona(lat, fam, mu, np.abs(f))
    records: list[dict] = []
    easy_cover = np.zeros(lat.n_atoms, dtype=int)
    sum_A = sum_B = 0.0
    sum_F_p = 0.0  # Σ ‖F_J‖_p^p
    sum_g_easy = 0.0  # Σ ‖g 1_{J \ G(J)}‖_p'^p'
    sum_top = 0.0  # Σ avg_J(f)^p μ(J)
    sum_children = 0.0  # Σ_J Σ_{I child of J} avg_I(f)^p μ(I)
    sum_hard_terms = 0.0  # Σ_J 2 avg_J μ(J)^{1/p} child_J^{1/p'}
    for j in c.stopping_cubes:
        F = compute_F(c, j, a, mu, f)
        G = c.stopped_region[j]
        inside = np.zeros(lat.n_atoms, dtype=bool)
        inside[lat.lo[j]:lat.hi[j]] = True
        easy = inside & ~G
        easy_cover += easy

        Fg = F * g * nu.atom_mass
        A_J = float(Fg[easy].sum())
        B_J = float(Fg[G].sum())
        piece_sum = float(np.sum(a[c.corona_piece[j]] * ints_f[c.corona_piece[j]] * ints_g[c.corona_piece[j]]))
        check("piece_integral_identity", _close(piece_sum, A_J + B_J, 1e-11) or piece_sum == A_J + B_J, ids(j))
        check("F_supported_on_J", not np.any(F[~inside]), ids(j))

        nF = weighted_norm(F, nu.atom_mass, p)
        top = float(avg_f[j] ** p * mu.cube_total[j])
        check("Lp_norm_F", _leq(nF**p, 2**p * top, rel), ids(j))

        g_easy = weighted_norm(np.where(easy, g, 0.0), nu.atom_mass, q)
        check("holder_easy_J", _leq(A_J, nF * g_easy, rel), ids(j))

        kids = c.stopping_children[j]
        g_tilde = np.zeros(lat.n_atoms)
        for i in kids:
            g_tilde[lat.lo[i]:lat.hi[i]] = avg_g[i]
        B_tilde = float(np.sum(F * g_tilde * nu.atom_mass))
        check("g_tilde_identity", B_J == B_tilde or _close(B_J, B_tilde, identity_rel), ids(j))

        n_gt_q = float(np.sum(avg_g[kids] ** q * nu.cube_total[kids])) if kids else 0.0
        child = float(np.sum(avg_f[kids] ** p * mu.cube_total[kids])) if kids else 0.0
        check("holder_hard_J", _leq(B_J, nF * n_gt_q ** (1 / q), rel), ids(j))
        hard_term = 2 * avg_f[j] * mu.cube_total[j] ** (1 / p)
        check("Lp_norm_F_hard_J", _leq(nF, hard_term, rel), ids(j))
        check("split_substitution_J", _leq(n_gt_q, child, rel), ids(j))

        sum_A += A_J
        sum_B += B_J
        sum_F_p += nF**p
        sum_g_easy += g_easy**q
        sum_top += top
        sum_children += child
        sum_hard_terms += hard_term * child ** (1 / q)
        records.append(
            {
                "cube": ids(j),
                "a_J": A_J,
                "b_J": B_J,
                "F_norm_p": nF,
                "F_bound": 2 * top ** (1 / p),
                "g_easy_norm": g_easy,
                "g_tilde_norm": n_gt_q ** (1 / q),
                "avg_f_J": float(avg_f[j]),
                "mu_J": float(mu.cube_total[j]),
                "mu_G_J": float(np.dot(G, mu.atom_mass)),
                "children_energy": child,
                "stopping_children": [ids(i) for i in kids],
            }
        )

    # easy part
    check("easy_regions_disjoint", bool(np.all(easy_cover <= 1)))
    check("disjoint_support_sum", _leq(sum_g_easy, norm_g**q, rel))
    holder_easy = sum_F_p ** (1 / p) * sum_g_easy ** (1 / q)
    check("holder_easy_sum", _leq(sum_A, holder_easy, rel))
    check("easy_via_F_bound", _leq(sum_F_p ** (1 / p) * norm_g, 2 * sum_top ** (1 / p) * norm_g, rel))
    check("carleson_embedding_stopping", _leq(sum_top, 2 * q**p * norm_f**p, rel))
    check("easy_total", _leq(sum_A, A * norm_f * norm_g, rel))

    # hard part
    check("hard_per_cube_sum", _leq(sum_B, sum_hard_terms, rel))
    later = [i for gen in c.generations[1:] for i in gen]
    later_energy = float(np.sum(avg_f[later] ** p * mu.cube_total[later])) if later else 0.0
    check("children_are_later_generations", _close(sum_children, later_energy, 1e-11) or sum_children == later_energy)
    check("holder_hard_sum", _leq(sum_hard_terms, 2 * sum_top ** (1 / p) * sum_children ** (1 / q), rel))
    check("generation_telescope", _leq(sum_children, sum_top, rel))
    check("hard_total", _leq(sum_B, 2 * sum_top, rel) and _leq(sum_B, B * norm_f**p, rel))

    check("decomposition_identity", _close(lhs_total, sum_A + sum_B, 1e-11) or lhs_total == sum_A + sum_B)
    bound = A * norm_f * norm_g + B * norm_f**p
    check("proposition_bound", _leq(lhs_total, bound, rel))

    totals = {
        "lhs": lhs_total,
        "sum_a": sum_A,
        "sum_b": sum_B,
        "norm_f": norm_f,
        "norm_g": norm_g,
        "stopping_energy": sum_top,
        "children_energy": sum_children,
        "bound": bound,
        "easy_bound": A * norm_f * norm_g,
        "hard_bound": B * norm_f**p,
    }
    return CertificateTrace(p, A, B, records, totals, checks, violations, not violations)
