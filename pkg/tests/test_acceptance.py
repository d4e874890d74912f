"""Acceptance criteria, each run at its stated tolerance.

Every test prints exactly one ``ACCEPTANCE <n> PASS|FAIL`` line; the lines
are repeated in the terminal summary (see ``conftest.py``).
"""

import time

import numpy as np
import pytest

from twoweight.corona import (
    build_corona,
    proposition_certificate,
    proposition_constants,
    split_condition,
    verify_corona_properties,
)
from twoweight.instances import generate_instance
from twoweight.lattice import ExponentPair, Measure, build_lattice, weighted_norm
from twoweight.maximal import carleson_constant, carleson_embed_check, level_set_chain, verify_maximal_bound
from twoweight.norm import constant_k, exact_norm_p2, norm_lower_bound, theorem_sandwich_check
from twoweight.operator import apply_T, apply_T_adjoint, bilinear_form, pairing
from twoweight.report import VerifyOptions, fuzz_specs, run_fuzz
from twoweight.testing_conditions import local_testing_ratios, testing_report

pytestmark = pytest.mark.acceptance

MASTER_SEED = 2024
COUNT = 500
P_LIST = (1.5, 2.0, 3.0)
RESULTS: list[str] = []


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus():
    specs = fuzz_specs(COUNT, 6, MASTER_SEED, arity=2)
    return [generate_instance(s) for s in specs]


def admissible(inst, e):
    """Cubes satisfying the splitting inequality, alpha normalised to testing constant 1 on them."""
    split = split_condition(inst.mu, inst.nu, inst.f, inst.g, e)
    fam = [int(i) for i in np.flatnonzero(split)]
    a = np.zeros_like(inst.alpha)
    a[fam] = inst.alpha[fam]
    c = local_testing_ratios(a, inst.mu, inst.nu, e.p).max(initial=0.0) ** (1 / e.p)
    return fam, (a / c if c > 0 else a)


def test_1_sandwich_p2(corpus):
    models = {(i.meta["spec"]["measure_model"], i.meta["spec"]["alpha_model"]) for i in corpus}
    assert len(models) == 6 and all(i.lattice.depth <= 6 for i in corpus)
    t0 = time.perf_counter()
    bad = []
    for k, inst in enumerate(corpus):
        r = theorem_sandwich_check(inst.alpha, inst.mu, inst.nu, ExponentPair(2), lower_bound=False, rel=1e-9)
        if not r.holds:
            bad.append(k)
    elapsed = time.perf_counter() - t0
    record(
        1, "C2 <= C1 <= K(2) C2 at p=2",
        not bad and elapsed < 60.0,
        f"{COUNT} instances, {len(bad)} violations, {elapsed:.1f}s, K(2)={constant_k(2):.4f}",
    )


def test_2_proposition_bound(corpus):
    bad = []
    checked = 0
    for k, inst in enumerate(corpus):
        for p in P_LIST:
            e = ExponentPair(p)
            fam, a = admissible(inst, e)
            if not fam:
                continue
            checked += 1
            A, B = proposition_constants(e)
            lhs = bilinear_form(a, inst.mu, inst.nu, inst.f, inst.g)
            nf = weighted_norm(inst.f, inst.mu.atom_mass, e.p)
            ng = weighted_norm(inst.g, inst.nu.atom_mass, e.p_conj)
            rhs = A * nf * ng + B * nf**e.p
            if not lhs <= rhs * (1 + 1e-9):
                bad.append((k, p))
    record(2, "bilinear sum <= A |f||g| + B |f|^p", not bad and checked > 0, f"{checked} (instance, p) cases, {len(bad)} violations")


def test_3_certificate_replay(corpus):
    bad = []
    checked = 0
    for k, inst in enumerate(corpus):
        for p in P_LIST:
            e = ExponentPair(p)
            fam, a = admissible(inst, e)
            if not fam:
                continue
            checked += 1
            t = proposition_certificate(fam, a, inst.mu, inst.nu, inst.f, inst.g, e, rel=1e-9, identity_rel=1e-12)
            if not t.pass_:
                bad.append((k, p, t.violations[:3]))
    record(3, "intermediate inequalities replayed", not bad and checked > 0, f"{checked} certificates, {len(bad)} with violations")


def test_4_corona_invariants(corpus):
    bad = []
    for k, inst in enumerate(corpus):
        for p in P_LIST:
            fam, _ = admissible(inst, ExponentPair(p))
            for family in (None, fam or None):
                c = build_corona(inst.lattice, family, inst.mu, inst.f)
                props = verify_corona_properties(c, inst.mu, inst.f)
                if not (props.ok and props.carleson_constant <= 2 * (1 + 1e-9)):
                    bad.append(k)
    lat = build_lattice(2, 2)
    mu = Measure(lat, np.ones(4))
    f = np.array([8.0, 0.0, 0.0, 0.0])
    c = build_corona(lat, None, mu, f)
    gens = [[lat.cube_id(i) for i in g] for g in c.generations]
    stop_mass = float(np.dot(c.stopped_region[0], mu.atom_mass))
    w = np.zeros(lat.n_cubes)
    w[c.stopping_cubes] = mu.cube_total[c.stopping_cubes]
    cmc = float(lat.upward(w)[0])
    example = gens == [["0:0"], ["1:0"], ["2:0"]] and stop_mass == 2.0 and cmc == 7.0 and cmc <= 8.0
    record(
        4, "corona properties and equality instance",
        not bad and example,
        f"{len(bad)} failing coronas; generations {gens}, mu(G(root))={stop_mass:g}, CMC sum {cmc:g} <= 8",
    )


def test_5_oracle_equivalence(corpus, worked):
    small = [i for i in corpus if i.lattice.n_atoms <= 64][:100]
    assert len(small) == 100
    worst = 0.0
    for inst in small:
        exact = exact_norm_p2(inst.alpha, inst.mu, inst.nu)
        lower = norm_lower_bound(inst.alpha, inst.mu, inst.nu, ExponentPair(2), restarts=32, seed=0)
        if exact > 0:
            worst = max(worst, abs(exact - lower) / exact)
        elif lower != 0:
            worst = np.inf
    c1 = exact_norm_p2(worked.alpha, worked.mu, worked.nu)
    c2 = testing_report(worked.alpha, worked.mu, worked.nu, ExponentPair(2)).c2
    ok = worst <= 1e-6 and abs(c1 - 3.0202) <= 1e-3 and abs(c2 - 2.96332) <= 1e-3
    record(5, "exact p=2 norm vs alternating maximisation", ok, f"max rel gap {worst:.2e} over 100 instances; worked C1={c1:.5f}, C2={c2:.5f}")


def test_6_duality(corpus, worked):
    worst = 0.0
    for inst in corpus:
        b = bilinear_form(inst.alpha, inst.mu, inst.nu, inst.f, inst.g)
        fwd = pairing(inst.nu, apply_T(inst.alpha, inst.mu, inst.f), inst.g)
        adj = pairing(inst.mu, inst.f, apply_T_adjoint(inst.alpha, inst.nu, inst.g))
        scale = max(b, fwd, adj)
        if scale > 0:
            worst = max(worst, (max(b, fwd, adj) - min(b, fwd, adj)) / scale)
    w = (
        bilinear_form(worked.alpha, worked.mu, worked.nu, worked.f, worked.g),
        pairing(worked.nu, apply_T(worked.alpha, worked.mu, worked.f), worked.g),
        pairing(worked.mu, worked.f, apply_T_adjoint(worked.alpha, worked.nu, worked.g)),
    )
    ok = worst <= 1e-12 and all(abs(v - 22.0) <= 1e-12 * 22 for v in w)
    record(6, "bilinear form = <Tf, g> = <f, T*g>", ok, f"max rel spread {worst:.1e}; worked instance {w[0]:g}, {w[1]:g}, {w[2]:g}")


def test_7_maximal_carleson(corpus):
    bad = []
    for k, inst in enumerate(corpus):
        for p in P_LIST:
            e = ExponentPair(p)
            c = build_corona(inst.lattice, None, inst.mu, inst.f)
            w = np.zeros(inst.lattice.n_cubes)
            w[c.stopping_cubes] = inst.mu.cube_total[c.stopping_cubes]
            checks = (
                verify_maximal_bound(inst.mu, inst.f, e).holds,
                verify_maximal_bound(inst.nu, inst.g, e.dual()).holds,
                carleson_embed_check(w, inst.mu, inst.f, e).holds,
                carleson_embed_check(inst.mu.cube_total, inst.mu, inst.f, e).holds,
                level_set_chain(inst.mu.cube_total, inst.mu, inst.f, e).holds,
            )
            if not all(checks):
                bad.append((k, p))
    lat = build_lattice(2, 2)
    mu = Measure(lat, np.ones(4))
    r = carleson_embed_check(mu.cube_total, mu, [8.0, 0, 0, 0], ExponentPair(2))
    full = []
    for depth in range(0, 7):
        lat_d = build_lattice(depth, 2)
        m = Measure(lat_d, np.ones(lat_d.n_atoms))
        full.append(carleson_constant(m.cube_total, m)[0] == depth + 1)
    ok = not bad and r.lhs == 112.0 and r.bound == 768.0 and r.holds and all(full)
    record(
        7, "maximal bound p', embedding (p')^p C, C = D+1",
        ok,
        f"{len(bad)} violations; lhs {r.lhs:g} <= {r.bound:g}; D+1 exact for D=0..6: {all(full)}",
    )


def test_8_determinism():
    opts = VerifyOptions(restarts=2)

    def strip(rep):
        return [{k: v for k, v in r.items() if k != "timing"} for r in rep["instances"]]

    a = run_fuzz(60, 6, 7, list(P_LIST), opts, jobs=1)
    b = run_fuzz(60, 6, 7, list(P_LIST), opts, jobs=1)
    c = run_fuzz(60, 6, 7, list(P_LIST), opts, jobs=4)
    same = strip(a) == strip(b)
    parallel = strip(a) == strip(c)
    record(8, "repeatable and parallel-invariant fuzzing", same and parallel, f"repeat identical: {same}; jobs=4 identical: {parallel}")
