"""Run every check on an instance and collect the results into one report."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corona import (
    as_cube_set,
    build_corona,
    proposition_certificate,
    proposition_constants,
    split_condition,
    verify_corona_properties,
)
from .instances import FUNCTION_MODELS, MEASURE_MODELS, Instance, InstanceSpec, generate_instance
from .lattice import ExponentPair
from .maximal import carleson_constant, carleson_embed_check, level_set_chain, verify_maximal_bound
from .norm import DEFAULT_ATOM_CAP, theorem_sandwich_check
from .operator import bilinear_form
from .testing_conditions import local_testing_ratios, testing_report

__all__ = ["VerifyOptions", "run_verify", "fuzz_specs", "run_fuzz", "CSV_COLUMNS", "csv_rows", "write_csv"]

SECTIONS = ("testing", "sandwich", "certificate", "maximal", "carleson")
CSV_COLUMNS = ("seed", "p", "c2_forward", "c2_dual", "c2", "c1_lower", "c1_exact_p2", "ratio", "pass")


@dataclass(frozen=True)
class VerifyOptions:
    restarts: int = 8
    seed: int = 0
    cap: int = DEFAULT_ATOM_CAP
    lower_bound: bool = True
    rel: float = 1e-9


def _pkey(p: float) -> str:
    return repr(float(p))


def _restricted(alpha: np.ndarray, cubes) -> np.ndarray:
    out = np.zeros_like(alpha)
    idx = sorted(cubes)
    out[idx] = alpha[idx]
    return out


def _certificate_section(inst: Instance, e: ExponentPair, rel: float) -> dict:
    """Both halves of the splitting plus the assembly into the full sum."""
    lat, mu, nu = inst.lattice, inst.mu, inst.nu
    f, g = np.abs(inst.f), np.abs(inst.g)
    split = split_condition(mu, nu, f, g, e)
    f_half = {int(i) for i in np.flatnonzero(split)}
    g_half = set(range(lat.n_cubes)) - f_half

    out: dict = {}
    assembled = 0.0
    ok = True
    for name, half, (m1, m2, h1, h2, ee) in (
        ("f_half", f_half, (mu, nu, f, g, e)),
        ("g_half", g_half, (nu, mu, g, f, e.dual())),
    ):
        a = _restricted(inst.alpha, half)
        ratios = local_testing_ratios(a, m1, m2, ee.p)
        scale = float(ratios.max(initial=0.0) ** (1 / ee.p))
        entry = {"cubes": [lat.cube_id(i) for i in sorted(half)], "testing_constant": scale}
        if half and scale > 0:
            trace = proposition_certificate(half, a / scale, m1, m2, h1, h2, ee, rel=rel)
            c = build_corona(lat, as_cube_set(lat, half), m1, h1)
            props = verify_corona_properties(c, m1, h1)
            entry["trace"] = trace.to_dict()
            entry["corona"] = c.to_dict()
            entry["corona_properties"] = props.to_dict()
            entry["pass"] = trace.pass_ and props.ok
            assembled += scale * trace.totals["bound"]
        else:
            entry["pass"] = True
        ok &= entry["pass"]
        out[name] = entry

    # homogeneity: the two half-bounds add up to a bound for the whole sum
    total = bilinear_form(inst.alpha, mu, nu, f, g)
    A, B = proposition_constants(e)
    out["assembly"] = {"lhs": total, "rhs": assembled, "holds": bool(total <= assembled + rel * max(total, assembled))}
    out["constants"] = {"A": A, "B": B}
    out["pass"] = bool(ok and out["assembly"]["holds"])
    return out


def _carleson_section(inst: Instance, e: ExponentPair) -> dict:
    lat, mu = inst.lattice, inst.mu
    f = np.abs(inst.f)
    corona = build_corona(lat, None, mu, f)
    w_stop = np.zeros(lat.n_cubes)
    w_stop[corona.stopping_cubes] = mu.cube_total[corona.stopping_cubes]
    C_stop, witness = carleson_constant(w_stop, mu)
    stop_embed = carleson_embed_check(w_stop, mu, f, e)
    stop_chain = level_set_chain(w_stop, mu, f, e)
    full_embed = carleson_embed_check(mu.cube_total, mu, f, e)
    full_chain = level_set_chain(mu.cube_total, mu, f, e)
    ok = C_stop <= 2 * (1 + 1e-9) and stop_embed.holds and stop_chain.holds and full_embed.holds and full_chain.holds
    ok = ok and stop_chain.identity_holds and full_chain.identity_holds
    return {
        "stopping": {
            "carleson_constant": C_stop,
            "witness": witness,
            "embedding": stop_embed.to_dict(),
            "level_sets": stop_chain.to_dict(),
        },
        "full": {"embedding": full_embed.to_dict(), "level_sets": full_chain.to_dict()},
        "pass": bool(ok),
    }


def run_verify(inst: Instance, p_list, options: VerifyOptions = VerifyOptions(), echo: bool = True) -> dict:
    """All sections for every exponent; ``report["pass"]["all"]`` is their conjunction.

    Negative entries of ``f`` or ``g`` are replaced by absolute values for the
    certificate and embedding sections, which is where the bounds are
    stated for nonnegative functions.
    """
    report: dict = {"instance": inst.to_dict() if echo else None, "meta": inst.meta, "p": [float(p) for p in p_list]}
    for s in SECTIONS:
        report[s] = {}
    timing = {s: 0.0 for s in SECTIONS}
    flags = {s: True for s in SECTIONS}

    for p in p_list:
        e = ExponentPair(p)
        key = _pkey(e.p)

        t = time.perf_counter()
        tr = testing_report(inst.alpha, inst.mu, inst.nu, e)
        report["testing"][key] = tr.to_dict()
        timing["testing"] += time.perf_counter() - t

        t = time.perf_counter()
        sw = theorem_sandwich_check(
            inst.alpha, inst.mu, inst.nu, e,
            restarts=options.restarts, seed=options.seed, cap=options.cap,
            rel=options.rel, lower_bound=options.lower_bound,
        )
        report["sandwich"][key] = sw.to_dict()
        flags["sandwich"] &= sw.holds
        timing["sandwich"] += time.perf_counter() - t

        t = time.perf_counter()
        cert = _certificate_section(inst, e, options.rel)
        report["certificate"][key] = cert
        flags["certificate"] &= cert["pass"]
        timing["certificate"] += time.perf_counter() - t

        t = time.perf_counter()
        mf = verify_maximal_bound(inst.mu, inst.f, e)
        mg = verify_maximal_bound(inst.nu, inst.g, e.dual())
        report["maximal"][key] = {"f": mf.to_dict(), "g": mg.to_dict(), "pass": mf.holds and mg.holds}
        flags["maximal"] &= mf.holds and mg.holds
        timing["maximal"] += time.perf_counter() - t

        t = time.perf_counter()
        carl = _carleson_section(inst, e)
        report["carleson"][key] = carl
        flags["carleson"] &= carl["pass"]
        timing["carleson"] += time.perf_counter() - t

    flags = {k: bool(v) for k, v in flags.items()}
    flags["all"] = all(flags.values())
    report["pass"] = flags
    report["timing"] = timing
    return report


def fuzz_specs(count: int, max_depth: int, master_seed: int, arity=2) -> list[InstanceSpec]:
    """Instance specs derived from ``master_seed`` and the instance index alone.

    Models rotate with the index so every combination of measure and alpha
    model appears; depth and function model are drawn per instance.
    """
    specs = []
    for i in range(count):
        ss = np.random.SeedSequence([master_seed, i])
        rng = np.random.default_rng(ss)
        seed = int(ss.generate_state(1)[0])
        specs.append(
            InstanceSpec(
                depth=int(rng.integers(1, max_depth + 1)) if max_depth > 0 else 0,
                arity=arity,
                seed=seed,
                measure_model=MEASURE_MODELS[i % 3],
                zero_prob=float(rng.uniform(0.0, 0.3)),
                alpha_model=("dense", "sparse")[(i // 3) % 2],
                alpha_density=float(rng.uniform(0.1, 0.9)),
                function_model=FUNCTION_MODELS[int(rng.integers(3))],
            )
        )
    return specs


def _fuzz_one(args) -> dict:
    index, spec, p_list, options = args
    inst = generate_instance(spec)
    rep = run_verify(inst, p_list, options, echo=False)
    rows = []
    for p in p_list:
        key = _pkey(p)
        tr = rep["testing"][key]
        sw = rep["sandwich"][key]
        c1 = sw["c1_exact_p2"] if sw["c1_exact_p2"] is not None else sw["c1_lower"]
        ok = all(rep[s][key]["pass"] for s in ("certificate", "maximal", "carleson"))
        rows.append(
            {
                "seed": spec.seed,
                "p": float(p),
                "c2_forward": tr["c2_forward"],
                "c2_dual": tr["c2_dual"],
                "c2": tr["c2"],
                "c1_lower": sw["c1_lower"],
                "c1_exact_p2": sw["c1_exact_p2"],
                "ratio": (c1 / tr["c2"]) if tr["c2"] > 0 else None,
                "pass": bool(ok and sw["holds"]),
            }
        )
    return {
        "index": index,
        "spec": spec.to_dict(),
        "pass": rep["pass"],
        "rows": rows,
        "timing": rep["timing"],
    }


def run_fuzz(
    count: int,
    max_depth: int,
    master_seed: int,
    p_list,
    options: VerifyOptions = VerifyOptions(),
    jobs: int = 1,
    arity=2,
) -> dict:
    """Verify ``count`` generated instances; ``jobs > 1`` fans out to processes."""
    specs = fuzz_specs(count, max_depth, master_seed, arity)
    work = [(i, s, list(p_list), options) for i, s in enumerate(specs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fuzz_one, work, chunksize=max(1, count // (4 * jobs))))
    else:
        results = [_fuzz_one(w) for w in work]
    results.sort(key=lambda r: r["index"])

    failures = [r["index"] for r in results if not r["pass"]["all"]]
    max_ratio: dict[str, float] = {}
    for r in results:
        for row in r["rows"]:
            if row["ratio"] is not None:
                k = _pkey(row["p"])
                max_ratio[k] = max(max_ratio.get(k, 0.0), row["ratio"])
    return {
        "master_seed": master_seed,
        "count": count,
        "max_depth": max_depth,
        "p": [float(p) for p in p_list],
        "instances": results,
        "failures": failures,
        "max_observed_c1_over_c2": max_ratio,
        "pass": not failures,
    }


def csv_rows(fuzz_report: dict) -> list[dict]:
    return [row for r in fuzz_report["instances"] for row in r["rows"]]


def write_csv(fuzz_report: dict, stream: io.TextIOBase) -> None:
    w = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in csv_rows(fuzz_report):
        w.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_COLUMNS})
