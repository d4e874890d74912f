"""Print every constant of the two-atom worked instance and the four-atom stopping example."""

import json

import numpy as np

from twoweight import (
    ExponentPair,
    Measure,
    apply_T,
    apply_T_adjoint,
    bilinear_form,
    build_corona,
    build_lattice,
    carleson_embed_check,
    run_verify,
)
from twoweight.instances import instance_from_dict

WORKED = {
    "depth": 1,
    "mu": [1.0, 2.0],
    "nu": [3.0, 1.0],
    "alpha": {"0:0": 0.5, "1:0": 1.0, "1:1": 0.25},
    "f": [2.0, 1.0],
    "g": [1.0, 4.0],
}


def main():
    inst = instance_from_dict(WORKED)
    print("T f       ", apply_T(inst.alpha, inst.mu, inst.f))
    print("T* g      ", apply_T_adjoint(inst.alpha, inst.nu, inst.g))
    print("bilinear  ", bilinear_form(inst.alpha, inst.mu, inst.nu, inst.f, inst.g))
    rep = run_verify(inst, [2.0])
    print("testing   ", json.dumps(rep["testing"]["2.0"]))
    sw = rep["sandwich"]["2.0"]
    print(f"sandwich   c2={sw['c2']:.6f} c1={sw['c1_exact_p2']:.6f} K={sw['k_of_p']:.4f} holds={sw['holds']}")
    print("pass      ", rep["pass"])

    lat = build_lattice(2, 2)
    mu = Measure(lat, np.ones(4))
    f = np.array([8.0, 0.0, 0.0, 0.0])
    for line in build_corona(lat, None, mu, f).tree_lines():
        print(line)
    r = carleson_embed_check(mu.cube_total, mu, f, ExponentPair(2))
    print(f"embedding  lhs={r.lhs:g} C={r.C:g} bound={r.bound:g}")


if __name__ == "__main__":
    main()
