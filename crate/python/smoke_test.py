"""Smoke test for the xorsat_lab extension module.

Build and run from the repo root:

    cargo build -p xorsat-lab-py --features extension-module --release
    cp target/release/libxorsat_lab.so python/xorsat_lab.so
    python3 python/smoke_test.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import xorsat_lab as xl


def main():
    inst = xl.Instance.parse("p xor 4 3 3\n0 1 2 = 1\n1 2 3 = 0\n0 2 3 = 1\n")
    assert (inst.n, inst.k, inst.m) == (4, 3, 3)
    assert xl.Instance.parse(str(inst)).clauses() == inst.clauses()

    res = xl.solve(inst)
    assert res["satisfiable"] and res["nullity"] == 1
    assert inst.evaluate(res["solution"]) == (True, 0)
    assert xl.marginal(inst, 0) in [(0, 1), (1, 1), (1, 2)]

    big = xl.Instance.random(3, 2000, 0.9, seed=5)
    core = xl.peel(big)
    assert abs(core["core_var_fraction"] - xl.v_core(3, 0.9)) < 0.05
    assert core["core"].n == len(core["kept"])

    dec = xl.decimate(big, rule="uc", seed=2)
    assert len(dec["assignment"]) == big.n
    assert 0.4 < dec["free_fraction"] < 0.65
    assert xl.hamming(dec["assignment"], dec["assignment"]) == 0

    t = xl.thresholds(3)
    assert abs(t["r_core"] - 0.818469) < 1e-5
    assert abs(xl.r_core(3) - t["r_core"]) < 1e-12
    assert xl.w_e(3, 0.9) < xl.w1(3, 0.9)

    rep = json.loads(xl.experiment("freeness", n=[1000], trials=3))
    assert rep["command"] == "freeness"

    try:
        xl.Instance.parse("p xor 3 1 3\n0 1 1 = 0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("duplicate variable accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
