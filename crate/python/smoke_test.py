#!/usr/bin/env python3
"""Smoke test for the ddiqkd extension module.

Build and stage the module first:

    cargo build -p ddiqkd-py
    cp target/debug/libddiqkd.so python/ddiqkd.so

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import ddiqkd


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    # analytic Bell probabilities: matched setting splits 1/2 + 1/2
    p = ddiqkd.bell_probabilities("plus", ddiqkd.phase_for("plus"))
    approx(p[0], 0.5, 1e-12)
    approx(p[2], 0.5, 1e-12)
    approx(sum(p), 1.0, 1e-12)

    # crossed bases are flat
    p = ddiqkd.bell_probabilities("plus", ddiqkd.phase_for("plus_i"))
    for v in p:
        approx(v, 0.25, 1e-12)

    # key-rate formula endpoints
    approx(ddiqkd.secret_fraction(0.0), 1.0)
    approx(ddiqkd.secret_fraction(0.5), 0.0)
    approx(ddiqkd.binary_entropy(0.5), 1.0)

    # ideal Monte-Carlo session: deterministic, error-free
    stats = ddiqkd.run_session(rounds=20000, seed=7)
    assert stats["n_announced"] == stats["n_rounds"] == 20000
    approx(stats["qber_total"], 0.0)
    again = ddiqkd.run_session(rounds=20000, seed=7)
    assert stats == again, "same seed must reproduce the session"

    # depolarization calibration: QBER ~= p_dep / 2
    noisy = ddiqkd.run_session(rounds=200000, seed=1, depolarization=0.03)
    assert abs(noisy["qber_total"] - 0.015) < 0.002, noisy["qber_total"]

    # intercept-resend pushes QBER to 25%
    attacked = ddiqkd.run_session(rounds=200000, seed=2, adversary="intercept_resend")
    assert abs(attacked["qber_total"] - 0.25) < 0.01, attacked["qber_total"]

    # analytic phase scan: unit visibility on every Bell curve
    scan = ddiqkd.phase_scan("plus", points=24)
    for fit in scan["fits"]:
        approx(fit["visibility"], 1.0, 1e-9)

    # security audit: N <= 3 phase-averaged states are input-independent,
    # N = 4 keeps a delta-4 coherence
    report = ddiqkd.fixed_state_audit([1, 2, 3, 4], family_size=8, seed=3)
    for sector in report["sectors"]:
        if sector["sector"] <= 3:
            assert sector["max_trace_distance"] < 1e-10
            assert sector["surviving_deltas"] == []
        else:
            assert sector["surviving_deltas"] == [4]

    # rate models: ddi linear in detector efficiency, mdi quadratic
    lo = ddiqkd.rate_curves(0.5, 0.2, [10.0])[0]
    hi = ddiqkd.rate_curves(0.5, 0.4, [10.0])[0]
    approx(hi["rate_ddi"] / lo["rate_ddi"], 2.0, 1e-9)
    approx(hi["rate_mdi"] / lo["rate_mdi"], 4.0, 1e-9)

    # errors surface as ValueError
    for bad in (lambda: ddiqkd.secret_fraction(0.7),
                lambda: ddiqkd.bell_probabilities("sideways", 0.0),
                lambda: ddiqkd.run_session(rounds=0, seed=1)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed:", math.floor(stats["n_sifted"]), "sifted bits, QBER",
          stats["qber_total"])


if __name__ == "__main__":
    main()
