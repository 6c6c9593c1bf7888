"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/py
Then run from the repository root:
    python python/smoke_test.py
"""

import math
import os
import tempfile

import tvformation as tv

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def scenario(name):
    return tv.Scenario.from_file(os.path.join(ROOT, "scenarios", name))


def main():
    e = tv.Expression("0.08*sin(0.2*t) + 0.3")
    assert abs(e(0.0) - 0.3) < 1e-15
    rate = tv.Expression("0.016*cos(0.2*t)")
    assert e.rate_mismatch(rate, 0.0, 120.0) < tv.RATE_CHECK_TOLERANCE

    local = tv.to_local(0.3, -0.4, 0.1, 1.2)
    back = tv.from_local(*local, 1.2)
    assert all(abs(a - b) < 1e-12 for a, b in zip(back, (0.3, -0.4, 0.1)))
    assert abs(math.hypot(local[0], local[1]) - 0.5) < 1e-12

    v1, v2, dv2 = tv.lyapunov(0.15, 0.15, 0.0, 3, 3, 4)
    assert abs(v1 - 0.0225) < 1e-12 and dv2 < 0 and v2 >= v1

    a = scenario("case_a.cfg")
    assert a.check() == []
    bc = tv.run(a.with_controller("bc"))
    fabc = tv.run(a.with_controller("fabc"))
    assert len(bc) == 120001
    report = tv.compare(bc, fabc)
    f = report["followers"][0]
    print(report["text"])
    assert 30 <= f["left_wheel_decrease_pct"] <= 70
    assert 30 <= f["right_wheel_decrease_pct"] <= 70

    k2, k3 = fabc.column("f1.k2"), fabc.column("f1.k3")
    assert k2 == k3 and min(k2) >= 0.1

    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "trace.csv")
        short = tv.run(scenario("case_b.cfg").with_horizon(1.0))
        short.write_csv(p)
        with open(p) as fh:
            assert fh.readline().strip().split(",") == short.columns()
    print("smoke test passed")


if __name__ == "__main__":
    main()
