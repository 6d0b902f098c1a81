import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

import privkey


def brute_mass(p, n, delta):
    total = Fraction(0)
    for s in product(range(2), repeat=n):
        c = sum(s)
        if all(abs(Fraction(k, n) - q) <= delta * q for k, q in ((n - c, p[0]), (c, p[1]))):
            total += p[0] ** (n - c) * p[1] ** c
    return total


def test_typical_mass_matches_enumeration():
    p = (Fraction(1, 4), Fraction(3, 4))
    for n in range(2, 10):
        got = Fraction(privkey.typical_mass(["1/4", "3/4"], n, "1/2"))
        assert got == brute_mass(p, n, Fraction(1, 2))


def test_l_max_example():
    assert privkey.l_max(9, "7/9") == 14


def test_divergences():
    bell = np.zeros((4, 4))
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    dephased = privkey.dephased_max_entangled(2)
    assert privkey.relative_entropy(bell, dephased) == pytest.approx(1.0)
    assert privkey.hypothesis_testing_divergence(bell, dephased, 0.1) == pytest.approx(1 - math.log2(0.9), abs=1e-7)
    b = privkey.yield_cost_bounds(2, 0.1, 0.1)
    assert b["kc_lower"] == pytest.approx(1 + math.log2(0.9))


def test_cli_bounds_report():
    code, records = privkey.run("bounds", "--dk", "2", "--epsilon", "0.1")
    assert code == 0
    names = {r["name"] for r in records}
    assert "dual_certificate" in names
    assert all(r["satisfied"] for r in records)


def test_cli_usage_error():
    with pytest.raises(ValueError):
        privkey.run("no-such-command")
