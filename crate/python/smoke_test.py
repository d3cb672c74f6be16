"""Smoke test for the antipode_py extension.

Build and install first:

    pip install -e crates/antipode-py --no-build-isolation

then run ``python python/smoke_test.py`` (or ``pytest python/``).
"""

import os
import tempfile
from fractions import Fraction

import antipode_py as ap


def frac(s):
    return Fraction(s)


def test_critical_gap():
    a, b, length = ap.critical_gap("2/7")
    assert (frac(a), frac(b), frac(length)) == (Fraction(6, 26), Fraction(15, 26), Fraction(9, 26))


def test_landing_limits():
    lo, hi = ap.phi_pm("2/7", "4/7")
    assert (frac(lo), frac(hi)) == (Fraction(18, 26), Fraction(19, 26))


def test_rho():
    assert ap.dynamic_rotation_number("2/7") == "1/3"
    assert ap.rho_inverse("1/3") == ("2/7", "2/7")
    assert ap.rho_inverse("1/4") == ("2/15", "4/15")


def test_doubly_visible_set():
    orbits = ap.doubly_visible_set("2/7")
    pts = sorted(frac(x) for o in orbits for x in o)
    assert pts == sorted(Fraction(n, 26) for n in (2, 5, 6, 15, 18, 19))


def test_map_and_symmetry():
    q = 0.7 - 1.3j
    z = 0.4 + 0.9j
    anti = lambda w: -1 / w.conjugate()
    assert abs(ap.f(q, anti(z)) - anti(ap.f(q, z))) < 1e-12
    c0, cinf = ap.critical_points(3 ** 0.5)
    assert abs(c0 - 1) < 1e-12 and abs(cinf + 1) < 1e-12


def test_boettcher_square_law():
    q = 0.8 - 0.4j
    z = 0.05 + 0.07j
    b = ap.boettcher(q, z)
    assert abs(ap.boettcher(q, ap.f(q, z)) - b * b) < 1e-12


def test_classify():
    assert ap.classify_parameter(0.1) == "central"
    assert ap.classify_parameter(1 - 6j) == "herman_candidate"


def test_param_map_small():
    q = 1e-3
    phi = ap.param_map(q)
    assert abs(phi / q**2 - 2 / (3 * 3**0.5)) < 1e-3


def test_render():
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "j.ppm")
        counts = ap.render_julia_ppm(0j, path, size=32, extent=2.0)
        assert sum(counts) == 32 * 32
        with open(path, "rb") as fh:
            assert fh.read(2) == b"P6"


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print("ok", name)
