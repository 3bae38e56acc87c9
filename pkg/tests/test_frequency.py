import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from coarse_metrology.errors import DivergenceError
from coarse_metrology.frequency import (
    MARKOV,
    NON_MARKOV,
    DephasingModel,
    PrecisionCurve,
    crossover_delta,
    default_delta_grid,
    fig1_scenarios,
    freq_variance,
    gamma,
    make_scenario,
    optimal_t0,
    precision_curve,
    ramsey_signal,
    scan_crossover,
)
from coarse_metrology.kinds import StateKind

GOLDEN = json.loads((Path(__file__).parent / "golden" / "fig1_crossovers.json").read_text())
N = 10_000
E = math.e


def scipy_variance(sc):
    """Independent route: scipy's QUADPACK over the truncated window, rejection-free."""
    t0, d, m = sc.t0, sc.delta, sc.m
    w = m * sc.detuning
    lo, hi = max(0.0, t0 - 10 * d), t0 + 10 * d
    dens = lambda t: math.exp(-0.5 * ((t - t0) / d) ** 2)  # noqa: E731
    env = lambda t: math.exp(-m * sc.dephasing.gamma0 * t ** sc.dephasing.exponent)  # noqa: E731
    pts = np.linspace(lo, min(hi, 0.3 if m > 1 else hi), 200)[1:-1]
    kw = dict(limit=5000, epsabs=0, epsrel=1e-11, points=pts)
    z = integrate.quad(dens, lo, hi, limit=500, epsabs=0, epsrel=1e-12)[0]
    # the fringe average cancels near zero; ask for absolute accuracy instead
    c = integrate.quad(lambda t: dens(t) * math.cos(w * t) * env(t), lo, hi,
                       **{**kw, "epsabs": 1e-13 * z, "epsrel": 0})[0] / z
    s = integrate.quad(lambda t: dens(t) * t * math.sin(w * t) * env(t), lo, hi, **kw)[0] / z
    tm = integrate.quad(lambda t: dens(t) * t, lo, hi, limit=500, epsabs=0, epsrel=1e-12)[0] / z
    k = sc.n if sc.state is StateKind.PRODUCT else sc.n ** 2
    return (1 - c * c) * tm / (k * sc.total_time * s * s)


class TestDephasing:
    def test_values(self):
        assert gamma(MARKOV, 0.5) == 0.5
        assert gamma(NON_MARKOV, 0.5) == 0.25
        assert gamma(NON_MARKOV, 0.0) == 0.0

    def test_negative_time(self):
        with pytest.raises(ValueError):
            gamma(MARKOV, -1.0)

    def test_rejects_other_exponents(self):
        with pytest.raises(ValueError):
            DephasingModel(1.0, 3)


class TestOptimalTime:
    @pytest.mark.parametrize("model, n, entangled, expected", [
        (MARKOV, 1, False, 0.5),
        (NON_MARKOV, N, True, 0.005),
        (MARKOV, N, True, 5e-5),
        (NON_MARKOV, 1, False, 0.5),
        (DephasingModel(4.0, 2), 9, True, 1 / (2 * math.sqrt(36))),
    ])
    def test_root_matches_closed_form(self, model, n, entangled, expected):
        root = optimal_t0(model, n, entangled)
        closed = optimal_t0(model, n, entangled, closed_form=True)
        assert root == pytest.approx(expected, rel=1e-12)
        assert root == pytest.approx(closed, rel=1e-10)

    def test_no_dephasing(self):
        with pytest.raises(DivergenceError):
            optimal_t0(DephasingModel(0.0, 1))


class TestScenario:
    def test_product_markov(self):
        sc = make_scenario("product", N, MARKOV)
        assert (sc.t0, sc.detuning) == (0.5, pytest.approx(math.pi))

    def test_ghz_nonmarkov(self):
        sc = make_scenario("ghz", N, NON_MARKOV)
        assert sc.t0 == pytest.approx(0.005)
        assert sc.n * sc.detuning == pytest.approx(100 * math.pi)

    def test_point_mass_allowed(self):
        assert make_scenario("ghz", N, MARKOV, delta=0.0).jitter.is_point_mass


class TestRamseySignal:
    def test_midpoint(self):
        assert ramsey_signal(make_scenario("product", 1, MARKOV)) == pytest.approx(0.5, abs=1e-15)

    def test_no_detuning_no_dephasing(self):
        sc = make_scenario("product", 1, MARKOV)
        from dataclasses import replace
        sc = replace(sc, detuning=0.0, dephasing=DephasingModel(0.0, 1))
        assert ramsey_signal(sc) == 1.0

    def test_monte_carlo(self):
        sc = make_scenario("product", 1, MARKOV, delta=0.1)
        rng = np.random.default_rng(7)
        t = rng.normal(0.5, 0.1, size=12_000_000)
        t = t[t >= 0][:10_000_000]
        draws = 0.5 * (1 + np.cos(math.pi * t) * np.exp(-t))
        se = draws.std() / math.sqrt(draws.size)
        assert abs(ramsey_signal(sc) - draws.mean()) < 3 * se


class TestVariance:
    @pytest.mark.parametrize("name, expected", [
        ("dw2_product_markov", 2 * E / N),
        ("dw2_ghz_markov", 2 * E / N),
        ("dw2_product_nonmarkov", 2 * math.sqrt(E) / N),
        ("dw2_ghz_nonmarkov", 200 * math.sqrt(E) * 1e-8),
    ])
    @pytest.mark.parametrize("delta", [0.0, 1e-12])
    def test_jitter_free_limits(self, name, expected, delta):
        sc = fig1_scenarios()[name].with_delta(delta)
        assert freq_variance(sc) == pytest.approx(expected, rel=1e-6)

    def test_markov_equal_precision(self):
        sc = fig1_scenarios()
        a = freq_variance(sc["dw2_product_markov"].with_delta(1e-12))
        b = freq_variance(sc["dw2_ghz_markov"].with_delta(1e-12))
        assert a == pytest.approx(b, rel=1e-9)

    def test_nonmarkov_sqrt_n_gain(self):
        sc = fig1_scenarios()
        a = freq_variance(sc["dw2_product_nonmarkov"].with_delta(1e-12))
        b = freq_variance(sc["dw2_ghz_nonmarkov"].with_delta(1e-12))
        assert a / b == pytest.approx(100.0, rel=1e-6)

    @pytest.mark.parametrize("name", ["dw2_product_markov", "dw2_ghz_markov",
                                      "dw2_product_nonmarkov", "dw2_ghz_nonmarkov"])
    @pytest.mark.parametrize("delta", [1e-5, 3e-4, 0.01, 0.2])
    def test_against_scipy_quadpack(self, name, delta):
        sc = fig1_scenarios()[name].with_delta(delta)
        assert freq_variance(sc) == pytest.approx(scipy_variance(sc), rel=1e-7)

    def test_vanishing_slope_is_infinite(self):
        from dataclasses import replace
        sc = replace(make_scenario("ghz", N, MARKOV, delta=1e-3), detuning=0.0)
        assert freq_variance(sc) == math.inf

    @pytest.mark.parametrize("name", ["dw2_ghz_nonmarkov", "dw2_product_markov"])
    def test_averages_against_monte_carlo(self, name):
        from coarse_metrology.numerics import truncated_gaussian_expectation
        sc = fig1_scenarios()[name].with_delta(0.004)
        rng = np.random.default_rng(2)
        t = rng.normal(sc.t0, sc.delta, 12_000_000)
        t = t[t >= 0][:10_000_000]
        m, w = sc.m, sc.m * sc.detuning
        f = lambda t: t * np.sin(w * t) * np.exp(-m * sc.dephasing(t))  # noqa: E731
        draws = f(t)
        quad = truncated_gaussian_expectation(f, sc.jitter, omega=w)
        assert abs(quad - draws.mean()) < 3 * draws.std() / math.sqrt(draws.size)


class TestCurves:
    def test_single_zero_row(self):
        curve = precision_curve(make_scenario("product", N, MARKOV), [0.0])
        assert curve.rows == ((0.0, pytest.approx(2 * E / N, rel=1e-12)),)

    def test_ordering_at_zero(self):
        v = {k: freq_variance(s) for k, s in fig1_scenarios().items()}
        assert v["dw2_ghz_nonmarkov"] < v["dw2_product_nonmarkov"] < v["dw2_product_markov"]
        assert v["dw2_product_markov"] == pytest.approx(v["dw2_ghz_markov"], rel=1e-12)

    def test_grid_order_preserved_with_workers(self):
        grid = [0.0, 1e-4, 1e-3, 1e-2]
        sc = fig1_scenarios()["dw2_ghz_nonmarkov"]
        serial = precision_curve(sc, grid)
        fanned = precision_curve(sc, grid, workers=4)
        assert serial.rows == fanned.rows
        assert list(serial.deltas) == grid

    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError):
            precision_curve(fig1_scenarios()["dw2_ghz_markov"], [0.1, 0.01])
        with pytest.raises(ValueError):
            PrecisionCurve(((0.2, 1.0), (0.1, 1.0)))

    def test_display_scaling_leaves_values(self):
        curve = precision_curve(fig1_scenarios()["dw2_ghz_markov"], [0.0, 0.01])
        scaled = curve.scaled(1e-8)
        assert scaled[1] == pytest.approx(curve.values[1] * 1e-8)
        assert curve.values[0] == pytest.approx(2 * E / N)

    def test_default_grid(self):
        g = default_delta_grid()
        assert g[0] == 0 and len(g) == 61 and g[-1] == pytest.approx(2.0)
        assert np.all(np.diff(g) > 0)


class TestCrossover:
    def test_identical_curves(self):
        sc = fig1_scenarios()["dw2_ghz_markov"]
        assert not crossover_delta(sc, sc, (1e-4, 1.0)).found
        assert not scan_crossover(sc, sc, default_delta_grid()).found

    @pytest.mark.parametrize("label, a, b", [
        ("ghz_nonmarkov_vs_product_nonmarkov", "dw2_ghz_nonmarkov", "dw2_product_nonmarkov"),
        ("ghz_markov_vs_product_markov", "dw2_ghz_markov", "dw2_product_markov"),
        ("scaled_ghz_markov_vs_product_markov", "dw2_ghz_markov", "dw2_product_markov"),
    ])
    def test_golden(self, label, a, b):
        golden = GOLDEN["crossovers"][label]
        sc = fig1_scenarios()
        res = scan_crossover(sc[a], sc[b], default_delta_grid(), scale_a=golden["scale_a"])
        assert res.from_tie == golden["from_tie"]
        assert res.delta == pytest.approx(golden["delta_star"], rel=1e-8, abs=1e-300)

    def test_nonmarkov_crossing_is_a_true_crossing(self):
        sc = fig1_scenarios()
        d = GOLDEN["crossovers"]["ghz_nonmarkov_vs_product_nonmarkov"]["delta_star"]
        a, b = sc["dw2_ghz_nonmarkov"], sc["dw2_product_nonmarkov"]
        assert scipy_variance(a.with_delta(d)) == pytest.approx(scipy_variance(b.with_delta(d)),
                                                                rel=1e-7)
        assert freq_variance(a.with_delta(0.9 * d)) < freq_variance(b.with_delta(0.9 * d))
        assert freq_variance(a.with_delta(1.1 * d)) > freq_variance(b.with_delta(1.1 * d))

    def test_markov_crossing_precedes_nonmarkov(self):
        c = GOLDEN["crossovers"]
        assert (c["ghz_markov_vs_product_markov"]["delta_star"]
                < c["ghz_nonmarkov_vs_product_nonmarkov"]["delta_star"])

    def test_no_sign_change_in_bracket(self):
        sc = fig1_scenarios()
        res = crossover_delta(sc["dw2_ghz_nonmarkov"], sc["dw2_product_nonmarkov"], (1e-5, 1e-3))
        assert not res.found
