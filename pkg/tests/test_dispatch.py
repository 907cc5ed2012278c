"""Dispatch layer tests: pwl machinery, DP vs simplex vs oracles."""
import dataclasses

import numpy as np
import pytest

from eths.dispatch import build_dispatch_lp, dispatch_cost_of, dispatch_energy
from eths.errors import InfeasibleError
from eths.params import reference_parameters
from eths.pwl import ConvexPwl, inf_conv
from eths.simplex import solve_lp


@pytest.fixture(scope="module")
def p():
    return reference_parameters()


# -- piecewise-linear machinery ------------------------------------------------

def test_pwl_eval_and_min():
    f = ConvexPwl.from_knots([0.0, 1.0, 3.0], [2.0, 0.0, 4.0])
    assert f.eval(0.0) == 2.0
    assert f.eval(1.0) == 0.0
    assert f.eval(2.0) == 2.0
    lo, hi, v = f.min_point()
    assert (lo, hi, v) == (1.0, 1.0, 0.0)


def test_pwl_inf_conv_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(30):
        sf = np.sort(rng.uniform(-2, 2, 3))
        sg = np.sort(rng.uniform(-2, 2, 2))
        f = ConvexPwl(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                      sf.tolist(), rng.uniform(0.1, 1.0, 3).tolist())
        g = ConvexPwl(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                      sg.tolist(), rng.uniform(0.1, 1.0, 2).tolist())
        h = inf_conv(f, g)
        for x in np.linspace(h.x0, h.x1, 17):
            lo, hi = max(f.x0, x - g.x1), min(f.x1, x - g.x0)
            # optimum of a pwl split lies at a knot of either side
            cands = {lo, hi}
            cands.update(a for a in f.knots() if lo <= a <= hi)
            cands.update(x - b for b in g.knots() if lo <= x - b <= hi)
            brute = min(f.eval(a) + g.eval(x - a) for a in cands)
            assert h.eval(x) == pytest.approx(brute, abs=1e-9)


def test_pwl_clip_and_reflect():
    f = ConvexPwl.from_knots([-1.0, 0.0, 2.0], [1.0, 0.0, 6.0])
    g = f.clip(-0.5, 1.0)
    assert g.x0 == -0.5 and g.x1 == 1.0
    assert g.eval(-0.5) == pytest.approx(0.5)
    r = f.reflect()
    assert r.eval(-2.0) == pytest.approx(f.eval(2.0))
    assert r.eval(1.0) == pytest.approx(f.eval(-1.0))


# -- dispatch examples ---------------------------------------------------------

def test_all_zero_window(p):
    r = dispatch_energy(np.zeros(6), np.zeros(6), p)
    assert r.cost == pytest.approx(6 * p.ess_fixed_cost)
    assert not r.charge.any() and not r.grid_buy.any() and not r.grid_sell.any()


def test_pv_covers_load_exactly(p):
    r = dispatch_energy([10.0], [10.0], p)
    assert r.cost == pytest.approx(p.ess_fixed_cost)
    assert not r.grid_buy.any() and not r.grid_sell.any() and not r.turbine.any()


def test_two_tick_arbitrage_matches_enumeration(p):
    # Cheap tick then expensive tick: the ESS shifts iff the round-trip beats
    # buying at the peak, which it does for the reference parameters.
    pk = dataclasses.replace(p, horizon=2, buy_price=(0.187, 0.330))
    r = dispatch_energy([0.0, 12.0], [0.0, 0.0], pk)
    c = 12.0 / pk.ess_efficiency ** 2
    ess_shift = 0.187 * c / 12 + pk.ess_degradation_cost * (c + 12.0) / 12 + 2 * pk.ess_fixed_cost
    grid_only = 0.330 * 12 / 12 + 2 * pk.ess_fixed_cost
    assert ess_shift < grid_only
    assert r.cost == pytest.approx(min(ess_shift, grid_only))
    assert r.charge[0] == pytest.approx(c)
    assert r.discharge[1] == pytest.approx(12.0)


def test_turbine_used_when_cheaper_than_grid(p):
    pk = dataclasses.replace(p, horizon=1, buy_price=(2.5,), gas_price=1.83)
    r = dispatch_energy([20.0], [0.0], pk, soc_end="half")
    assert r.turbine[0] == pytest.approx(20.0)
    assert r.grid_buy[0] == 0.0


def test_zero_window(p):
    r = dispatch_energy([], [], p)
    assert r.cost == 0.0


def test_unreachable_terminal_soc_raises(p):
    pk = p.with_horizon(1)
    with pytest.raises(InfeasibleError):
        dispatch_energy([0.0], [0.0], pk, soc_start=45.0, soc_end=5.0)


def test_terminal_free_never_worse_than_pinned(p):
    pk = p.with_horizon(24)
    rng = np.random.default_rng(2)
    load = rng.uniform(0, 100, 24)
    pv = rng.uniform(0, 50, 24)
    pinned = dispatch_energy(load, pv, pk)
    free = dispatch_energy(load, pv, pk, soc_end=None)
    assert free.cost <= pinned.cost + 1e-9


# -- cross checks --------------------------------------------------------------

def _random_instance(rng, T):
    p = reference_parameters()
    price = tuple(rng.uniform(0.05, 0.6, T).tolist())
    return dataclasses.replace(
        p, horizon=T, buy_price=price,
        feed_in_tariff=float(rng.uniform(0.0, 0.05)),
        ess_capacity=float(rng.uniform(1, 25)),
        ess_max_power=float(rng.uniform(4, 45)),
        ess_efficiency=float(rng.uniform(0.7, 1.0)),
        ess_degradation_cost=float(rng.uniform(0, 0.002)),
        gas_price=float(rng.uniform(0.3, 2.0)))


def test_dp_equals_simplex_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(25):
        T = int(rng.integers(2, 14))
        pk = _random_instance(rng, T)
        load = rng.uniform(0, 120, T)
        pv = rng.uniform(0, 80, T)
        a = dispatch_energy(load, pv, pk, method="dp")
        b = dispatch_energy(load, pv, pk, method="simplex")
        assert a.cost == pytest.approx(b.cost, abs=1e-7)
        assert b.cs_residual <= 1e-8


def test_simplex_against_scipy_random_lps():
    scipy = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(9)
    for _ in range(20):
        m, n = int(rng.integers(2, 6)), int(rng.integers(4, 10))
        A = rng.normal(size=(m, n))
        x_feas = rng.uniform(0, 2, n)
        b = A @ x_feas
        c = rng.normal(size=n)
        lower = np.zeros(n)
        upper = np.where(rng.uniform(size=n) < 0.7, rng.uniform(2.5, 6, n), np.inf)
        ref = scipy.linprog(c, A_eq=A, b_eq=b, bounds=list(zip(lower, upper)),
                            method="highs")
        if not ref.success:
            continue
        sol = solve_lp(c, A, b, lower, upper)
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7)
        assert sol.complementary_slackness_residual(lower, upper) <= 1e-8


def test_dp_against_soc_grid_oracle(p):
    """Exact DP vs a brute-force DP over a discretized SOC grid."""
    rng = np.random.default_rng(77)
    for _ in range(5):
        T = int(rng.integers(4, 10))
        pk = dataclasses.replace(
            reference_parameters(), horizon=T,
            buy_price=tuple(rng.uniform(0.1, 0.5, T).tolist()),
            ess_capacity=2.0, ess_max_power=10.0, feed_in_tariff=0.03)
        load = rng.uniform(20, 60, T)
        pv = rng.uniform(0, 30, T)
        exact = dispatch_energy(load, pv, pk)
        approx = soc_grid_oracle(load, pv, pk, step=0.01)
        assert exact.cost <= approx + 1e-9
        assert abs(exact.cost - approx) <= max(0.005 * abs(approx), 5e-4)


def soc_grid_oracle(load, pv, p, step=0.01, soc_start=None, soc_end="half"):
    """Min-cost dispatch with SOC restricted to a uniform grid (test oracle)."""
    T = len(load)
    lo, hi = p.soc_min, p.soc_max
    grid = np.arange(lo, hi + step / 2, step)
    s0 = p.soc_half if soc_start is None else soc_start
    sT = p.soc_half if isinstance(soc_end, str) else soc_end
    dt, eff = p.dt_hours, p.ess_efficiency
    net = np.asarray(load) - np.asarray(pv)
    value = np.where(np.abs(grid - sT) < step / 2, 0.0, np.inf) if sT is not None \
        else np.zeros_like(grid)
    for k in range(T - 1, -1, -1):
        delta = grid[None, :] - grid[:, None]      # next - current
        charge = np.where(delta > 0, delta / (eff * dt), 0.0)
        discharge = np.where(delta < 0, -delta * eff / dt, 0.0)
        ok = (charge <= p.ess_max_power + 1e-12) & (discharge <= p.ess_max_power + 1e-12)
        r = net[k] + charge - discharge
        pi = min(p.buy_price[k], p.gas_price)
        energy = np.where(r > 0, pi * r, p.feed_in_tariff * r) * dt
        cost = energy + p.ess_degradation_cost * (charge + discharge) * dt
        total = np.where(ok, cost + value[None, :], np.inf)
        value = total.min(axis=1)
    i0 = int(round((s0 - lo) / step))
    return value[i0] + T * p.ess_fixed_cost
