"""Plant-side unit tests: SOC update, breakdown statistics, balance, cost."""
import math

import numpy as np
import pytest

from eths.errors import BoundViolationError, ValidationError
from eths.params import PlantParameters, reference_parameters
from eths.plant import (MachineHealth, Plant, PlantState, breakdown_probability,
                        breakdown_step, power_balance_residual, recovery_probability,
                        soc_step, step_cost)
from eths.pv import PvTrace


@pytest.fixture(scope="module")
def p():
    return reference_parameters()


def test_reference_values(p):
    assert p.soc_min == pytest.approx(5.0)
    assert p.soc_max == pytest.approx(45.0)
    assert p.soc_half == pytest.approx(25.0)
    assert sum(p.machine_power) == pytest.approx(153.59)
    assert p.buy_price[107] == pytest.approx(0.187)
    assert p.buy_price[108] == pytest.approx(0.330)
    assert p.buy_price[251] == pytest.approx(0.330)
    assert p.buy_price[252] == pytest.approx(0.187)
    assert p.completion_lower_bound() == 246
    assert p.completion_lower_bound(40) == 366


def test_parameter_validation():
    with pytest.raises(ValidationError, match="ess_dod"):
        reference_parameters(ess_dod=1.5)
    with pytest.raises(ValidationError, match="ess_efficiency"):
        reference_parameters(ess_efficiency=0.0)
    with pytest.raises(ValidationError, match="op_time"):
        reference_parameters(op_time=(0,) * 10)
    with pytest.raises(ValidationError, match="feed_in_tariff"):
        reference_parameters(feed_in_tariff=0.5)


def test_soc_step_identity(p):
    assert soc_step(25.0, 0.0, 0.0, p) == 25.0


def test_soc_step_charge(p):
    assert soc_step(25.0, 12.0, 0.0, p) == pytest.approx(25.9)


def test_soc_step_bound_violation(p):
    # 5.5 - (12/0.9)/12 = 4.389 < 5.0 lower bound
    with pytest.raises(BoundViolationError, match="5.0"):
        soc_step(5.5, 0.0, 12.0, p, tick=17)
    try:
        soc_step(5.5, 0.0, 12.0, p, tick=17)
    except BoundViolationError as e:
        assert "tick 17" in str(e)


def test_breakdown_formula_values(p):
    assert breakdown_probability(0, p) == 0.0
    assert breakdown_probability(50, p) == pytest.approx(1 - math.exp(-0.1))
    assert recovery_probability(1, p) == pytest.approx(1 - math.exp(-1.0))


def test_breakdown_step_statistics(p):
    # Empirical per-tick failure frequency at fixed uptime matches the hazard
    # within 3 binomial standard deviations over 1e5 draws.
    rng = np.random.default_rng(1234)
    n = 100_000
    for t_on in (10, 50, 200):
        health = MachineHealth(up=np.ones(n, dtype=bool),
                               t_on=np.full(n, t_on), t_bd=np.zeros(n, dtype=int))
        pp = PlantParameters()
        # one machine per slot: vector draw
        out = breakdown_step(health, rng.uniform(size=n), pp)
        freq = 1.0 - out.up.mean()
        want = 1 - math.exp(-pp.breakdown_rate * t_on)
        sd = math.sqrt(want * (1 - want) / n)
        assert abs(freq - want) <= 3 * sd, (t_on, freq, want)


def test_breakdown_step_counters(p):
    h = MachineHealth.fresh(3)
    h.t_on[:] = (5, 5, 5)
    # draws force machine 0 to fail, others survive
    draws = np.array([0.0, 0.99, 0.99])
    out = breakdown_step(h, draws, p)
    assert not out.up[0] and out.t_on[0] == 0 and out.t_bd[0] == 1
    assert out.up[1] and out.t_on[1] == 6 and out.t_bd[1] == 0


def test_recovery_step(p):
    h = MachineHealth(up=np.array([False]), t_on=np.array([0]), t_bd=np.array([1]))
    out = breakdown_step(h, np.array([0.0]), p)   # draw below recovery prob
    assert out.up[0] and out.t_bd[0] == 0
    h = MachineHealth(up=np.array([False]), t_on=np.array([0]), t_bd=np.array([1]))
    out = breakdown_step(h, np.array([0.999]), p)
    assert not out.up[0] and out.t_bd[0] == 2


def test_power_balance_examples(p):
    s = PlantState.zero(10)
    assert power_balance_residual(s, p) == 0.0
    s = PlantState.zero(10)
    s.machine_on[:] = True
    s.pv_power = 153.59
    assert power_balance_residual(s, p) == pytest.approx(0.0, abs=1e-12)
    s = PlantState.zero(10)
    s.machine_on[0] = True
    s.grid_buy = 50.0
    assert power_balance_residual(s, p) == pytest.approx(-0.63)


def test_step_cost_examples(p):
    s = PlantState.zero(10)
    assert step_cost(s, 0, p) == pytest.approx(0.003)
    s.grid_buy = 50.0
    assert step_cost(s, 150, p) == pytest.approx(50 / 12 * 0.330 + 0.003)
    assert step_cost(s, 150, p) == pytest.approx(1.378, abs=5e-4)
    s = PlantState.zero(10)
    s.grid_sell = 50.0
    assert step_cost(s, 0, p) == pytest.approx(-50 / 12 * 0.052 + 0.003)
    assert step_cost(s, 0, p) == pytest.approx(-0.2137, abs=5e-5)


def _run_plant(seed, defer, policy="resume", horizon=60):
    p = reference_parameters().with_horizon(horizon)
    pv = PvTrace((0.0,) * horizon, (0.0,) * horizon)
    rng = np.random.default_rng(seed)
    draws = rng.uniform(size=(horizon, p.n_machines))
    plant = Plant(p, pv, draws, defer_blocked_starts=defer, breakdown_policy=policy)
    starts = np.zeros((horizon, p.n_machines), dtype=bool)
    # naive dense commands: machine i starts whenever idle per its op time
    for i in range(p.n_machines):
        starts[:: p.op_time[i], i] = True
    log = []
    for k in range(horizon):
        running, fired = plant.resolve_machines(starts[k])
        state = plant.commit_energy(running, fired, 0.0, 0.0, 0.0, 0.0, 0.0,
                                    close_with_grid=True)
        log.append((running.copy(), fired.copy(), state.grid_buy, plant.completed.copy()))
    return plant, log


def test_plant_replay_is_deterministic():
    a = _run_plant(7, defer=True)
    b = _run_plant(7, defer=True)
    for (ra, fa, ga, ca), (rb, fb, gb, cb) in zip(a[1], b[1]):
        assert np.array_equal(ra, rb) and np.array_equal(fa, fb)
        assert ga == gb and np.array_equal(ca, cb)


def test_plant_precedence_is_physical():
    plant, log = _run_plant(3, defer=True, horizon=80)
    # completions on machine i+1 can never exceed machine i
    comp = plant.completed
    assert all(comp[i] >= comp[i + 1] for i in range(len(comp) - 1))


def test_plant_grid_slack_closes_balance():
    p = reference_parameters().with_horizon(10)
    pv = PvTrace((0.0,) * 10, (30.0,) * 10)
    draws = np.ones((10, p.n_machines))   # no breakdowns
    plant = Plant(p, pv, draws, defer_blocked_starts=False)
    running, fired = plant.resolve_machines(np.zeros(p.n_machines, dtype=bool))
    st = plant.commit_energy(running, fired, 0.0, 0.0, 0.0, 0.0, 0.0, close_with_grid=True)
    assert st.grid_sell == pytest.approx(30.0)   # surplus PV exported
    assert power_balance_residual(st, p) == pytest.approx(0.0, abs=1e-9)
