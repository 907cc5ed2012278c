"""Exact minimum-cost continuous dispatch for a fixed machine load profile.

Once the production binaries are fixed the energy side is a linear program:
grid purchase/feed-in, turbine output and ESS charge/discharge per tick,
coupled only through the SOC dynamics. Two exact solvers are provided:

* ``method="dp"``: dynamic programming over the SOC with convex
  piecewise-linear value functions. Exact because the per-tick cost as a
  function of the SOC increment is convex piecewise-linear, so value
  functions stay convex and infimal convolutions are slope merges.
* ``method="simplex"``: the same problem assembled as an explicit LP and
  solved with the bundled simplex; also returns duals and a complementary
  slackness certificate.

Both return identical costs up to float noise; the DP is orders of magnitude
faster and is what the schedulers call in their inner loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, UsageError, ValidationError
from .params import PlantParameters
from .pwl import ConvexPwl, argmin_on, inf_conv
from .simplex import LpSolution, solve_lp

_TIE_TOL = 1e-12


@dataclass
class DispatchResult:
    charge: np.ndarray
    discharge: np.ndarray
    turbine: np.ndarray
    grid_buy: np.ndarray
    grid_sell: np.ndarray
    soc: np.ndarray              # length T+1, SOC at tick boundaries
    cost: float                  # includes the fixed per-tick ESS cost
    work: int                    # deterministic effort counter
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    cs_residual: float | None = None


def _window_prices(params: PlantParameters, start_tick: int, T: int) -> np.ndarray:
    if start_tick < 0 or start_tick + T > params.horizon:
        raise UsageError(
            f"window [{start_tick}, {start_tick + T}) outside horizon [0, {params.horizon})")
    return np.asarray(params.buy_price[start_tick:start_tick + T], dtype=float)


def _tick_cost_fn(net_load: float, pi: float, p: PlantParameters):
    """Cost of one tick as a function of the SOC increment delta (kWh)."""
    dt = p.dt_hours
    eff = p.ess_efficiency
    tariff = p.feed_in_tariff
    deg = p.ess_degradation_cost

    def cost(delta: float) -> float:
        if delta >= 0:
            c = delta / (eff * dt)
            r = net_load + c
            through = c
        else:
            d = -delta * eff / dt
            r = net_load - d
            through = d
        energy = (pi * r if r > 0 else tariff * r) * dt
        return energy + deg * through * dt

    return cost


def _tick_cost_pwl(net_load: float, pi: float, p: PlantParameters) -> ConvexPwl:
    dt = p.dt_hours
    eff = p.ess_efficiency
    d_min = -p.ess_max_power * dt / eff     # full discharge
    d_max = p.ess_max_power * eff * dt      # full charge
    knots = {d_min, 0.0, d_max}
    # SOC delta at which the grid exchange crosses zero.
    if net_load > 0:
        cross = -net_load * dt / eff        # on the discharge side
    else:
        cross = -net_load * eff * dt        # on the charge side
    if d_min < cross < d_max:
        knots.add(cross)
    xs = sorted(knots)
    fn = _tick_cost_fn(net_load, pi, p)
    return ConvexPwl.from_knots(xs, [fn(x) for x in xs])


def _delta_to_flows(delta: float, net_load: float, price: float,
                    p: PlantParameters) -> tuple[float, float, float, float, float]:
    """(charge, discharge, turbine, buy, sell) realizing a SOC increment."""
    eff, dt = p.ess_efficiency, p.dt_hours
    if delta > _TIE_TOL:
        c, d = delta / (eff * dt), 0.0
    elif delta < -_TIE_TOL:
        c, d = 0.0, -delta * eff / dt
    else:
        c = d = 0.0
    r = net_load + c - d
    g = buy = sell = 0.0
    if r > _TIE_TOL:
        if p.gas_price < price:
            g = r
        else:
            buy = r
    elif r < -_TIE_TOL:
        sell = -r
    return c, d, g, buy, sell


def _solve_dp(net_load: np.ndarray, prices: np.ndarray, p: PlantParameters,
              soc_start: float, soc_end: float | None) -> DispatchResult:
    T = len(net_load)
    lo, hi = p.soc_min, p.soc_max
    pi = np.minimum(prices, p.gas_price)
    if soc_end is not None and not lo - 1e-9 <= soc_end <= hi + 1e-9:
        raise InfeasibleError(f"terminal SOC {soc_end} outside [{lo}, {hi}]")
    if not lo - 1e-9 <= soc_start <= hi + 1e-9:
        raise InfeasibleError(f"initial SOC {soc_start} outside [{lo}, {hi}]")

    ticks = [_tick_cost_pwl(float(net_load[k]), float(pi[k]), p) for k in range(T)]
    values: list[ConvexPwl | None] = [None] * (T + 1)
    values[T] = (ConvexPwl.flat(lo, hi) if soc_end is None
                 else ConvexPwl.point(min(max(soc_end, lo), hi)))
    work = 0
    for k in range(T - 1, -1, -1):
        v = inf_conv(values[k + 1], ticks[k].reflect())
        values[k] = v.clip(lo, hi)
        work += len(values[k].slopes) + len(ticks[k].slopes)

    v0 = values[0]
    if not v0.x0 - 1e-9 <= soc_start <= v0.x1 + 1e-9:
        raise InfeasibleError(
            f"initial SOC {soc_start} cannot reach the terminal condition; "
            f"reachable interval is [{v0.x0:.6f}, {v0.x1:.6f}] kWh")
    cost = v0.eval(soc_start) + T * p.ess_fixed_cost

    charge = np.zeros(T)
    discharge = np.zeros(T)
    turbine = np.zeros(T)
    buy = np.zeros(T)
    sell = np.zeros(T)
    soc = np.empty(T + 1)
    soc[0] = soc_start
    s = soc_start
    for k in range(T):
        w = ticks[k]
        nxt = values[k + 1]
        d_lo = max(w.x0, nxt.x0 - s)
        d_hi = min(w.x1, nxt.x1 - s)
        if d_lo > d_hi:   # float drift at domain edges
            d_lo = d_hi = min(max(nxt.x0 - s, w.x0), w.x1)
        fn = _tick_cost_fn(float(net_load[k]), float(pi[k]), p)
        ell = float(net_load[k])
        eff, dt = p.ess_efficiency, p.dt_hours

        def prefer(delta, _ell=ell, _eff=eff, _dt=dt):
            if delta >= 0:
                r = _ell + delta / (_eff * _dt)
            else:
                r = _ell + delta * _eff / _dt
            return (0 if abs(r) <= _TIE_TOL else 1, abs(delta))

        delta = argmin_on(w, nxt, s, d_lo, d_hi, prefer=prefer)
        c, d, g, b, se = _delta_to_flows(delta, ell, float(prices[k]), p)
        charge[k], discharge[k], turbine[k], buy[k], sell[k] = c, d, g, b, se
        s = min(max(s + delta, nxt.x0), nxt.x1)
        soc[k + 1] = s
        work += len(w.slopes) + len(nxt.slopes)
    return DispatchResult(charge, discharge, turbine, buy, sell, soc,
                          float(cost), work)


def build_dispatch_lp(net_load: np.ndarray, prices: np.ndarray, p: PlantParameters,
                      soc_start: float, soc_end: float | None):
    """Assemble (c, A, b, lower, upper) with columns [c,d,g,buy,sell]*T + soc[1..T]."""
    T = len(net_load)
    n = 5 * T + T
    dt = p.dt_hours
    eff = p.ess_efficiency
    A = np.zeros((2 * T, n))
    b = np.zeros(2 * T)
    cost = np.zeros(n)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)

    def col(k, name):
        return 5 * k + {"c": 0, "d": 1, "g": 2, "buy": 3, "sell": 4}[name]

    soc0 = 5 * T
    for k in range(T):
        row = k
        A[row, col(k, "c")] = -1.0
        A[row, col(k, "d")] = 1.0
        A[row, col(k, "g")] = 1.0
        A[row, col(k, "buy")] = 1.0
        A[row, col(k, "sell")] = -1.0
        b[row] = net_load[k]
        row = T + k
        A[row, soc0 + k] = 1.0
        if k > 0:
            A[row, soc0 + k - 1] = -1.0
        else:
            b[row] = soc_start
        A[row, col(k, "c")] = -eff * dt
        A[row, col(k, "d")] = dt / eff
        cost[col(k, "c")] = p.ess_degradation_cost * dt
        cost[col(k, "d")] = p.ess_degradation_cost * dt
        cost[col(k, "g")] = p.gas_price * dt
        cost[col(k, "buy")] = prices[k] * dt
        cost[col(k, "sell")] = -p.feed_in_tariff * dt
        upper[col(k, "c")] = p.ess_max_power
        upper[col(k, "d")] = p.ess_max_power
        lower[soc0 + k] = p.soc_min
        upper[soc0 + k] = p.soc_max
    if T > 0 and soc_end is not None:
        lower[soc0 + T - 1] = soc_end
        upper[soc0 + T - 1] = soc_end
    return cost, A, b, lower, upper


def _net_flows(res: DispatchResult, net_load: np.ndarray, prices: np.ndarray,
               p: PlantParameters) -> None:
    """Remove simultaneous charge+discharge / buy+sell, SOC path unchanged."""
    eff, dt = p.ess_efficiency, p.dt_hours
    for k in range(len(net_load)):
        c, d = res.charge[k], res.discharge[k]
        if c > 0 and d > 0:
            eps = min(c * eff, d / eff)
            c -= eps / eff
            d -= eps * eff
            res.charge[k], res.discharge[k] = c, d
        r = net_load[k] + res.charge[k] - res.discharge[k] - res.turbine[k]
        if r >= 0:
            extra = r - res.grid_buy[k]
            if abs(extra) > 0 or res.grid_sell[k] > 0:
                res.grid_buy[k], res.grid_sell[k] = r, 0.0
        else:
            res.grid_buy[k], res.grid_sell[k] = 0.0, -r


def dispatch_cost_of(res: DispatchResult, prices: np.ndarray, p: PlantParameters) -> float:
    dt = p.dt_hours
    T = len(res.charge)
    return float(np.dot(res.grid_buy, prices) * dt
                 - np.sum(res.grid_sell) * p.feed_in_tariff * dt
                 + np.sum(res.charge + res.discharge) * p.ess_degradation_cost * dt
                 + np.sum(res.turbine) * p.gas_price * dt
                 + T * p.ess_fixed_cost)


def dispatch_energy(load_kw, pv_kw, params: PlantParameters, *,
                    start_tick: int = 0, soc_start: float | None = None,
                    soc_end: float | None | str = "half",
                    method: str = "auto") -> DispatchResult:
    """Exact minimum-cost dispatch for a fixed load profile.

    ``soc_end`` may be a value, None (free terminal) or "half" (the default
    day-boundary condition). Prices are taken from the parameter schedule
    starting at ``start_tick``.
    """
    load = np.asarray(load_kw, dtype=float)
    pv = np.asarray(pv_kw, dtype=float)
    if load.shape != pv.shape or load.ndim != 1:
        raise UsageError("load and pv must be 1-D arrays of equal length")
    if np.any(load < 0) or np.any(pv < 0):
        raise ValidationError("load and pv must be >= 0")
    T = len(load)
    prices = _window_prices(params, start_tick, T)
    s0 = params.soc_half if soc_start is None else float(soc_start)
    sT = params.soc_half if isinstance(soc_end, str) else soc_end
    net_load = load - pv
    if T == 0:
        return DispatchResult(*(np.zeros(0),) * 5, soc=np.array([s0]), cost=0.0, work=0)

    if method in ("auto", "dp"):
        return _solve_dp(net_load, prices, params, s0, sT)
    if method != "simplex":
        raise UsageError(f"unknown dispatch method {method!r}")

    cvec, A, b, lower, upper = build_dispatch_lp(net_load, prices, params, s0, sT)
    sol: LpSolution = solve_lp(cvec, A, b, lower, upper)
    x = sol.x
    T5 = 5 * T
    res = DispatchResult(charge=x[0:T5:5].copy(), discharge=x[1:T5:5].copy(),
                         turbine=x[2:T5:5].copy(), grid_buy=x[3:T5:5].copy(),
                         grid_sell=x[4:T5:5].copy(),
                         soc=np.concatenate([[s0], x[T5:]]),
                         cost=float(sol.objective) + T * params.ess_fixed_cost,
                         work=sol.iterations,
                         duals=sol.duals, reduced_costs=sol.reduced_costs,
                         cs_residual=sol.complementary_slackness_residual(lower, upper))
    _net_flows(res, net_load, prices, params)
    res.cost = dispatch_cost_of(res, prices, params)
    return res
