"""Plant parameters and the reference scenario values.

All powers are kW, energies kWh, prices $/kWh (the gas price applies to
turbine output energy), and the tick length is ``dt_hours``. The reference
plant runs a 24 h day at 5 min resolution (288 ticks).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

# Reference plant: 10-machine flow shop, per-machine power draw and
# operation length in ticks.
REF_MACHINE_POWER_KW = (50.63, 22.4, 5.12, 5.28, 12.68, 35.14, 6.58, 5.21, 8.4, 2.15)
REF_OP_TIME_TICKS = (5, 2, 8, 5, 3, 8, 4, 6, 6, 7)

REF_HORIZON = 288
REF_DT_HOURS = 1.0 / 12.0
REF_PEAK_PRICE = 0.330
REF_OFFPEAK_PRICE = 0.187
REF_PEAK_START_TICK = 108   # 9 am
REF_PEAK_END_TICK = 252     # 9 pm


def build_price_schedule(horizon: int = REF_HORIZON,
                         peak_price: float = REF_PEAK_PRICE,
                         offpeak_price: float = REF_OFFPEAK_PRICE,
                         peak_start_tick: int = REF_PEAK_START_TICK,
                         peak_end_tick: int = REF_PEAK_END_TICK) -> tuple[float, ...]:
    """Two-level time-of-use purchase price vector, one entry per tick."""
    if not 0 <= peak_start_tick <= peak_end_tick <= horizon:
        raise ValidationError(
            f"peak window [{peak_start_tick}, {peak_end_tick}) must lie inside [0, {horizon})")
    price = np.full(horizon, float(offpeak_price))
    price[peak_start_tick:peak_end_tick] = float(peak_price)
    return tuple(price.tolist())


@dataclass(frozen=True)
class PlantParameters:
    """Immutable physical and economic parameters of the plant.

    Defaults reproduce the reference scenario. ``buy_price`` must have one
    entry per tick of the horizon.
    """

    machine_power: tuple[float, ...] = REF_MACHINE_POWER_KW
    op_time: tuple[int, ...] = REF_OP_TIME_TICKS
    gas_price: float = 1.83            # $/kWh of turbine output
    ess_efficiency: float = 0.9        # charge and discharge efficiency
    ess_fixed_cost: float = 0.003      # $ per tick
    ess_degradation_cost: float = 0.0006   # $/kWh throughput
    ess_capacity: float = 50.0         # kWh
    ess_dod: float = 0.8               # usable fraction of capacity
    ess_max_power: float = 50.0        # kW, charge and discharge cap
    buy_price: tuple[float, ...] = field(default_factory=build_price_schedule)
    feed_in_tariff: float = 0.052      # $/kWh exported
    breakdown_rate: float = 0.002      # hazard scale per tick of uptime
    repair_rate: float = 1.0           # recovery scale per tick of downtime
    n_jobs: int = 25
    horizon: int = REF_HORIZON
    dt_hours: float = REF_DT_HOURS

    def __post_init__(self):
        if len(self.machine_power) != len(self.op_time):
            raise ValidationError("machine_power and op_time must have equal length")
        if len(self.machine_power) == 0:
            raise ValidationError("at least one machine is required")
        if any(p < 0 for p in self.machine_power):
            raise ValidationError("machine_power entries must be >= 0")
        if any(t < 1 or t != int(t) for t in self.op_time):
            raise ValidationError("op_time entries must be integers >= 1 tick")
        for name in ("gas_price", "ess_fixed_cost", "ess_degradation_cost",
                     "ess_capacity", "ess_max_power", "feed_in_tariff",
                     "breakdown_rate", "repair_rate"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if not 0 < self.ess_efficiency <= 1:
            raise ValidationError("ess_efficiency must lie in (0,1]")
        if not 0 < self.ess_dod <= 1:
            raise ValidationError("ess_dod must lie in (0,1]")
        if self.n_jobs < 0 or self.n_jobs != int(self.n_jobs):
            raise ValidationError("n_jobs must be a non-negative integer")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1 tick")
        if self.dt_hours <= 0:
            raise ValidationError("dt_hours must be > 0")
        if len(self.buy_price) != self.horizon:
            raise ValidationError(
                f"buy_price has {len(self.buy_price)} entries, horizon is {self.horizon}")
        if any(p < 0 for p in self.buy_price):
            raise ValidationError("buy_price entries must be >= 0")
        # A feed-in tariff above the cheapest purchase option would let the
        # dispatch buy and resell without limit (unbounded problem).
        cheapest = min(min(self.buy_price, default=0.0), self.gas_price)
        if self.feed_in_tariff > cheapest + 1e-12:
            raise ValidationError(
                "feed_in_tariff must not exceed the cheapest purchase price "
                f"({self.feed_in_tariff} > {cheapest})")

    # Derived quantities -------------------------------------------------

    @property
    def n_machines(self) -> int:
        return len(self.machine_power)

    @property
    def soc_min(self) -> float:
        return self.ess_capacity * (1.0 - self.ess_dod) / 2.0

    @property
    def soc_max(self) -> float:
        return self.ess_capacity * (1.0 + self.ess_dod) / 2.0

    @property
    def soc_half(self) -> float:
        """Required SOC at the start and end of the day."""
        return self.ess_capacity * 0.5

    def with_horizon(self, horizon: int) -> "PlantParameters":
        """Copy with a rescaled horizon; the price vector is resampled."""
        if horizon == self.horizon:
            return self
        old = np.asarray(self.buy_price)
        idx = np.minimum((np.arange(horizon) * self.horizon) // horizon, self.horizon - 1)
        return replace(self, horizon=horizon, buy_price=tuple(old[idx].tolist()))

    def completion_lower_bound(self, n_jobs: int | None = None) -> int:
        """Earliest possible completion tick for ``n_jobs`` identical jobs.

        Classic permutation flow shop bound for identical jobs: the bottleneck
        machine works back to back while the head feeds it and the tail drains,
        i.e. ``sum(op_time) + (n - 1) * max(op_time)``.
        """
        n = self.n_jobs if n_jobs is None else n_jobs
        if n <= 0:
            return 0
        return int(sum(self.op_time) + (n - 1) * max(self.op_time))


def reference_parameters(**overrides) -> PlantParameters:
    """The bundled reference plant (10 machines, 25 jobs, 288 ticks)."""
    return PlantParameters(**overrides)
