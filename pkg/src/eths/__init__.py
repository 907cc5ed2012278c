"""Event-triggered hybrid scheduling for an energy-aware flow shop."""

from .params import PlantParameters, build_price_schedule, reference_parameters
from .pv import PvTrace, builtin_clear_sky, make_pv_trace, read_pv_csv, write_pv_csv
from .plant import (MachineHealth, Plant, PlantState, breakdown_step,
                    power_balance_residual, soc_step, step_cost)
from .dispatch import DispatchResult, dispatch_energy

__version__ = "0.1.0"
