"""Single-cell full-duplex small cell with D2D links: joint user selection and power control."""

from fdcell.geometry import (
    Position,
    Scenario,
    ScenarioConfig,
    channel_gain,
    generate_scenario,
    noise_power,
    path_loss_db,
)
from fdcell.link import (
    EMPTY,
    CqiTable,
    PowerAllocation,
    Selection,
    default_cqi_table,
    instantaneous_rate,
    spectral_efficiency,
)
from fdcell.utility import RateState, UtilityConfig, objective_value, update_average_rates, utility_value
from fdcell.optimizer import OptimizerConfig, grid_search_maximize, pattern_search_maximize
from fdcell.scheduler import (
    SchedulerMode,
    SimulationTrace,
    enumerate_selections,
    run_simulation,
    schedule_dpa,
    schedule_fpa,
    schedule_hd,
)

__version__ = "0.1.0"
