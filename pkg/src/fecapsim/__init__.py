"""fecapsim: circuit-level compact-model simulator for HZO ferroelectric caps."""

from .analyses import (
    HysteresisResult,
    KineticsPoint,
    ProgramTrace,
    current_program,
    extract_loop_metrics,
    hysteresis,
    pristine_scenario,
    switching_kinetics,
)
from .arraybench import BenchReport, run_array_bench
from .constants import CONSTANTS, PhysicalConstants
from .montecarlo import (
    McDistribution,
    McError,
    McResult,
    ParamDist,
    ScenarioSpec,
    run_mc,
    sample_params,
)
from .params import DeviceParams, N_DEPL_PRISTINE, ParamsBatch
from .physics import (
    TransitionRates,
    c_depl,
    c_depl_branches,
    c_layer,
    j_fn,
    j_pf,
    p_steady_state,
    p_step,
    phi_depl,
    polarization,
    transition_rates,
)
from .quasistatic import DcConvergenceError, dc_sweep, small_signal_cv
from .solver import (
    DeviceState,
    SolverConfig,
    StepFailureError,
    TimeSeries,
    run_transient,
    run_transient_batch,
    solve_timestep,
    step_residual,
)
from .waveform import Waveform, from_segments, hold, pulse_train, rect_pulse, triangle

__version__ = "0.1.0"
