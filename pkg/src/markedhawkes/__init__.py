"""Marked Hawkes processes with general immigration: resolvents, limit
constants, exact simulation and Monte Carlo verification of the law of large
numbers and central limit theorems, plus a budding-microbe population model."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadReference, ConditionViolated, ConfigError, GridMismatch, HawkesError, HorizonTooShort, IntensityBlowup,
    InvalidKernel, InvalidParams, InvalidSpec, NotStandardForm, OutOfRange, StepTooCoarse, Unstable,
)
from .model import (  # noqa: E402
    BoxcarKernel, ConstantMu0, DiscreteMarks, ExponentialKernel, ExponentialMu0, HumpKernel, ModelSpec,
    PowerKernel, SampledMarks, SaturatingShot, UnitStepShot, WindowShot, ZeroMu0, branching_ratio,
    stationary_mu0, validate,
)
from .resolvent import GridFunction, ResolventTable, build_table, l1_and_tail, mean_intensity, solve_resolvent  # noqa: E402,E501
from .limits import (  # noqa: E402
    compute_constants, lln_drifts, measure_clt_variance, shot_clt_variances, sigma_Z2,
    standard_hawkes_constants, total_count_clt_variance,
)
from .simulate import PathRecord, simulate_path  # noqa: E402
from .montecarlo import ExperimentConfig, Functional, run_experiment  # noqa: E402

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and getattr(obj, "__module__", "").startswith(__name__)]
