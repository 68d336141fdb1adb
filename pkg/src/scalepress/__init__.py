"""Scale-pressure quantities on finite metric systems with a Z^d action."""

from .certified import CertifiedValue, log_sum_exp
from .errors import (
    ConfigError,
    DomainError,
    InvalidArgumentError,
    InvalidSystemError,
    ScalePressError,
    SizeLimitError,
)
from .group import (
    FinitePatch,
    FolnerSequence,
    GroupModel,
    canonical_enumeration,
    empirical_temperedness_constant,
    folner_box,
    folner_defect,
    temperedness_ratio,
)
from .measure import (
    InvariantMeasure,
    Partition,
    condition_a_profile,
    dyn_ball_cover_count,
    ergodic_measures,
    extremal_measure,
    measure_pressure,
    partition_entropy,
    variational_report,
)
from .optim import SolveCaps
from .pressure import (
    CellCache,
    PressureProfile,
    cover_values,
    pressure_profile,
    scale_pressure_estimate,
    sep_count,
    separated_value,
    spa_count,
    spanning_value,
)
from .pseudo import (
    PseudoOrbitWindow,
    enumerate_pseudo_orbits,
    hausdorff_gap,
    orbit_space,
    po_separated,
    po_spanning,
    psp_report,
    tracking_parameters,
    true_orbit_windows,
    window_patch,
)
from .scale import ScaleFunction, classify, scale_property_defect
from .system import (
    DynMetric,
    FiniteGSystem,
    Potential,
    birkhoff_sum,
    birkhoff_vector,
    build_periodic_subshift,
    build_rotation,
    dyn_metric,
    load_system,
    random_system,
    save_system,
    symbol_origin_potential,
    verify_action,
)

__version__ = "0.1.0"
