"""Control design and simulation for parallel DC-DC converter networks.

An inner current loop per converter shapes 1/(sL) into a unity-gain
low-pass with a 120 Hz notch; a shared outer pair (voltage + current
reference) closes the DC-link loop.  The package builds the published
controllers, simulates centralized and droop-compensated networks, and
numerically verifies the single/multi-converter equivalence and the
power-sharing bound.
"""

__version__ = "0.1.0"

from .analysis import (
    SharingSignals,
    equivalence_residual,
    ripple_amplitude,
    sharing_bound_check,
    steady_state,
    tracking_metrics,
)
from .converters import (
    BusState,
    ConverterParams,
    boost_params,
    buck_params,
    bus_derivative,
    duty_from_control,
    inductor_derivative,
    perturb_params,
)
from .design import (
    InnerDesign,
    OuterControllers,
    WeightSet,
    bus_voltage_plant,
    canonical_inner_design,
    canonical_outer,
    canonical_weights,
    controller_ratio_analysis,
    design_inner,
    droop_filter,
    generalized_plant,
    sensitivity_family,
    shaped_plant,
    weighted_closed_loop,
)
from .lti import (
    FrequencyGrid,
    StateSpace,
    TransferFunction,
    balanced_truncation,
    default_grid,
    discretize_tustin,
    freq_response,
    hinf_norm,
    hinf_norm_grid_oracle,
    is_stable,
    lyap_solve,
    minreal,
    poles,
    tf,
    tf_feedback,
    tf_sensitivity,
    tf_series,
)
from .netsim import (
    ConverterUnit,
    NetworkConfig,
    Schedule,
    Segment,
    SimResult,
    build_network,
    simulate,
    transfer_functions_of_network,
)
from .scenario import Scenario, build_scenario, load_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
