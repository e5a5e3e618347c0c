"""Linear probe response of a four-level J=1/2 <-> J=1/2 alkali system driven by
one linearly polarised control field: absorption, dispersion, group index,
Doppler averaging and Gaussian pulse delays."""

__version__ = "0.1.0"

from .core import (
    DensityComponent,
    NumericalDegeneracyError,
    NvaporError,
    PoleError,
    PropagatorFactors,
    ResponseSpectrum,
    SystemParams,
    ValidationError,
    build_params,
    intensity_of,
    load_config,
)
from .doppler import DopplerConfig, doppler_average, doppler_group_index, doppler_sweep_G, doppler_width
from .linear_response import (
    CoherenceBreakdown,
    response_equal_G,
    response_general,
    response_numeric,
    susceptibility,
)
from .observables import (
    GroupIndexPoint,
    decompose_contributions,
    dressed_states,
    group_index,
    sweep_contour,
    sweep_G,
    sweep_G1,
)
from .pulse import PulseSpec, PulseTrace, delay_to_group_index, propagate
from .steady_state import ZerothOrder, zeroth_order, zeroth_order_analytic, zeroth_order_numeric
