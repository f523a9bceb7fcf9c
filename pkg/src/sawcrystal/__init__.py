"""Superconducting artificial atom coupled to a surface-acoustic-wave phononic crystal.

Forward model from device geometry to spectroscopy maps: Bloch bands and
quasinormal modes of the stripe lattice, transmon tuning, atom-mode coupling
and the driven steady state, plus the fits used to read the maps back.
"""

from .coupling import (
    ElectrodeGeometry,
    PiezoConstants,
    coupling_strength,
    electrode_function,
    overlap_potential,
    zero_point_displacement,
)
from .dynamics import (
    SystemModel,
    lindblad_steady_state,
    linear_response,
    reflection,
    semiclassical_response,
)
from .errors import (
    AmbiguityError,
    ConfigError,
    DegenerateGapError,
    DomainError,
    FitError,
    IndexCollisionError,
    NumericalError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    ResourceError,
    SawCrystalError,
)
from .fitting import extract_anticrossing, fit_lorentzian, fit_q_from_dip
from .lattice import (
    LatticeSpec,
    QuasiNormalMode,
    band_gap,
    dispersion,
    find_qnms,
    mode_frequency_2d,
    quality_factor,
    transverse_modes,
    unit_cell_matrix,
)
from .spectroscopy import (
    CoupledMode,
    DeviceAssembly,
    SweepSpec,
    assemble_device,
    build_device,
    simulate_map,
    simulate_trace,
)
from .transmon import (
    TransmonSpec,
    flux_for_frequency,
    matrix_element_xi0,
    qubit_frequency,
)

__version__ = "0.1.0"
