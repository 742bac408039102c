"""floqtrk: energy-weighted dipole sum rules for driven and photon-coupled
quantum models.

The package builds 1D matter models (grids and few-level systems), lifts
them to the extended (Sambe) space of a periodic classical drive or couples
them to a quantized photon mode, and evaluates the energy-weighted dipole
sum rule in every form - static, full extended-space, first-zone resolved,
and joint light-matter - each against an exact finite-dimensional
double-commutator oracle.
"""

from .errors import (
    ConfigError,
    FloqtrkError,
    InputError,
    NumericError,
    SizeError,
    ZoneError,
)
from .floquet import (
    EigenSystem,
    FfbzSelection,
    FloquetMatrix,
    FloquetMode,
    FoldedLabel,
    FourierBlockSet,
    SambeSpec,
    assemble_floquet_matrix,
    diagonalize_hermitian,
    fold_and_select_ffbz,
    fold_label,
    fourier_blocks_of_hamiltonian,
    shift_replica,
)
from .model import (
    DriveComponent,
    DriveSpec,
    FewLevelModel,
    GridBasis,
    InteractionSpec,
    MatterOperator,
    PotentialSpec,
    build_dipole,
    build_grid_hamiltonian,
    build_two_electron_hamiltonian,
    double_commutator_expectation,
    evaluate_drive,
    kinetic_matrix,
)
from .qed import (
    ConvergenceRow,
    FockSpec,
    PolaritonState,
    build_joint_hamiltonian,
    joint_dipole,
    photon_cutoff_convergence,
    sumrule_qed,
)
from .sumrule import (
    Contribution,
    DipoleFourierSet,
    SpectralDensity,
    Stick,
    SumRuleReport,
    dipole_fourier_components,
    first_moment,
    select_reference,
    select_reference_sambe,
    spectral_density,
    static_trk,
    sumrule_ffbz,
    sumrule_sambe,
)
from .version import __version__

__all__ = [
    "__version__",
    "ConfigError",
    "Contribution",
    "ConvergenceRow",
    "DipoleFourierSet",
    "DriveComponent",
    "DriveSpec",
    "EigenSystem",
    "FewLevelModel",
    "FfbzSelection",
    "FloqtrkError",
    "FloquetMatrix",
    "FloquetMode",
    "FockSpec",
    "FoldedLabel",
    "FourierBlockSet",
    "GridBasis",
    "InputError",
    "InteractionSpec",
    "MatterOperator",
    "NumericError",
    "PolaritonState",
    "PotentialSpec",
    "SambeSpec",
    "SizeError",
    "SpectralDensity",
    "Stick",
    "SumRuleReport",
    "ZoneError",
    "assemble_floquet_matrix",
    "build_dipole",
    "build_grid_hamiltonian",
    "build_joint_hamiltonian",
    "build_two_electron_hamiltonian",
    "diagonalize_hermitian",
    "dipole_fourier_components",
    "double_commutator_expectation",
    "evaluate_drive",
    "first_moment",
    "fold_and_select_ffbz",
    "fold_label",
    "fourier_blocks_of_hamiltonian",
    "joint_dipole",
    "kinetic_matrix",
    "photon_cutoff_convergence",
    "select_reference",
    "select_reference_sambe",
    "shift_replica",
    "spectral_density",
    "static_trk",
    "sumrule_ffbz",
    "sumrule_qed",
    "sumrule_sambe",
]
