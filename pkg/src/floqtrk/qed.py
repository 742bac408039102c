"""Joint matter-photon models: quantized single-mode light instead of a
classical drive.

The joint Hamiltonian on the matter (x) Fock product space is
H = H_M (x) I + I (x) omega_c a^dag a - g * d (x) (a + a^dag), with the
field operator at the matter E = g (a + a^dag) and the zero-point constant
omitted (it drops out of every energy difference). There is no folding
here: the spectrum is bounded below and the energy-weighted dipole sum runs
over plain eigenstate differences, exactly as in the static case but in the
enlarged space. Because d (x) I commutes with every photon-only operator
and with the bilinear coupling, the double-commutator oracle again reduces
to the bare matter commutator - evaluated here by direct matrix algebra on
the full joint operator, so the reduction is checked rather than assumed.

The API accepts a list of mode specifications for forward compatibility,
but only a single mode is implemented.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError, SizeError
from .floquet import EigenSystem, diagonalize_hermitian
from .model import MatterOperator
from .sumrule import SumRuleReport, _closure_report

#: Dense-eigensolve guard for the matter (x) Fock product dimension.
MAX_JOINT_DIM = 6000


@dataclass(frozen=True)
class FockSpec:
    """Single quantized mode: cutoff, frequency, and coupling amplitude.

    The photon basis is |0> .. |n_max>; the field at the matter is
    E = g (a + a^dag).
    """

    n_max: int
    omega_c: float
    g: float

    def __post_init__(self) -> None:
        if self.n_max < 0:
            raise InputError(f"photon cutoff must be >= 0, got {self.n_max}")
        if self.omega_c <= 0:
            raise InputError(f"mode frequency must be > 0, got {self.omega_c}")
        if isinstance(self.g, complex):
            raise InputError(f"coupling amplitude must be real, got {self.g!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True, eq=False)
class PolaritonState:
    """One eigenstate of the joint light-matter Hamiltonian."""

    energy: float
    coefficients: np.ndarray  # matter (x) Fock product basis, matter-major

    def __post_init__(self) -> None:
        norm2 = float(np.sum(np.abs(self.coefficients) ** 2))
        if abs(norm2 - 1.0) > 1e-10:
            raise InputError(f"state norm^2 = {norm2!r}, expected 1 within 1e-10")

    def fock_populations(self, fock_dim: int) -> np.ndarray:
        """Photon-number distribution, traced over the matter index."""
        table = self.coefficients.reshape(-1, fock_dim)
        return np.sum(np.abs(table) ** 2, axis=0)


def fock_number_operator(n_max: int) -> np.ndarray:
    """a^dag a on the truncated photon basis."""
    return np.diag(np.arange(n_max + 1, dtype=np.float64))


def fock_displacement_operator(n_max: int) -> np.ndarray:
    """a + a^dag on the truncated photon basis."""
    ladder = np.sqrt(np.arange(1, n_max + 1, dtype=np.float64))
    return np.diag(ladder, k=1) + np.diag(ladder, k=-1)


def _single_mode(fock: FockSpec | Sequence[FockSpec]) -> FockSpec:
    if isinstance(fock, FockSpec):
        return fock
    modes = tuple(fock)
    if len(modes) != 1:
        raise InputError(
            f"multimode coupling is not implemented; supply exactly one mode, "
            f"got {len(modes)}"
        )
    return modes[0]


def build_joint_hamiltonian(
    h_matter: MatterOperator,
    d: MatterOperator,
    fock: FockSpec | Sequence[FockSpec],
) -> np.ndarray:
    """Dense joint Hamiltonian on the matter (x) Fock product basis.

    H = H_M (x) I + I (x) omega_c a^dag a - g * d (x) (a + a^dag); no
    dipole self-energy term and no zero-point constant. The product basis
    is matter-major: index = matter_index * fock_dim + photon_index.
    """
    mode = _single_mode(fock)
    if h_matter.dim != d.dim:
        raise InputError(
            f"matter Hamiltonian dim {h_matter.dim} != dipole dim {d.dim}"
        )
    joint_dim = h_matter.dim * mode.dim
    if joint_dim > MAX_JOINT_DIM:
        raise SizeError(
            f"joint dimension {joint_dim} exceeds the dense guard {MAX_JOINT_DIM}"
        )
    eye_fock = np.eye(mode.dim)
    eye_matter = np.eye(h_matter.dim)
    h = np.kron(h_matter.matrix, eye_fock)
    h += mode.omega_c * np.kron(eye_matter, fock_number_operator(mode.n_max))
    if mode.g != 0.0:
        h -= mode.g * np.kron(d.matrix, fock_displacement_operator(mode.n_max))
    return h


def joint_dipole(d: MatterOperator, fock: FockSpec | Sequence[FockSpec]) -> np.ndarray:
    """The matter dipole lifted to the product space: d (x) I."""
    mode = _single_mode(fock)
    return np.kron(d.matrix, np.eye(mode.dim))


def select_reference_joint(
    system: EigenSystem, matter_ground: np.ndarray, fock_dim: int
) -> int:
    """Joint eigenpair with the largest (matter ground) (x) |0> weight."""
    target = np.kron(matter_ground, np.eye(fock_dim)[0])
    overlaps = np.abs(target.conj() @ system.vectors) ** 2
    return int(np.argmax(overlaps))


def sumrule_qed(
    spectrum: EigenSystem,
    d_joint: np.ndarray,
    reference: int,
    *,
    h_joint: np.ndarray,
    n_electrons: int = 1,
) -> SumRuleReport:
    """Energy-weighted dipole sum over the full joint spectrum.

    value = 2 sum_beta (E_beta - E_alpha) |<alpha| d(x)I |beta>|^2 with beta
    running over eigenstates of the interacting joint Hamiltonian. The
    oracle is the joint double-commutator expectation evaluated by direct
    matrix algebra; the closure identity keeps oracle_residual below 1e-8
    relative for any reference, converged or not.
    """
    if spectrum.dim != h_joint.shape[0]:
        raise InputError(
            f"spectrum has {spectrum.dim} eigenpairs, expected the complete "
            f"joint dimension {h_joint.shape[0]}"
        )
    if d_joint.shape != h_joint.shape:
        raise InputError(
            f"joint dipole shape {d_joint.shape} != Hamiltonian shape {h_joint.shape}"
        )
    return _closure_report(
        kind="qed",
        system=spectrum,
        h_full=h_joint,
        d_full=d_joint,
        reference=reference,
        target=float(n_electrons),
        omega=None,
    )


@dataclass(frozen=True)
class ConvergenceRow:
    """One photon-cutoff family member of :func:`photon_cutoff_convergence`."""

    n_max: int
    value: float
    oracle_residual: float
    delta: float | None  # value - previous row's value; None on the first row
    edge_population: float  # reference population in the top two Fock levels
    converged: bool


def photon_cutoff_convergence(
    h_matter: MatterOperator,
    d: MatterOperator,
    focks: Sequence[FockSpec],
    reference: int = 0,
    *,
    n_electrons: int = 1,
) -> tuple[ConvergenceRow, ...]:
    """Sum-rule value across a family of increasing photon cutoffs.

    A row is converged when |delta| from the previous row is below 1e-8 and
    the reference state's population in the top two Fock levels is below
    1e-10 (so the truncation edge is unoccupied, not merely stationary).

    Parameters
    ----------
    focks:
        At least three specifications with strictly increasing ``n_max``
        and identical ``omega_c`` and ``g``.
    reference:
        Eigenpair index within each family member's ascending spectrum.
    """
    modes = tuple(focks)
    if len(modes) < 3:
        raise InputError(
            f"cutoff convergence needs at least 3 family members, got {len(modes)}"
        )
    for prev, nxt in zip(modes, modes[1:]):
        if nxt.n_max <= prev.n_max:
            raise InputError(
                f"photon cutoffs must be strictly increasing, got "
                f"{prev.n_max} then {nxt.n_max}"
            )
        if nxt.omega_c != prev.omega_c or nxt.g != prev.g:
            raise InputError(
                "cutoff family members must share omega_c and g"
            )
    rows: list[ConvergenceRow] = []
    previous_value: float | None = None
    for mode in modes:
        h_joint = build_joint_hamiltonian(h_matter, d, mode)
        system = diagonalize_hermitian(h_joint)
        report = sumrule_qed(
            system,
            joint_dipole(d, mode),
            reference,
            h_joint=h_joint,
            n_electrons=n_electrons,
        )
        state = PolaritonState(
            energy=float(system.values[reference]),
            coefficients=system.vectors[:, reference],
        )
        populations = state.fock_populations(mode.dim)
        edge = float(math.fsum(populations[-2:]))
        delta = None if previous_value is None else report.value - previous_value
        converged = (
            delta is not None and abs(delta) < 1e-8 and edge < 1e-10
        )
        rows.append(
            ConvergenceRow(
                n_max=mode.n_max,
                value=report.value,
                oracle_residual=report.oracle_residual,
                delta=delta,
                edge_population=edge,
                converged=converged,
            )
        )
        previous_value = report.value
    return tuple(rows)
