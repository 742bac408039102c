"""Joint light-matter models and the photon-cutoff convergence policy."""

import numpy as np
import pytest

import oracles
from floqtrk import (
    EigenSystem,
    FockSpec,
    GridBasis,
    InputError,
    MatterOperator,
    PolaritonState,
    PotentialSpec,
    SizeError,
    build_dipole,
    build_grid_hamiltonian,
    build_joint_hamiltonian,
    diagonalize_hermitian,
    joint_dipole,
    photon_cutoff_convergence,
    static_trk,
    sumrule_qed,
)
from floqtrk.qed import (
    fock_displacement_operator,
    fock_number_operator,
    select_reference_joint,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
TWO_H = MatterOperator(np.diag([0.0, 1.0]), basis_tag="levels:2")
TWO_D = MatterOperator(SX, basis_tag="levels:2")


def qed_report(h, d, fock, reference=0):
    """Diagonalize the joint Hamiltonian and evaluate its sum rule."""
    h_joint = build_joint_hamiltonian(h, d, fock)
    system = diagonalize_hermitian(h_joint)
    report = sumrule_qed(
        system, joint_dipole(d, fock), reference, h_joint=h_joint
    )
    return report, system, h_joint


def test_fock_spec_validation():
    """Negative cutoffs, bad frequencies, and complex couplings are refused."""
    with pytest.raises(InputError):
        FockSpec(n_max=-1, omega_c=1.0, g=0.1)
    with pytest.raises(InputError):
        FockSpec(n_max=4, omega_c=0.0, g=0.1)
    with pytest.raises(InputError):
        FockSpec(n_max=4, omega_c=1.0, g=0.1 + 0.2j)


def test_fock_operator_entries():
    """Number and displacement operators have the textbook entries."""
    number = fock_number_operator(3)
    assert np.array_equal(number, np.diag([0.0, 1.0, 2.0, 3.0]))
    disp = fock_displacement_operator(3)
    assert abs(disp[0, 1] - 1.0) < 1e-15
    assert abs(disp[1, 2] - np.sqrt(2.0)) < 1e-15
    assert abs(disp[2, 3] - np.sqrt(3.0)) < 1e-15
    assert np.array_equal(disp, disp.T)
    assert abs(disp[0, 2]) == 0.0


def test_joint_dimension_and_hermiticity():
    """Two matter levels and four photon levels give an 8x8 Hermitian matrix."""
    fock = FockSpec(n_max=3, omega_c=1.0, g=0.1)
    h_joint = build_joint_hamiltonian(TWO_H, TWO_D, fock)
    assert h_joint.shape == (8, 8)
    assert np.max(np.abs(h_joint - h_joint.conj().T)) <= 1e-12
    assert joint_dipole(TWO_D, fock).shape == (8, 8)


def test_joint_spectrum_separates_without_coupling():
    """At g = 0 the joint spectrum is every E_a + k * omega_c."""
    fock = FockSpec(n_max=3, omega_c=0.7, g=0.0)
    h_joint = build_joint_hamiltonian(TWO_H, TWO_D, fock)
    expected = np.sort([e + k * 0.7 for e in (0.0, 1.0) for k in range(4)])
    assert np.max(np.abs(np.linalg.eigvalsh(h_joint) - expected)) < 1e-12


def test_joint_size_guard():
    """Product dimensions beyond the dense guard are rejected."""
    big = MatterOperator(np.zeros((100, 100)), basis_tag="t")
    with pytest.raises(SizeError):
        build_joint_hamiltonian(big, big, FockSpec(n_max=99, omega_c=1.0, g=0.1))


def test_joint_dimension_mismatch():
    """Matter Hamiltonian and dipole dimensions must agree."""
    d3 = MatterOperator(np.zeros((3, 3)), basis_tag="t")
    with pytest.raises(InputError):
        build_joint_hamiltonian(TWO_H, d3, FockSpec(n_max=2, omega_c=1.0, g=0.1))


def test_dipole_commutes_with_field_terms():
    """d (x) I commutes with every photon-only and coupling term."""
    fock = FockSpec(n_max=4, omega_c=0.9, g=0.3)
    h_joint = build_joint_hamiltonian(TWO_H, TWO_D, fock)
    dj = joint_dipole(TWO_D, fock)
    field_part = h_joint - np.kron(TWO_H.matrix, np.eye(5))
    comm = dj @ field_part - field_part @ dj
    assert np.max(np.abs(comm)) <= 1e-12


def test_multimode_list_handling():
    """A one-element mode list works; two modes are not implemented."""
    fock = FockSpec(n_max=2, omega_c=1.0, g=0.1)
    single = build_joint_hamiltonian(TWO_H, TWO_D, [fock])
    assert single.shape == (6, 6)
    with pytest.raises(InputError):
        build_joint_hamiltonian(TWO_H, TWO_D, [fock, fock])


def test_uncoupled_sum_equals_static():
    """At g = 0 the joint sum collapses to the static matter sum."""
    fock = FockSpec(n_max=6, omega_c=0.7, g=0.0)
    report, _, _ = qed_report(TWO_H, TWO_D, fock)
    static = static_trk(TWO_H, TWO_D)
    assert abs(report.value - static.value) <= 1e-10
    assert report.kind == "qed"
    assert report.omega is None


def test_weak_coupling_continuity():
    """A vanishing coupling changes the sum by far less than 1e-6."""
    base, _, _ = qed_report(TWO_H, TWO_D, FockSpec(n_max=8, omega_c=0.9, g=0.0))
    tiny, _, _ = qed_report(TWO_H, TWO_D, FockSpec(n_max=8, omega_c=0.9, g=1e-6))
    assert abs(tiny.value - base.value) <= 1e-6


def test_grid_matter_with_photon_mode():
    """The coupled oscillator grid keeps the one-electron sum."""
    grid = GridBasis(-10.0, 10.0, 61)
    h = build_grid_hamiltonian(grid, PotentialSpec.harmonic(1.0), "sinc_dvr")
    d = build_dipole(grid)
    fock = FockSpec(n_max=12, omega_c=1.2, g=0.05)
    report, system, _ = qed_report(h, d, fock)
    assert abs(report.value - 1.0) <= 1e-10
    assert abs(report.oracle_residual) <= 1e-8 * abs(report.value)
    matter_ground = diagonalize_hermitian(h.matrix).vectors[:, 0]
    assert select_reference_joint(system, matter_ground, 13) == 0


def test_two_level_sum_is_not_saturated():
    """A strongly coupled two-level system misses the sum badly while the
    closure identity still holds to machine precision."""
    fock = FockSpec(n_max=20, omega_c=0.9, g=0.3)
    report, _, _ = qed_report(TWO_H, TWO_D, fock)
    assert abs(report.value - 1.0) > 0.5
    assert abs(report.oracle_residual) <= 1e-8 * max(1.0, abs(report.value))


def test_closure_identity_every_joint_reference():
    """The sum matches the double commutator from every joint eigenstate."""
    fock = FockSpec(n_max=5, omega_c=0.9, g=0.2)
    h_joint = build_joint_hamiltonian(TWO_H, TWO_D, fock)
    system = diagonalize_hermitian(h_joint)
    dj = joint_dipole(TWO_D, fock)
    for reference in range(12):
        report = sumrule_qed(system, dj, reference, h_joint=h_joint)
        assert abs(report.oracle_residual) <= 1e-10 * max(1.0, abs(report.value))
        direct = oracles.double_commutator_value(
            h_joint, dj, system.vectors[:, reference]
        )
        assert abs(report.value - direct) <= 1e-10 * max(1.0, abs(report.value))


def test_qed_sum_input_checks():
    """Incomplete spectra and mismatched dipole shapes are rejected."""
    fock = FockSpec(n_max=3, omega_c=0.9, g=0.1)
    h_joint = build_joint_hamiltonian(TWO_H, TWO_D, fock)
    system = diagonalize_hermitian(h_joint)
    dj = joint_dipole(TWO_D, fock)
    truncated = EigenSystem(system.values[:4], system.vectors[:, :4])
    with pytest.raises(InputError):
        sumrule_qed(truncated, dj, 0, h_joint=h_joint)
    with pytest.raises(InputError):
        sumrule_qed(system, np.zeros((6, 6)), 0, h_joint=h_joint)


def test_spectrum_is_bounded_below():
    """The joint spectrum has a true ground state overlapping matter ground
    (x) vacuum, with no folding ambiguity."""
    fock = FockSpec(n_max=10, omega_c=0.9, g=0.05)
    _, system, _ = qed_report(TWO_H, TWO_D, fock)
    assert np.all(np.diff(system.values) >= 0.0)
    assert select_reference_joint(system, np.array([1.0, 0.0]), 11) == 0


def test_cutoff_family_validation():
    """Short, non-increasing, or inconsistent families are rejected."""
    f = lambda n: FockSpec(n_max=n, omega_c=0.9, g=0.1)
    with pytest.raises(InputError):
        photon_cutoff_convergence(TWO_H, TWO_D, [f(2), f(4)])
    with pytest.raises(InputError):
        photon_cutoff_convergence(TWO_H, TWO_D, [f(4), f(4), f(8)])
    with pytest.raises(InputError):
        photon_cutoff_convergence(
            TWO_H,
            TWO_D,
            [f(2), f(4), FockSpec(n_max=8, omega_c=0.8, g=0.1)],
        )
    with pytest.raises(InputError):
        photon_cutoff_convergence(
            TWO_H,
            TWO_D,
            [f(2), f(4), FockSpec(n_max=8, omega_c=0.9, g=0.2)],
        )


def test_cutoff_family_uncoupled_is_flat():
    """At g = 0 every enlargement changes nothing."""
    family = [FockSpec(n_max=n, omega_c=0.7, g=0.0) for n in (2, 4, 6)]
    rows = photon_cutoff_convergence(TWO_H, TWO_D, family)
    assert rows[0].delta is None
    for row in rows[1:]:
        assert abs(row.delta) <= 1e-12
    for row in rows:
        assert abs(row.oracle_residual) <= 1e-10


def test_cutoff_family_deltas_shrink():
    """For a low-frequency mode on a parity-broken dipole the inter-row
    deltas decrease strictly with the cutoff."""
    h = MatterOperator(np.diag([0.0, 0.5]), basis_tag="levels:2")
    d = MatterOperator(np.array([[2.0, 1.0], [1.0, -2.0]]), basis_tag="levels:2")
    family = [FockSpec(n_max=n, omega_c=0.02, g=0.01) for n in (4, 8, 16, 32)]
    rows = photon_cutoff_convergence(h, d, family)
    deltas = [abs(row.delta) for row in rows[1:]]
    assert deltas[0] > deltas[1] > deltas[2]
    assert deltas[2] < 1e-8


def test_cutoff_convergence_depends_on_coupling():
    """A weak coupling converges at a smaller photon cutoff than a strong
    one under the same policy."""
    cutoffs = (4, 8, 16, 24)
    weak = photon_cutoff_convergence(
        TWO_H, TWO_D, [FockSpec(n_max=n, omega_c=0.9, g=0.01) for n in cutoffs]
    )
    strong = photon_cutoff_convergence(
        TWO_H, TWO_D, [FockSpec(n_max=n, omega_c=0.9, g=0.45) for n in cutoffs]
    )
    first_weak = next(row.n_max for row in weak if row.converged)
    first_strong = next(row.n_max for row in strong if row.converged)
    assert first_weak == 8
    assert first_strong == 16
    assert not strong[0].converged
    assert not strong[1].converged


def test_polariton_state_checks_and_populations():
    """States must be normalized; populations trace out the matter index."""
    with pytest.raises(InputError):
        PolaritonState(energy=0.0, coefficients=np.array([1.0, 1.0]))
    state = PolaritonState(
        energy=0.3, coefficients=np.array([0.6, 0.0, 0.0, 0.8])
    )
    populations = state.fock_populations(2)
    assert abs(populations[0] - 0.36) < 1e-14
    assert abs(populations[1] - 0.64) < 1e-14
