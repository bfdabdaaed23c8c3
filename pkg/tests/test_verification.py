"""
Unit tests for the verification suites and the worked examples.
"""

import warnings

import numpy as np
import pytest

from enatp.entanglement import concurrence_value
from enatp.measurements import X_AXIS, Z_AXIS, SpecialWeakParams, brun, random_axis, special_weak
from enatp.sequences import rounds_for
from enatp.states import PHI_PLUS, from_pure, random_pure, random_state
from enatp.verification import (
    SUITES,
    determinant_identity_error,
    min_branch_correlation_gap,
    random_weak_sequence,
    theorem2_suite,
    k_channel_matrix,
    run_example,
    run_suite,
    schmidt_aligned,
    schmidt_aligned_state,
    verify_theorem1,
)


def test_determinant_identity_error_is_small():
    """Test the identity on a fixed operator."""
    op = np.array([[1 + 2j, -0.5], [0.3j, 2.0]])
    assert determinant_identity_error(op) < 1e-14


def test_schmidt_aligned_state():
    """Test construction and detection of Schmidt-aligned states."""
    n_sys, n_env = random_axis(1), random_axis(2)
    psi = schmidt_aligned_state(0.8, n_sys, n_env)
    assert schmidt_aligned(psi.amplitudes, n_sys, n_env)
    assert np.isclose(concurrence_value(from_pure(psi)), np.sin(0.8))
    assert schmidt_aligned(PHI_PLUS.amplitudes, Z_AXIS, Z_AXIS)
    assert schmidt_aligned(PHI_PLUS.amplitudes, X_AXIS, X_AXIS)
    assert not schmidt_aligned(PHI_PLUS.amplitudes, Z_AXIS, X_AXIS)
    assert not schmidt_aligned(random_pure(3).amplitudes, Z_AXIS, Z_AXIS)


def test_verify_theorem1():
    """Test that random invertible schedules keep every branch entangled."""
    report = verify_theorem1(seed=3, trials=5, rounds=2)
    assert report.passed
    assert report.branches_checked == 5 * 2**4
    assert report.min_branch_concurrence > 0.0
    assert report.max_ratio_error < 1e-8
    assert report.singular_detected


@pytest.mark.parametrize("suite", SUITES)
def test_each_suite_passes(suite):
    """Test every suite on a small seeded run."""
    (report,) = run_suite(suite, seed=7, trials=3)
    assert report.suite == suite
    failing = [check.name for check in report.checks if not check.passed]
    assert report.passed, failing


def test_run_suite_all_and_unknown():
    """Test suite dispatch."""
    reports = run_suite("all", seed=1, trials=1)
    assert [r.suite for r in reports] == list(SUITES)
    with pytest.raises(ValueError):
        run_suite("bogus", seed=1, trials=1)


def test_weak_sequence_keeps_correlations_on_bell_branches():
    """Test ‖T − a bᵀ‖ ≥ √2·C on every branch of three weak rounds on a Bell state."""
    bell = from_pure(PHI_PLUS)
    gap = min_branch_correlation_gap(bell, rounds_for(brun(0.6), "system", 3))
    # Worst branch: amplitude ratio 8, concurrence 16/65.
    assert gap > np.sqrt(2) * 16 / 65 - 1e-9
    projective = special_weak(SpecialWeakParams(1.0, Z_AXIS))
    assert min_branch_correlation_gap(bell, rounds_for(projective, "system", 2)) < 1e-9


def test_random_weak_sequences_keep_correlations():
    """Test that recorded outcomes of two-sided weak sequences never produce a product state."""
    rng = np.random.default_rng(21)
    for _ in range(5):
        rho = random_state("mixed", rng)
        sequence = random_weak_sequence(rng, 3)
        assert len(sequence) == 3
        assert all(system is not None and environment is not None for system, environment in sequence)
        assert min_branch_correlation_gap(rho, sequence) > 1e-9


def test_theorem2_suite_reports_sequence_check():
    """Test that the multi-round correlation check is part of the suite."""
    report = theorem2_suite(seed=5, trials=2)
    names = [check.name for check in report.checks]
    assert "weak sequences keep correlations on every branch" in names
    assert report.passed


def test_suite_checks_hold_plain_bools():
    """Test that suite results are built from Python bools without numpy bool warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        reports = run_suite("all", seed=2, trials=1)
    assert all(type(check.passed) is bool for report in reports for check in report.checks)
    assert not [w for w in caught if issubclass(w.category, DeprecationWarning) and "bool" in str(w.message)]


def test_example1():
    """Test the X-state example: assigned state separable, every branch entangled."""
    report = run_example("1")
    assert np.isclose(report.initial_concurrence, 0.004)
    assert report.recorded_target == "both"
    assert report.separable
    assert report.ppt
    assert report.all_branches_entangled
    readings = {item.target: item for item in report.interpretations}
    assert set(readings) == {"system", "environment", "both"}
    assert not readings["system"].separable
    assert not readings["environment"].separable


def test_example1_parameters():
    """Test parameter overrides and unknown keys."""
    report = run_example("1", {"a": 0.1, "eps": 0.1})
    assert np.isclose(report.initial_concurrence, 0.2)
    assert not report.separable
    with pytest.raises(ValueError):
        run_example("1", {"theta": 0.1})


def test_example2():
    """Test the Bell mixture example."""
    report = run_example("2")
    assert np.isclose(report.initial_concurrence, 0.25)
    assert report.separable
    assert report.ppt
    assert report.final_concurrence < 1e-9


def test_example3_weak_case():
    """Test the default weak K± case keeps C = |1 − 2ε²| sin θ."""
    report = run_example("3")
    eps, theta = report.parameters["eps"], report.parameters["theta"]
    assert eps == 0.01
    assert np.isclose(report.final_concurrence, abs(1 - 2 * eps**2) * np.sin(theta), rtol=1e-8)
    assert not report.separable
    assert report.all_branches_entangled
    assert report.expected_matrix_error < 1e-12
    assert report.weakness is not None
    assert report.weakness.is_weak
    assert np.allclose(report.weakness.strengths, [0.02, 1 / 0.98 - 1])


def test_example_appendix():
    """Test ε = 1/√2 disentangles the assigned state with det(ρ^Γ) = 0."""
    report = run_example("appendix")
    assert report.separable
    assert report.ppt
    assert abs(report.pt_determinant) < 1e-10
    assert report.expected_matrix_error < 1e-12
    assert report.all_branches_entangled


def test_example3_singular_strength():
    """Test that ε = 0.5 still runs with a singular K− and no weakness report."""
    report = run_example("3", {"eps": 0.5, "theta": 1.0})
    assert report.weakness is None
    assert np.isclose(report.final_concurrence, 0.5 * np.sin(1.0))
    assert not report.all_branches_entangled


def test_unknown_example():
    """Test that unknown example names are rejected."""
    with pytest.raises(ValueError):
        run_example("4")


def test_k_channel_matrix_trace():
    """Test the closed-form matrix is a unit-trace state."""
    mat = k_channel_matrix(0.3, 1.2)
    assert np.isclose(np.trace(mat).real, 1.0)
    assert np.allclose(mat, mat.conj().T)
