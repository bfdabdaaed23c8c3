"""
Unit tests for concurrence, the partial-transpose test and the product test.
"""

import numpy as np
import pytest

from enatp.entanglement import (
    concurrence,
    concurrence_value,
    factorization_gap,
    ppt_check,
    product_state_test,
    pure_concurrence,
    spin_flip,
)
from enatp.states import (
    PHI_PLUS,
    DensityMatrix2Q,
    LocalFrame,
    bell_mixture,
    from_pure,
    local_unitary,
    random_pure,
    random_state,
    random_unitary,
    schmidt_state,
    werner,
    x_state_example,
)


@pytest.mark.parametrize("method", ["factorized", "eigen"])
def test_bell_state_is_maximally_entangled(method):
    """Test C(|Φ+⟩) = 1."""
    result = concurrence(from_pure(PHI_PLUS), method=method)
    assert np.isclose(result.value, 1.0)
    assert np.allclose(result.sqrt_eigs, [1, 0, 0, 0], atol=1e-7)


def test_spin_flip_of_bell_state():
    """Test that |Φ+⟩⟨Φ+| is invariant under the spin flip."""
    rho = from_pure(PHI_PLUS)
    assert np.allclose(spin_flip(rho), rho.matrix)


def test_concurrence_of_product_state():
    """Test C = 0 for a product state."""
    rho = DensityMatrix2Q(np.kron(np.diag([0.7, 0.3]), np.diag([0.4, 0.6])))
    assert concurrence_value(rho) == 0.0


def test_concurrence_x_state():
    """Test C = 2|a| for ½(|00⟩⟨00| + |11⟩⟨11|) with coherence a."""
    for a in (0.0, 0.002, 0.1, 0.5):
        assert np.isclose(concurrence_value(x_state_example(a)), 2 * a, atol=1e-12)


def test_concurrence_bell_mixture():
    """Test C = 2·(5/8) − 1 for the Bell-diagonal mixture."""
    assert np.isclose(concurrence_value(bell_mixture()), 0.25)


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
def test_concurrence_werner(p):
    """Test C = max(0, (3p − 1)/2) for Werner states."""
    assert np.isclose(concurrence_value(werner(p)), max(0.0, (3 * p - 1) / 2), atol=1e-12)


def test_concurrence_schmidt_state():
    """Test C = sin θ for cos(θ/2)|00⟩ + sin(θ/2)|11⟩."""
    for theta in (1e-4, 0.3, 1.0, np.pi / 2):
        assert np.isclose(concurrence_value(from_pure(schmidt_state(theta))), np.sin(theta), atol=1e-12)


def test_pure_concurrence_agrees():
    """Test 2|ad − bc| against the mixed-state formula on random pure states."""
    for seed_value in range(50):
        psi = random_pure(seed_value)
        expected = pure_concurrence(psi)
        assert np.isclose(concurrence(from_pure(psi)).value, expected, atol=1e-10)
        assert np.isclose(concurrence(from_pure(psi), method="eigen").value, expected, atol=1e-7)


def test_concurrence_methods_agree_on_mixed_states():
    """Test that the three routes agree on full-rank mixed states."""
    for seed_value in range(20):
        rho = random_state("mixed", seed_value)
        reference = concurrence(rho).value
        for method in ("eigen", "charpoly"):
            value = concurrence(rho, method=method, clamp_tol=1e-9).value
            assert np.isclose(value, reference, atol=1e-8)


def test_ppt_check_bell_and_product():
    """Test the verdict on a Bell state and on a product state."""
    verdict = ppt_check(from_pure(PHI_PLUS))
    assert not verdict.ppt
    assert not verdict.concurrence_zero
    assert np.isclose(verdict.min_pt_eigenvalue, -0.5)
    assert np.isclose(verdict.pt_determinant, -1 / 16)
    assert np.isclose(verdict.product_gap, np.sqrt(3))

    product = DensityMatrix2Q(np.kron(np.diag([0.5, 0.5]), np.diag([0.9, 0.1])))
    verdict = ppt_check(product)
    assert verdict.ppt
    assert verdict.concurrence_zero
    assert verdict.product_gap < 1e-12


def test_ppt_agrees_with_concurrence_on_random_states():
    """Test C = 0 ⇔ PPT ⇔ det(ρ^Γ) ≥ 0 on 10⁴ seeded states."""
    rng = np.random.default_rng(99)
    for index in range(10_000):
        rho = random_state("mixed" if index % 4 else "pure", rng)
        verdict = ppt_check(rho)
        assert verdict.concurrence_zero == verdict.ppt
        if not verdict.ppt:
            assert verdict.pt_determinant < 0


def test_product_state_test():
    """Test product detection by both gaps."""
    product = DensityMatrix2Q(np.kron(np.array([[0.6, 0.2], [0.2, 0.4]]), np.diag([0.3, 0.7])))
    is_product, gap = product_state_test(product)
    assert is_product
    assert gap < 1e-12
    assert factorization_gap(product) < 1e-12

    # Separable but correlated.
    classical = DensityMatrix2Q(np.diag([0.5, 0.0, 0.0, 0.5]))
    is_product, gap = product_state_test(classical)
    assert not is_product
    assert np.isclose(gap, 1.0)
    assert concurrence_value(classical) < 1e-12


@pytest.mark.parametrize(
    "rho, expected",
    [(werner(0.0), 0.0), (werner(0.5), 0.25), (x_state_example(0.002), 0.004)],
)
def test_charpoly_concurrence_on_degenerate_spectra(rho, expected):
    """Test the characteristic-polynomial route where ρρ̃ has repeated or zero eigenvalues."""
    assert np.isclose(concurrence(rho, method="charpoly").value, expected, atol=1e-9)


def test_charpoly_concurrence_on_pure_states():
    """Test the characteristic-polynomial route on rank-one ρρ̃."""
    for seed_value in range(500):
        psi = random_pure(seed_value)
        value = concurrence(from_pure(psi), method="charpoly").value
        assert np.isclose(value, pure_concurrence(psi), atol=1e-7)


def test_concurrence_is_local_unitary_invariant():
    """Test C((U⊗V) ρ (U⊗V)†) = C(ρ) for random states and local frames."""
    for seed_value in range(200):
        rho = random_state("mixed", seed_value)
        frame = LocalFrame(U=random_unitary(1000 + seed_value), V=random_unitary(2000 + seed_value))
        rotated = local_unitary(rho, frame)
        assert abs(concurrence(rotated).value - concurrence(rho).value) < 1e-9
