"""
Unit tests for known- and unknown-outcome measurement sequences.
"""

from math import comb

import numpy as np
import pytest

from enatp.entanglement import concurrence, concurrence_value
from enatp.errors import (
    BadEpsilonError,
    BranchLimitExceededError,
    DegenerateNormalizationError,
    InputNotCorrelatedError,
    NotDiagonalError,
    ZeroProbabilityError,
)
from enatp.matcore import det2
from enatp.measurements import (
    X_AXIS,
    Z_AXIS,
    SpecialWeakParams,
    brun,
    random_axis,
    random_invertible_measurement,
    special_weak,
)
from enatp.sequences import (
    apply_outcome,
    binomial_post_state,
    bloch_update,
    bloch_update_Mplus,
    closed_form_concurrence,
    cnatp_certificate,
    predicted_branch_concurrence,
    rounds_for,
    run_known,
    run_unknown,
)
from enatp.states import (
    PHI_PLUS,
    BlochForm,
    DensityMatrix2Q,
    PureState2Q,
    bloch_decompose,
    diagonalize_correlation,
    from_pure,
    random_pure,
    random_state,
    x_state_example,
)
from enatp.verification import branch_operators


@pytest.fixture
def bell():
    """|Φ+⟩⟨Φ+|."""
    return from_pure(PHI_PLUS)


def test_apply_outcome_probability(bell):
    """Test outcome probabilities on a Bell state."""
    m = brun(0.6)
    probability, post = apply_outcome(bell, m.plus, None)
    assert np.isclose(probability, 0.5)
    assert np.isclose(np.trace(post.matrix), 1.0)
    probability, _ = apply_outcome(bell, m.plus, m.minus)
    assert np.isclose(probability, 0.5 * 0.8 * 0.2 * 2)


def test_apply_outcome_zero_probability():
    """Test that an impossible outcome raises."""
    ket00 = from_pure(PureState2Q(np.array([1, 0, 0, 0])))
    projective = special_weak(SpecialWeakParams(1.0, Z_AXIS))
    with pytest.raises(ZeroProbabilityError):
        apply_outcome(ket00, projective.minus, None)


def test_rounds_for():
    """Test schedule construction for each target."""
    m = brun(0.2)
    assert rounds_for(m, "system", 2) == [(m, None), (m, None)]
    assert rounds_for(m, "environment", 1) == [(None, m)]
    assert rounds_for(m, "both", 1) == [(m, m)]
    assert rounds_for(m, "system", 0) == []
    with pytest.raises(ValueError):
        rounds_for(m, "system", -1)


def test_run_known_conserves_probability(bell):
    """Test Σ p = 1 and labels in outcome order."""
    schedule = rounds_for(brun(0.4), "both", 2)
    ensemble = run_known(bell, schedule)
    assert len(ensemble.branches) == 16
    assert np.isclose(ensemble.total_probability, 1.0)
    assert ensemble.branches[0].outcome_string == ("S+", "E+", "S+", "E+")
    assert ensemble.branches[-1].outcome_string == ("S-", "E-", "S-", "E-")


def test_run_known_average_matches_unknown():
    """Test that the probability-weighted branch mixture is the outcome-summed state."""
    rho = random_state("mixed", 21)
    schedule = [(random_invertible_measurement(1), None), (None, random_invertible_measurement(2))]
    schedule += rounds_for(special_weak(SpecialWeakParams(0.3, X_AXIS)), "both", 1)
    ensemble = run_known(rho, schedule)
    assert np.allclose(ensemble.average_state().matrix, run_unknown(rho, schedule).matrix, atol=1e-12)


def test_run_known_branch_concurrence_law():
    """Test C(branch) = Π|det| · C0 / p for random invertible schedules on mixed states."""
    rng = np.random.default_rng(5)
    for _ in range(10):
        rho = random_state("mixed", rng)
        c0 = concurrence_value(rho)
        schedule = [(random_invertible_measurement(rng), random_invertible_measurement(rng)) for _ in range(2)]
        ensemble = run_known(rho, schedule)
        for branch in ensemble.branches:
            dets = [det2(op) for op in branch_operators(schedule, branch.outcome_string)]
            predicted = predicted_branch_concurrence(c0, branch.probability, dets)
            assert np.isclose(branch.concurrence, predicted, rtol=1e-7, atol=1e-10)


def test_run_known_branches_stay_entangled():
    """Test that weak outcomes never disentangle a branch, while the mixture does."""
    rho = x_state_example(0.002)
    schedule = rounds_for(special_weak(SpecialWeakParams(0.1, X_AXIS)), "both", 1)
    ensemble = run_known(rho, schedule)
    assert ensemble.min_concurrence > 1e-3
    assert concurrence_value(run_unknown(rho, schedule)) < 1e-9


def test_run_known_collapse(bell):
    """Test that collapsing commuting outcomes gives binomial multiplicities."""
    n = 5
    schedule = rounds_for(brun(0.3), "system", n)
    full = run_known(bell, schedule)
    collapsed = run_known(bell, schedule, collapse=True)
    assert len(full.branches) == 2**n
    assert len(collapsed.branches) == n + 1
    assert sorted(b.multiplicity for b in collapsed.branches) == sorted(comb(n, k) for k in range(n + 1))
    assert np.isclose(collapsed.total_probability, 1.0)
    assert np.allclose(collapsed.average_state().matrix, full.average_state().matrix, atol=1e-12)


def test_run_known_collapse_rejects_non_commuting(bell):
    """Test that collapse needs commuting operators on each side."""
    schedule = rounds_for(brun(0.3), "system", 1) + rounds_for(special_weak(SpecialWeakParams(0.3, X_AXIS)), "system", 1)
    with pytest.raises(ValueError):
        run_known(bell, schedule, collapse=True)


def test_run_known_prunes_small_branches(bell):
    """Test pruning and the recorded dropped mass."""
    schedule = rounds_for(brun(0.9), "system", 2)
    ensemble = run_known(bell, schedule, prune_tol=0.1)
    assert [b.outcome_string for b in ensemble.branches] == [("S+", "S+"), ("S-", "S-")]
    assert np.isclose(ensemble.dropped_mass, 2 * 0.0475)
    assert np.isclose(ensemble.total_probability, 1.0)


def test_run_known_branch_limit(bell):
    """Test the branch cap."""
    with pytest.raises(BranchLimitExceededError):
        run_known(bell, rounds_for(brun(0.2), "both", 3), max_branches=10)


def test_run_known_workers_keep_order():
    """Test that threaded expansion gives the same ensemble."""
    rho = random_state("mixed", 30)
    schedule = [(random_invertible_measurement(s), random_invertible_measurement(s + 100)) for s in range(3)]
    serial = run_known(rho, schedule)
    threaded = run_known(rho, schedule, workers=4)
    assert [b.outcome_string for b in serial.branches] == [b.outcome_string for b in threaded.branches]
    assert np.allclose([b.probability for b in serial.branches], [b.probability for b in threaded.branches])


def test_run_unknown_preserves_trace(bell):
    """Test completeness keeps the trace at one."""
    final = run_unknown(bell, rounds_for(brun(0.5), "both", 4))
    assert np.isclose(np.trace(final.matrix), 1.0)


def test_one_sided_decay_on_pure_states():
    """Test C_n = (1 − ε²)^(n/2) C0 for pure inputs and arbitrary axes."""
    for seed_value in range(10):
        rho = from_pure(random_pure(seed_value))
        c0 = concurrence_value(rho)
        params = SpecialWeakParams(0.35, random_axis(seed_value + 50))
        for n in (1, 3, 6):
            final = run_unknown(rho, rounds_for(special_weak(params), "system", n))
            assert np.isclose(concurrence_value(final), closed_form_concurrence(c0, 0.35, n), atol=1e-9)


def test_binomial_post_state_matches_iteration():
    """Test the explicit binomial sum against round-by-round evolution on 100 states."""
    rng = np.random.default_rng(17)
    for _ in range(100):
        rho = random_state("mixed", rng)
        m_sys = special_weak(SpecialWeakParams(rng.uniform(-1, 1), random_axis(rng)))
        m_env = special_weak(SpecialWeakParams(rng.uniform(-1, 1), random_axis(rng)))
        schedule = rounds_for(m_sys, "system", 3) + [(None, m_env)] * 2
        oracle = binomial_post_state(rho, m_sys, 3, m_env, 2)
        assert np.abs(oracle.matrix - run_unknown(rho, schedule).matrix).max() < 1e-12


def test_bloch_update_matches_conjugation():
    """Test the closed-form update against direct conjugation for both outcomes."""
    rng = np.random.default_rng(8)
    for _ in range(200):
        _, rho_d = diagonalize_correlation(random_state("mixed", rng))
        form = bloch_decompose(rho_d)
        params = SpecialWeakParams(rng.uniform(-1, 1), random_axis(rng))
        m = special_weak(params)
        for outcome, op in zip("+-", m.operators):
            update = bloch_update(form, params, outcome)
            probability, post = apply_outcome(rho_d, op, None)
            direct = bloch_decompose(post)
            assert np.isclose(update.eta / 2, probability)
            assert np.allclose(update.a_prime, direct.a, atol=1e-10)
            assert np.allclose(update.b_prime, direct.b, atol=1e-10)
            assert np.allclose(update.T_prime, direct.T, atol=1e-10)


def test_bloch_update_rejects_non_diagonal():
    """Test that the update requires a diagonal correlation matrix."""
    form = bloch_decompose(random_state("mixed", 3))
    with pytest.raises(NotDiagonalError):
        bloch_update_Mplus(form, SpecialWeakParams(0.5, Z_AXIS))


def test_bloch_update_degenerate_normalization():
    """Test η = 0 for a projective outcome orthogonal to the system Bloch vector."""
    form = BlochForm(a=[0, 0, -1], b=np.zeros(3), T=np.zeros((3, 3)))
    with pytest.raises(DegenerateNormalizationError):
        bloch_update_Mplus(form, SpecialWeakParams(1.0, Z_AXIS))


def test_cnatp_certificate_projective_and_weak():
    """Test that projective outcomes leave no correlations and weak ones keep them."""
    for seed_value in range(10):
        rho = random_state("mixed", seed_value)
        axis = random_axis(seed_value + 20)
        projective = cnatp_certificate(rho, SpecialWeakParams(1.0, axis))
        assert projective.margin < 1e-9
        assert projective.gap_plus_direct < 1e-9
        weak = cnatp_certificate(rho, SpecialWeakParams(0.5, axis))
        assert weak.margin > 0.0
        assert np.isclose(weak.gap_plus, weak.gap_plus_direct, atol=1e-9)
        assert np.isclose(weak.gap_minus, weak.gap_minus_direct, atol=1e-9)
        assert np.isclose(weak.probability_plus + weak.probability_minus, 1.0)


def test_cnatp_certificate_rejects_product_state():
    """Test that a product input is rejected."""
    product = DensityMatrix2Q(np.kron(np.diag([0.6, 0.4]), np.diag([0.5, 0.5])))
    with pytest.raises(InputNotCorrelatedError):
        cnatp_certificate(product, SpecialWeakParams(0.5, Z_AXIS))


def test_closed_form_concurrence():
    """Test the one- and two-sided closed forms and their validation."""
    assert np.isclose(closed_form_concurrence(1.0, 0.5, 2), 0.75)
    assert np.isclose(closed_form_concurrence(1.0, 0.5, 2, 0.6, 2), 0.48)
    assert closed_form_concurrence(0.7, 0.3, 0) == 0.7
    assert closed_form_concurrence(1.0, 1.0, 1) == 0.0
    with pytest.raises(ValueError):
        closed_form_concurrence(1.5, 0.1, 1)
    with pytest.raises(BadEpsilonError):
        closed_form_concurrence(1.0, 1.1, 1)
    with pytest.raises(ValueError):
        closed_form_concurrence(1.0, 0.1, -1)


def test_predicted_branch_concurrence():
    """Test the branch prediction on a single Bell-state outcome."""
    m = brun(0.6)
    probability, post = apply_outcome(from_pure(PHI_PLUS), m.plus, None)
    predicted = predicted_branch_concurrence(1.0, probability, [det2(m.plus)])
    assert np.isclose(concurrence(post).value, predicted)
    assert np.isclose(predicted, 0.8)
