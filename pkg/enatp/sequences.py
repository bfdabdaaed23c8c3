"""
Measurement sequences on two qubits.

Known-outcome mode follows every outcome trajectory as a separate branch;
unknown-outcome mode applies the outcome-summed channel round by round. The
module also holds the closed-form Bloch update for special weak measurements
and the correlation certificate built on it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from math import comb
from typing import Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from enatp.entanglement import concurrence
from enatp.errors import (
    BadEpsilonError,
    BranchLimitExceededError,
    DegenerateNormalizationError,
    InputNotCorrelatedError,
    NotDiagonalError,
    ZeroProbabilityError,
)
from enatp.matcore import IDENTITY2, Mat2, Mat3, Vec3, bloch_rotation, conjugate, frozen, tensor
from enatp.measurements import SpecialWeakParams, TwoOutcomeMeasurement, special_weak
from enatp.models import CnatpReport
from enatp.states import (
    BlochForm,
    DensityMatrix2Q,
    bloch_decompose,
    diagonalize_correlation,
)

ZERO_PROBABILITY_TOL = 1e-14
DEFAULT_PRUNE_TOL = 1e-14
DEFAULT_MAX_BRANCHES = 2**20
DIAGONAL_TOL = 1e-9
ETA_TOL = 1e-12
CORRELATED_TOL = 1e-6

Target = Literal["system", "environment", "both"]
Round = Tuple[Optional[TwoOutcomeMeasurement], Optional[TwoOutcomeMeasurement]]


@dataclass(frozen=True)
class Branch:
    """
    One outcome trajectory.

    Attributes:
        outcome_string: Outcome labels in the order they occurred ("S+", "E-", ...).
        probability: Total probability of the branch (all merged trajectories when collapsed).
        state: Normalized conditional state.
        multiplicity: Number of trajectories merged into this branch.
    """

    outcome_string: Tuple[str, ...]
    probability: float
    state: DensityMatrix2Q
    multiplicity: int = 1

    @property
    def concurrence(self) -> float:
        return concurrence(self.state).value


@dataclass(frozen=True)
class BranchEnsemble:
    """
    Branches of a known-outcome run.

    Attributes:
        branches: Surviving branches in outcome-string order.
        dropped_mass: Probability carried by pruned branches.
    """

    branches: Tuple[Branch, ...]
    dropped_mass: float = 0.0

    @property
    def total_probability(self) -> float:
        """Σ p + dropped mass, equal to 1 up to rounding."""
        return float(sum(b.probability for b in self.branches) + self.dropped_mass)

    @property
    def min_concurrence(self) -> float:
        return min(b.concurrence for b in self.branches)

    def average_state(self) -> DensityMatrix2Q:
        """Probability-weighted mixture of the surviving branches."""
        mixed = sum(b.probability * b.state.matrix for b in self.branches)
        return DensityMatrix2Q.from_unnormalized(mixed)

    def average_concurrence(self) -> float:
        """Σ p C over branches, renormalized by the surviving mass."""
        mass = sum(b.probability for b in self.branches)
        return float(sum(b.probability * b.concurrence for b in self.branches) / mass)


@dataclass(frozen=True)
class UpdateTriple:
    """
    Bloch form after one special weak outcome.

    Attributes:
        a_prime: Updated system Bloch vector.
        b_prime: Updated environment Bloch vector.
        T_prime: Updated correlation matrix.
        eta: Normalization 1 + ε n̂·a; the outcome probability is η/2.
    """

    a_prime: Vec3
    b_prime: Vec3
    T_prime: Mat3
    eta: float

    def __post_init__(self) -> None:
        for name in ("a_prime", "b_prime", "T_prime"):
            object.__setattr__(self, name, frozen(np.asarray(getattr(self, name), dtype=float)))

    @property
    def form(self) -> BlochForm:
        return BlochForm(self.a_prime, self.b_prime, self.T_prime)

    @property
    def product_gap(self) -> float:
        """‖T′ − a′b′ᵀ‖_F."""
        return float(np.linalg.norm(self.T_prime - np.outer(self.a_prime, self.b_prime)))


def _op(op: Optional[Mat2]) -> Mat2:
    return IDENTITY2 if op is None else op


def apply_outcome(
    rho: DensityMatrix2Q,
    R: Optional[Mat2] = None,
    W: Optional[Mat2] = None,
    zero_tol: float = ZERO_PROBABILITY_TOL,
) -> Tuple[float, DensityMatrix2Q]:
    """
    Apply outcome R on the system and W on the environment.

    Args:
        rho: Input state.
        R: System outcome operator (identity when None).
        W: Environment outcome operator (identity when None).
        zero_tol: Smallest probability treated as possible.

    Returns:
        (probability, normalized post-measurement state), the probability being
        tr((R⊗W)ρ(R⊗W)†).

    Raises:
        ZeroProbabilityError: If the outcome probability is below ``zero_tol``.
    """
    unnormalized = conjugate(tensor(_op(R), _op(W)), rho.matrix)
    probability = float(np.trace(unnormalized).real)
    if probability < zero_tol:
        raise ZeroProbabilityError(f"Outcome probability {probability:.3e} is below {zero_tol}")
    return probability, DensityMatrix2Q.from_unnormalized(unnormalized)


def rounds_for(measurement: TwoOutcomeMeasurement, target: Target, count: int) -> List[Round]:
    """``count`` identical rounds of ``measurement`` on ``target``."""
    if count < 0:
        raise ValueError(f"Round count must be nonnegative, got {count}")
    system = measurement if target in ("system", "both") else None
    environment = measurement if target in ("environment", "both") else None
    return [(system, environment)] * count


def _operator_index(catalog: List[Mat2], op: Mat2) -> int:
    for index, known in enumerate(catalog):
        if np.allclose(known, op, atol=1e-14):
            return index
    catalog.append(op)
    return len(catalog) - 1


def _round_outcomes(step: Round, catalog: List[Mat2]) -> List[Tuple[Tuple[str, ...], Mat2, Mat2, Tuple]]:
    """(labels, R, W, tags) for every outcome combination of one round, "+" before "−"."""
    system, environment = step
    sys_choices = [((), IDENTITY2, ())]
    env_choices = [((), IDENTITY2, ())]
    if system is not None:
        sys_choices = [
            ((f"S{sign}",), op, (("S", _operator_index(catalog, op)),))
            for sign, op in zip("+-", system.operators)
        ]
    if environment is not None:
        env_choices = [
            ((f"E{sign}",), op, (("E", _operator_index(catalog, op)),))
            for sign, op in zip("+-", environment.operators)
        ]
    return [
        (s_lab + e_lab, r, w, s_tag + e_tag)
        for (s_lab, r, s_tag), (e_lab, w, e_tag) in product(sys_choices, env_choices)
    ]


def _all_commute(ops: Sequence[Mat2]) -> bool:
    return all(np.allclose(a @ b, b @ a, atol=1e-12) for a in ops for b in ops)


def run_known(
    rho: DensityMatrix2Q,
    schedule: Sequence[Round],
    prune_tol: float = DEFAULT_PRUNE_TOL,
    max_branches: int = DEFAULT_MAX_BRANCHES,
    collapse: bool = False,
    workers: int = 1,
) -> BranchEnsemble:
    """
    Enumerate every outcome trajectory of ``schedule``.

    Args:
        rho: Input state.
        schedule: Rounds of (system measurement, environment measurement); None leaves a side untouched.
        prune_tol: Branches whose probability falls below this are dropped and their mass recorded.
        max_branches: Cap on the number of live branches.
        collapse: Merge trajectories that applied the same multiset of operators on each side.
            Requires the operators used on each side to commute.
        workers: Threads used to expand branches; results keep outcome-string order.

    Returns:
        BranchEnsemble.

    Raises:
        BranchLimitExceededError: If the expansion would exceed ``max_branches``.
        ValueError: If ``collapse`` is requested for non-commuting operators.
    """
    if collapse:
        sys_ops = [op for step in schedule if step[0] is not None for op in step[0].operators]
        env_ops = [op for step in schedule if step[1] is not None for op in step[1].operators]
        if not (_all_commute(sys_ops) and _all_commute(env_ops)):
            raise ValueError("collapse requires the operators on each side to commute")

    catalog: List[Mat2] = []
    # (outcome labels, probability, state, multiplicity, sorted operator tags)
    live = [((), 1.0, rho, 1, ())]
    dropped = 0.0

    for step in schedule:
        outcomes = _round_outcomes(step, catalog)
        if len(live) * len(outcomes) > max_branches:
            raise BranchLimitExceededError(
                f"Expanding {len(live)} branches by {len(outcomes)} outcomes exceeds {max_branches}"
            )

        def expand(entry, outcomes=outcomes):
            labels, prob, state, mult, tags = entry
            children = []
            for out_labels, r, w, out_tags in outcomes:
                unnormalized = conjugate(tensor(r, w), state.matrix)
                conditional = float(np.trace(unnormalized).real)
                total = prob * conditional
                if conditional < ZERO_PROBABILITY_TOL or total < prune_tol:
                    children.append((labels + out_labels, max(total, 0.0), None, mult, tags))
                    continue
                child = DensityMatrix2Q.from_unnormalized(unnormalized)
                children.append(
                    (labels + out_labels, total, child, mult, tuple(sorted(tags + out_tags)))
                )
            return children

        if workers > 1 and len(live) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                expanded = list(pool.map(expand, live))
        else:
            expanded = [expand(entry) for entry in live]

        live = []
        for children in expanded:
            for child in children:
                if child[2] is None:
                    dropped += child[1]
                else:
                    live.append(child)
        if collapse:
            live = _collapse(live)

    branches = tuple(Branch(labels, prob, state, mult) for labels, prob, state, mult, _ in live)
    return BranchEnsemble(branches=branches, dropped_mass=float(dropped))


def _collapse(live: list) -> list:
    # Trajectories that applied the same multiset of commuting operators share one state.
    merged = {}
    for labels, prob, state, mult, tags in live:
        if tags in merged:
            first = merged[tags]
            merged[tags] = (first[0], first[1] + prob, first[2], first[3] + mult, tags)
        else:
            merged[tags] = (labels, prob, state, mult, tags)
    return list(merged.values())


def run_unknown(rho: DensityMatrix2Q, schedule: Sequence[Round]) -> DensityMatrix2Q:
    """
    Outcome-summed evolution ρ → Σ (R⊗W)ρ(R⊗W)†, one round at a time.

    Args:
        rho: Input state.
        schedule: Rounds of (system measurement, environment measurement).

    Returns:
        Final mixed state; the trace is preserved by completeness.
    """
    mat = rho.matrix
    for system, environment in schedule:
        if system is not None:
            mat = sum(conjugate(tensor(op, IDENTITY2), mat) for op in system.operators)
        if environment is not None:
            mat = sum(conjugate(tensor(IDENTITY2, op), mat) for op in environment.operators)
    return DensityMatrix2Q.from_unnormalized(mat)


def binomial_post_state(
    rho: DensityMatrix2Q,
    system: TwoOutcomeMeasurement,
    n: int,
    environment: Optional[TwoOutcomeMeasurement] = None,
    y: int = 0,
) -> DensityMatrix2Q:
    """
    Explicit binomial sum for repeated commuting two-outcome measurements.

    Σ_k Σ_l C(n,k) C(y,l) (M+^k M−^(n−k) ⊗ W+^l W−^(y−l)) ρ (…)†, with n rounds on
    the system and y rounds on the environment.
    """
    env = environment if environment is not None else TwoOutcomeMeasurement(
        IDENTITY2, np.zeros((2, 2)), label="identity"
    )
    y = y if environment is not None else 0
    power = np.linalg.matrix_power
    mat = np.zeros((4, 4), dtype=complex)
    for k in range(n + 1):
        sys_op = power(system.plus, k) @ power(system.minus, n - k)
        for l in range(y + 1):
            env_op = power(env.plus, l) @ power(env.minus, y - l)
            mat = mat + comb(n, k) * comb(y, l) * conjugate(tensor(sys_op, env_op), rho.matrix)
    return DensityMatrix2Q.from_unnormalized(mat)


def bloch_update_Mplus(
    f: BlochForm,
    p: SpecialWeakParams,
    diagonal_tol: float = DIAGONAL_TOL,
    eta_tol: float = ETA_TOL,
) -> UpdateTriple:
    """
    Bloch form after the M+(ε, n̂) outcome on the system of a state with diagonal T.

    With λ = √(1−ε²) and η = 1 + ε n̂·a:
        a′ = (λa + (1−λ)(n̂·a)n̂ + εn̂)/η
        b′ = (b + ε Tᵀn̂)/η
        T′ = (λT + (1−λ)n̂(n̂ᵀT) + εn̂bᵀ)/η

    Raises:
        NotDiagonalError: If T has an off-diagonal entry above ``diagonal_tol``.
        DegenerateNormalizationError: If η ≤ ``eta_tol``.
    """
    t = np.asarray(f.T, dtype=float)
    if np.abs(t - np.diag(np.diag(t))).max() > diagonal_tol:
        raise NotDiagonalError("Correlation matrix is not diagonal; diagonalize it first")
    n = np.asarray(p.n_hat, dtype=float)
    a = np.asarray(f.a, dtype=float)
    b = np.asarray(f.b, dtype=float)
    eps = p.epsilon
    lam = p.decay_factor
    n_dot_a = float(n @ a)
    eta = 1.0 + eps * n_dot_a
    if eta <= eta_tol:
        raise DegenerateNormalizationError(f"Normalization η = {eta:.3e} vanishes")
    a_prime = (lam * a + (1 - lam) * n_dot_a * n + eps * n) / eta
    b_prime = (b + eps * t.T @ n) / eta
    t_prime = (lam * t + (1 - lam) * np.outer(n, n @ t) + eps * np.outer(n, b)) / eta
    return UpdateTriple(a_prime, b_prime, t_prime, eta)


def bloch_update(f: BlochForm, p: SpecialWeakParams, outcome: Literal["+", "-"] = "+") -> UpdateTriple:
    """Either outcome; M− is M+ with the axis reversed."""
    return bloch_update_Mplus(f, p if outcome == "+" else p.flipped())


def cnatp_certificate(
    rho: DensityMatrix2Q,
    p: SpecialWeakParams,
    correlated_tol: float = CORRELATED_TOL,
) -> CnatpReport:
    """
    Correlation gaps ‖T′ − a′b′ᵀ‖ left by both outcomes of M±(ε, n̂) on the system.

    The state is first rotated so that T is diagonal; the axis is rotated with
    it, and the gaps are computed with the closed-form update. The same gaps
    from direct conjugation are reported alongside.

    Raises:
        InputNotCorrelatedError: If the input's product gap is at most ``correlated_tol``.
    """
    initial_gap = bloch_decompose(rho).correlation_gap
    if initial_gap <= correlated_tol:
        raise InputNotCorrelatedError(f"Product gap {initial_gap:.3e} is at most {correlated_tol}")
    frame, rho_d = diagonalize_correlation(rho)
    rotated_axis = bloch_rotation(frame.U) @ p.n_hat
    rotated = SpecialWeakParams(p.epsilon, rotated_axis / np.linalg.norm(rotated_axis))
    form_d = bloch_decompose(rho_d)
    plus = bloch_update(form_d, rotated, "+")
    minus = bloch_update(form_d, rotated, "-")

    measurement = special_weak(p)
    direct = []
    for op in measurement.operators:
        try:
            _, post = apply_outcome(rho, op, None)
            direct.append(bloch_decompose(post).correlation_gap)
        except ZeroProbabilityError:
            direct.append(0.0)

    return CnatpReport(
        epsilon=p.epsilon,
        initial_gap=initial_gap,
        gap_plus=plus.product_gap,
        gap_minus=minus.product_gap,
        gap_plus_direct=direct[0],
        gap_minus_direct=direct[1],
        probability_plus=plus.eta / 2,
        probability_minus=minus.eta / 2,
    )


def closed_form_concurrence(C0: float, eps1: float, n: int, eps2: float = 0.0, y: int = 0) -> float:
    """
    (1−ε1²)^(n/2) (1−ε2²)^(y/2) · C0.

    Raises:
        ValueError: If C0 is outside [0, 1] or a round count is negative.
        BadEpsilonError: If |ε1| or |ε2| exceeds 1.
    """
    if not 0.0 <= C0 <= 1.0:
        raise ValueError(f"Initial concurrence must lie in [0, 1], got {C0}")
    if abs(eps1) > 1.0 or abs(eps2) > 1.0:
        raise BadEpsilonError("Measurement strengths must lie in [-1, 1]")
    if n < 0 or y < 0:
        raise ValueError("Round counts must be nonnegative")
    return float((1.0 - eps1**2) ** (n / 2) * (1.0 - eps2**2) ** (y / 2) * C0)


def predicted_branch_concurrence(
    c0: float, probability: float, determinants: Iterable[complex]
) -> float:
    """Π|det| · C0 / p for a branch reached through outcomes with the given determinants."""
    scale = float(np.prod([abs(d) for d in determinants]))
    return scale * c0 / probability
