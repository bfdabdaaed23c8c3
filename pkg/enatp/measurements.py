"""
Two-outcome local measurements: constructors for every family used by the
library, completeness checks and the weakness classification Ω = q(I + ε̂).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from enatp.errors import (
    BadAxisError,
    BadEpsilonError,
    EpsOutOfRangeError,
    IncompleteMeasurementError,
    NonDecomposableError,
    NotProjectorsError,
    UnknownPresetError,
)
from enatp.matcore import (
    IDENTITY2,
    PAULIS,
    SIGMA_X,
    Mat2,
    Vec3,
    as_matrix,
    as_vec3,
    bloch_rotation,
    conjugate,
    dagger,
    frozen,
)
from enatp.models import WeaknessReport
from enatp.states import Seed, expect_arity, parse_preset, random_unitary

COMPLETENESS_TOL = 1e-10
AXIS_TOL = 1e-12
SINGULAR_TOL = 1e-12
DEFAULT_WEAKNESS_THRESHOLD = 0.25

X_AXIS = np.array([1.0, 0.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])
PROJ0 = np.diag([1.0, 0.0]).astype(complex)
PROJ1 = np.diag([0.0, 1.0]).astype(complex)


def pauli_dot(n_hat: Vec3) -> Mat2:
    """n̂·σ."""
    return sum(float(n) * s for n, s in zip(n_hat, PAULIS))


@dataclass(frozen=True)
class SpecialWeakParams:
    """
    Strength and axis of a special weak measurement M±(ε, n̂).

    Attributes:
        epsilon: Strength in [-1, 1]; ±1 is projective, 0 is trivial.
        n_hat: Unit measurement axis.
    """

    epsilon: float
    n_hat: Vec3

    def __post_init__(self) -> None:
        eps = float(self.epsilon)
        if not np.isfinite(eps) or abs(eps) > 1.0 + AXIS_TOL:
            raise BadEpsilonError(f"epsilon must lie in [-1, 1], got {self.epsilon}")
        try:
            axis = as_vec3(self.n_hat)
        except ValueError as exc:
            raise BadAxisError(str(exc)) from exc
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            raise BadAxisError(f"Axis {axis} is not a unit vector")
        object.__setattr__(self, "epsilon", float(np.clip(eps, -1.0, 1.0)))
        object.__setattr__(self, "n_hat", frozen(axis))

    @property
    def eps_plus(self) -> float:
        """ε₊ = √((1+ε)/2) + √((1−ε)/2)."""
        return float(np.sqrt((1 + self.epsilon) / 2) + np.sqrt((1 - self.epsilon) / 2))

    @property
    def eps_minus(self) -> float:
        """ε₋ = √((1+ε)/2) − √((1−ε)/2)."""
        return float(np.sqrt((1 + self.epsilon) / 2) - np.sqrt((1 - self.epsilon) / 2))

    @property
    def decay_factor(self) -> float:
        """√(1 − ε²), the per-round concurrence factor on pure states."""
        return float(np.sqrt(max(0.0, 1.0 - self.epsilon**2)))

    def flipped(self) -> "SpecialWeakParams":
        """Same strength, opposite axis (M− of these params is M+ of the flipped ones)."""
        return SpecialWeakParams(self.epsilon, -self.n_hat)


@dataclass(frozen=True)
class TwoOutcomeMeasurement:
    """
    Complete two-outcome measurement {plus, minus}.

    Attributes:
        plus: Outcome operator for the "+" result.
        minus: Outcome operator for the "−" result.
        label: Human-readable name used in reports.
    """

    plus: Mat2
    minus: Mat2
    label: str = "measurement"

    def __post_init__(self) -> None:
        plus = as_matrix(self.plus, 2)
        minus = as_matrix(self.minus, 2)
        total = dagger(plus) @ plus + dagger(minus) @ minus
        if not np.allclose(total, IDENTITY2, atol=COMPLETENESS_TOL, rtol=0):
            raise IncompleteMeasurementError(
                f"{self.label}: Σ K†K deviates from I by {np.abs(total - IDENTITY2).max():.3e}"
            )
        object.__setattr__(self, "plus", frozen(plus))
        object.__setattr__(self, "minus", frozen(minus))

    @property
    def operators(self) -> Tuple[Mat2, Mat2]:
        """(plus, minus)."""
        return self.plus, self.minus

    @property
    def is_invertible(self) -> bool:
        """True when neither outcome operator is singular."""
        return all(abs(np.linalg.det(op)) > SINGULAR_TOL for op in self.operators)

    @property
    def commutes(self) -> bool:
        """True when the two outcome operators commute."""
        return bool(np.allclose(self.plus @ self.minus, self.minus @ self.plus, atol=1e-12))

    def channel(self, rho_single: Mat2) -> Mat2:
        """Outcome-summed single-qubit channel X ↦ Σ K X K†."""
        return sum(conjugate(op, as_matrix(rho_single, 2)) for op in self.operators)


@dataclass(frozen=True)
class GeneralWeakOperator:
    """
    Decomposition Ω = q(I + ε̂) of one outcome operator.

    Attributes:
        q: Positive scale, the smallest singular value of Ω.
        eps_op: Perturbation ε̂.
        strength: Spectral norm of ε̂.
    """

    q: float
    eps_op: Mat2

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps_op", frozen(as_matrix(self.eps_op, 2)))

    @property
    def strength(self) -> float:
        return float(np.linalg.norm(self.eps_op, ord=2))

    @property
    def operator(self) -> Mat2:
        """q(I + ε̂)."""
        return self.q * (IDENTITY2 + self.eps_op)


def special_weak(p: SpecialWeakParams) -> TwoOutcomeMeasurement:
    """
    Special weak measurement M±(ε, n̂) = ½(ε₊I ± ε₋ n̂·σ).

    Args:
        p: Validated strength and axis.

    Returns:
        TwoOutcomeMeasurement whose outcomes commute and satisfy completeness.
    """
    n_sigma = pauli_dot(p.n_hat)
    plus = 0.5 * (p.eps_plus * IDENTITY2 + p.eps_minus * n_sigma)
    minus = 0.5 * (p.eps_plus * IDENTITY2 - p.eps_minus * n_sigma)
    axis = ",".join(f"{v:g}" for v in p.n_hat)
    return TwoOutcomeMeasurement(plus, minus, label=f"special({p.epsilon:g},{axis})")


def _is_projector(op: Mat2, tol: float) -> bool:
    return np.allclose(op @ op, op, atol=tol) and np.allclose(op, dagger(op), atol=tol)


def asymptotically_projective(
    eps: float,
    p_plus: Mat2 = PROJ0,
    p_minus: Mat2 = PROJ1,
    tol: float = COMPLETENESS_TOL,
) -> TwoOutcomeMeasurement:
    """
    A0 = √ε P− + √(1−ε) P+,  A1 = √(1−ε) P− + √ε P+.

    Both outcomes stay rank 2 for 0 < ε < 1 with det = √(ε(1−ε)) and approach
    the projectors P± as ε → 0 or 1.

    Raises:
        NotProjectorsError: If P± are not orthogonal projectors summing to I.
        EpsOutOfRangeError: If ε is not strictly between 0 and 1.
    """
    if not 0.0 < eps < 1.0:
        raise EpsOutOfRangeError(f"epsilon must lie in (0, 1), got {eps}")
    p_plus = as_matrix(p_plus, 2)
    p_minus = as_matrix(p_minus, 2)
    if not (
        _is_projector(p_plus, tol)
        and _is_projector(p_minus, tol)
        and np.allclose(p_plus @ p_minus, 0, atol=tol)
        and np.allclose(p_plus + p_minus, IDENTITY2, atol=tol)
    ):
        raise NotProjectorsError("P+ and P- must be orthogonal projectors summing to I")
    a0 = np.sqrt(eps) * p_minus + np.sqrt(1 - eps) * p_plus
    a1 = np.sqrt(1 - eps) * p_minus + np.sqrt(eps) * p_plus
    return TwoOutcomeMeasurement(a0, a1, label=f"asymproj({eps:g})")


def example3_K(eps: float) -> TwoOutcomeMeasurement:
    """
    K± = √((1∓ε)/2)(I ± ε(I + σx)).

    Raises:
        EpsOutOfRangeError: If ε is outside [0, 1].
    """
    if not 0.0 <= eps <= 1.0:
        raise EpsOutOfRangeError(f"epsilon must lie in [0, 1], got {eps}")
    shifted = IDENTITY2 + SIGMA_X
    k_plus = np.sqrt((1 - eps) / 2) * (IDENTITY2 + eps * shifted)
    k_minus = np.sqrt((1 + eps) / 2) * (IDENTITY2 - eps * shifted)
    return TwoOutcomeMeasurement(k_plus, k_minus, label=f"example3K({eps:g})")


def example2_M() -> TwoOutcomeMeasurement:
    """M± = (2I ± σx)/√10."""
    plus = np.array([[2, 1], [1, 2]], dtype=complex) / np.sqrt(10)
    minus = np.array([[2, -1], [-1, 2]], dtype=complex) / np.sqrt(10)
    return TwoOutcomeMeasurement(plus, minus, label="example2")


def brun(eps: float) -> TwoOutcomeMeasurement:
    """Diagonal pair √((1±ε)/2) on |0⟩, |1⟩; identical to M±(ε, ẑ)."""
    measurement = special_weak(SpecialWeakParams(eps, Z_AXIS))
    return TwoOutcomeMeasurement(measurement.plus, measurement.minus, label=f"brun({eps:g})")


def general_weak(q: float, eps_op: Mat2) -> Mat2:
    """Ω = q(I + ε̂)."""
    return GeneralWeakOperator(q, eps_op).operator


def decompose_weak(op: Mat2, singular_tol: float = SINGULAR_TOL) -> GeneralWeakOperator:
    """
    Write ``op`` as q(I + ε̂) with q its smallest singular value.

    Raises:
        NonDecomposableError: If ``op`` is singular (rank 1 outcomes cannot be weak).
    """
    mat = as_matrix(op, 2)
    q = float(np.linalg.svd(mat, compute_uv=False)[-1])
    if q < singular_tol:
        raise NonDecomposableError("Outcome operator is singular")
    return GeneralWeakOperator(q, mat / q - IDENTITY2)


def classify_weakness(
    m: TwoOutcomeMeasurement, threshold: float = DEFAULT_WEAKNESS_THRESHOLD
) -> WeaknessReport:
    """
    Decompose every outcome as q(I + ε̂) and flag the measurement as weak.

    Args:
        m: Complete two-outcome measurement.
        threshold: Largest ‖ε̂‖ still reported as weak.

    Returns:
        WeaknessReport with the q values, spectral norms of ε̂ and the flag.

    Raises:
        NonDecomposableError: If an outcome operator is singular.
    """
    parts = [decompose_weak(op) for op in m.operators]
    strengths = [part.strength for part in parts]
    return WeaknessReport(
        label=m.label,
        q_values=[part.q for part in parts],
        strengths=strengths,
        threshold=threshold,
        is_weak=bool(all(s < threshold for s in strengths)),
    )


def rotate_measurement(m: TwoOutcomeMeasurement, unitary: Mat2) -> TwoOutcomeMeasurement:
    """U K U† for both outcomes."""
    u = as_matrix(unitary, 2)
    return TwoOutcomeMeasurement(conjugate(u, m.plus), conjugate(u, m.minus), label=m.label)


def rotated_params(p: SpecialWeakParams, unitary: Mat2) -> SpecialWeakParams:
    """Parameters of U M±(ε, n̂) U† = M±(ε, R_U n̂)."""
    return SpecialWeakParams(p.epsilon, bloch_rotation(unitary) @ p.n_hat)


def measurement_preset(preset: str) -> TwoOutcomeMeasurement:
    """
    Resolve a named measurement preset.

    Supported names: ``special(eps,nx,ny,nz)``, ``asymproj(eps)``, ``example2``,
    ``example3K(eps)``, ``brun(eps)``.

    Raises:
        UnknownPresetError: If the name or its arguments are invalid.
    """
    name, args = parse_preset(preset)
    try:
        if name == "special":
            eps, nx, ny, nz = expect_arity(name, args, 4)
            return special_weak(SpecialWeakParams(eps, np.array([nx, ny, nz])))
        if name == "asymproj":
            (eps,) = expect_arity(name, args, 1)
            return asymptotically_projective(eps)
        if name == "example2":
            expect_arity(name, args, 0)
            return example2_M()
        if name == "example3k":
            (eps,) = expect_arity(name, args, 1)
            return example3_K(eps)
        if name == "brun":
            (eps,) = expect_arity(name, args, 1)
            return brun(eps)
    except (BadAxisError, BadEpsilonError, EpsOutOfRangeError) as exc:
        raise UnknownPresetError(f"Preset {preset!r} has invalid parameters: {exc}") from exc
    raise UnknownPresetError(f"Unknown measurement preset {name!r}")


def special_params_of_preset(preset: str) -> Optional[SpecialWeakParams]:
    """
    Special weak parameters equivalent to a preset, or None if it is not in that family.

    ``asymproj(eps)`` equals M±(1 − 2ε, ẑ) and ``example2`` equals M±(0.8, x̂).
    """
    name, args = parse_preset(preset)
    if name == "special" and len(args) == 4:
        return SpecialWeakParams(args[0], np.array(args[1:]))
    if name == "brun" and len(args) == 1:
        return SpecialWeakParams(args[0], Z_AXIS)
    if name == "asymproj" and len(args) == 1:
        return SpecialWeakParams(1.0 - 2.0 * args[0], Z_AXIS)
    if name == "example2" and not args:
        return SpecialWeakParams(0.8, X_AXIS)
    return None


def random_axis(seed: Seed) -> Vec3:
    """Uniformly distributed unit vector."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    axis = rng.normal(size=3)
    return axis / np.linalg.norm(axis)


def random_invertible_measurement(
    seed: Seed, s_min: float = 0.1, s_max: float = 0.95
) -> TwoOutcomeMeasurement:
    """
    Random complete measurement with both outcomes invertible.

    R0 = U diag(s) V† with singular values s drawn from [s_min, s_max], and
    R1 = V diag(√(1 − s²)) V† completes it.
    """
    if not 0.0 < s_min <= s_max < 1.0:
        raise EpsOutOfRangeError(f"Singular value range [{s_min}, {s_max}] must lie inside (0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = random_unitary(rng)
    v = random_unitary(rng)
    s = rng.uniform(s_min, s_max, size=2)
    r0 = u @ np.diag(s) @ dagger(v)
    r1 = v @ np.diag(np.sqrt(1.0 - s**2)) @ dagger(v)
    return TwoOutcomeMeasurement(r0, r1, label="random")
