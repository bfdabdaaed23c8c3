"""
Two-qubit states: construction, validation, Bloch/correlation decomposition,
local diagonalization of the correlation matrix and seeded random draws.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Literal, Tuple

import numpy as np
import numpy.typing as npt

from enatp.errors import (
    InvalidStateError,
    NonPhysicalError,
    NotNormalizedError,
    UnknownPresetError,
)
from enatp.matcore import (
    IDENTITY2,
    PAULIS,
    Mat2,
    Mat3,
    Mat4,
    Vec3,
    as_matrix,
    as_vec3,
    bloch_rotation,
    conjugate,
    dagger,
    frozen,
    hermitize,
    su2_lift,
    svd3,
    tensor,
)

# Tolerances for the density-matrix invariants.
STATE_TOL = 1e-10
NORM_TOL = 1e-12

Seed = int | np.random.Generator

# σ_μ ⊗ σ_ν for μ, ν ∈ {I, x, y, z}, indexed [μ, ν, row, col].
_PAULI_TENSORS = np.array([[np.kron(s, t) for t in (IDENTITY2, *PAULIS)] for s in (IDENTITY2, *PAULIS)])


@dataclass(frozen=True)
class DensityMatrix2Q:
    """
    Joint system–environment state ρ.

    Attributes:
        matrix: Hermitian, unit-trace, positive semidefinite 4×4 matrix (read-only).
    """

    matrix: Mat4
    tol: float = field(default=STATE_TOL, repr=False, compare=False)

    def __post_init__(self) -> None:
        try:
            mat = as_matrix(self.matrix, 4)
        except ValueError as exc:
            raise InvalidStateError(str(exc)) from exc
        if not np.allclose(mat, dagger(mat), atol=self.tol, rtol=0):
            raise InvalidStateError("Density matrix is not Hermitian")
        trace = np.trace(mat)
        if abs(trace - 1.0) > self.tol:
            raise InvalidStateError(f"Density matrix trace is {trace}, expected 1")
        min_eig = float(np.linalg.eigvalsh(hermitize(mat))[0])
        if min_eig < -self.tol:
            raise InvalidStateError(f"Density matrix has negative eigenvalue {min_eig}")
        object.__setattr__(self, "matrix", frozen(mat))

    @classmethod
    def from_unnormalized(cls, mat: Mat4) -> "DensityMatrix2Q":
        """Hermitize and normalize a positive matrix with nonzero trace."""
        herm = hermitize(np.asarray(mat, dtype=complex))
        return cls(herm / np.trace(herm).real)

    @property
    def is_pure(self) -> bool:
        """True when tr(ρ²) = 1 within the state tolerance."""
        return abs(np.trace(self.matrix @ self.matrix).real - 1.0) < 1e-9


@dataclass(frozen=True)
class PureState2Q:
    """
    Pure state a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩.

    Attributes:
        amplitudes: The four complex amplitudes (a, b, c, d).
    """

    amplitudes: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"Expected 4 amplitudes, got {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise NotNormalizedError(f"Squared norm is {norm}, expected 1")
        object.__setattr__(self, "amplitudes", frozen(amps))

    @classmethod
    def normalized(cls, amplitudes: npt.ArrayLike) -> "PureState2Q":
        """Build a pure state after rescaling ``amplitudes`` to unit norm."""
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps))


@dataclass(frozen=True)
class BlochForm:
    """
    Pauli decomposition of a two-qubit state.

    Attributes:
        a: System Bloch vector, a_i = tr((σ_i ⊗ I) ρ).
        b: Environment Bloch vector, b_j = tr((I ⊗ σ_j) ρ).
        T: Correlation matrix, T_ij = tr((σ_i ⊗ σ_j) ρ).
    """

    a: Vec3
    b: Vec3
    T: Mat3

    def __post_init__(self) -> None:
        a = as_vec3(self.a)
        b = as_vec3(self.b)
        t = np.array(self.T, dtype=float)
        if t.shape != (3, 3) or not np.all(np.isfinite(t)):
            raise ValueError("Correlation matrix must be a finite real 3x3 matrix")
        if np.linalg.norm(a) > 1 + STATE_TOL or np.linalg.norm(b) > 1 + STATE_TOL:
            raise NonPhysicalError("Bloch vector longer than 1")
        object.__setattr__(self, "a", frozen(a))
        object.__setattr__(self, "b", frozen(b))
        object.__setattr__(self, "T", frozen(t))

    @property
    def correlation_gap(self) -> float:
        """Frobenius norm ‖T − a bᵀ‖, zero exactly for product states."""
        return float(np.linalg.norm(self.T - np.outer(self.a, self.b)))


@dataclass(frozen=True)
class LocalFrame:
    """
    Local unitary pair U ⊗ V.

    Attributes:
        U: System unitary.
        V: Environment unitary.
    """

    U: Mat2
    V: Mat2

    def __post_init__(self) -> None:
        for name in ("U", "V"):
            mat = as_matrix(getattr(self, name), 2)
            if not np.allclose(dagger(mat) @ mat, IDENTITY2, atol=1e-12):
                raise ValueError(f"{name} is not unitary")
            object.__setattr__(self, name, frozen(mat))

    @property
    def operator(self) -> Mat4:
        """U ⊗ V."""
        return tensor(self.U, self.V)


def from_pure(psi: PureState2Q) -> DensityMatrix2Q:
    """
    Density matrix |ψ⟩⟨ψ| of a pure state.

    Raises:
        NotNormalizedError: If ``psi`` carries unnormalized amplitudes.
    """
    amps = np.asarray(psi.amplitudes, dtype=complex)
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalizedError(f"Squared norm is {norm}, expected 1")
    return DensityMatrix2Q(np.outer(amps, amps.conj()))


def bloch_decompose(rho: DensityMatrix2Q, tol: float = STATE_TOL) -> BlochForm:
    """
    Bloch vectors and correlation matrix of ``rho``.

    Args:
        rho: Two-qubit state.
        tol: Largest imaginary residue tolerated before it is discarded.

    Returns:
        BlochForm with a_i = tr((σ_i⊗I)ρ), b_j = tr((I⊗σ_j)ρ), T_ij = tr((σ_i⊗σ_j)ρ).

    Raises:
        InvalidStateError: If an expectation value carries an imaginary part above ``tol``.
    """
    coeffs = np.einsum("mnij,ji->mn", _PAULI_TENSORS, rho.matrix)
    if np.abs(coeffs.imag).max() > tol:
        raise InvalidStateError("Pauli expectation values are not real")
    coeffs = coeffs.real
    return BlochForm(a=coeffs[1:, 0], b=coeffs[0, 1:], T=coeffs[1:, 1:])


def bloch_matrix(form: BlochForm) -> Mat4:
    """¼(I⊗I + a·σ⊗I + I⊗b·σ + Σ T_ij σ_i⊗σ_j) without validation."""
    coeffs = np.empty((4, 4))
    coeffs[0, 0] = 1.0
    coeffs[1:, 0] = form.a
    coeffs[0, 1:] = form.b
    coeffs[1:, 1:] = form.T
    return np.einsum("mn,mnij->ij", coeffs, _PAULI_TENSORS) / 4.0


def bloch_reconstruct(form: BlochForm) -> DensityMatrix2Q:
    """
    Inverse of :func:`bloch_decompose`.

    Raises:
        NonPhysicalError: If the assembled matrix is not a valid density matrix.
    """
    try:
        return DensityMatrix2Q(bloch_matrix(form))
    except InvalidStateError as exc:
        raise NonPhysicalError(f"Bloch form is not physical: {exc}") from exc


def local_unitary(rho: DensityMatrix2Q, frame: LocalFrame) -> DensityMatrix2Q:
    """(U⊗V) ρ (U⊗V)†."""
    return DensityMatrix2Q(hermitize(conjugate(frame.operator, rho.matrix)))


def diagonalize_correlation(rho: DensityMatrix2Q) -> Tuple[LocalFrame, DensityMatrix2Q]:
    """
    Rotate ``rho`` by local unitaries so that its correlation matrix is diagonal.

    T = O1 D O2ᵀ with O1, O2 ∈ SO(3); U lifts O1ᵀ and V lifts O2ᵀ, so the
    rotated correlation matrix O1ᵀ T O2 = D.

    Returns:
        The frame (U, V) and ρ_D = (U⊗V) ρ (U⊗V)†.

    Raises:
        ConvergenceFailureError: If the SVD of T does not converge.
    """
    form = bloch_decompose(rho)
    left, _, right = svd3(form.T)
    frame = LocalFrame(U=su2_lift(left.T), V=su2_lift(right.T))
    return frame, local_unitary(rho, frame)


def frame_rotations(frame: LocalFrame) -> Tuple[Mat3, Mat3]:
    """Bloch rotations (R_U, R_V) induced by a local frame."""
    return bloch_rotation(frame.U), bloch_rotation(frame.V)


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_pure(seed: Seed) -> PureState2Q:
    """Haar-distributed pure state from seeded complex Gaussian draws."""
    rng = _rng(seed)
    return PureState2Q.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))


def random_state(kind: Literal["pure", "mixed"], seed: Seed) -> DensityMatrix2Q:
    """
    Seeded random two-qubit state.

    Args:
        kind: ``"pure"`` for a Haar pure state, ``"mixed"`` for a Ginibre state GG†/tr(GG†).
        seed: Integer seed or an existing numpy Generator.

    Returns:
        DensityMatrix2Q, deterministic per integer seed.
    """
    rng = _rng(seed)
    if kind == "pure":
        return from_pure(random_pure(rng))
    if kind != "mixed":
        raise ValueError(f"Unknown state kind {kind!r}")
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    return DensityMatrix2Q.from_unnormalized(g @ dagger(g))


def random_unitary(seed: Seed, dim: int = 2) -> npt.NDArray[np.complex128]:
    """Haar random unitary (QR of a Ginibre matrix with the phase fix)."""
    rng = _rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


# Presets --------------------------------------------------------------------

SQRT_HALF = 1.0 / np.sqrt(2.0)
PHI_PLUS = PureState2Q(np.array([SQRT_HALF, 0, 0, SQRT_HALF]))
PHI_MINUS = PureState2Q(np.array([SQRT_HALF, 0, 0, -SQRT_HALF]))
PSI_MINUS = PureState2Q(np.array([0, SQRT_HALF, -SQRT_HALF, 0]))

_PRESET_RE = re.compile(r"^\s*([a-z0-9-]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$", re.IGNORECASE)


def schmidt_state(theta: float) -> PureState2Q:
    """cos(θ/2)|00⟩ + sin(θ/2)|11⟩."""
    return PureState2Q(np.array([np.cos(theta / 2), 0, 0, np.sin(theta / 2)]))


def x_state_example(a: float) -> DensityMatrix2Q:
    """½(|00⟩⟨00| + |11⟩⟨11|) with coherence ``a`` between |00⟩ and |11⟩."""
    mat = np.zeros((4, 4), dtype=complex)
    mat[0, 0] = mat[3, 3] = 0.5
    mat[0, 3] = mat[3, 0] = a
    return DensityMatrix2Q(mat)


def bell_mixture() -> DensityMatrix2Q:
    """(5|Φ+⟩⟨Φ+| + 3|Φ−⟩⟨Φ−|) / 8."""
    return DensityMatrix2Q(
        (5 * from_pure(PHI_PLUS).matrix + 3 * from_pure(PHI_MINUS).matrix) / 8
    )


def werner(p: float) -> DensityMatrix2Q:
    """p|Ψ−⟩⟨Ψ−| + (1 − p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise UnknownPresetError(f"Werner weight must lie in [0, 1], got {p}")
    return DensityMatrix2Q(p * from_pure(PSI_MINUS).matrix + (1 - p) * np.eye(4) / 4)


def parse_preset(preset: str) -> Tuple[str, List[float]]:
    """
    Split a preset string ``name(x, y, ...)`` into its lower-cased name and numeric arguments.

    Raises:
        UnknownPresetError: If the string is malformed or an argument is not a number.
    """
    match = _PRESET_RE.match(preset)
    if match is None:
        raise UnknownPresetError(f"Cannot parse preset {preset!r}")
    name, raw = match.group(1).lower(), match.group(2)
    parts = [] if not raw else [p.strip() for p in raw.split(",")]
    try:
        return name, [float(p) for p in parts]
    except ValueError as exc:
        raise UnknownPresetError(f"Preset {preset!r} has a non-numeric argument") from exc


def expect_arity(name: str, args: List[float], expected: int) -> List[float]:
    """Return ``args`` if there are exactly ``expected`` of them."""
    if len(args) != expected:
        raise UnknownPresetError(f"Preset {name!r} takes {expected} argument(s), got {len(args)}")
    return args


def state_preset(preset: str) -> DensityMatrix2Q:
    """
    Resolve a named state preset.

    Supported names: ``bell-phi-plus``, ``bell-phi-minus``, ``example1(a)``,
    ``example2-initial``, ``schmidt(theta)``, ``werner(p)``.

    Raises:
        UnknownPresetError: If the name or its arguments cannot be parsed.
    """
    name, args = parse_preset(preset)
    try:
        if name == "bell-phi-plus":
            expect_arity(name, args, 0)
            return from_pure(PHI_PLUS)
        if name == "bell-phi-minus":
            expect_arity(name, args, 0)
            return from_pure(PHI_MINUS)
        if name == "example2-initial":
            expect_arity(name, args, 0)
            return bell_mixture()
        if name == "example1":
            (a,) = expect_arity(name, args, 1)
            return x_state_example(a)
        if name == "schmidt":
            (theta,) = expect_arity(name, args, 1)
            return from_pure(schmidt_state(theta))
        if name == "werner":
            (p,) = expect_arity(name, args, 1)
            return werner(p)
    except InvalidStateError as exc:
        raise UnknownPresetError(f"Preset {preset!r} is not a valid state: {exc}") from exc
    raise UnknownPresetError(f"Unknown state preset {name!r}")


def seeded_state_preset(preset: str, seed: Seed) -> DensityMatrix2Q:
    """
    Resolve a state preset, including the seeded ``random-pure`` and ``random-mixed`` draws.

    Raises:
        UnknownPresetError: If the name or its arguments cannot be parsed.
    """
    name, args = parse_preset(preset)
    if name in ("random-pure", "random-mixed"):
        expect_arity(name, args, 0)
        return random_state("pure" if name == "random-pure" else "mixed", seed)
    return state_preset(preset)
