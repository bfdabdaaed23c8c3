"""
Dense complex linear algebra for 2×2 and 4×4 matrices.

Basis ordering is |00⟩, |01⟩, |10⟩, |11⟩ everywhere, the first tensor factor
being the system qubit and the second the environment qubit.
"""

from __future__ import annotations

from typing import Literal, Tuple

import numpy as np
import numpy.typing as npt

from enatp.errors import ConvergenceFailureError, NonRealSpectrumError

Mat2 = npt.NDArray[np.complex128]
Mat4 = npt.NDArray[np.complex128]
Vec3 = npt.NDArray[np.float64]
Mat3 = npt.NDArray[np.float64]

# Default clamp tolerance for eigenvalues that should be real and nonnegative.
DEFAULT_CLAMP_TOL = 1e-12
# Scaled characteristic-polynomial coefficients below this are treated as zero.
DEFLATE_TOL = 1e3 * np.finfo(float).eps
ROOT_CLUSTER_SCALE = 64.0

IDENTITY2 = np.eye(2, dtype=complex)
IDENTITY4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS: Tuple[Mat2, Mat2, Mat2] = (SIGMA_X, SIGMA_Y, SIGMA_Z)
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

for _m in (IDENTITY2, IDENTITY4, SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_YY):
    _m.setflags(write=False)


def as_matrix(values: npt.ArrayLike, dim: int) -> npt.NDArray[np.complex128]:
    """
    Convert ``values`` to a finite complex ``dim``×``dim`` array.

    Raises:
        ValueError: If the shape is wrong or an entry is not finite.
    """
    mat = np.array(values, dtype=complex)
    if mat.shape != (dim, dim):
        raise ValueError(f"Expected a {dim}x{dim} matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("Matrix entries must be finite")
    return mat


def as_vec3(values: npt.ArrayLike) -> Vec3:
    """Convert ``values`` to a finite real 3-vector."""
    vec = np.array(values, dtype=float).reshape(-1)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ValueError(f"Expected a finite real 3-vector, got {values!r}")
    return vec


def frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy of ``arr``."""
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


def dagger(mat: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return mat.conj().T


def hermitize(mat: np.ndarray) -> np.ndarray:
    """Hermitian part (M + M†)/2."""
    return 0.5 * (mat + dagger(mat))


def conjugate(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Return op·ρ·op†."""
    return op @ rho @ dagger(op)


def tensor(a: Mat2, b: Mat2) -> Mat4:
    """
    Kronecker product a ⊗ b with ``a`` acting on the system qubit.

    Args:
        a: Operator on the system qubit.
        b: Operator on the environment qubit.

    Returns:
        The 4×4 matrix in the |00⟩, |01⟩, |10⟩, |11⟩ basis.
    """
    return np.kron(as_matrix(a, 2), as_matrix(b, 2))


def det2(a: Mat2) -> complex:
    """Determinant of a 2×2 matrix."""
    m = as_matrix(a, 2)
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def partial_transpose(rho: Mat4) -> Mat4:
    """Transpose on the second (environment) tensor factor."""
    blocks = as_matrix(rho, 4).reshape(2, 2, 2, 2)
    return blocks.transpose(0, 3, 2, 1).reshape(4, 4)


def partial_trace_environment(rho: Mat4) -> Mat2:
    """Reduced system state ρ_S = tr_E ρ."""
    return np.einsum("ijkj->ik", as_matrix(rho, 4).reshape(2, 2, 2, 2))


def partial_trace_system(rho: Mat4) -> Mat2:
    """Reduced environment state ρ_E = tr_S ρ."""
    return np.einsum("ijil->jl", as_matrix(rho, 4).reshape(2, 2, 2, 2))


def characteristic_polynomial(mat: np.ndarray) -> npt.NDArray[np.complex128]:
    """
    Characteristic polynomial coefficients via the Faddeev–LeVerrier recursion.

    Args:
        mat: Square matrix of order n.

    Returns:
        Coefficients ``[1, c_{n-1}, ..., c_0]`` of det(λI − A), highest power first.
    """
    a = np.asarray(mat, dtype=complex)
    n = a.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    m_k = np.zeros_like(a)
    identity = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        m_k = a @ m_k + coeffs[k - 1] * identity
        coeffs[k] = -np.trace(a @ m_k) / k
    return coeffs


def _merge_root_clusters(roots: np.ndarray) -> np.ndarray:
    """
    Replace each cluster of roots split off a multiple real root by the cluster mean.

    A root of multiplicity m perturbed by rounding spreads over a disc of radius
    about eps^(1/m); the mean of the cluster stays accurate to O(eps).
    """
    roots = roots[np.argsort(roots.real, kind="stable")]
    merged = []
    start = 0
    while start < roots.size:
        size = 1
        for m in range(roots.size - start, 1, -1):
            group = roots[start : start + m]
            radius = ROOT_CLUSTER_SCALE * np.finfo(float).eps ** (1.0 / m)
            if np.ptp(group.real) <= radius and np.abs(group.imag).max() <= radius:
                size = m
                break
        group = roots[start : start + size]
        merged.extend([group.mean()] * size)
        start += size
    return np.asarray(merged, dtype=complex)


def _charpoly_roots(mat: Mat4) -> np.ndarray:
    # Solve for μ = λ/s so the companion matrix is O(1); trailing coefficients at
    # rounding level are exact zero roots and stay out of the clustering.
    scale = float(np.linalg.norm(mat))
    if scale == 0.0:
        return np.zeros(4, dtype=complex)
    coeffs = characteristic_polynomial(mat / scale)
    order = coeffs.size - 1
    while order > 0 and abs(coeffs[order]) <= DEFLATE_TOL:
        order -= 1
    roots = _merge_root_clusters(np.roots(coeffs[: order + 1])) if order else np.zeros(0, dtype=complex)
    return scale * np.concatenate([roots, np.zeros(4 - roots.size, dtype=complex)])


def eigenvalues_nonneg(
    zeta: Mat4,
    tol: float = DEFAULT_CLAMP_TOL,
    method: Literal["eig", "charpoly"] = "eig",
) -> npt.NDArray[np.float64]:
    """
    Eigenvalues of a 4×4 matrix whose spectrum is real and nonnegative.

    ``method="eig"`` uses the dense LAPACK solver; ``method="charpoly"`` builds the
    characteristic quartic with Faddeev–LeVerrier and solves it through its
    companion matrix.

    Args:
        zeta: Matrix similar to a diagonal matrix with real nonnegative spectrum.
        tol: Imaginary parts and negative real parts up to ``tol`` in magnitude are clamped.
        method: Eigenvalue route.

    Returns:
        The four eigenvalues sorted in descending order.

    Raises:
        NonRealSpectrumError: If an eigenvalue has |imag| > tol or real part < -tol.
        ConvergenceFailureError: If the eigen solver does not converge.
    """
    mat = as_matrix(zeta, 4)
    try:
        if method == "charpoly":
            values = _charpoly_roots(mat)
        else:
            values = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(f"Eigenvalue solve failed: {exc}") from exc

    if np.any(np.abs(values.imag) > tol) or np.any(values.real < -tol):
        raise NonRealSpectrumError(f"Spectrum is not real nonnegative: {values}")
    clamped = np.clip(values.real, 0.0, None)
    return np.sort(clamped)[::-1]


def bloch_rotation(unitary: Mat2) -> Mat3:
    """
    SO(3) image of a 2×2 unitary: R_ij = ½ tr(σ_i U σ_j U†).

    The unitary acts on Bloch vectors as U (v·σ) U† = (R v)·σ.
    """
    u = as_matrix(unitary, 2)
    rot = np.empty((3, 3))
    for i, sigma_i in enumerate(PAULIS):
        for j, sigma_j in enumerate(PAULIS):
            rot[i, j] = 0.5 * np.trace(sigma_i @ u @ sigma_j @ dagger(u)).real
    return rot


def su2_lift(rotation: Mat3) -> Mat2:
    """
    Lift a rotation matrix to SU(2).

    Uses the quaternion of ``rotation`` (Shepperd's branch selection for
    stability) and returns U = wI − i(xσx + yσy + zσz). The global sign is fixed
    so that U[0, 0] has nonnegative real part.

    Raises:
        ValueError: If ``rotation`` is not in SO(3) within 1e-8.
    """
    r = np.asarray(rotation, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"Expected a 3x3 rotation, got shape {r.shape}")
    if not np.allclose(r @ r.T, np.eye(3), atol=1e-8) or np.linalg.det(r) < 0:
        raise ValueError("Matrix is not a proper rotation")

    trace = np.trace(r)
    if trace > 0:
        s = 2.0 * np.sqrt(1.0 + trace)
        quat = np.array([s / 4, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        quat = np.array([(r[2, 1] - r[1, 2]) / s, s / 4, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] >= r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        quat = np.array([(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, s / 4, (r[1, 2] + r[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        quat = np.array([(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, s / 4])

    quat /= np.linalg.norm(quat)
    if quat[0] < 0:
        quat = -quat
    w, x, y, z = quat
    return w * IDENTITY2 - 1j * (x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def svd3(mat: Mat3) -> Tuple[Mat3, Vec3, Mat3]:
    """
    Real SVD M = O1 diag(d) O2ᵀ with both O1 and O2 in SO(3).

    Signs needed to make the orthogonal factors proper rotations are pushed into
    the last entry of ``d``.

    Raises:
        ConvergenceFailureError: If the SVD does not converge.
    """
    try:
        left, values, right_t = np.linalg.svd(np.asarray(mat, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(f"SVD failed: {exc}") from exc
    left = left.copy()
    right = right_t.T.copy()
    values = values.copy()
    if np.linalg.det(left) < 0:
        left[:, 2] *= -1
        values[2] *= -1
    if np.linalg.det(right) < 0:
        right[:, 2] *= -1
        values[2] *= -1
    return left, values, right
