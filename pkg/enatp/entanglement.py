"""
Entanglement and correlation quantifiers: spin flip, Wootters concurrence,
the partial-transpose test and the product-state test.
"""

from typing import Literal, Tuple

import numpy as np

from enatp.matcore import (
    DEFAULT_CLAMP_TOL,
    SIGMA_YY,
    Mat4,
    eigenvalues_nonneg,
    hermitize,
    partial_trace_environment,
    partial_trace_system,
    partial_transpose,
)
from enatp.models import ConcurrenceResult, SeparabilityVerdict
from enatp.states import DensityMatrix2Q, PureState2Q, bloch_decompose

CONCURRENCE_ZERO_TOL = 1e-9
PPT_TOL = 1e-9
PRODUCT_TOL = 1e-9

ConcurrenceMethod = Literal["factorized", "eigen", "charpoly"]


def spin_flip(rho: DensityMatrix2Q) -> Mat4:
    """ρ̃ = (σy⊗σy) ρ* (σy⊗σy)."""
    return SIGMA_YY @ rho.matrix.conj() @ SIGMA_YY


def _factorized_sqrt_eigs(rho: DensityMatrix2Q) -> np.ndarray:
    # ρ = X X†, and the eigenvalues of ρρ̃ are the squared singular values of Xᵀ(σy⊗σy)X.
    weights, vectors = np.linalg.eigh(hermitize(rho.matrix))
    x = vectors * np.sqrt(np.clip(weights, 0.0, None))
    return np.linalg.svd(x.T @ SIGMA_YY @ x, compute_uv=False)


def concurrence(
    rho: DensityMatrix2Q,
    method: ConcurrenceMethod = "factorized",
    clamp_tol: float = DEFAULT_CLAMP_TOL,
) -> ConcurrenceResult:
    """
    Wootters concurrence max(0, √λ1 − √λ2 − √λ3 − √λ4) of ρρ̃.

    Args:
        rho: Two-qubit state.
        method: ``factorized`` takes the √λ as singular values of Xᵀ(σy⊗σy)X with
            ρ = XX†, which stays accurate when ρρ̃ is rank deficient. ``eigen`` and
            ``charpoly`` solve for the eigenvalues of ρρ̃ directly.
        clamp_tol: Clamp tolerance handed to the eigenvalue solver.

    Returns:
        ConcurrenceResult with the clamped value and the descending √λ.

    Raises:
        NonRealSpectrumError: If ρρ̃ has a spectrum that is not real nonnegative.
    """
    if method == "factorized":
        sqrt_eigs = np.sort(_factorized_sqrt_eigs(rho))[::-1]
    else:
        solver = "charpoly" if method == "charpoly" else "eig"
        eigs = eigenvalues_nonneg(rho.matrix @ spin_flip(rho), tol=clamp_tol, method=solver)
        sqrt_eigs = np.sqrt(eigs)
    value = sqrt_eigs[0] - sqrt_eigs[1] - sqrt_eigs[2] - sqrt_eigs[3]
    return ConcurrenceResult(
        value=float(np.clip(value, 0.0, 1.0)),
        sqrt_eigs=[float(s) for s in sqrt_eigs],
    )


def concurrence_value(rho: DensityMatrix2Q) -> float:
    """Shorthand for ``concurrence(rho).value``."""
    return concurrence(rho).value


def pure_concurrence(psi: PureState2Q) -> float:
    """2|ad − bc| for a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩."""
    a, b, c, d = psi.amplitudes
    return float(min(1.0, 2.0 * abs(a * d - b * c)))


def ppt_check(
    rho: DensityMatrix2Q,
    tol: float = PPT_TOL,
    zero_tol: float = CONCURRENCE_ZERO_TOL,
) -> SeparabilityVerdict:
    """
    Partial-transpose verdict with the concurrence test and the product gap.

    Args:
        rho: Two-qubit state.
        tol: Eigenvalues of the partial transpose at or above ``-tol`` count as nonnegative.
        zero_tol: Concurrence below this is reported as zero.

    Returns:
        SeparabilityVerdict.
    """
    pt_eigs = np.linalg.eigvalsh(hermitize(partial_transpose(rho.matrix)))
    min_eig = float(pt_eigs[0])
    return SeparabilityVerdict(
        concurrence_zero=bool(concurrence(rho).value < zero_tol),
        ppt=bool(min_eig >= -tol),
        min_pt_eigenvalue=min_eig,
        pt_determinant=float(np.prod(pt_eigs)),
        product_gap=bloch_decompose(rho).correlation_gap,
    )


def factorization_gap(rho: DensityMatrix2Q) -> float:
    """‖ρ − ρ_S⊗ρ_E‖ in the Frobenius norm."""
    product = np.kron(partial_trace_environment(rho.matrix), partial_trace_system(rho.matrix))
    return float(np.linalg.norm(rho.matrix - product))


def product_state_test(rho: DensityMatrix2Q, tol: float = PRODUCT_TOL) -> Tuple[bool, float]:
    """
    Decide whether ``rho`` is a product state.

    Both the correlation gap ‖T − a bᵀ‖ and the factorization gap ‖ρ − ρ_S⊗ρ_E‖
    must lie below ``tol``.

    Returns:
        (is_product, correlation_gap).
    """
    gap = bloch_decompose(rho).correlation_gap
    return gap < tol and factorization_gap(rho) < tol, gap
