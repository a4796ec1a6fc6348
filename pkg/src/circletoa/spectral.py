"""Eigenanalysis of Hermitian operators and spectral diagnostics.

Backed by LAPACK through numpy.linalg.eigh; the test suite checks the
decomposition against an independently coded Jacobi solver, so the
contract here is residual bounds, not a particular algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import BasisTruncation, PhysicalParams
from .operators import HermitianOperator, NonHermitianError

ORTHONORMALITY_TOL = 1e-9
RECONSTRUCTION_RTOL = 1e-8
NONINVARIANCE_DELTA = 1e-3


@dataclass(frozen=True)
class StateVector:
    """Normalized state in the truncated momentum basis."""

    basis: BasisTruncation
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.basis.dimension,):
            raise ValueError(f"amplitude shape {amp.shape} does not match "
                             f"dimension {self.basis.dimension}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm!r} is not 1 within 1e-10")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_amplitudes(cls, basis: BasisTruncation, amplitudes) -> "StateVector":
        amp = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amp)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(basis, amp / norm)

    @classmethod
    def momentum_eigenstate(cls, basis: BasisTruncation, k: int) -> "StateVector":
        amp = np.zeros(basis.dimension, dtype=np.complex128)
        amp[basis.row(k)] = 1.0
        return cls(basis, amp)

    def expectation(self, op: HermitianOperator) -> float:
        return float(np.real(np.vdot(self.amplitudes, op.entries @ self.amplitudes)))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending with a matching orthonormal eigenbasis.

    Column k of ``eigenvectors`` pairs with ``eigenvalues[k]``.  Eigenvector
    phases are fixed by making the entry of largest modulus real positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.eigenvalues, dtype=float)
        v = np.ascontiguousarray(self.eigenvectors, dtype=np.complex128)
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.shape[0]

    def orthonormality_residual(self) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs(v.conj().T @ v - np.eye(self.dimension))))

    def reconstruction_residual(self, op: HermitianOperator) -> float:
        v, w = self.eigenvectors, self.eigenvalues
        return float(np.max(np.abs(op.entries - (v * w) @ v.conj().T)))

    def eigenstate(self, basis: BasisTruncation, index: int) -> StateVector:
        return StateVector(basis, self.eigenvectors[:, index])


def eigendecompose_hermitian(op: HermitianOperator) -> SpectralDecomposition:
    """Full eigendecomposition; raises NonHermitianError on bad input.

    Sort is descending by eigenvalue, ties broken by the eigensolver's
    ascending output index (stable), so repeated runs are reproducible.
    """
    op.require_hermitian()
    w, v = np.linalg.eigh(op.entries)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for col in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, col])))
        pivot = v[i, col]
        if pivot != 0.0:
            v[:, col] *= np.conj(pivot) / abs(pivot)
    return SpectralDecomposition(w, v)


def hilbert_schmidt_norm(op: HermitianOperator) -> float:
    """Frobenius norm; finite-basis stand-in for the Hilbert-Schmidt norm."""
    return float(np.linalg.norm(op.entries))


def count_eigenvalues_above(decomp: SpectralDecomposition, lam: float) -> int:
    """Number of eigenvalues with |tau| > lam (lam must be positive)."""
    if not lam > 0.0:
        raise ValueError(f"threshold must be positive, got {lam!r}")
    return int(np.count_nonzero(np.abs(decomp.eigenvalues) > lam))


def sign_census(decomp: SpectralDecomposition, zero_tol: float = 1e-10) -> tuple[int, int, int]:
    """(n_pos, n_neg, n_zero) with |tau| <= zero_tol counted as zero."""
    if zero_tol < 0.0:
        raise ValueError(f"zero_tol must be >= 0, got {zero_tol!r}")
    w = decomp.eigenvalues
    n_zero = int(np.count_nonzero(np.abs(w) <= zero_tol))
    n_pos = int(np.count_nonzero(w > zero_tol))
    n_neg = int(np.count_nonzero(w < -zero_tol))
    return n_pos, n_neg, n_zero


def _is_diagonal(matrix: np.ndarray) -> bool:
    off = matrix - np.diag(np.diag(matrix))
    scale = 1.0 + float(np.max(np.abs(matrix)))
    return float(np.max(np.abs(off))) <= 1e-14 * scale


def evolution_matrix(hamiltonian: HermitianOperator, t: float,
                     params: Optional[PhysicalParams] = None) -> np.ndarray:
    """exp(-i H t / hbar), exact through the eigendecomposition of H."""
    params = params or PhysicalParams()
    h = hamiltonian.entries
    phase = -1j * t / params.hbar
    if _is_diagonal(h):
        return np.diag(np.exp(phase * np.real(np.diag(h))))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(phase * w)) @ v.conj().T


def evolve(psi: StateVector, hamiltonian: HermitianOperator, t: float,
           params: Optional[PhysicalParams] = None) -> StateVector:
    """Free propagation of a state by time t (t may be negative)."""
    u = evolution_matrix(hamiltonian, t, params)
    amp = u @ psi.amplitudes
    return StateVector(psi.basis, amp / np.linalg.norm(amp))


@dataclass(frozen=True)
class TimeTranslationReport:
    """Squared overlaps of each evolved eigenvector onto the eigenbasis.

    ``overlaps[l, k]`` is |<tau_l| U(t) |tau_k>|^2; ``max_overlap[k]`` below
    1 - delta certifies that evolution does not map eigenvector k onto any
    single eigenvector, i.e. the operator is not time-translation covariant.
    """

    t: float
    overlaps: np.ndarray
    delta: float = NONINVARIANCE_DELTA

    @property
    def max_overlap(self) -> np.ndarray:
        return np.max(self.overlaps, axis=0)

    @property
    def column_sums(self) -> np.ndarray:
        return np.sum(self.overlaps, axis=0)

    @property
    def noninvariant_indices(self) -> np.ndarray:
        return np.nonzero(self.max_overlap < 1.0 - self.delta)[0]


def time_translation_report(decomp: SpectralDecomposition,
                            hamiltonian: HermitianOperator, t: float,
                            params: Optional[PhysicalParams] = None,
                            delta: float = NONINVARIANCE_DELTA) -> TimeTranslationReport:
    u = evolution_matrix(hamiltonian, t, params)
    evolved = u @ decomp.eigenvectors
    overlaps = np.abs(decomp.eigenvectors.conj().T @ evolved) ** 2
    return TimeTranslationReport(t=t, overlaps=overlaps, delta=delta)


def position_density(psi: StateVector, grid_size: int) -> np.ndarray:
    """Probability per cell on the midpoint angle grid of the given size.

    Uses the plane-wave overlap <theta|k> = exp(i k theta) / sqrt(2 pi);
    entries sum to 1 once grid_size >= dimension (no aliasing).
    """
    dim = psi.basis.dimension
    if grid_size < dim:
        raise ValueError(f"grid_size {grid_size} must be >= dimension {dim}")
    dtheta = 2.0 * np.pi / grid_size
    thetas = -np.pi + (np.arange(grid_size) + 0.5) * dtheta
    waves = np.exp(1j * np.outer(thetas, psi.basis.k_values())) / np.sqrt(2.0 * np.pi)
    values = waves @ psi.amplitudes
    return (np.abs(values) ** 2) * dtheta


def spectral_transform(decomp: SpectralDecomposition, basis: BasisTruncation,
                       fn: Callable[[np.ndarray], np.ndarray],
                       meta: Optional[dict] = None) -> HermitianOperator:
    """Apply a real function to the spectrum: sum of fn(tau_k) |tau_k><tau_k|."""
    values = np.asarray(fn(decomp.eigenvalues), dtype=float)
    v = decomp.eigenvectors
    matrix = (v * values) @ v.conj().T
    return HermitianOperator.from_matrix(basis, matrix, meta or {"method": "spectral-transform"})


def operator_sqrt(decomp: SpectralDecomposition, basis: BasisTruncation,
                  negative_policy: str = "reject") -> HermitianOperator:
    """Square root through the spectrum.

    Negative eigenvalues make the square root undefined; the policy either
    rejects the input or clamps them to zero first.
    """
    if negative_policy not in ("reject", "clamp"):
        raise ValueError(f"negative_policy must be 'reject' or 'clamp', "
                         f"got {negative_policy!r}")
    w = decomp.eigenvalues
    if negative_policy == "reject" and w.min() < 0.0:
        raise ValueError(f"spectrum has negative eigenvalues (min {w.min():g}); "
                         "use negative_policy='clamp' to zero them")
    return spectral_transform(decomp, basis, lambda tau: np.sqrt(np.maximum(tau, 0.0)),
                              {"method": "operator-sqrt", "negative_policy": negative_policy})


# ---------------------------------------------------------------------------
# spectrum file format


def save_spectrum(decomp: SpectralDecomposition, op: HermitianOperator,
                  params: PhysicalParams, path) -> None:
    """Write eigenvalues under the operator header, one `index tau` per line."""
    basis = op.basis
    lines = [
        "toa-operator v1",
        f"dimension {basis.dimension}",
        f"n_max {basis.n_max}",
        f"mass {params.mass:.17g}",
        f"radius {params.radius:.17g}",
        f"hbar {params.hbar:.17g}",
        f"kernel {op.meta.get('kernel', 'custom')}",
        f"g {op.meta.get('g', 'custom')}",
    ]
    for idx, tau in enumerate(decomp.eigenvalues):
        lines.append(f"{idx} {tau:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
