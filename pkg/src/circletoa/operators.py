"""Arrival-time operator construction for a free particle on a circle.

The classical first-passage time to the screen angle 0 is quantized with a
kernel-selected phase-space rule: the operator matrix element is a sum over
integer momenta n of a kernel sigma-factor times a Fourier coefficient of
the classical function at momentum n*hbar.  For the symmetric-ordering
kernel the whole construction collapses to explicit rational entries,
implemented separately in :func:`build_symmetric_closed_form` and used to
cross-validate the quadrature route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import BasisTruncation, PhysicalParams
from .quadrature import TWO_PI, QuadratureSpec, panel_gauss_grid, quadrature_grid

HERMITICITY_RTOL = 1e-10


class NonHermitianError(ValueError):
    """Matrix fails the Hermiticity bound required of tagged operators."""


# ---------------------------------------------------------------------------
# regulator of the zero-momentum fibre


@dataclass(frozen=True)
class RegulatorFunction:
    """Nonnegative function g(theta) giving the arrival time at zero momentum.

    A constant regulator carries its value in ``constant``, which enables
    analytic Fourier coefficients c * delta(l, 0); anything else is handled
    by quadrature.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    constant: Optional[float] = None
    label: str = "custom"

    @classmethod
    def const(cls, c: float) -> "RegulatorFunction":
        if not (np.isfinite(c) and c >= 0.0):
            raise ValueError(f"constant regulator must be >= 0, got {c!r}")
        c = float(c)
        return cls(evaluate=lambda t: np.full_like(np.asarray(t, dtype=float), c),
                   constant=c, label=f"const:{c:g}")

    @classmethod
    def zero(cls) -> "RegulatorFunction":
        return cls.const(0.0)

    @classmethod
    def from_callable(cls, fn, label: str = "custom") -> "RegulatorFunction":
        return cls(evaluate=fn, constant=None, label=label)

    def check_nonnegative(self, nodes: np.ndarray) -> None:
        values = np.asarray(self.evaluate(nodes), dtype=float)
        if values.min() < 0.0:
            raise ValueError(f"regulator {self.label!r} is negative on the grid "
                             f"(min {values.min():g})")

    def fourier(self, l: int, quad: QuadratureSpec) -> complex:
        """(1/2pi) * integral of g(theta) exp(-i l theta)."""
        if self.constant is not None:
            return complex(self.constant) if l == 0 else 0j
        nodes, weights = quadrature_grid(quad)
        values = np.asarray(self.evaluate(nodes), dtype=float)
        return complex(np.sum(weights * values * np.exp(-1j * l * nodes)))


# ---------------------------------------------------------------------------
# ordering kernels


@dataclass(frozen=True)
class OrderingKernel:
    """Kernel K(sigma, l) selecting the operator ordering.

    The named variants reduce the sigma-integral of the quantizer to exact
    expressions; custom kernels fall back to Gauss-Legendre quadrature in
    sigma (the integrand is smooth but need not be periodic, so the
    periodic rule is not used here).
    """

    name: str
    evaluate: Callable[[np.ndarray, int], np.ndarray]

    @classmethod
    def weyl(cls) -> "OrderingKernel":
        return cls("weyl", lambda sigma, l: np.ones_like(np.asarray(sigma, dtype=float)))

    @classmethod
    def symmetric(cls) -> "OrderingKernel":
        return cls("symmetric", lambda sigma, l: np.cos(0.5 * l * np.asarray(sigma, dtype=float)))

    @classmethod
    def custom(cls, fn, name: str = "custom") -> "OrderingKernel":
        return cls(name, fn)

    @property
    def analytic(self) -> bool:
        return self.name in ("weyl", "symmetric")


def kernel_sigma_factor(kernel: OrderingKernel, j: int, k: int, n: int,
                        quad: QuadratureSpec) -> complex:
    """(1/2pi) * integral of K(sigma, j-k) exp(i sigma ((j+k)/2 - n)) d sigma.

    Weyl: sinc((j+k)/2 - n).  Symmetric: (delta(j,n) + delta(k,n)) / 2.
    """
    if kernel.name == "weyl":
        return complex(np.sinc(0.5 * (j + k) - n))
    if kernel.name == "symmetric":
        return 0.5 * ((j == n) + (k == n))
    nodes, weights = panel_gauss_grid(quad.nodes)
    values = np.asarray(kernel.evaluate(nodes, j - k))
    alpha = 0.5 * (j + k) - n
    return complex(np.sum(weights * values * np.exp(1j * alpha * nodes)))


def quantizer_element(kernel: OrderingKernel, theta: float, n: int, j: int, k: int,
                      quad: QuadratureSpec) -> complex:
    """Matrix element <j| Omega_K(theta, n) |k> of the phase-space quantizer."""
    return np.exp(-1j * (j - k) * theta) * kernel_sigma_factor(kernel, j, k, n, quad)


# ---------------------------------------------------------------------------
# classical first-passage time


def classical_toa(theta: float, angular_momentum: float, g: RegulatorFunction,
                  params: PhysicalParams, at_screen: str = "zero") -> float:
    """First-passage time to the screen angle 0 on a circle.

    ``theta`` is the initial angle in (-pi, pi], ``angular_momentum`` the
    (signed) angular momentum.  The zero-momentum fibre returns
    m r^2 * g(theta).  The value exactly at the screen for nonzero momentum
    is a measure-zero convention: "zero" (already arrived) or "period"
    (one full revolution, 2 pi m r^2 / |L|).
    """
    if not (-np.pi < theta <= np.pi):
        raise ValueError(f"theta must lie in (-pi, pi], got {theta!r}")
    if at_screen not in ("zero", "period"):
        raise ValueError(f"at_screen must be 'zero' or 'period', got {at_screen!r}")
    scale = params.mass * params.radius**2
    L = angular_momentum
    if L == 0.0:
        return scale * float(np.asarray(g.evaluate(np.array([theta])), dtype=float)[0])
    if theta == 0.0:
        return 0.0 if at_screen == "zero" else scale * TWO_PI / abs(L)
    if theta > 0.0:
        return scale * ((TWO_PI - theta) / L if L > 0.0 else -theta / L)
    return scale * (-theta / L if L > 0.0 else -(TWO_PI + theta) / L)


def _toa_on_grid(thetas: np.ndarray, momentum_label: int, g: RegulatorFunction,
                 params: PhysicalParams) -> np.ndarray:
    """Vectorized classical arrival time at angular momentum n*hbar.

    Quadrature grids never place a node exactly on the screen angle, so no
    convention choice is needed here.
    """
    scale = params.mass * params.radius**2
    if momentum_label == 0:
        return scale * np.asarray(g.evaluate(thetas), dtype=float)
    L = momentum_label * params.hbar
    if L > 0.0:
        return scale * np.where(thetas > 0.0, (TWO_PI - thetas) / L, -thetas / L)
    return scale * np.where(thetas > 0.0, -thetas / L, -(TWO_PI + thetas) / L)


def _toa_fourier(l: int, momentum_label: int, g: RegulatorFunction,
                 params: PhysicalParams, quad: QuadratureSpec) -> complex:
    """(1/2pi) * integral of T(theta, n hbar) exp(-i l theta) d theta.

    The integrand jumps by 2 pi m r^2 / (n hbar) at the screen angle, which
    caps a plain periodic rule at O(M^-2).  The Gauss-Legendre scheme already
    splits its panels there; for the periodic scheme the known jump is
    removed with an exact unit sawtooth before quadrature and restored
    analytically afterwards.
    """
    n = momentum_label
    if quad.scheme == "gauss-legendre" or n == 0:
        nodes, weights = quadrature_grid(quad)
        values = _toa_on_grid(nodes, n, g, params)
        return complex(np.sum(weights * values * np.exp(-1j * l * nodes)))
    nodes, weights = quadrature_grid(quad)
    values = _toa_on_grid(nodes, n, g, params)
    jump = TWO_PI * params.mass * params.radius**2 / (n * params.hbar)
    sawtooth = np.where(nodes > 0.0, 0.5, -0.5) - nodes / TWO_PI
    coeff = complex(np.sum(weights * (values - jump * sawtooth) * np.exp(-1j * l * nodes)))
    if l != 0:
        coeff += jump * (-1j / (TWO_PI * l))  # exact sawtooth coefficient
    return coeff


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class HermitianOperator:
    """Dense complex matrix in the truncated momentum basis.

    Entries are immutable; ``meta`` carries provenance fields used by the
    operator file header (kernel, regulator, construction method).
    """

    basis: BasisTruncation
    entries: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.shape != (self.basis.dimension, self.basis.dimension):
            raise ValueError(f"entries shape {entries.shape} does not match "
                             f"dimension {self.basis.dimension}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_matrix(cls, basis: BasisTruncation, matrix: np.ndarray,
                    meta: Optional[dict] = None, check: bool = True) -> "HermitianOperator":
        op = cls(basis, matrix, dict(meta or {}))
        if check:
            op.require_hermitian()
        return op

    def hermiticity_residual(self) -> float:
        a = self.entries
        return float(np.max(np.abs(a - a.conj().T)))

    def require_hermitian(self, rtol: float = HERMITICITY_RTOL) -> None:
        scale = 1.0 + float(np.max(np.abs(self.entries))) if self.entries.size else 1.0
        residual = self.hermiticity_residual()
        if residual > rtol * scale:
            raise NonHermitianError(
                f"Hermiticity residual {residual:.3e} exceeds {rtol:g} * {scale:.3g}")

    def element(self, j: int, k: int) -> complex:
        """Entry <j| A |k> by momentum labels."""
        return complex(self.entries[self.basis.row(j), self.basis.row(k)])


def build_operator_wwsc(kernel: OrderingKernel, g: RegulatorFunction,
                        basis: BasisTruncation, params: PhysicalParams,
                        quad: QuadratureSpec) -> HermitianOperator:
    """Quantize the classical arrival time with the given ordering kernel.

    Entry (j, k) is the sum over |n| <= n_max of the kernel sigma-factor
    times the theta-Fourier coefficient of T(., n hbar) at l = j - k.  For
    the named kernels the sigma-factor vanishes (or is negligible) outside
    n in {j, k} or n = (j+k)/2, so the truncation is exact; for custom
    kernels the neglected tail is estimated and stored in the metadata.
    """
    quad.require_antialias(basis.dimension)
    g.check_nonnegative(quadrature_grid(quad)[0])
    n_max = basis.n_max
    ks = basis.k_values()

    toa_cache: dict[tuple[int, int], complex] = {}

    def toa_coeff(l: int, n: int) -> complex:
        key = (l, n)
        if key not in toa_cache:
            toa_cache[key] = _toa_fourier(l, n, g, params, quad)
        return toa_cache[key]

    sigma_cache: dict[tuple[int, int], complex] = {}

    def sigma_factor(j: int, k: int, n: int) -> complex:
        # depends only on l = j - k and j + k - 2n
        key = (j - k, j + k - 2 * n)
        if key not in sigma_cache:
            sigma_cache[key] = kernel_sigma_factor(kernel, j, k, n, quad)
        return sigma_cache[key]

    dim = basis.dimension
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for j in ks:
        for k in ks:
            acc = 0j
            for n in range(-n_max, n_max + 1):
                s = sigma_factor(j, k, n)
                if s != 0:
                    acc += s * toa_coeff(j - k, n)
            matrix[basis.row(j), basis.row(k)] = acc

    meta = {"kernel": kernel.name, "g": g.label, "method": "wwsc-quadrature",
            "scheme": quad.scheme, "nodes": quad.nodes}
    if not kernel.analytic:
        meta["n_tail_estimate"] = _wwsc_tail_estimate(kernel, g, basis, params, quad,
                                                      sigma_factor, toa_coeff)
    return HermitianOperator.from_matrix(basis, matrix, meta)


def _wwsc_tail_estimate(kernel, g, basis, params, quad, sigma_factor, toa_coeff) -> float:
    """Max contribution of the next n_max momenta beyond the truncation."""
    n_max = basis.n_max
    ks = basis.k_values()
    worst = 0.0
    for j in ks:
        for k in ks:
            tail = 0j
            for n in list(range(-2 * n_max, -n_max)) + list(range(n_max + 1, 2 * n_max + 1)):
                s = sigma_factor(int(j), int(k), n)
                if s != 0:
                    tail += s * toa_coeff(int(j) - int(k), n)
            worst = max(worst, abs(tail))
    return worst


def build_symmetric_closed_form(g: RegulatorFunction, basis: BasisTruncation,
                                params: PhysicalParams,
                                quad: Optional[QuadratureSpec] = None) -> HermitianOperator:
    """Symmetric-ordering arrival-time operator from its explicit entries.

    Off-diagonal (j, k nonzero, j != k): m r^2 (j+k) / (2 i hbar j k (j-k)).
    Diagonal (k nonzero): pi m r^2 / (hbar |k|).
    Column 0 (j nonzero): m r^2 [1/(2 i hbar j^2) + g_hat(j) / 2] and the
    conjugate mirror on row 0; entry (0, 0) is m r^2 times the mean of g.
    The quadrature spec is used only for the Fourier coefficients of a
    non-constant regulator.
    """
    quad = quad or QuadratureSpec()
    scale = params.mass * params.radius**2
    hbar = params.hbar
    dim = basis.dimension
    ks = basis.k_values().astype(float)

    jj, kk = np.meshgrid(ks, ks, indexing="ij")
    matrix = np.zeros((dim, dim), dtype=np.complex128)

    interior = (jj != 0) & (kk != 0) & (jj != kk)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = scale * (jj + kk) / (2j * hbar * jj * kk * (jj - kk))
    matrix[interior] = off[interior]

    diag = np.where(ks != 0, scale * np.pi / (hbar * np.abs(ks)), 0.0)
    matrix[np.arange(dim), np.arange(dim)] = diag

    zero_row = basis.row(0)
    for k in basis.k_values():
        if k == 0:
            continue
        ghat = g.fourier(int(k), quad)
        column_entry = scale * (1.0 / (2j * hbar * k * k) + 0.5 * ghat)
        matrix[basis.row(k), zero_row] = column_entry
        matrix[zero_row, basis.row(k)] = np.conj(column_entry)
    matrix[zero_row, zero_row] = scale * np.real(g.fourier(0, quad))

    meta = {"kernel": "symmetric", "g": g.label, "method": "closed-form",
            "scheme": quad.scheme, "nodes": quad.nodes}
    return HermitianOperator.from_matrix(basis, matrix, meta)


def free_hamiltonian(basis: BasisTruncation, params: PhysicalParams) -> HermitianOperator:
    """Kinetic energy hbar^2 k^2 / (2 m r^2), diagonal in the momentum basis."""
    ks = basis.k_values().astype(float)
    energies = (params.hbar * ks) ** 2 / (2.0 * params.mass * params.radius**2)
    return HermitianOperator.from_matrix(basis, np.diag(energies.astype(np.complex128)),
                                         {"kernel": "none", "g": "none",
                                          "method": "free-hamiltonian"})


# ---------------------------------------------------------------------------
# operator file format


OPERATOR_MAGIC = "toa-operator v1"


def save_operator(op: HermitianOperator, params: PhysicalParams, path) -> None:
    """Write the text operator file; floats carry 17 significant digits."""
    basis = op.basis
    lines = [
        OPERATOR_MAGIC,
        f"dimension {basis.dimension}",
        f"n_max {basis.n_max}",
        f"mass {params.mass:.17g}",
        f"radius {params.radius:.17g}",
        f"hbar {params.hbar:.17g}",
        f"kernel {op.meta.get('kernel', 'custom')}",
        f"g {op.meta.get('g', 'custom')}",
    ]
    for j in basis.k_values():
        for k in basis.k_values():
            v = op.entries[basis.row(j), basis.row(k)]
            lines.append(f"{j} {k} {v.real:.17g} {v.imag:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_operator(path) -> tuple[HermitianOperator, PhysicalParams]:
    """Read an operator file back; inverse of :func:`save_operator`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != OPERATOR_MAGIC:
        raise ValueError(f"{path}: not a {OPERATOR_MAGIC!r} file")
    header = {}
    for line in lines[1:8]:
        key, _, value = line.partition(" ")
        header[key] = value
    try:
        dimension = int(header["dimension"])
        basis = BasisTruncation(int(header["n_max"]))
        params = PhysicalParams(float(header["mass"]), float(header["radius"]),
                                float(header["hbar"]))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: corrupt header ({exc})") from exc
    if basis.dimension != dimension:
        raise ValueError(f"{path}: dimension {dimension} inconsistent with "
                         f"n_max {basis.n_max}")
    body = lines[8:]
    if len(body) < dimension * dimension:
        raise ValueError(f"{path}: expected {dimension * dimension} entries, "
                         f"got {len(body)}")
    matrix = np.zeros((dimension, dimension), dtype=np.complex128)
    for line in body[:dimension * dimension]:
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}: malformed entry line {line!r}")
        j, k = int(parts[0]), int(parts[1])
        matrix[basis.row(j), basis.row(k)] = float(parts[2]) + 1j * float(parts[3])
    meta = {"kernel": header.get("kernel", "custom"), "g": header.get("g", "custom"),
            "method": "loaded"}
    return HermitianOperator.from_matrix(basis, matrix, meta, check=False), params
