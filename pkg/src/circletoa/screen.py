"""Waiting-screen detector: repeated measurement, absorption statistics, POVM.

The detector occupies an arc of the circle and is probed every eta time
units.  Between probes the state evolves freely; a probe either finds the
particle in the arc (absorption, probability P_j at step j) or applies the
survival operator and the chain continues.  Survival is the complementary
projector, or a contraction modelling an absorbing imaginary potential of
strength V0 acting over one time step, or a user-supplied contraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .basis import BasisTruncation, PhysicalParams
from .operators import HermitianOperator
from .spectral import StateVector, evolution_matrix

PROJECTOR = "projector"
COMPLEX_POTENTIAL = "complex-potential"
CUSTOM = "custom"

POV_FLAG = "POV"
GPOV_FLAG = "GPOV"

SUM_SLACK = 1e-9


class ZenoGateError(RuntimeError):
    """Measurement cadence at or below the Zeno time without an override."""


class EmptyArcError(ValueError):
    """No position grid point falls inside the detection arc."""


class ContractionError(ValueError):
    """Custom survival operator increases the norm of some state."""


class UndefinedAverageError(ValueError):
    """Average arrival time requested but no probability was absorbed."""


@dataclass(frozen=True)
class ScreenConfig:
    """Detector geometry, measurement cadence and absorber variant."""

    arc: tuple[float, float] = (-0.2, 0.2)
    eta: float = 0.1
    steps: int = 100
    absorber: str = PROJECTOR
    v0: float = 0.0
    custom_operator: Optional[np.ndarray] = None
    grid_size: int = 0  # 0 means 4 * dimension, chosen at use time
    pov_tol: float = 1e-2
    zeno_override: bool = False

    def __post_init__(self):
        lo, hi = self.arc
        if not (-np.pi <= lo < hi <= np.pi):
            raise ValueError(f"arc must satisfy -pi <= a < b <= pi, got {self.arc!r}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if self.absorber not in (PROJECTOR, COMPLEX_POTENTIAL, CUSTOM):
            raise ValueError(f"unknown absorber mode {self.absorber!r}")
        if self.absorber == COMPLEX_POTENTIAL and not self.v0 > 0.0:
            raise ValueError(f"complex-potential mode needs v0 > 0, got {self.v0!r}")
        if self.absorber == CUSTOM and self.custom_operator is None:
            raise ValueError("custom mode needs custom_operator")
        if not 0.0 < self.pov_tol < 1.0:
            raise ValueError(f"pov_tol must be in (0, 1), got {self.pov_tol!r}")

    def resolved_grid_size(self, basis: BasisTruncation) -> int:
        size = self.grid_size if self.grid_size else 4 * basis.dimension
        if size < basis.dimension:
            raise ValueError(f"grid_size {size} must be >= dimension {basis.dimension}")
        return size


@dataclass(frozen=True)
class AbsorptionRecord:
    """Probability sequence of one detector run plus derived summaries."""

    probabilities: np.ndarray
    eta: float
    mode: str  # POV when the probabilities sum to ~1, else GPOV
    tau_mean: Optional[float]

    def __post_init__(self):
        p = np.ascontiguousarray(self.probabilities, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.tau_mean is not None and self.tau_mean < -1e-15:
            raise ValueError(f"tau_mean must be >= 0, got {self.tau_mean!r}")

    @property
    def total(self) -> float:
        return float(np.sum(self.probabilities))

    @property
    def survival(self) -> float:
        return 1.0 - self.total

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)


def gaussian_packet(basis: BasisTruncation, k_mean: float, k_spread: float,
                    theta0: float) -> StateVector:
    """Momentum-space Gaussian exp(-(k - k_mean)^2 / (4 s^2) + i k theta0).

    The position density of this state peaks at the angle -theta0.
    """
    if not k_spread > 0.0:
        raise ValueError(f"k_spread must be positive, got {k_spread!r}")
    ks = basis.k_values().astype(float)
    amp = np.exp(-((ks - k_mean) ** 2) / (4.0 * k_spread**2) + 1j * ks * theta0)
    return StateVector.from_amplitudes(basis, amp)


def screen_projector(cfg: ScreenConfig, basis: BasisTruncation) -> HermitianOperator:
    """Projector onto the detection arc, built on the position grid.

    The grid has exactly ``dimension`` midpoints, for which the plane-wave
    transform is unitary and the conjugated 0/1 indicator is an exact
    projector (idempotent, eigenvalues 0 and 1, integer trace equal to the
    number of grid points inside the arc).  Finer grids cannot yield a
    projector after bandlimiting, so ``grid_size`` only controls density
    reporting elsewhere.
    """
    dim = basis.dimension
    dtheta = 2.0 * np.pi / dim
    thetas = -np.pi + (np.arange(dim) + 0.5) * dtheta
    lo, hi = cfg.arc
    inside = (thetas >= lo) & (thetas < hi)  # left-closed on exact hits
    if not np.any(inside):
        raise EmptyArcError(f"no grid point of the {dim}-point grid falls in "
                            f"[{lo:g}, {hi:g})")
    transform = np.exp(1j * np.outer(thetas, basis.k_values())) / np.sqrt(dim)
    sel = transform[inside, :]
    matrix = sel.conj().T @ sel
    return HermitianOperator.from_matrix(
        basis, matrix, {"kernel": "none", "g": "none", "method": "screen-projector",
                        "arc": (float(lo), float(hi)), "points": int(inside.sum())})


def reflector(projector: HermitianOperator, cfg: ScreenConfig,
              params: Optional[PhysicalParams] = None,
              rng_seed: int = 0) -> Union[HermitianOperator, np.ndarray]:
    """Survival operator applied to the undetected branch each step.

    Projector mode: complement 1 - E.  Complex-potential mode: the arc
    amplitude is damped by exp(-v0 eta / hbar) instead of removed, so the
    operator is 1 - E + exp(-v0 eta / hbar) E.  Custom operators are
    accepted after a seeded random-sample contraction check.
    """
    params = params or PhysicalParams()
    e = projector.entries
    eye = np.eye(e.shape[0], dtype=np.complex128)
    if cfg.absorber == PROJECTOR:
        return HermitianOperator.from_matrix(projector.basis, eye - e,
                                             {"method": "reflector-projector"})
    if cfg.absorber == COMPLEX_POTENTIAL:
        damping = math.exp(-cfg.v0 * cfg.eta / params.hbar)
        return HermitianOperator.from_matrix(
            projector.basis, eye - e + damping * e,
            {"method": "reflector-complex-potential", "damping": damping})
    op = np.asarray(cfg.custom_operator, dtype=np.complex128)
    if op.shape != e.shape:
        raise ValueError(f"custom operator shape {op.shape} != {e.shape}")
    rng = np.random.default_rng(rng_seed)
    for _ in range(32):
        psi = rng.standard_normal(e.shape[0]) + 1j * rng.standard_normal(e.shape[0])
        psi /= np.linalg.norm(psi)
        grown = np.linalg.norm(op @ psi)
        if grown > 1.0 + 1e-10:
            raise ContractionError(f"custom survival operator amplifies a sample "
                                   f"state to norm {grown:.12g}")
    return op


def _as_matrix(op) -> np.ndarray:
    return op.entries if isinstance(op, HermitianOperator) else np.asarray(op)


def zeno_time(phi: StateVector, hamiltonian: HermitianOperator,
              params: Optional[PhysicalParams] = None) -> float:
    """hbar over the energy spread of the state; +inf for eigenstates."""
    params = params or PhysicalParams()
    h = hamiltonian.entries
    hpsi = h @ phi.amplitudes
    mean = float(np.real(np.vdot(phi.amplitudes, hpsi)))
    second = float(np.real(np.vdot(hpsi, hpsi)))
    variance = max(second - mean * mean, 0.0)
    spread = math.sqrt(variance)
    if spread <= 1e-12 * (1.0 + abs(mean)):
        return math.inf
    return params.hbar / spread


def _absorption_chain(phi: StateVector, detect: np.ndarray, survive: np.ndarray,
                      hamiltonian: HermitianOperator, times: Sequence[float],
                      params: PhysicalParams,
                      step_survive=None) -> np.ndarray:
    """Unconditional detection probabilities at the given measurement times.

    ``times`` are the probe moments t_0 = 0 < t_1 < ... ; the state is
    reflected first, then propagated across each interval.  ``step_survive``
    optionally supplies a per-interval survival operator (used for the
    absorbing potential with non-uniform intervals).
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("measurement times must start at 0 and increase")
    psi = phi.amplitudes.copy()
    probabilities = np.empty(len(times))
    for idx, _ in enumerate(times):
        p = float(np.real(np.vdot(psi, detect @ psi)))
        probabilities[idx] = min(max(p, 0.0), 1.0)
        if idx + 1 == len(times):
            break
        dt = times[idx + 1] - times[idx]
        u = evolution_matrix(hamiltonian, dt, params)
        surv = survive if step_survive is None else step_survive(dt)
        next_psi = u @ (surv @ psi)
        if np.linalg.norm(next_psi) > np.linalg.norm(psi) + 1e-10:
            raise ContractionError("survival step increased the state norm")
        psi = next_psi
    return probabilities


def absorption_probabilities(phi: StateVector, detect: HermitianOperator,
                             survive, hamiltonian: HermitianOperator,
                             cfg: ScreenConfig,
                             params: Optional[PhysicalParams] = None) -> AbsorptionRecord:
    """Run the uniform-cadence detector chain and collect P_0 .. P_steps.

    Guards the quantum Zeno regime: eta must exceed the Zeno time of the
    input state unless ``cfg.zeno_override`` is set.  In projector mode the
    probabilities provably sum to at most 1; the absorbing-potential mode
    re-counts the damped detected amplitude, so its sum is only bounded by
    1 / (1 - exp(-2 v0 eta / hbar)) and that bound is enforced instead.
    """
    params = params or PhysicalParams()
    norm = np.linalg.norm(phi.amplitudes)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"input state norm {norm!r} is not 1")
    tau_z = zeno_time(phi, hamiltonian, params)
    if cfg.eta <= tau_z and not cfg.zeno_override:
        raise ZenoGateError(
            f"eta = {cfg.eta:g} does not exceed the Zeno time {tau_z:g}; "
            "set zeno_override to probe the Zeno regime deliberately")
    times = cfg.eta * np.arange(cfg.steps + 1)
    probabilities = _absorption_chain(phi, detect.entries, _as_matrix(survive),
                                      hamiltonian, times, params)
    total = float(np.sum(probabilities))
    bound = 1.0
    if cfg.absorber == COMPLEX_POTENTIAL:
        bound = 1.0 / -math.expm1(-2.0 * cfg.v0 * cfg.eta / params.hbar)
    if cfg.absorber in (PROJECTOR, COMPLEX_POTENTIAL) and total > bound + SUM_SLACK:
        raise ValueError(f"probability sum {total!r} exceeds the mode bound {bound!r}")
    if total > 0.0:
        tau_mean, mode = average_arrival_time_from(probabilities, cfg.eta, cfg.pov_tol)
    else:
        tau_mean, mode = None, GPOV_FLAG
    return AbsorptionRecord(probabilities=np.clip(probabilities, 0.0, 1.0),
                            eta=cfg.eta, mode=mode, tau_mean=tau_mean)


def nonuniform_absorption(phi: StateVector, detect: HermitianOperator,
                          hamiltonian: HermitianOperator, times: Sequence[float],
                          cfg: ScreenConfig,
                          params: Optional[PhysicalParams] = None) -> np.ndarray:
    """General measurement chain with arbitrary increasing probe times.

    The absorbing-potential damping depends on the interval length, so the
    survival operator is rebuilt per step; the uniform chain is the special
    case times = eta * (0, 1, 2, ...).
    """
    params = params or PhysicalParams()
    eye = np.eye(detect.basis.dimension, dtype=np.complex128)
    e = detect.entries
    if cfg.absorber == PROJECTOR:
        step = None
        survive = eye - e
    elif cfg.absorber == COMPLEX_POTENTIAL:
        survive = eye - e

        def step(dt):
            return eye - e + math.exp(-cfg.v0 * dt / params.hbar) * e
    else:
        step = None
        survive = reflector(detect, cfg, params)
        survive = _as_matrix(survive)
    return _absorption_chain(phi, e, survive, hamiltonian, times, params,
                             step_survive=step)


def pov_element(detect: HermitianOperator, survive, hamiltonian: HermitianOperator,
                cfg: ScreenConfig, j: int,
                params: Optional[PhysicalParams] = None) -> HermitianOperator:
    """Measure element F_j whose expectation is the step-j probability.

    F_j = (S+ U+)^j E (U S)^j with U the one-step propagator and S the
    survival operator; positive semidefinite with eigenvalues at most 1.
    """
    if j < 0:
        raise ValueError(f"step index must be >= 0, got {j!r}")
    params = params or PhysicalParams()
    u = evolution_matrix(hamiltonian, cfg.eta, params)
    c = u @ _as_matrix(survive)
    power = np.linalg.matrix_power(c, j)
    matrix = power.conj().T @ detect.entries @ power
    op = HermitianOperator.from_matrix(detect.basis, matrix,
                                       {"method": "pov-element", "j": int(j)})
    floor = float(np.min(np.linalg.eigvalsh(op.entries)))
    if floor < -1e-9:
        raise ValueError(f"measure element F_{j} has eigenvalue {floor:.3e} < -1e-9")
    return op


def average_arrival_time_from(probabilities, eta: float,
                              pov_tol: float = 1e-2) -> tuple[float, str]:
    """Mean arrival time of a probability sequence; see average_arrival_time."""
    p = np.asarray(probabilities, dtype=float)
    total = float(np.sum(p))
    if total <= 0.0:
        raise UndefinedAverageError("no probability was absorbed; the average "
                                    "arrival time is undefined")
    moment = float(np.sum(np.arange(len(p)) * eta * p))
    if total >= 1.0 - pov_tol:
        return moment, POV_FLAG
    return moment / total, GPOV_FLAG


def average_arrival_time(record: AbsorptionRecord, cfg: ScreenConfig) -> tuple[float, str]:
    """Mean arrival time sum(j eta P_j), renormalized by sum(P_j) when the
    run leaves unabsorbed probability beyond the POV tolerance."""
    return average_arrival_time_from(record.probabilities, record.eta, cfg.pov_tol)


@dataclass(frozen=True)
class ZenoScanResult:
    """Final-step absorption probability versus measurement count."""

    t: float
    table: tuple  # ((n, P_n), ...)

    @property
    def nonincreasing_from(self) -> Optional[int]:
        """Smallest listed n from which P_n never increases again."""
        values = [p for _, p in self.table]
        ns = [n for n, _ in self.table]
        for start in range(len(values)):
            tail = values[start:]
            if all(b <= a + 1e-15 for a, b in zip(tail, tail[1:])):
                return ns[start]
        return None


def zeno_limit_scan(phi: StateVector, detect: HermitianOperator,
                    hamiltonian: HermitianOperator, t: float,
                    n_list: Sequence[int],
                    params: Optional[PhysicalParams] = None) -> ZenoScanResult:
    """Probability of absorption at the n-th of n probes over fixed total t.

    Projector chain only; frequent probing drives the final probability to
    zero (the Zeno effect), which is the pathology the cadence gate exists
    to avoid.  The gate is bypassed here by construction.
    """
    params = params or PhysicalParams()
    energies = np.linalg.eigvalsh(hamiltonian.entries)
    if energies.min() < -1e-10 * (1.0 + abs(energies.max())):
        raise ValueError("Zeno scan requires a nonnegative Hamiltonian")
    eye = np.eye(detect.basis.dimension, dtype=np.complex128)
    survive = eye - detect.entries
    rows = []
    for n in n_list:
        if int(n) != n or n < 1:
            raise ValueError(f"probe counts must be positive integers, got {n!r}")
        times = (t / n) * np.arange(n + 1)
        probabilities = _absorption_chain(phi, detect.entries, survive,
                                          hamiltonian, times, params)
        rows.append((int(n), float(probabilities[-1])))
    return ZenoScanResult(t=t, table=tuple(rows))


# ---------------------------------------------------------------------------
# run record format


def save_run_record(record: AbsorptionRecord, cfg: ScreenConfig, path,
                    extra: Optional[dict] = None) -> None:
    """CSV of the absorption run: one row per step, then a metadata block."""
    lines = ["j,t,P_j,cumulative,survival"]
    cumulative = 0.0
    for j, p in enumerate(record.probabilities):
        cumulative += float(p)
        t = j * record.eta
        lines.append(f"{j},{t:.17g},{p:.17g},{cumulative:.17g},{1.0 - cumulative:.17g}")
    meta = {
        "arc_lo": f"{cfg.arc[0]:.17g}",
        "arc_hi": f"{cfg.arc[1]:.17g}",
        "eta": f"{cfg.eta:.17g}",
        "steps": str(cfg.steps),
        "absorber": cfg.absorber,
        "v0": f"{cfg.v0:.17g}",
        "pov_tol": f"{cfg.pov_tol:.17g}",
        "mode": record.mode,
        "total": f"{record.total:.17g}",
        "tau_mean": "nan" if record.tau_mean is None else f"{record.tau_mean:.17g}",
    }
    meta.update(extra or {})
    for key in meta:
        lines.append(f"# {key} = {meta[key]}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
