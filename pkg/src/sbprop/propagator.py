"""Taylor-series step propagator and the per-step evolution loop.

M(dt) = sum_{n=0}^{N} (-i dt)^n / n! Q^n, accumulated with the running-term
recurrence term_{n+1} = term_n (-i dt/(n+1)) Q.  The max-norm of the last
included term is the convergence certificate; a build whose certificate
exceeds the tolerance is refused rather than silently degraded.  One M is
reused across every initial state and every step of a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cache import propagator_fingerprint
from .model import TransferMatrix
from .states import SpinorFockState
from .trajectory import Trajectory, TrajectoryBuilder

__all__ = [
    "NotConverged",
    "NonFiniteState",
    "PropagatorConfig",
    "StepPropagator",
    "build_step_propagator",
    "suggest_step",
    "evolve",
    "evolve_reusing",
    "checkpoint_powers",
    "jump",
]

MAX_STEP = 0.1  # largest dt suggest_step will ever return


class NotConverged(RuntimeError):
    """Taylor series not converged at order N for this dt."""

    def __init__(self, last_term_norm: float, tol: float, dt: float, N: int,
                 ratio: float):
        self.last_term_norm = last_term_norm
        self.tol = tol
        self.dt = dt
        self.N = N
        # shrink dt by this factor and the last term lands at ~tol
        self.dt_reduction = (tol / last_term_norm) ** (1.0 / N)
        super().__init__(
            f"last Taylor term has max-norm {last_term_norm:.3e} > tol "
            f"{tol:.1e} at dt={dt} N={N} (term ratio ~{ratio:.3g}); "
            f"reduce dt by a factor <= {self.dt_reduction:.3g} or raise N"
        )


class NonFiniteState(RuntimeError):
    """Evolution produced NaN/Inf amplitudes (runaway growth)."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite amplitudes at step {step}")


@dataclass(frozen=True)
class PropagatorConfig:
    """Step size dt, step count, Taylor order N, certificate tolerance."""

    dt: float
    steps: int
    N: int = 30
    tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (math.isfinite(self.tol) and self.tol > 0.0):
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class StepPropagator:
    """Dense M(dt) plus its provenance fingerprint and build certificates.

    last_term_norm / unitarity_defect are None when M was loaded from the
    cache (the certificate is a build-time statement; the payload itself is
    checksummed).
    """

    matrix: np.ndarray = field(repr=False)
    fingerprint: int
    dt: float
    N: int
    last_term_norm: float | None
    unitarity_defect: float | None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_step_propagator(q: TransferMatrix, cfg: PropagatorConfig) -> StepPropagator:
    """Accumulate M to order N and certify the truncation.

    For Hermitian Q the unitarity defect max|M+M - 1| is measured once at
    build time (one extra matrix product) and carried on the result.
    """
    dim = q.dim
    scaled = q.matrix * (-1j * cfg.dt)
    m = np.eye(dim, dtype=np.complex128)
    term = np.eye(dim, dtype=np.complex128)
    for n in range(1, cfg.N + 1):
        term = (term @ scaled) / n
        m = m + term
    last = float(np.abs(term).max())
    if not math.isfinite(last) or last > cfg.tol:
        ratio = _one_norm(q.matrix) * cfg.dt / (cfg.N + 1)
        raise NotConverged(last, cfg.tol, cfg.dt, cfg.N, ratio)

    defect = None
    if q.hermitian:
        defect = float(np.abs(m.conj().T @ m - np.eye(dim)).max())

    fp = propagator_fingerprint(q.params, q.trunc.P, cfg.N, cfg.dt)
    m.setflags(write=False)
    return StepPropagator(matrix=m, fingerprint=fp, dt=cfg.dt, N=cfg.N,
                          last_term_norm=last, unitarity_defect=defect)


def _one_norm(m: np.ndarray) -> float:
    return float(np.abs(m).sum(axis=0).max())


def suggest_step(q: TransferMatrix, N: int = 30, tol: float = 1e-12) -> float:
    """Largest dt of the form 0.1/2^k whose remainder bound beats tol.

    The bound is the scalar ratio test on the 1-norm,
    (|Q|_1 dt)^(N+1) / (N+1)!, evaluated in log space.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not (math.isfinite(tol) and tol > 0.0):
        raise ValueError(f"tol must be positive, got {tol}")
    a = _one_norm(q.matrix)
    dt = MAX_STEP
    if a == 0.0:
        return dt
    log_tol = math.log(tol)
    for _ in range(200):
        bound = (N + 1) * math.log(a * dt) - math.lgamma(N + 2)
        if bound < log_tol:
            return dt
        dt /= 2.0
    raise RuntimeError("no acceptable dt found (parameters out of range)")


def _check_compatible(state_dim: int, prop: StepPropagator,
                      cfg: PropagatorConfig, q: TransferMatrix) -> None:
    if prop.dim != q.dim or state_dim != q.dim:
        raise ValueError(
            f"dimension mismatch: state {state_dim}, M {prop.dim}, Q {q.dim}")
    expected = propagator_fingerprint(q.params, q.trunc.P, cfg.N, cfg.dt)
    if prop.fingerprint != expected:
        raise ValueError(
            "propagator fingerprint does not match (Q, dt, N); it was built "
            "for different parameters")


def evolve(state: SpinorFockState, prop: StepPropagator, cfg: PropagatorConfig,
           q: TransferMatrix, *, snapshot_stride: int = 0) -> Trajectory:
    """Apply M step by step, recording every observable row including t=0.

    Each step is one matrix-vector product (plus one with Q for the energy
    column); the state is never materialized as a matrix power.  Raises
    NonFiniteState with the offending step index if amplitudes blow up.
    """
    _check_compatible(state.vector.size, prop, cfg, q)
    if snapshot_stride < 0:
        raise ValueError("snapshot_stride must be >= 0")

    y = state.vector
    qm = q.matrix
    mm = prop.matrix
    steps = int(cfg.steps)
    builder = TrajectoryBuilder(state.P, steps + 1,
                                snapshot_stride=snapshot_stride, dim=q.dim)
    # Overflow on the way to a blow-up is reported once, via NonFiniteState;
    # the numpy warnings that precede it are just noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps + 1):
            if not np.isfinite(y).all():
                raise NonFiniteState(k)
            energy = float(np.vdot(y, qm @ y).real)
            builder.record(k, k * cfg.dt, y, energy)
            if k < steps:
                y = mm @ y
    return builder.build()


def evolve_reusing(states: list[SpinorFockState], prop: StepPropagator,
                   cfg: PropagatorConfig, q: TransferMatrix, *,
                   snapshot_stride: int = 0) -> list[Trajectory]:
    """Evolve several initial states with the one prebuilt M."""
    return [evolve(s, prop, cfg, q, snapshot_stride=snapshot_stride)
            for s in states]


def checkpoint_powers(prop: StepPropagator, count: int) -> list[np.ndarray]:
    """[M, M^2, M^4, ...] up to M^(2^(count-1)), by repeated squaring."""
    if count < 1:
        raise ValueError("count must be >= 1")
    powers = [prop.matrix]
    for _ in range(count - 1):
        powers.append(powers[-1] @ powers[-1])
    return powers


def jump(state: SpinorFockState, powers: list[np.ndarray], steps: int) -> SpinorFockState:
    """Advance by `steps` applications of M using the squared checkpoints."""
    if steps < 0 or steps >= 2 ** len(powers):
        raise ValueError(f"steps must lie in 0..{2 ** len(powers) - 1}")
    y = state.vector
    j = 0
    while steps:
        if steps & 1:
            y = powers[j] @ y
        steps >>= 1
        j += 1
    return SpinorFockState.from_vector(y)
