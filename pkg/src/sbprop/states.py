"""Spinor-Fock states and the standard observable set.

A state is a pair of complex amplitude arrays over Fock levels 0..P, one
for the atom excited, one for the ground state.  Observables below are the
raw (unnormalized) quadratic forms; harness-level normalization divides by
the squared norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TransferMatrix

__all__ = [
    "CoherentSpec",
    "SpinorFockState",
    "TailMassTooLarge",
    "coherent_state",
    "fock_state",
    "norm_squared",
    "inner",
    "normalize",
    "ObservableWeights",
    "mean_photon_number",
    "atomic_inversion",
    "excitation_number",
    "parity_expectation",
    "energy_expectation",
]

DEFAULT_TAIL_TOL = 1e-12


class TailMassTooLarge(ValueError):
    """Requested Fock cutoff leaves too much coherent weight above it."""

    def __init__(self, alpha: float, P: int, tail: float, tol: float,
                 required_P: int):
        self.alpha = alpha
        self.P = P
        self.tail = tail
        self.tol = tol
        self.required_P = required_P
        super().__init__(
            f"coherent state alpha={alpha} keeps tail mass {tail:.3e} above "
            f"P={P} (tolerance {tol:.1e}); P >= {required_P} is needed"
        )


@dataclass(frozen=True)
class CoherentSpec:
    """Coherent field amplitude alpha >= 0 and spinor mixing angle theta."""

    alpha: float
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.theta)):
            raise ValueError("alpha and theta must be finite")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not 0.0 <= self.theta < 2.0 * math.pi:
            raise ValueError(f"theta must lie in [0, 2*pi), got {self.theta}")


@dataclass(frozen=True)
class SpinorFockState:
    """Amplitudes (amps_e, amps_g) over Fock levels 0..P."""

    amps_e: np.ndarray
    amps_g: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.amps_e, dtype=np.complex128)
        g = np.asarray(self.amps_g, dtype=np.complex128)
        if e.ndim != 1 or g.ndim != 1 or e.shape != g.shape or e.size == 0:
            raise ValueError("amps_e and amps_g must be equal-length 1-d arrays")
        if not (np.isfinite(e).all() and np.isfinite(g).all()):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amps_e", e)
        object.__setattr__(self, "amps_g", g)

    @property
    def P(self) -> int:
        return self.amps_e.size - 1

    @property
    def vector(self) -> np.ndarray:
        """Concatenated layout [e-block, g-block] used by the matrices."""
        return np.concatenate([self.amps_e, self.amps_g])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "SpinorFockState":
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.ndim != 1 or vec.size % 2 != 0 or vec.size == 0:
            raise ValueError("vector length must be even and positive")
        half = vec.size // 2
        return cls(amps_e=vec[:half].copy(), amps_g=vec[half:].copy())


def coherent_state(spec: CoherentSpec, P: int, *,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> SpinorFockState:
    """Truncated coherent spinor state.

    amps_e[p] = exp(-alpha^2/2) alpha^p / sqrt(p!) * sin(theta) and the
    ground block carries cos(theta).  Amplitudes come from the stable
    recurrence c_{p+1} = c_p * (alpha/sqrt(p+1)) -- never from factorials.

    Raises TailMassTooLarge when the Poisson weight above P exceeds
    tail_tol, reporting the cutoff that would suffice.
    """
    if int(P) != P or P < 0:
        raise ValueError(f"P must be a non-negative integer, got {P}")
    if not (math.isfinite(tail_tol) and tail_tol > 0.0):
        raise ValueError("tail_tol must be positive")
    P = int(P)

    c0 = math.exp(-0.5 * spec.alpha ** 2)
    se, cg = math.sin(spec.theta), math.cos(spec.theta)
    e = np.empty(P + 1, dtype=np.complex128)
    g = np.empty(P + 1, dtype=np.complex128)
    e[0] = c0 * se
    g[0] = c0 * cg
    c = c0
    retained = c0 * c0
    for p in range(P):
        ratio = spec.alpha / math.sqrt(p + 1.0)
        e[p + 1] = e[p] * ratio
        g[p + 1] = g[p] * ratio
        c *= ratio
        retained += c * c

    tail = max(1.0 - retained, 0.0)
    if tail > tail_tol:
        raise TailMassTooLarge(spec.alpha, P, tail, tail_tol,
                               _required_cutoff(spec.alpha, tail_tol, P))
    return SpinorFockState(amps_e=e, amps_g=g)


def _required_cutoff(alpha: float, tol: float, start: int) -> int:
    """Smallest cutoff whose Poisson tail mass drops below tol."""
    c = math.exp(-0.5 * alpha ** 2)
    retained = c * c
    p = 0
    limit = start + int(8 * alpha * alpha) + 200
    while p < limit:
        if 1.0 - retained <= tol:
            return p
        c *= alpha / math.sqrt(p + 1.0)
        retained += c * c
        p += 1
    return limit


def fock_state(p0: int, spin: str, P: int) -> SpinorFockState:
    """Single-level state |p0, spin> with spin 'e' or 'g'."""
    if int(P) != P or P < 0:
        raise ValueError(f"P must be a non-negative integer, got {P}")
    if int(p0) != p0 or not 0 <= p0 <= P:
        raise ValueError(f"p0 must lie in 0..{P}, got {p0}")
    if spin not in ("e", "g"):
        raise ValueError(f"spin must be 'e' or 'g', got {spin!r}")
    e = np.zeros(P + 1, dtype=np.complex128)
    g = np.zeros(P + 1, dtype=np.complex128)
    (e if spin == "e" else g)[int(p0)] = 1.0
    return SpinorFockState(amps_e=e, amps_g=g)


class ObservableWeights:
    """Per-slot weights for the standard observables in concatenated layout.

    Excitation counts photons plus the atomic excitation, (p+1) on the
    excited block and p on the ground block; parity is (-1) to that count.
    Both commute exactly with the photon-conserving coupling, also after
    truncation, which is what the conservation checks rely on.
    """

    def __init__(self, P: int):
        p = np.arange(P + 1, dtype=np.float64)
        ones = np.ones(P + 1)
        self.photon = np.concatenate([p, p])
        self.inversion = np.concatenate([ones, -ones])
        self.excitation = np.concatenate([p + 1.0, p])
        alt = np.where(p.astype(np.int64) % 2 == 0, 1.0, -1.0)
        self.parity = np.concatenate([-alt, alt])

    def measure(self, vec: np.ndarray) -> tuple[float, float, float, float, float]:
        """(norm2, photon, inversion, excitation, parity) for one vector."""
        w = vec.real ** 2 + vec.imag ** 2
        return (
            float(w.sum()),
            float(self.photon @ w),
            float(self.inversion @ w),
            float(self.excitation @ w),
            float(self.parity @ w),
        )


def norm_squared(state: SpinorFockState) -> float:
    w = state.amps_e.real ** 2 + state.amps_e.imag ** 2
    w2 = state.amps_g.real ** 2 + state.amps_g.imag ** 2
    return float(w.sum() + w2.sum())


def inner(a: SpinorFockState, b: SpinorFockState) -> complex:
    """<a|b> with the first argument conjugated."""
    if a.P != b.P:
        raise ValueError(f"state sizes differ: P={a.P} vs P={b.P}")
    return complex(np.vdot(a.amps_e, b.amps_e) + np.vdot(a.amps_g, b.amps_g))


def normalize(state: SpinorFockState) -> SpinorFockState:
    n2 = norm_squared(state)
    if n2 <= 0.0:
        raise ValueError("cannot normalize a zero state")
    s = 1.0 / math.sqrt(n2)
    return SpinorFockState(amps_e=state.amps_e * s, amps_g=state.amps_g * s)


def mean_photon_number(state: SpinorFockState) -> float:
    return ObservableWeights(state.P).measure(state.vector)[1]


def atomic_inversion(state: SpinorFockState) -> float:
    return ObservableWeights(state.P).measure(state.vector)[2]


def excitation_number(state: SpinorFockState) -> float:
    return ObservableWeights(state.P).measure(state.vector)[3]


def parity_expectation(state: SpinorFockState) -> float:
    return ObservableWeights(state.P).measure(state.vector)[4]


def energy_expectation(state: SpinorFockState, q: TransferMatrix) -> complex:
    """<s|Q|s>; the imaginary part is rounding-level for Hermitian Q."""
    vec = state.vector
    if vec.size != q.dim:
        raise ValueError(f"state dim {vec.size} does not match matrix dim {q.dim}")
    return complex(np.vdot(vec, q.matrix @ vec))
