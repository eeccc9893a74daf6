"""Transfer matrix of the intensity-dependent spin-boson model.

The two-level atom couples to a single field mode through ladder operators
dressed by the photon number, a*sqrt(a+a) and sqrt(a+a)*a+.  In the
spinor-Fock basis the Hamiltonian acts on coefficient vectors
[f_0^1 .. f_P^1, f_0^2 .. f_P^2] (excited block first, then ground block)
as a banded matrix Q; everything downstream (Taylor stepping, spectra,
caching) consumes that matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "Truncation",
    "TransferMatrix",
    "build_transfer_matrix",
    "hermiticity_check",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of one model instance.

    Parameters
    ----------
    omega_f : float
        Field mode frequency, must be positive.  Everything else is
        naturally quoted in units of omega_f.
    omega_0 : float
        Atomic transition frequency.
    g_minus : float
        Coupling of the photon-conserving (co-rotating) terms.
    g_plus : float
        Coupling of the counter-rotating terms; 0 gives the RWA model.
    beta : float
        Photon leakage rate (enters as -i*beta*p on every diagonal).
    gamma : float
        Atomic decay rate (enters as -i*gamma on the excited block).
    """

    omega_f: float
    omega_0: float
    g_minus: float = 0.0
    g_plus: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.omega_f, self.omega_0, self.g_minus,
                self.g_plus, self.beta, self.gamma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite model parameter in {vals}")
        if self.omega_f <= 0.0:
            raise ValueError(f"omega_f must be positive, got {self.omega_f}")
        if self.beta < 0.0 or self.gamma < 0.0:
            raise ValueError("decay rates beta/gamma must be non-negative")

    def is_hermitian(self) -> bool:
        """True when no dissipation is present."""
        return self.beta == 0.0 and self.gamma == 0.0


@dataclass(frozen=True)
class Truncation:
    """Fock cutoff P (levels 0..P retained) and Taylor order N per step."""

    P: int
    N: int = 30

    def __post_init__(self) -> None:
        if int(self.P) != self.P or self.P < 0:
            raise ValueError(f"P must be a non-negative integer, got {self.P}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    @property
    def dim(self) -> int:
        return 2 * (self.P + 1)


@dataclass(frozen=True)
class TransferMatrix:
    """Dense Q in the concatenated block layout, immutable once built."""

    matrix: np.ndarray = field(repr=False)
    params: ModelParams
    trunc: Truncation
    hermitian: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_transfer_matrix(params: ModelParams, trunc: Truncation) -> TransferMatrix:
    """Assemble Q for the truncated model.

    Diagonals carry omega_f*p +/- omega_0/2 (minus i*(beta*p + gamma) with
    dissipation on).  Couplings, with k the higher of the two Fock levels
    involved so both symmetric entries share the identical float product:

        excited row p -> ground col p+1 : g_minus*(p+1)
        excited row p -> ground col p-1 : g_plus*p

    and transposed partners.  Couplings that would reference level P+1 are
    dropped (hard truncation).
    """
    n = trunc.P + 1
    m = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    p = np.arange(n)

    diag_e = params.omega_0 / 2 + params.omega_f * p
    diag_g = -params.omega_0 / 2 + params.omega_f * p
    hermitian = params.is_hermitian()
    if hermitian:
        m[p, p] = diag_e
        m[n + p, n + p] = diag_g
    else:
        m[p, p] = diag_e - 1j * (params.beta * p + params.gamma)
        m[n + p, n + p] = diag_g - 1j * (params.beta * p)

    k = np.arange(1, n)
    m[k - 1, n + k] = params.g_minus * k
    m[n + k, k - 1] = params.g_minus * k
    m[k, n + k - 1] = params.g_plus * k
    m[n + k - 1, k] = params.g_plus * k

    m.setflags(write=False)
    return TransferMatrix(matrix=m, params=params, trunc=trunc, hermitian=hermitian)


def hermiticity_check(q: TransferMatrix) -> float:
    """Max-norm of Q - Q+; exactly 0.0 for dissipation-free parameters."""
    m = q.matrix
    return float(np.abs(m - m.conj().T).max())
