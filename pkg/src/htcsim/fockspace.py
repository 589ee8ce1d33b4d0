"""Truncated oscillator algebra, oscillator eigenfunctions, Fock Wigner kernels.

Quadrature convention: x = (b + b^dag)/sqrt(2), p = -i(b - b^dag)/sqrt(2),
[x, p] = i, vacuum variance 1/2 per quadrature.
"""

from dataclasses import dataclass, field
from math import factorial, pi, sqrt
import numpy as np
from scipy.special import eval_genlaguerre

HERMITE_N_LIMIT = 64  # recurrence validated up to here; beyond risks overflow


def ladder(n_max):
    """Annihilation operator b on the truncated space, b|n> = sqrt(n)|n-1>."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1)


@dataclass(frozen=True)
class TruncatedOscillator:
    n_max: int
    b: np.ndarray = field(init=False)
    bd: np.ndarray = field(init=False)
    n: np.ndarray = field(init=False)
    x: np.ndarray = field(init=False)
    p: np.ndarray = field(init=False)

    def __post_init__(self):
        b = ladder(self.n_max)
        bd = b.T.copy()
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "bd", bd)
        object.__setattr__(self, "n", bd @ b)
        object.__setattr__(self, "x", (b + bd) / np.sqrt(2.0))
        object.__setattr__(self, "p", -1j * (b - bd) / np.sqrt(2.0))


def hermite_psi(n, x):
    """Normalized oscillator eigenfunction psi_n(x) by stable recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > HERMITE_N_LIMIT:
        raise ValueError(f"hermite_psi validated only for n <= {HERMITE_N_LIMIT}")
    x = np.asarray(x, float)
    psi_km1 = pi**-0.25 * np.exp(-0.5 * x * x)
    if n == 0:
        return psi_km1
    psi_k = sqrt(2.0) * x * psi_km1
    for k in range(1, n):
        psi_kp1 = sqrt(2.0 / (k + 1.0)) * x * psi_k - sqrt(k / (k + 1.0)) * psi_km1
        psi_km1, psi_k = psi_k, psi_kp1
    return psi_k


def coherent_fock(alpha, n_max):
    """Coherent-state amplitudes <n|alpha> up to n_max (tail truncated)."""
    n = np.arange(n_max + 1)
    logfact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, n_max + 1))]))
    amps = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.exp(0.5 * logfact)
    return amps


def displacement(alpha, n_max):
    """D(alpha) = exp(alpha b^dag - alpha* b) on the truncated space."""
    from scipy.linalg import expm

    b = ladder(n_max)
    return expm(alpha * b.T - np.conj(alpha) * b)


def fock_wigner_kernel(n, m, x, p):
    """Wigner transform of |n><m| at phase-space points (x, p).

    For m >= n:
      W(x,p) = ((-1)^n / pi) sqrt(2^(m-n) n!/m!) e^(-x^2-p^2)
               (x + i p)^(m-n) L_n^(m-n)(2(x^2+p^2))
    and the m < n case is the complex conjugate with n, m swapped.
    """
    if m < n:
        return np.conj(fock_wigner_kernel(m, n, x, p))
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    r2 = x * x + p * p
    pref = ((-1.0) ** n / pi) * sqrt(2.0 ** (m - n) * factorial(n) / factorial(m))
    core = pref * np.exp(-r2) * eval_genlaguerre(n, m - n, 2.0 * r2)
    if m == n:
        return core + 0j
    return core * (x + 1j * p) ** (m - n)
