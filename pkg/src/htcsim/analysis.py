"""State diagnostics: Wigner functions, non-Gaussianity, thermal references,
fidelity, eigenspectra, Wigner overlaps.

Density matrices are plain complex ndarrays c[n, m] = <n|rho|m> in the Fock
basis. validate_state enforces the contract (Hermitian, unit trace, PSD
within tolerance).
"""

from dataclasses import dataclass
import numpy as np

from .fockspace import TruncatedOscillator, fock_wigner_kernel, hermite_psi

EIG_CLIP = 1e-12  # truncation noise produces tiny negative eigenvalues


def validate_state(rho, tol=1e-8):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("trace differs from 1 beyond tolerance")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol:
        raise ValueError("negative eigenvalue beyond tolerance")
    return rho


@dataclass(frozen=True)
class CovarianceSummary:
    means: tuple
    V: np.ndarray
    v: float


def covariance(rho):
    """First moments and symmetrized covariance of (x, p); v = sqrt(det V)."""
    d = rho.shape[0]
    osc = TruncatedOscillator(d - 1)
    x, p = osc.x, osc.p
    mx = np.trace(rho @ x).real
    mp = np.trace(rho @ p).real
    vxx = np.trace(rho @ (x @ x)).real - mx * mx
    vpp = np.trace(rho @ (p @ p)).real - mp * mp
    vxp = 0.5 * np.trace(rho @ (x @ p + p @ x)).real - mx * mp
    V = np.array([[vxx, vxp], [vxp, vpp]])
    det = vxx * vpp - vxp * vxp
    v = np.sqrt(max(det, 0.0))
    return CovarianceSummary(means=(mx, mp), V=V, v=v)


def entropy(rho):
    """Von Neumann entropy with eigenvalue clipping, 0 ln 0 = 0."""
    w = np.linalg.eigvalsh(rho)
    w = np.clip(w.real, 0.0, None)
    w = w[w > EIG_CLIP]
    return float(-(w * np.log(w)).sum())


def gaussian_entropy(v):
    """Entropy of a single-mode Gaussian state with symplectic eigenvalue v."""
    if v <= 0.5:
        return 0.0
    return float((v + 0.5) * np.log(v + 0.5) - (v - 0.5) * np.log(v - 0.5))


def non_gaussianity(rho):
    """delta = S(tau) - S(rho), tau the moment-matched Gaussian reference."""
    cov = covariance(rho)
    v = cov.v
    # Fock truncation biases v below the vacuum floor by the boundary weight
    # (worst for the mean-field engine at small n_max); clamp small deficits
    if v < 0.5 - 1e-3:
        raise ValueError(f"non-physical covariance: v = {v}")
    v = max(v, 0.5)
    return gaussian_entropy(v) - entropy(rho)


def default_grid(span=5.0, npts=201):
    ax = np.linspace(-span, span, npts)
    return ax, ax.copy()


@dataclass(frozen=True)
class WignerGrid:
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray  # shape (len(xs), len(ps)), real

    def mass(self):
        dx = self.xs[1] - self.xs[0]
        dp = self.ps[1] - self.ps[0]
        return float(self.values.sum() * dx * dp)


def wigner(rho, xs=None, ps=None):
    """W(x, p) from closed-form Fock kernels, on the (xs, ps) grid."""
    if xs is None or ps is None:
        xs, ps = default_grid()
    X, P = np.meshgrid(xs, ps, indexing="ij")
    d = rho.shape[0]
    vals = np.zeros(X.shape, complex)
    for n in range(d):
        vals += rho[n, n].real * fock_wigner_kernel(n, n, X, P)
        for m in range(n + 1, d):
            if rho[n, m] == 0 and rho[m, n] == 0:
                continue
            k = fock_wigner_kernel(n, m, X, P)
            # rho = sum c_nm |n><m|, so c[n,m] pairs with W_{|n><m|} = k
            vals += rho[n, m] * k + rho[m, n] * np.conj(k)
    grid = WignerGrid(xs=np.asarray(xs, float), ps=np.asarray(ps, float),
                      values=vals.real)
    if abs(grid.mass() - 1.0) > 1e-3:
        raise ValueError("Wigner normalization check failed; grid too coarse")
    return grid


def wigner_direct(rho, x, p, y_span=8.0, n_y=801):
    """Direct quadrature of W(x,p) = (1/pi) sum c_nm int psi_n(x-y) psi_m(x+y)
    e^{2ipy} dy; slow oracle for the closed-form kernels."""
    y = np.linspace(-y_span, y_span, n_y)
    dy = y[1] - y[0]
    d = rho.shape[0]
    psm = np.array([hermite_psi(n, x - y) for n in range(d)])
    psp = np.array([hermite_psi(n, x + y) for n in range(d)])
    phase = np.exp(2j * p * y)
    total = 0.0 + 0j
    for n in range(d):
        for m in range(d):
            if rho[n, m] == 0:
                continue
            total += rho[n, m] * np.sum(psm[n] * psp[m] * phase) * dy
    return (total / np.pi).real


@dataclass(frozen=True)
class ThermalReference:
    beta: float
    E0: float
    nu: float
    populations: np.ndarray  # untruncated normalization
    tail: float              # probability mass above n_max

    @property
    def mean_occupation(self):
        return 1.0 / np.expm1(self.beta * self.nu)

    def matrix(self, renormalized=True):
        p = self.populations
        if renormalized:
            p = p / p.sum()
        return np.diag(p).astype(complex)


def thermal_reference(E0, nu, n_max):
    """Thermal state at beta_R = (1/nu) ln(1 + nu/E0); mean occupation E0/nu."""
    if E0 <= 0:
        raise ValueError("E0 must be > 0")
    beta = np.log1p(nu / E0) / nu
    n = np.arange(n_max + 1)
    q = np.exp(-beta * nu)
    populations = (1.0 - q) * q**n
    tail = q ** (n_max + 1)
    return ThermalReference(beta=float(beta), E0=float(E0), nu=float(nu),
                            populations=populations, tail=float(tail))


def _psd_sqrt(rho):
    w, U = np.linalg.eigh(rho)
    w = np.clip(w.real, 0.0, None)
    return (U * np.sqrt(w)) @ U.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    s = _psd_sqrt(rho)
    inner = s @ sigma @ s
    w = np.linalg.eigvalsh(inner)
    w = np.clip(w.real, 0.0, None)
    f = float(np.sqrt(w).sum() ** 2)
    return min(f, 1.0)


def trace_distance(rho, sigma):
    w = np.linalg.eigvalsh(rho - sigma)
    return float(0.5 * np.abs(w).sum())


def purity(rho):
    return float(np.trace(rho @ rho).real)


def overlap_fock(rho1, rho2):
    """Hilbert-Schmidt inner product tr(rho1 rho2)."""
    return float(np.trace(rho1 @ rho2).real)


def wigner_overlap(w1, w2):
    """O = 2 pi integral W1 W2 dx dp; equals tr(rho1 rho2) at hbar = 1."""
    if w1.values.shape != w2.values.shape or not (
            np.array_equal(w1.xs, w2.xs) and np.array_equal(w1.ps, w2.ps)):
        raise ValueError("Wigner grids do not match")
    dx = w1.xs[1] - w1.xs[0]
    dp = w1.ps[1] - w1.ps[0]
    return float(2.0 * np.pi * np.sum(w1.values * w2.values) * dx * dp)


def spectrum_and_heatmap(rho):
    """Descending clipped eigenvalues (renormalized) and |<n|rho|m>| matrix."""
    w = np.linalg.eigvalsh(rho)
    w = np.clip(w.real, 0.0, None)[::-1]
    w = w / w.sum()
    return w, np.abs(rho)


def diagnostics_row(time, realization, molecule, rho):
    """Flat export record for one reduced state."""
    cov = covariance(rho)
    return {
        "time": time,
        "realization": realization,
        "molecule": molecule,
        "delta": non_gaussianity(rho),
        "v": cov.v,
        "purity": purity(rho),
        "mean_x": cov.means[0],
        "mean_p": cov.means[1],
        "V_xx": cov.V[0, 0],
        "V_xp": cov.V[0, 1],
        "V_pp": cov.V[1, 1],
    }
