"""Dense oracle: exact state-vector propagation in the truncated Hilbert space.

Default representation is the single-excitation block spanned by
|e; n_1..n_N> with e = 0 (photon) or e = i (molecule i excited), valid because
the RWA Hamiltonian conserves the excitation number. A full-space mode exists
to check that leakage out of the block is exactly zero.
"""

from dataclasses import dataclass
import numpy as np
import scipy.sparse as sps

from . import model
from .fockspace import ladder

DIM_LIMIT_DEFAULT = 200_000


class DimensionLimitError(RuntimeError):
    pass


@dataclass
class DenseState:
    amps: np.ndarray          # flat, length (N+1) * (nv+1)^N
    n_molecules: int
    n_max_vib: int
    time: float = 0.0

    @property
    def block_shape(self):
        return (self.n_molecules + 1,) + (self.n_max_vib + 1,) * self.n_molecules

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def photon_weight(self):
        arr = self.amps.reshape(self.n_molecules + 1, -1)
        return float(np.linalg.norm(arr[0]) ** 2)

    def molecule_weight(self, i):
        arr = self.amps.reshape(self.n_molecules + 1, -1)
        return float(np.linalg.norm(arr[i]) ** 2)


def block_dimension(params):
    return (params.n_molecules + 1) * (params.n_max_vib + 1) ** params.n_molecules


def _vib_site_op(op, i, N, nv1):
    """I x .. x op (site i, 0-based) x .. x I over N vibrational modes."""
    mat = sps.identity(nv1**i, format="csr") if i > 0 else None
    mat = sps.csr_matrix(op) if mat is None else sps.kron(mat, sps.csr_matrix(op))
    rest = N - i - 1
    if rest > 0:
        mat = sps.kron(mat, sps.identity(nv1**rest))
    return mat.tocsr()


def build_block_hamiltonian(params, realization):
    """Sparse H on the single-excitation block."""
    N, nv = params.n_molecules, params.n_max_vib
    nv1 = nv + 1
    M = nv1**N
    nu, lam, g = params.nu, params.huang_rhys_lambda, params.g
    b = ladder(nv)
    xop = b + b.T
    # nu sum_i n_i is diagonal over the vibrational multi-index
    nvec = np.arange(nv1, dtype=float)
    d0 = np.zeros(1)
    for _ in range(N):
        d0 = (d0[:, None] + nvec[None, :]).reshape(-1)
    d0 = nu * d0
    diag0 = sps.diags(d0)
    blocks = [[None] * (N + 1) for _ in range(N + 1)]
    blocks[0][0] = diag0
    gI = g * sps.identity(M, format="csr")
    for i in range(1, N + 1):
        hol = _vib_site_op(-lam * nu * xop, i - 1, N, nv1)
        eps = realization.epsilons[i - 1] + params.detuning
        blocks[i][i] = diag0 + eps * sps.identity(M) + hol
        blocks[0][i] = gI
        blocks[i][0] = gI
    return sps.bmat(blocks, format="csr")


def _gershgorin_norm(H):
    return float(np.max(np.abs(H).sum(axis=1)))


def krylov_expm_apply(H, v, t, tol=1e-12, m_max=90):
    """exp(-i t H) v for Hermitian sparse H, Lanczos with substepping."""
    from scipy.linalg import expm

    hnorm = _gershgorin_norm(H)
    nsub = max(1, int(np.ceil(abs(t) * hnorm / 15.0)))
    dt = t / nsub
    w = v.astype(complex)
    for _ in range(nsub):
        w = _lanczos_single(H, w, dt, tol, m_max, expm)
    return w


def _lanczos_single(H, v, dt, tol, m_max, expm):
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v
    V = [v / beta0]
    alphas, betas = [], []
    for j in range(m_max):
        w = H @ V[j]
        alpha = np.vdot(V[j], w).real
        alphas.append(alpha)
        w = w - alpha * V[j]
        if j > 0:
            w = w - betas[-1] * V[j - 1]
        # full reorthogonalization; basis sizes stay small
        for u in V:
            w = w - np.vdot(u, w) * u
        beta = np.linalg.norm(w)
        m = j + 1
        T = np.diag(alphas)
        if m > 1:
            T += np.diag(betas, 1) + np.diag(betas, -1)
        u = expm(-1j * dt * T)[:, 0]
        err = beta * abs(u[-1]) * max(1.0, abs(dt))
        if beta < 1e-14 or err < tol:
            return beta0 * (np.column_stack(V) @ u)
        betas.append(beta)
        V.append(w / beta)
    raise RuntimeError("Lanczos failed to converge; reduce the substep")


def initial_block_state(spec, params):
    N, nv1 = params.n_molecules, params.n_max_vib + 1
    amps = np.zeros((N + 1) * nv1**N, complex)
    e = 0 if spec.kind == "cavity" else spec.index
    amps[e * nv1**N] = 1.0
    return DenseState(amps=amps, n_molecules=N, n_max_vib=params.n_max_vib)


def dense_evolve(params, realization, spec, times, tol=1e-12,
                 dim_limit=DIM_LIMIT_DEFAULT):
    """Exact propagation; returns one DenseState per requested time."""
    dim = block_dimension(params)
    if dim > dim_limit:
        raise DimensionLimitError(
            f"block dimension {dim} exceeds limit {dim_limit}")
    H = build_block_hamiltonian(params, realization)
    state = initial_block_state(spec, params)
    out = []
    t_now = 0.0
    amps = state.amps
    for t in times:
        if t < t_now - 1e-12:
            raise ValueError("times must be non-decreasing")
        if t > t_now:
            amps = krylov_expm_apply(H, amps, t - t_now, tol=tol)
            t_now = t
        out.append(DenseState(amps=amps.copy(), n_molecules=params.n_molecules,
                              n_max_vib=params.n_max_vib, time=t))
    return out


def dense_rdm(state, i):
    """Reduced vibrational density matrix of molecule i (1-based)."""
    if not (1 <= i <= state.n_molecules):
        raise ValueError("molecule index out of range")
    arr = state.amps.reshape(state.block_shape)
    arr = np.moveaxis(arr, i, -1)
    flat = arr.reshape(-1, state.n_max_vib + 1)
    rho = flat.T @ flat.conj()  # rho[n, m] = sum_env psi(env, n) psi*(env, m)
    return rho


def dense_energy(H, state):
    return float(np.vdot(state.amps, H @ state.amps).real)


def rwa_leakage(params, realization, spec, t, tol=1e-12):
    """Full-space check: weight outside the single-excitation sector."""
    H = model.assemble_hamiltonian(params, realization)
    vecs = model.initial_state(spec, params)
    psi = vecs[0].astype(complex)
    for v in vecs[1:]:
        psi = np.kron(psi, v.astype(complex))
    psi = krylov_expm_apply(H, psi, t, tol=tol)
    nexc = model.excitation_number_diagonal(params)
    return float(np.sum(np.abs(psi[nexc != 1.0]) ** 2))
