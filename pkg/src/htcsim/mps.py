"""Matrix-product-state engine: TEBD with a mobile cavity site.

Chain layout is [cavity, molecule 1, .., molecule N]. One second-order step
is palindromic: a right sweep of half-step gates that each swap the cavity
one site to the right, a full-step gate on the last molecule, and a mirrored
left sweep that carries the cavity back to site 0. Each molecule's one-site
Hamiltonian rides along with its cavity-molecule pair gate, so the product
of the three sweeps is time-symmetric and the Trotter error is O(dt^2).

Ehrenfest mode is the same propagator at bond dimension 1, which keeps the
state an exact product at all times (mean-field limit).
"""

from dataclasses import dataclass
import warnings
import numpy as np
from scipy.linalg import expm, svd, LinAlgError

from . import model
from .fockspace import ladder


class TruncationAlarm(RuntimeError):
    pass


@dataclass
class TEBDOptions:
    dt: float = None              # None -> vibrational period / 400
    chi_max: int = 64
    svd_cutoff: float = 1e-10     # absolute threshold on singular values
    alarm_threshold: float = 1e-8  # discarded weight per step
    alarm_mode: str = "warn"      # warn | strict | off
    ehrenfest: bool = False

    def resolved_dt(self, params):
        if self.dt is not None:
            return self.dt
        return params.vibrational_period / 400.0


@dataclass
class TEBDStats:
    n_steps: int = 0
    total_discarded: float = 0.0
    max_bond: int = 1
    n_alarms: int = 0
    max_step_discarded: float = 0.0


class MPS:
    """Open-boundary MPS; tensors have shape (chi_left, d, chi_right)."""

    def __init__(self, tensors):
        self.tensors = tensors

    @classmethod
    def from_product(cls, vectors):
        return cls([np.asarray(v, complex).reshape(1, -1, 1) for v in vectors])

    def __len__(self):
        return len(self.tensors)

    def copy(self):
        return MPS([t.copy() for t in self.tensors])

    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    def phys_dims(self):
        return [t.shape[1] for t in self.tensors]

    def norm(self):
        L = np.ones((1, 1), complex)
        for t in self.tensors:
            L = np.einsum("ab,aic,bid->cd", L, t.conj(), t, optimize=True)
        return float(np.sqrt(abs(L[0, 0].real)))

    def site_rdm(self, k):
        """Reduced density matrix of physical site k, normalized input assumed."""
        L = np.ones((1, 1), complex)
        for t in self.tensors[:k]:
            L = np.einsum("ab,aic,bid->cd", L, t.conj(), t, optimize=True)
        R = np.ones((1, 1), complex)
        for t in reversed(self.tensors[k + 1:]):
            R = np.einsum("aic,bid,cd->ab", t.conj(), t, R, optimize=True)
        t = self.tensors[k]
        # bra index comes from the conjugated tensor: rho[i, j] = <i|rho|j>
        rho = np.einsum("ab,aic,bjd,cd->ji", L, t.conj(), t, R, optimize=True)
        return rho

    def expectation(self, op, k):
        rho = self.site_rdm(k)
        return complex(np.trace(op @ rho))

    def two_site_expectation(self, op_a, ka, op_b, kb):
        """<op_a(ka) op_b(kb)> for ka < kb, operators on distinct sites."""
        if not ka < kb:
            raise ValueError("need ka < kb")
        L = np.ones((1, 1), complex)
        for k, t in enumerate(self.tensors):
            if k == ka:
                tt = np.einsum("ij,ajc->aic", op_a, t, optimize=True)
            elif k == kb:
                tt = np.einsum("ij,ajc->aic", op_b, t, optimize=True)
            else:
                tt = t
            L = np.einsum("ab,aic,bid->cd", L, t.conj(), tt, optimize=True)
        return complex(L[0, 0])


def _left_envs(tensors):
    """L[k] = environment of sites < k; L[0] is the trivial boundary."""
    envs = [np.ones((1, 1), complex)]
    for t in tensors:
        envs.append(np.einsum("ab,aic,bid->cd", envs[-1], t.conj(), t,
                              optimize=True))
    return envs


def _right_envs(tensors):
    """R[k] = environment of sites >= k; R[len] is the trivial boundary."""
    n = len(tensors)
    envs = [None] * (n + 1)
    envs[n] = np.ones((1, 1), complex)
    for k in range(n - 1, -1, -1):
        t = tensors[k]
        envs[k] = np.einsum("aic,bid,cd->ab", t.conj(), t, envs[k + 1],
                            optimize=True)
    return envs


def all_site_rdms(mps):
    """Reduced density matrices of every site in one O(N) pass."""
    left = _left_envs(mps.tensors)
    right = _right_envs(mps.tensors)
    out = []
    for k, t in enumerate(mps.tensors):
        out.append(np.einsum("ab,aic,bjd,cd->ji", left[k], t.conj(), t,
                             right[k + 1], optimize=True))
    return out


def correlations_from_first_site(mps, op0, op_site):
    """[<op0(0) op_site(k)> for k = 1..N] in one O(N) sweep."""
    right = _right_envs(mps.tensors)
    t0 = mps.tensors[0]
    t0_op = np.einsum("ij,ajc->aic", op0, t0, optimize=True)
    env = np.einsum("ab,aic,bid->cd", np.ones((1, 1), complex),
                    t0.conj(), t0_op, optimize=True)
    out = []
    for k in range(1, len(mps.tensors)):
        t = mps.tensors[k]
        t_op = np.einsum("ij,ajc->aic", op_site, t, optimize=True)
        closed = np.einsum("ab,aic,bid->cd", env, t.conj(), t_op,
                           optimize=True)
        out.append(complex(np.einsum("cd,cd->", closed, right[k + 1],
                                     optimize=True)))
        env = np.einsum("ab,aic,bid->cd", env, t.conj(), t, optimize=True)
    return out


@dataclass
class _Gate:
    mat: np.ndarray
    d_out_left: int
    d_out_right: int


def _swap_matrix(d_left, d_right):
    """Permutation sending (left x right) product index to (right x left)."""
    s = np.zeros((d_left * d_right, d_left * d_right))
    for a in range(d_left):
        for b in range(d_right):
            s[b * d_left + a, a * d_right + b] = 1.0
    return s


def build_gates(terms, dt):
    """Right-sweep, end, and left-sweep gates for one palindromic step."""
    dcav, dmol = terms.dims[0], terms.dims[1]
    swap = _swap_matrix(dcav, dmol)
    n = len(terms.one_site)
    right, left = [], []
    for i in range(n - 1):
        u = expm(-0.5j * dt * terms.pair(i))
        right.append(_Gate(swap @ u, dmol, dcav))
        left.append(_Gate(u @ swap.T, dcav, dmol))
    full = _Gate(expm(-1j * dt * terms.pair(n - 1)), dcav, dmol)
    return right, full, left


def _robust_svd(mat):
    try:
        return svd(mat, full_matrices=False)
    except LinAlgError:
        return svd(mat, full_matrices=False, lapack_driver="gesvd")


def apply_two_site(mps, i, gate, opts):
    """Apply a two-site gate at (i, i+1) and split by SVD.

    center="right" leaves the orthogonality center on site i+1 (for a
    left-to-right sweep), center="left" the mirror. The sweeps in
    tebd_step pass the direction so the truncation is always done at the
    orthogonality center, where it is optimal.
    """
    a, b = mps.tensors[i], mps.tensors[i + 1]
    l, d1, _ = a.shape
    _, d2, r = b.shape
    theta = np.tensordot(a, b, axes=(2, 0))          # l, d1, d2, r
    g4 = gate.mat.reshape(gate.d_out_left, gate.d_out_right, d1, d2)
    theta = np.tensordot(g4, theta, axes=([2, 3], [1, 2]))
    theta = theta.transpose(2, 0, 1, 3)              # l, d1o, d2o, r
    d1o, d2o = gate.d_out_left, gate.d_out_right
    mat = theta.reshape(l * d1o, d2o * r)
    u, s, vh = _robust_svd(mat)
    total = float(np.sum(s * s))
    chi = min(int(np.sum(s > opts.svd_cutoff)), opts.chi_max)
    chi = max(chi, 1)
    kept = float(np.sum(s[:chi] ** 2))
    discarded = max(0.0, (total - kept) / total) if total > 0 else 0.0
    s = s[:chi]
    norm = np.linalg.norm(s)
    if norm > 0:
        s = s / norm
    u = u[:, :chi]
    vh = vh[:chi]
    return u, s, vh, l, r, d1o, d2o, discarded


def _set_pair(mps, i, u, s, vh, l, r, d1o, d2o, center):
    chi = s.shape[0]
    if center == "right":
        mps.tensors[i] = u.reshape(l, d1o, chi)
        mps.tensors[i + 1] = (s[:, None] * vh).reshape(chi, d2o, r)
    else:
        mps.tensors[i] = (u * s[None, :]).reshape(l, d1o, chi)
        mps.tensors[i + 1] = vh.reshape(chi, d2o, r)


def _gate_at(mps, i, gate, opts, stats, center):
    u, s, vh, l, r, d1o, d2o, disc = apply_two_site(mps, i, gate, opts)
    _set_pair(mps, i, u, s, vh, l, r, d1o, d2o, center)
    stats.max_bond = max(stats.max_bond, s.shape[0])
    return disc


def tebd_step(mps, gates, opts, stats):
    """One full palindromic step; cavity starts and ends at site 0."""
    right, full, left = gates
    n_pair = len(right) + 1
    step_disc = 0.0
    for i in range(n_pair - 1):
        step_disc += _gate_at(mps, i, right[i], opts, stats, "right")
    step_disc += _gate_at(mps, n_pair - 1, full, opts, stats, "left")
    for i in range(n_pair - 2, -1, -1):
        step_disc += _gate_at(mps, i, left[i], opts, stats, "left")
    stats.n_steps += 1
    stats.total_discarded += step_disc
    stats.max_step_discarded = max(stats.max_step_discarded, step_disc)
    if step_disc > opts.alarm_threshold and opts.alarm_mode != "off":
        stats.n_alarms += 1
        msg = (f"discarded weight {step_disc:.3e} in one step exceeds "
               f"{opts.alarm_threshold:.1e}; raise chi_max or lower dt")
        if opts.alarm_mode == "strict":
            raise TruncationAlarm(msg)
        warnings.warn(msg)


def reduced_vibrational_dm(mps, i, params):
    """Vibrational RDM of molecule i (1-based), electronic traced out."""
    nv1 = params.n_max_vib + 1
    rho_site = mps.site_rdm(i)
    rho_site = rho_site.reshape(2, nv1, 2, nv1)
    return np.einsum("snsm->nm", rho_site)


def _energy_ops(params):
    a = ladder(params.n_max_cav)
    sm, sp, pe = model.electronic_ops()
    ivib = np.eye(params.n_max_vib + 1)
    return a, np.kron(sm, ivib), np.kron(sp, ivib)


def energy(mps, params, realization, site_rdms=None):
    """<H> from one- and two-site expectations (cavity at site 0)."""
    terms = model.build_terms(params, realization)
    a, sm_m, _ = _energy_ops(params)
    g = params.g
    rdms = site_rdms if site_rdms is not None else all_site_rdms(mps)
    val = 0.0
    for i, h1 in enumerate(terms.one_site):
        val += np.trace(h1 @ rdms[i + 1]).real
    for cross in correlations_from_first_site(mps, a.T, sm_m):
        val += 2.0 * g * cross.real
    return float(val)


def excitation_number(mps, params, site_rdms=None):
    a = ladder(params.n_max_cav)
    _, _, pe = model.electronic_ops()
    pe_m = np.kron(pe, np.eye(params.n_max_vib + 1))
    rdms = site_rdms if site_rdms is not None else all_site_rdms(mps)
    val = np.trace(a.T @ a @ rdms[0]).real
    for rho in rdms[1:]:
        val += np.trace(pe_m @ rho).real
    return float(val)


def evolve_tebd(params, realization, spec, times, options=None, callback=None):
    """Propagate and sample at the requested times.

    times must be non-decreasing and start at >= 0. At each sample time the
    callback(t, mps, stats) result is collected; with no callback an MPS
    copy is collected. Segment lengths are divided into an integer number
    of steps near the target dt so sample times are hit exactly.
    """
    opts = options or TEBDOptions()
    if opts.ehrenfest:
        opts = TEBDOptions(dt=opts.dt, chi_max=1, svd_cutoff=0.0,
                           alarm_mode="off", ehrenfest=True)
    dt_target = opts.resolved_dt(params)
    terms = model.build_terms(params, realization)
    mps = MPS.from_product(model.initial_state(spec, params))
    stats = TEBDStats()
    gate_cache = {}
    out = []
    t_now = 0.0
    for t in times:
        if t < t_now - 1e-12:
            raise ValueError("times must be non-decreasing")
        if t > t_now + 1e-12:
            span = t - t_now
            nsteps = max(1, int(np.ceil(span / dt_target - 1e-9)))
            dt = span / nsteps
            key = round(dt, 14)
            if key not in gate_cache:
                gate_cache[key] = build_gates(terms, dt)
            gates = gate_cache[key]
            for _ in range(nsteps):
                tebd_step(mps, gates, opts, stats)
            t_now = t
        out.append(callback(t, mps, stats) if callback else mps.copy())
    return out, stats
