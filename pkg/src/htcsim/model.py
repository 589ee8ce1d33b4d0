"""Model parameters, disorder sampling, Hamiltonian terms, and initial states.

Units: g_c = 1, hbar = 1. Energies may be given in meV externally and are
converted with g_c = 350 meV (Rabi splitting 2 g_c = 700 meV).

Local bases:
  molecule site: |s, n> with electronic s in {0: ground, 1: excited} and
  vibrational Fock n, merged index s*(n_max_vib+1)+n;
  cavity site: photon Fock |c>, c <= n_max_cav.
Site order used by all engines: [cavity, molecule 1, ..., molecule N].
"""

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse as sps

from .fockspace import ladder

G_C_MEV = 350.0  # paper's Omega_el = 2 g_c = 700 meV


def mev_to_gc(x):
    return x / G_C_MEV


def gc_to_mev(x):
    return x * G_C_MEV


@dataclass(frozen=True)
class HTCParams:
    """Physical couplings, frequencies, disorder strength, and truncations."""

    n_molecules: int
    g_collective: float = 1.0
    nu: float = 0.3
    huang_rhys_lambda: float = 0.4
    disorder_w: float = 0.0
    detuning: float = 0.0
    n_max_vib: int = 8
    n_max_cav: int = 1

    def __post_init__(self):
        if self.n_molecules < 1:
            raise ValueError("n_molecules must be >= 1")
        if self.disorder_w < 0:
            raise ValueError("disorder_w must be >= 0")
        if self.n_max_vib < 1 or self.n_max_cav < 1:
            raise ValueError("Fock cutoffs must be >= 1")
        if self.nu <= 0:
            raise ValueError("nu must be > 0")
        if self.g_collective < 0:
            # g_c = 0 is a valid decoupled limit (displaced oscillator)
            raise ValueError("g_collective must be >= 0")

    @property
    def g(self):
        """Per-molecule coupling g = g_c / sqrt(N)."""
        return self.g_collective / np.sqrt(self.n_molecules)

    @property
    def reorganization_energy(self):
        """R = lambda^2 nu."""
        return self.huang_rhys_lambda**2 * self.nu

    @property
    def dim_molecule(self):
        return 2 * (self.n_max_vib + 1)

    @property
    def vibrational_period(self):
        return 2.0 * np.pi / self.nu


@dataclass(frozen=True)
class DisorderRealization:
    seed: int
    epsilons: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "epsilons", np.asarray(self.epsilons, float))


@dataclass(frozen=True)
class InitialStateSpec:
    """kind: 'cavity' (a^dag|0>) or 'molecule' (sigma_i^+|0>, index 1-based)."""

    kind: str
    index: int = 1

    def __post_init__(self):
        if self.kind not in ("cavity", "molecule"):
            raise ValueError("kind must be 'cavity' or 'molecule'")
        if self.kind == "molecule" and self.index < 1:
            raise ValueError("molecule index is 1-based")


def realization_seed(master_seed, k):
    """64-bit stream key for realization k, counter-based keying."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(k),))
    return int(ss.generate_state(1, np.uint64)[0])


def realization_rng(master_seed, k):
    return np.random.Generator(np.random.Philox(key=realization_seed(master_seed, k)))


def sample_disorder(params, seed, distribution="normal"):
    """Draw epsilon_i, deterministic in (seed, N).

    The draw is a unit-variance sample scaled by W, so a W-sweep with a fixed
    seed rescales one fixed realization. distribution='box' gives the uniform
    [-W/2, W/2] variant used by the perturbative literature.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if distribution == "normal":
        unit = rng.standard_normal(params.n_molecules)
    elif distribution == "box":
        unit = rng.uniform(-0.5, 0.5, params.n_molecules)
    else:
        raise ValueError("distribution must be 'normal' or 'box'")
    return DisorderRealization(seed=int(seed), epsilons=params.disorder_w * unit)


def electronic_ops():
    """(sigma_minus, sigma_plus, excited projector) in the |g>,|e> basis."""
    sm = np.zeros((2, 2))
    sm[0, 1] = 1.0
    return sm, sm.T.copy(), np.diag([0.0, 1.0])


@dataclass(frozen=True)
class TermList:
    """Dense local matrices realizing the Hamiltonian.

    one_site[i]: molecule-i term nu b^dag b + (eps_i + Delta) P_e
                 - lambda nu (b + b^dag) P_e, on the merged molecule basis.
    coupling[i]: g (a^dag sigma_i^- + a sigma_i^+) on cavity (x) molecule i.
    pair[i] = coupling[i] + 1_cav (x) one_site[i] generates the TEBD gate.
    """

    one_site: list
    coupling: list
    dims: tuple = field(default=())

    def pair(self, i):
        dcav = self.coupling[i].shape[0] // self.one_site[i].shape[0]
        return self.coupling[i] + np.kron(np.eye(dcav), self.one_site[i])


def build_terms(params, realization):
    if len(realization.epsilons) != params.n_molecules:
        raise ValueError("realization length does not match n_molecules")
    nv, nc = params.n_max_vib, params.n_max_cav
    if nv <= 0 or nc <= 0:
        raise ValueError("cutoffs must be positive")
    b = ladder(nv)
    bd = b.T.conj()
    Iv = np.eye(nv + 1)
    sm, sp, pe = electronic_ops()
    a = ladder(nc)
    ad = a.T.conj()
    lam, nu = params.huang_rhys_lambda, params.nu
    g = params.g
    one_site, coupling = [], []
    for eps in realization.epsilons:
        h1 = (np.kron(np.eye(2), nu * (bd @ b))
              + (eps + params.detuning) * np.kron(pe, Iv)
              - lam * nu * np.kron(pe, b + bd))
        one_site.append(h1)
        hc = g * (np.kron(ad, np.kron(sm, Iv)) + np.kron(a, np.kron(sp, Iv)))
        coupling.append(hc)
    dims = (nc + 1,) + (2 * (nv + 1),) * params.n_molecules
    return TermList(one_site=one_site, coupling=coupling, dims=dims)


def assemble_hamiltonian(params, realization):
    """Full-space sparse Hamiltonian for small N (tests and leakage checks)."""
    terms = build_terms(params, realization)
    dims = terms.dims
    N = params.n_molecules
    dm = dims[1]
    total = int(np.prod(dims))
    if total > 2_000_000:
        raise ValueError("full-space dimension too large")
    H = sps.csr_matrix((total, total), dtype=float)
    for i in range(N):
        left = int(np.prod(dims[1:i + 1]))
        right = int(np.prod(dims[i + 2:]))
        op = sps.kron(sps.identity(dims[0] * left), sps.csr_matrix(terms.one_site[i]))
        if right > 1:
            op = sps.kron(op, sps.identity(right))
        H = H + op
        # coupling acts on cavity (site 0) and molecule i+1: expand the
        # cavity (x) molecule matrix with the in-between identity
        nc1 = dims[0]
        hc = terms.coupling[i].reshape(nc1, dm, nc1, dm)
        op = sps.csr_matrix((total, total), dtype=float)
        for c1 in range(nc1):
            for c2 in range(nc1):
                blk = hc[c1, :, c2, :]
                if not np.any(blk):
                    continue
                cav = sps.csr_matrix(([1.0], ([c1], [c2])), shape=(nc1, nc1))
                piece = sps.kron(cav, sps.identity(left)) if left > 1 else cav
                piece = sps.kron(piece, sps.csr_matrix(blk))
                if right > 1:
                    piece = sps.kron(piece, sps.identity(right))
                op = op + piece
        H = H + op
    return H.tocsr()


def excitation_number_diagonal(params):
    """Diagonal of a^dag a + sum_i sigma_i^+ sigma_i^- in the full basis."""
    dims = (params.n_max_cav + 1,) + (params.dim_molecule,) * params.n_molecules
    nv1 = params.n_max_vib + 1
    mol = np.concatenate([np.zeros(nv1), np.ones(nv1)])
    diag = np.arange(dims[0], dtype=float)
    for _ in range(params.n_molecules):
        diag = (diag[:, None] + mol[None, :]).reshape(-1)
    return diag


def initial_state(spec, params):
    """Product-state description: list of local vectors in site order."""
    nv1 = params.n_max_vib + 1
    cav = np.zeros(params.n_max_cav + 1)
    mols = [np.zeros(2 * nv1) for _ in range(params.n_molecules)]
    for m in mols:
        m[0] = 1.0  # |g, n=0>
    if spec.kind == "cavity":
        cav[1] = 1.0
    else:
        if not (1 <= spec.index <= params.n_molecules):
            raise ValueError("molecule index out of range")
        cav[0] = 1.0
        mols[spec.index - 1][:] = 0.0
        mols[spec.index - 1][nv1] = 1.0  # |e, n=0>
    if spec.kind == "cavity" and params.n_max_cav < 1:
        raise ValueError("n_max_cav too small for the initial excitation")
    return [cav] + mols
