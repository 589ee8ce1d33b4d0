"""Disorder-ensemble driver: paired seeds, worker pool, deterministic
reduction, and parameter sweeps.

Realization k always uses the seed derived from (master_seed, k), for every
engine and every point of a sweep, so engines can be compared realization by
realization and a W sweep reuses the same unit-normal draws rescaled by W.
Results are reduced in realization-index order, never completion order, so
the output is identical for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import os
import numpy as np

from . import model, mps, dense, semiclassical, analysis

logger = logging.getLogger("htcsim")

ENGINES = ("mps", "dense", "ehrenfest", "twa")


@dataclass
class EnsembleConfig:
    params: model.HTCParams
    initial: model.InitialStateSpec
    engine: str
    times: tuple
    n_realizations: int = 1
    master_seed: int = 0
    workers: int = None           # None -> HTCSIM_WORKERS env or 1
    rdm_molecules: object = (1,)  # tuple of 1-based indices, or "all"
    disorder_distribution: str = "normal"
    engine_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine '{self.engine}'; "
                             f"choose from {ENGINES}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        self.times = tuple(float(t) for t in self.times)

    def resolved_workers(self):
        env = os.environ.get("HTCSIM_WORKERS")
        if env:
            return max(1, int(env))
        if self.workers is not None:
            return max(1, int(self.workers))
        return 1

    def resolved_rdm_molecules(self):
        if self.rdm_molecules == "all":
            return tuple(range(1, self.params.n_molecules + 1))
        return tuple(int(i) for i in self.rdm_molecules)


@dataclass
class RealizationRecord:
    index: int
    seed: int
    epsilons: np.ndarray
    times: np.ndarray
    photon: np.ndarray            # (nt,) photon population
    excited: np.ndarray           # (nt, N) excited-state populations
    energy: np.ndarray            # (nt,)
    rdms: dict                    # molecule -> (nt, nv+1, nv+1)
    extras: dict = field(default_factory=dict)


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    records: list                 # ordered by realization index


def _run_mps(config, realization, ehrenfest):
    params, times = config.params, config.times
    opts_in = dict(config.engine_options)
    opts = mps.TEBDOptions(
        dt=opts_in.get("dt"),
        chi_max=int(opts_in.get("chi_max", 64)),
        svd_cutoff=float(opts_in.get("svd_cutoff", 1e-10)),
        alarm_threshold=float(opts_in.get("alarm_threshold", 1e-8)),
        alarm_mode=opts_in.get("alarm_mode", "warn"),
        ehrenfest=ehrenfest,
    )
    a = mps.ladder(params.n_max_cav)
    nph_op = a.T @ a
    _, _, pe = model.electronic_ops()
    pe_m = np.kron(pe, np.eye(params.n_max_vib + 1))
    nv1 = params.n_max_vib + 1
    molecules = config.resolved_rdm_molecules()

    def sample(t, state, stats):
        rdms = mps.all_site_rdms(state)
        row = {
            "photon": np.trace(nph_op @ rdms[0]).real,
            "excited": np.array([np.trace(pe_m @ r).real
                                 for r in rdms[1:]]),
            "energy": mps.energy(state, params, realization,
                                 site_rdms=rdms),
            "rdm": {},
        }
        for i in molecules:
            site = rdms[i].reshape(2, nv1, 2, nv1)
            row["rdm"][i] = np.einsum("snsm->nm", site)
        return row

    rows, stats = mps.evolve_tebd(params, realization, config.initial,
                                  times, options=opts, callback=sample)
    return rows, {"max_bond": stats.max_bond,
                  "total_discarded": stats.total_discarded,
                  "n_alarms": stats.n_alarms}


def _run_dense(config, realization):
    params, times = config.params, config.times
    tol = float(config.engine_options.get("tol", 1e-12))
    molecules = config.resolved_rdm_molecules()
    states = dense.dense_evolve(params, realization, config.initial, times,
                                tol=tol)
    H = dense.build_block_hamiltonian(params, realization)
    rows = []
    for st in states:
        rows.append({
            "photon": st.photon_weight(),
            "excited": np.array([st.molecule_weight(i)
                                 for i in range(1, params.n_molecules + 1)]),
            "energy": dense.dense_energy(H, st),
            "rdm": {i: dense.dense_rdm(st, i) for i in molecules},
        })
    return rows, {}


def _run_twa(config, realization, rng):
    params, times = config.params, config.times
    opts = config.engine_options
    n_traj = int(opts.get("n_traj", 2000))
    dt = opts.get("dt")
    store = tuple(opts.get("store_molecules",
                           config.resolved_rdm_molecules()))
    res = semiclassical.evolve_trajectories(
        params, realization, config.initial, times, n_traj, rng, dt=dt,
        store_molecules=store)
    rows = []
    for k in range(len(res.times)):
        rows.append({
            "photon": float(res.photon_number()[k]),
            "excited": res.excited_population()[k],
            "energy": np.nan,
            "rdm": {},
        })
    extras = {
        "xp_samples": res.xp_samples,
        "vib_moments": res.vib_moments,
        "energy_drift": res.energy_drift,
        "bloch_drift": res.bloch_drift,
    }
    return rows, extras


def run_realization(config, k):
    """One disorder realization under the configured engine."""
    seed = model.realization_seed(config.master_seed, k)
    realization = model.sample_disorder(
        config.params, seed, distribution=config.disorder_distribution)
    try:
        if config.engine in ("mps", "ehrenfest"):
            rows, extras = _run_mps(config, realization,
                                    config.engine == "ehrenfest")
        elif config.engine == "dense":
            rows, extras = _run_dense(config, realization)
        else:
            rng = model.realization_rng(config.master_seed, k)
            rows, extras = _run_twa(config, realization, rng)
    except dense.DimensionLimitError as exc:
        # keep the type so callers can map it to the resource-refusal path
        raise dense.DimensionLimitError(
            f"realization {k} (seed {seed}): {exc}") from exc
    except Exception as exc:
        raise RuntimeError(
            f"engine '{config.engine}' failed on realization {k} "
            f"(seed {seed}): {exc}") from exc
    nt = len(config.times)
    rdms = {}
    if rows[0]["rdm"]:
        rdms = {i: np.stack([rows[j]["rdm"][i] for j in range(nt)])
                for i in rows[0]["rdm"]}
    record = RealizationRecord(
        index=k, seed=seed, epsilons=realization.epsilons,
        times=np.asarray(config.times),
        photon=np.array([rows[j]["photon"] for j in range(nt)]),
        excited=np.stack([rows[j]["excited"] for j in range(nt)]),
        energy=np.array([rows[j]["energy"] for j in range(nt)]),
        rdms=rdms,
        extras=extras,
    )
    logger.info("realization %d/%d done (engine=%s)", k + 1,
                config.n_realizations, config.engine)
    return record


def run_ensemble(config):
    """All realizations, reduced in index order."""
    workers = config.resolved_workers()
    ks = range(config.n_realizations)
    if workers == 1:
        records = [run_realization(config, k) for k in ks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda k: run_realization(config, k),
                                    ks))
    return EnsembleResult(config=config, records=records)


def aggregate(states, weights):
    """Convex combination of density matrices with explicit weights."""
    states = [np.asarray(s) for s in states]
    weights = np.asarray(weights, float)
    if len(states) != len(weights):
        raise ValueError("one weight per state required")
    if any(s.shape != states[0].shape for s in states):
        raise ValueError("state shape mismatch")
    if abs(weights.sum() - 1.0) > 1e-10 or np.any(weights < 0):
        raise ValueError("weights must be nonnegative and sum to 1")
    out = np.zeros_like(states[0], dtype=complex)
    for w, s in zip(weights, states):
        out += w * s
    return out


def summarize(result):
    """Disorder averages: xi_1, xi_avg, observable means, delta scatter.

    xi_1 is the disorder average of the stored molecule-1 state; xi_avg
    additionally averages over all stored molecules. delta_scatter is the
    per-realization spread of delta[rho_1^(k)], kept separate from
    delta[xi_1] (delta of the averaged state), which is what the scaling
    plots use.
    """
    records = result.records
    times = records[0].times
    photon = np.stack([r.photon for r in records])
    excited = np.stack([r.excited for r in records])
    out = {
        "times": times,
        "photon_mean": photon.mean(axis=0),
        "photon_std": photon.std(axis=0),
        "excited_mean": excited.mean(axis=0),
        "n_realizations": len(records),
    }
    if not np.all(np.isnan(records[0].energy)):
        energies = np.stack([r.energy for r in records])
        out["energy_mean"] = energies.mean(axis=0)
    if records[0].rdms:
        w = np.full(len(records), 1.0 / len(records))
        mean_rdms = {}
        for i in records[0].rdms:
            stacks = [r.rdms[i] for r in records]
            mean_rdms[i] = np.stack(
                [aggregate([s[k] for s in stacks], w)
                 for k in range(len(times))])
        out["mean_rdms"] = mean_rdms
        mols = sorted(mean_rdms)
        out["xi1"] = mean_rdms[mols[0]]
        wm = np.full(len(mols), 1.0 / len(mols))
        out["xi_avg"] = np.stack(
            [aggregate([mean_rdms[i][k] for i in mols], wm)
             for k in range(len(times))])
        out["delta_xi1"] = np.array(
            [analysis.non_gaussianity(rho) for rho in out["xi1"]])
        out["delta_xi_avg"] = np.array(
            [analysis.non_gaussianity(rho) for rho in out["xi_avg"]])
        first = mols[0]
        per_real = np.array([[analysis.non_gaussianity(rho)
                              for rho in r.rdms[first]] for r in records])
        out["delta_rho1"] = per_real
        out["delta_rho1_mean"] = per_real.mean(axis=0)
        out["delta_rho1_std"] = per_real.std(axis=0)
    return out


def pooled_reconstruction(result, molecule=1, dim=4, center=True):
    """Pool phase-space samples across realizations, then reconstruct one
    density matrix per time; this is the semiclassical estimate of xi_1.
    Clipping once on the pooled estimate keeps the estimator linear until
    the final projection."""
    records = result.records
    if "xp_samples" not in records[0].extras:
        raise ValueError("pooled_reconstruction needs the twa engine")
    nt = len(records[0].times)
    rhos = []
    for k in range(nt):
        xs = np.concatenate([r.extras["xp_samples"][molecule][k, :, 0]
                             for r in records])
        ps = np.concatenate([r.extras["xp_samples"][molecule][k, :, 1]
                             for r in records])
        rhos.append(semiclassical.reconstruct_state(xs, ps, dim=dim,
                                                    center=center))
    return rhos


def _xi_states(result, summary, reconstruct_dim, center):
    """(xi1, xi_avg) at the final sample time for any engine."""
    if result.config.engine == "twa":
        mols = sorted(result.records[0].extras["xp_samples"])
        rhos = [pooled_reconstruction(result, molecule=i,
                                      dim=reconstruct_dim, center=center)[-1]
                for i in mols]
        w = np.full(len(rhos), 1.0 / len(rhos))
        return rhos[0], aggregate(rhos, w)
    return summary["xi1"][-1], summary["xi_avg"][-1]


def _normalized_overlap(wa, wb):
    """Overlap deficit scale-fixed so identical states give exactly 1.

    The raw Hilbert-Schmidt product tr(rho_a rho_b) of two equal mixed
    states is their purity, not 1, so 1-O would never drop below the
    mixedness floor however well two engines agree. Dividing by the
    geometric mean of the self-overlaps removes that floor and leaves a
    pure engine-disagreement measure.
    """
    oab = analysis.wigner_overlap(wa, wb)
    oaa = analysis.wigner_overlap(wa, wa)
    obb = analysis.wigner_overlap(wb, wb)
    return oab / np.sqrt(oaa * obb)


def sweep(config, w_values=None, n_values=None, compare_engine=None,
          grid=None, reconstruct_dim=4, center=True):
    """End-time observables over a (N, W) grid: delta[xi_1], delta[xi_avg],
    per-realization scatter, and 1-O overlap deficits against a comparison
    engine run on the same seeds.

    Every grid point reuses the master seed, so the k-th realization draws
    the same unit normals at each W (scaled by W) and the comparison engine
    sees identical disorder.
    """
    w_values = list(w_values) if w_values is not None else [
        config.params.disorder_w]
    n_values = list(n_values) if n_values is not None else [
        config.params.n_molecules]
    if not w_values or not n_values:
        raise ValueError("sweep lists must be non-empty")
    if grid is None:
        grid = analysis.default_grid()
    xs, ps = grid
    rows = []
    for n in n_values:
        for w in w_values:
            params = replace(config.params, n_molecules=n, disorder_w=w)
            cfg = replace(config, params=params, rdm_molecules="all")
            result = run_ensemble(cfg)
            summary = summarize(result)
            xi1, xi_avg = _xi_states(result, summary, reconstruct_dim,
                                     center)
            row = {
                "n_molecules": n,
                "disorder_w": w,
                "delta_xi1": analysis.non_gaussianity(xi1),
                "delta_xi_avg": analysis.non_gaussianity(xi_avg),
            }
            if "delta_rho1_std" in summary:
                row["delta_rho1_mean"] = summary["delta_rho1_mean"][-1]
                row["delta_rho1_std"] = summary["delta_rho1_std"][-1]
            if compare_engine is not None:
                ccfg = replace(cfg, engine=compare_engine)
                cres = run_ensemble(ccfg)
                csum = summarize(cres)
                cxi1, cxi_avg = _xi_states(cres, csum, reconstruct_dim,
                                           center)
                w1 = analysis.wigner(xi1, xs, ps)
                w1c = analysis.wigner(cxi1, xs, ps)
                wa = analysis.wigner(xi_avg, xs, ps)
                wac = analysis.wigner(cxi_avg, xs, ps)
                row["one_minus_o1"] = 1.0 - _normalized_overlap(w1, w1c)
                row["one_minus_o_avg"] = 1.0 - _normalized_overlap(wa, wac)
            rows.append(row)
    return rows
