"""Command-line front end: config schema, run artifacts, figure exporters.

Config files are YAML with an explicit `units` field ("g_c" or "meV");
energies given in meV are converted with g_c = 350 meV. Times are always in
units of 1/g_c. Exit codes: 0 success, 2 config/schema violation, 3 engine
failure, 4 resource-limit refusal.

Artifacts per run directory: timeseries.csv and scatter.csv for scalar
series, states.npz + index.json for complex matrices (paired real/imag
arrays), and manifest.json written atomically last; every output file is
referenced by exactly one manifest.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time as _time
from dataclasses import replace

import numpy as np
import yaml

from . import __version__, model, dense, ensemble, analysis

logger = logging.getLogger("htcsim")

EXIT_CONFIG = 2
EXIT_ENGINE = 3
EXIT_RESOURCE = 4

FIGURES = ("wigner_map", "delta_vs_time", "scaling", "thermal_compare",
           "overlap_scaling")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- schema

_MODEL_KEYS = {"n_molecules", "g_collective", "nu", "huang_rhys_lambda",
               "disorder_w", "detuning", "n_max_vib", "n_max_cav"}
_RUN_KEYS = {"engine", "times", "t_final", "n_samples", "n_realizations",
             "master_seed", "workers", "rdm_molecules",
             "disorder_distribution"}
_TOP_KEYS = {"units", "model", "initial", "run", "engine_options", "sweep"}
_SWEEP_KEYS = {"n_values", "w_values", "compare_engine"}
_ENERGY_KEYS = {"g_collective", "nu", "disorder_w", "detuning"}


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def parse_config(text):
    """Parse and validate a YAML config; returns a plain nested dict with
    energies converted to g_c units."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    _require(isinstance(raw, dict), "top level must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    units = raw.get("units", "g_c")
    _require(units in ("g_c", "meV"), "units must be 'g_c' or 'meV'")
    scale = model.mev_to_gc(1.0) if units == "meV" else 1.0

    m = dict(raw.get("model") or {})
    unknown = set(m) - _MODEL_KEYS
    _require(not unknown, f"unknown model keys: {sorted(unknown)}")
    _require("n_molecules" in m, "model.n_molecules is required")
    for key in _ENERGY_KEYS & set(m):
        m[key] = float(m[key]) * scale

    ini = dict(raw.get("initial") or {"kind": "cavity"})
    _require(set(ini) <= {"kind", "index"},
             "initial accepts only kind and index")
    kind = ini.get("kind", "cavity")
    _require(kind in ("cavity", "molecule"),
             "initial.kind must be 'cavity' or 'molecule'")

    run = dict(raw.get("run") or {})
    unknown = set(run) - _RUN_KEYS
    _require(not unknown, f"unknown run keys: {sorted(unknown)}")
    engine = run.get("engine", "mps")
    _require(engine in ensemble.ENGINES,
             f"run.engine must be one of {ensemble.ENGINES}")
    if "times" in run:
        _require("t_final" not in run and "n_samples" not in run,
                 "give either run.times or run.t_final/n_samples, not both")
        times = [float(t) for t in run["times"]]
    else:
        t_final = float(run.get("t_final", 0.0))
        if t_final <= 0.0:
            nu = float(m.get("nu", 0.3))
            t_final = 2.0 * np.pi / nu
        n_samples = int(run.get("n_samples", 9))
        _require(n_samples >= 2, "run.n_samples must be >= 2")
        times = list(np.linspace(0.0, t_final, n_samples))
    _require(all(b >= a for a, b in zip(times, times[1:])),
             "run.times must be non-decreasing")

    sweep_cfg = raw.get("sweep")
    if sweep_cfg is not None:
        sweep_cfg = dict(sweep_cfg)
        unknown = set(sweep_cfg) - _SWEEP_KEYS
        _require(not unknown, f"unknown sweep keys: {sorted(unknown)}")
        for key in ("n_values", "w_values"):
            if key in sweep_cfg:
                _require(isinstance(sweep_cfg[key], list) and sweep_cfg[key],
                         f"sweep.{key} must be a non-empty list")
        if "compare_engine" in sweep_cfg:
            _require(sweep_cfg["compare_engine"] in ensemble.ENGINES,
                     f"sweep.compare_engine must be one of {ensemble.ENGINES}")
        if "w_values" in sweep_cfg:
            sweep_cfg["w_values"] = [float(w) * scale
                                     for w in sweep_cfg["w_values"]]

    return {
        "units": "g_c",  # energies are converted on parse
        "model": m,
        "initial": {"kind": kind, "index": int(ini.get("index", 1))},
        "run": {
            "engine": engine,
            "times": times,
            "n_realizations": int(run.get("n_realizations", 1)),
            "master_seed": int(run.get("master_seed", 0)),
            "workers": run.get("workers"),
            "rdm_molecules": run.get("rdm_molecules", [1]),
            "disorder_distribution": run.get("disorder_distribution",
                                             "normal"),
        },
        "engine_options": dict(raw.get("engine_options") or {}),
        "sweep": sweep_cfg,
    }


def serialize_config(cfg):
    return yaml.safe_dump(cfg, sort_keys=True)


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def build_ensemble_config(cfg):
    try:
        params = model.HTCParams(**cfg["model"])
        initial = model.InitialStateSpec(kind=cfg["initial"]["kind"],
                                         index=cfg["initial"]["index"])
        run = cfg["run"]
        rdm = run["rdm_molecules"]
        if rdm != "all":
            rdm = tuple(int(i) for i in rdm)
        return ensemble.EnsembleConfig(
            params=params, initial=initial, engine=run["engine"],
            times=tuple(run["times"]),
            n_realizations=run["n_realizations"],
            master_seed=run["master_seed"], workers=run["workers"],
            rdm_molecules=rdm,
            disorder_distribution=run["disorder_distribution"],
            engine_options=cfg["engine_options"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ------------------------------------------------------------- artifacts

def save_complex_arrays(directory, arrays):
    """states.npz with paired real/imag float arrays plus a JSON index."""
    payload = {}
    index = {}
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        payload[f"{name}_re"] = np.ascontiguousarray(arr.real)
        payload[f"{name}_im"] = np.ascontiguousarray(arr.imag)
        index[name] = {"files": [f"{name}_re", f"{name}_im"],
                       "shape": list(arr.shape), "dtype": "complex128"}
    npz_path = os.path.join(directory, "states.npz")
    np.savez_compressed(npz_path, **payload)
    index_path = os.path.join(directory, "index.json")
    with open(index_path, "w") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
    return [npz_path, index_path]


def load_complex_arrays(directory):
    with open(os.path.join(directory, "index.json")) as fh:
        index = json.load(fh)
    data = np.load(os.path.join(directory, "states.npz"))
    out = {}
    for name, meta in index.items():
        re_name, im_name = meta["files"]
        out[name] = data[re_name] + 1j * data[im_name]
    return out


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        return format(float(v), ".17g")
    return v


def write_manifest(directory, manifest):
    """Atomic write: the manifest appears only after the outputs exist."""
    path = os.path.join(directory, "manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def find_orphans(directory):
    """Files in a run tree not referenced by exactly one manifest."""
    referenced = {}
    all_files = []
    for root, _, files in os.walk(directory):
        for name in files:
            path = os.path.relpath(os.path.join(root, name), directory)
            all_files.append(path)
            if name != "manifest.json":
                continue
            with open(os.path.join(root, name)) as fh:
                manifest = json.load(fh)
            base = os.path.relpath(root, directory)
            for out in manifest.get("outputs", []):
                rel = os.path.normpath(os.path.join(base, out))
                referenced[rel] = referenced.get(rel, 0) + 1
    orphans = [f for f in all_files
               if not f.endswith("manifest.json") and referenced.get(f) != 1]
    orphans += [f for f, k in referenced.items() if k > 1]
    return sorted(orphans)


# ------------------------------------------------------------ simulate

def run_simulate(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    t0 = _time.time()
    config = build_ensemble_config(cfg)
    result = ensemble.run_ensemble(config)
    summary = ensemble.summarize(result)
    outputs = []

    times = summary["times"]
    header = ["time", "photon_mean", "photon_std"]
    cols = [times, summary["photon_mean"], summary["photon_std"]]
    for key in ("delta_xi1", "delta_xi_avg", "delta_rho1_mean",
                "delta_rho1_std", "energy_mean"):
        if key in summary:
            header.append(key)
            cols.append(summary[key])
    rows = list(zip(*cols))
    outputs.append(write_csv(os.path.join(out_dir, "timeseries.csv"),
                             header, rows))

    scatter_rows = []
    for rec in result.records:
        deltas = None
        if rec.rdms:
            first = sorted(rec.rdms)[0]
            deltas = [analysis.non_gaussianity(r) for r in rec.rdms[first]]
        for j, t in enumerate(rec.times):
            scatter_rows.append([t, rec.index, rec.seed, rec.photon[j],
                                 deltas[j] if deltas else ""])
    outputs.append(write_csv(os.path.join(out_dir, "scatter.csv"),
                             ["time", "realization", "seed", "photon",
                              "delta_rho1"], scatter_rows))

    arrays = {}
    if "xi1" in summary:
        arrays["xi1"] = summary["xi1"]
        arrays["xi_avg"] = summary["xi_avg"]
    elif config.engine == "twa":
        rhos = ensemble.pooled_reconstruction(result)
        arrays["xi1"] = np.stack(rhos)
        summary["delta_xi1"] = np.array(
            [analysis.non_gaussianity(r) for r in rhos])
    if arrays:
        outputs.extend(save_complex_arrays(out_dir, arrays))

    diag = {}
    for rec in result.records:
        for key in ("max_bond", "total_discarded", "n_alarms",
                    "energy_drift", "bloch_drift"):
            if key in rec.extras:
                diag[key] = max(diag.get(key, 0), rec.extras[key])
    manifest = {
        "kind": "simulate",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "engine": config.engine,
        "version": __version__,
        "master_seed": config.master_seed,
        "realization_seeds": [r.seed for r in result.records],
        "wall_time_s": _time.time() - t0,
        "diagnostics": diag,
        "outputs": [os.path.basename(p) for p in outputs],
    }
    write_manifest(out_dir, manifest)
    return out_dir


# --------------------------------------------------------------- sweep

def run_sweep(cfg, out_dir):
    _require(cfg.get("sweep"), "sweep section missing from config")
    os.makedirs(out_dir, exist_ok=True)
    t0 = _time.time()
    config = build_ensemble_config(cfg)
    sw = cfg["sweep"]
    rows = ensemble.sweep(config, w_values=sw.get("w_values"),
                          n_values=sw.get("n_values"),
                          compare_engine=sw.get("compare_engine"))
    header = sorted({k for row in rows for k in row})
    csv_rows = [[row.get(k, "") for k in header] for row in rows]
    out = write_csv(os.path.join(out_dir, "sweep.csv"), header, csv_rows)
    manifest = {
        "kind": "sweep",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "engine": config.engine,
        "compare_engine": sw.get("compare_engine"),
        "version": __version__,
        "master_seed": config.master_seed,
        "wall_time_s": _time.time() - t0,
        "outputs": [os.path.basename(out)],
    }
    write_manifest(out_dir, manifest)
    return out_dir


# ---------------------------------------------------------- oracle check

def run_oracle_check(cfg, out_dir):
    """MPS vs Dense vs Ehrenfest on identical seeds; pass/fail report."""
    os.makedirs(out_dir, exist_ok=True)
    config = build_ensemble_config(cfg)
    if dense.block_dimension(config.params) > dense.DIM_LIMIT_DEFAULT:
        raise dense.DimensionLimitError(
            f"dense oracle limit exceeded at N={config.params.n_molecules}")
    if "dt" not in config.engine_options:
        # engine-default dt targets production sweeps; the oracle bound of
        # 1e-6 on trace distance needs a finer Trotter step
        opts = dict(config.engine_options)
        opts["dt"] = config.params.vibrational_period / 4000.0
        config = replace(config, engine_options=opts)
    results = {}
    for engine in ("dense", "mps", "ehrenfest"):
        results[engine] = ensemble.summarize(ensemble.run_ensemble(
            replace(config, engine=engine)))
    report = {"checks": [], "pass": True}

    def check(name, value, bound):
        ok = bool(value < bound)
        report["checks"].append({"name": name, "value": float(value),
                                 "bound": float(bound), "pass": ok})
        if not ok:
            report["pass"] = False

    t_idx = len(config.times) - 1
    d_mps = analysis.trace_distance(results["mps"]["xi1"][t_idx],
                                    results["dense"]["xi1"][t_idx])
    check("trace_distance(mps, dense) at t_final", d_mps, 1e-6)
    d_ehr = analysis.trace_distance(results["ehrenfest"]["xi1"][t_idx],
                                    results["dense"]["xi1"][t_idx])
    report["checks"].append({"name": "trace_distance(ehrenfest, dense)",
                             "value": float(d_ehr), "bound": None,
                             "pass": True})
    for engine in ("dense", "mps", "ehrenfest"):
        tr_err = abs(np.trace(results[engine]["xi1"][t_idx]).real - 1.0)
        check(f"unit trace ({engine})", tr_err, 1e-8)
    report["trace_distance_mps_dense"] = float(d_mps)
    report["trace_distance_ehrenfest_dense"] = float(d_ehr)
    path = os.path.join(out_dir, "oracle_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    write_manifest(out_dir, {
        "kind": "oracle-check", "config": cfg,
        "config_hash": config_hash(cfg), "version": __version__,
        "outputs": ["oracle_report.json"],
    })
    for item in report["checks"]:
        status = "PASS" if item["pass"] else "FAIL"
        print(f"[{status}] {item['name']}: {item['value']:.3e}")
    print("oracle-check:", "PASS" if report["pass"] else "FAIL")
    return report


# -------------------------------------------------------- figure export

def export_figure_data(run_dir, figure, out_dir):
    """Plain CSV tables for one figure family from an existing run."""
    _require(figure in FIGURES, f"figure must be one of {FIGURES}")
    manifest_path = os.path.join(run_dir, "manifest.json")
    _require(os.path.exists(manifest_path), f"no manifest in {run_dir}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    os.makedirs(out_dir, exist_ok=True)
    cfg = manifest["config"]
    outputs = []

    if figure == "wigner_map":
        arrays = load_complex_arrays(run_dir)
        _require("xi1" in arrays, "run has no stored xi1 states")
        rho = arrays["xi1"][-1]
        xs, ps = analysis.default_grid()
        grid = analysis.wigner(rho, xs, ps)
        rows = [(x, p, grid.values[i, j]) for i, x in enumerate(xs)
                for j, p in enumerate(ps)]
        outputs.append(write_csv(os.path.join(out_dir, "wigner_map.csv"),
                                 ["x", "p", "W"], rows))
    elif figure == "delta_vs_time":
        src = os.path.join(run_dir, "timeseries.csv")
        _require(os.path.exists(src), "run has no timeseries.csv")
        with open(src) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            _require("delta_xi1" in header,
                     "run has no delta_xi1 column (no stored RDMs)")
            rows = list(reader)
        keep = ["time", "delta_xi1", "delta_xi_avg", "delta_rho1_mean",
                "delta_rho1_std"]
        idx = [header.index(k) for k in keep if k in header]
        out_rows = [[row[i] for i in idx] for row in rows]
        outputs.append(write_csv(
            os.path.join(out_dir, "delta_vs_time.csv"),
            [header[i] for i in idx], out_rows))
    elif figure in ("scaling", "overlap_scaling"):
        src = os.path.join(run_dir, "sweep.csv")
        _require(os.path.exists(src), "run has no sweep.csv; run `sweep`")
        with open(src) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if figure == "overlap_scaling":
            _require("one_minus_o1" in header,
                     "sweep has no overlap columns (no compare_engine)")
        name = f"{figure}.csv"
        outputs.append(write_csv(os.path.join(out_dir, name), header, rows))
    elif figure == "thermal_compare":
        arrays = load_complex_arrays(run_dir)
        _require("xi1" in arrays, "run has no stored xi1 states")
        rho = arrays["xi1"][-1]
        params = cfg["model"]
        nu = float(params.get("nu", 0.3))
        lam = float(params.get("huang_rhys_lambda", 0.4))
        e0 = lam * lam * nu
        ref = analysis.thermal_reference(e0, nu, rho.shape[0] - 1)
        spectrum, heat = analysis.spectrum_and_heatmap(rho)
        rows = []
        for n in range(rho.shape[0]):
            rows.append([n, spectrum[n], ref.populations[n],
                         float(np.sum(heat[n]) - heat[n, n])])
        outputs.append(write_csv(
            os.path.join(out_dir, "thermal_compare.csv"),
            ["n", "state_eigenvalue", "thermal_population",
             "offdiag_row_mass"], rows))
        meta_rows = [["beta_R", ref.beta], ["E0", ref.E0], ["nu", ref.nu],
                     ["tail", ref.tail],
                     ["delta_state", analysis.non_gaussianity(rho)]]
        outputs.append(write_csv(
            os.path.join(out_dir, "thermal_compare_meta.csv"),
            ["quantity", "value"], meta_rows))

    write_manifest(out_dir, {
        "kind": f"export:{figure}",
        "source_run": os.path.abspath(run_dir),
        "config_hash": manifest.get("config_hash"),
        "version": __version__,
        "outputs": [os.path.basename(p) for p in outputs],
    })
    return outputs


# ----------------------------------------------------------------- main

def _add_common(sub):
    sub.add_argument("--config", required=True, help="YAML config file")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--engine", default=None,
                     help="override run.engine from the config")
    sub.add_argument("--seed", type=int, default=None,
                     help="override run.master_seed from the config")


def _load_cfg(args):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = parse_config(text)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        # malformed scalars inside an otherwise well-formed mapping
        raise ConfigError(str(exc)) from exc
    if args.engine is not None:
        _require(args.engine in ensemble.ENGINES,
                 f"--engine must be one of {ensemble.ENGINES}")
        cfg["run"]["engine"] = args.engine
    if args.seed is not None:
        cfg["run"]["master_seed"] = args.seed
    if args.workers is not None:
        cfg["run"]["workers"] = args.workers
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="htcsim",
        description="Vibrational dynamics of disordered molecules "
                    "collectively coupled to a cavity mode")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep", "oracle-check"):
        _add_common(subs.add_parser(name))
    exp = subs.add_parser("export-figure-data")
    exp.add_argument("run_dir", help="existing run directory")
    exp.add_argument("figure", choices=FIGURES)
    exp.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "export-figure-data":
            export_figure_data(args.run_dir, args.figure, args.out)
            return 0
        cfg = _load_cfg(args)
        if args.command == "simulate":
            run_simulate(cfg, args.out)
        elif args.command == "sweep":
            run_sweep(cfg, args.out)
        else:
            run_oracle_check(cfg, args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except dense.DimensionLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (RuntimeError, ValueError) as exc:
        print(f"engine failure: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
