"""End-to-end runs: estimation on tick data, simulation to files and the
Monte Carlo replication loop."""

from __future__ import annotations

import contextlib
import dataclasses
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import io
from .config import RunConfig, SimulationConfig, config_from_dict, config_to_dict
from .errors import ConfigurationError, DataError, FourvolError
from .functionals import TuningParams, get_functional, plug_in_estimate, plug_in_range
from .inference import (
    async_bias_estimate,
    avar_contributions,
    build_report,
    is_synchronous,
    kernel_sums,
)
from .simulate import (
    LatentPath,
    SamplingScheme,
    replication_seed,
    sample_asynchronous,
    simulate_constant_vol,
    simulate_fbm_vol,
    simulate_heston_bridge,
    true_functional,
)
from .spectrum import TickSeries, spectrum_matrix
from .spot import condition_spot, fejer_inversion
from .trigkernels import ObservationGrid, cubic_variation

log = logging.getLogger(__name__)

CURSE_MESSAGE = (
    "synchronous-optimal mode needs identical observation times for all assets; "
    "with asynchronous grids N near the Nyquist limit biases the cross terms "
    "(curse of asynchronicity). Use mode 'general' (N = o(n^(4/5))) or "
    "'biased-optimal-rate' with a kappa")


@contextlib.contextmanager
def stage(name: str):
    """Prefix any library error raised inside the block with a stage label."""
    try:
        yield
    except FourvolError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def estimate_ticks(ticks: Sequence[TickSeries], tuning: TuningParams, functionals: Sequence[str],
                   mode: str = "general", alpha: float = 0.05, periodic: bool = True,
                   errors: Optional[dict] = None):
    """Run spectrum, spot inversion, plug-in, variance and (optionally) bias
    estimation for every functional. Returns ``(reports, spot_path)``.

    With an ``errors`` dict, a failure for one functional is stored there
    under its id and the remaining functionals still run.
    """
    ticks = list(ticks)
    grids = [t.grid for t in ticks]
    sizes = [t.n for t in ticks]
    with stage("tuning"):
        if mode == "synchronous-optimal" and not is_synchronous(grids):
            raise ConfigurationError(CURSE_MESSAGE)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            notes = tuning.validate(sizes, periodic=periodic)
        if mode == "biased-optimal-rate" and tuning.kappa is None:
            raise ConfigurationError("biased-optimal-rate needs kappa")
        specs = [get_functional(f) for f in functionals]
        for g in specs:
            g.check_dimension(len(ticks))
    with stage("spectrum"):
        spec = spectrum_matrix(ticks, tuning.N, q_max=tuning.M - 1)
    with stage("spot"):
        raw = fejer_inversion(spec, tuning.M, tuning.B)
        path = condition_spot(raw)
    with stage("inference"):
        sums = kernel_sums(grids, tuning.N, tuning.B)
    n_min = min(sizes)
    diag_common = {
        "N": tuning.N, "M": tuning.M, "B": tuning.B, "L": tuning.L,
        "kappa": tuning.kappa, "sizes": sizes, "delta": sums.delta, "stride": sums.stride,
        "max_imag": raw.max_imag, "synchronous": is_synchronous(grids),
        "plug_in_range": list(plug_in_range(path, tuning.L)), "tuning_notes": notes,
        "asset_ids": [t.asset_id for t in ticks],
    }
    if len(ticks) > 1:
        diag_common["cubic_variation_T"] = {
            f"{ticks[j].asset_id}|{ticks[k].asset_id}":
                cubic_variation(grids[j], grids[k], n_min, grids[0].T)
            for j in range(len(ticks)) for k in range(j + 1, len(ticks))}
    reports = []
    h = np.arange(1, path.B + 1)
    keep = (h >= 1 + tuning.L) & (h <= path.B - tuning.L)
    for g in specs:
        try:
            reports.append(_report(path, g, sums, keep, tuning, mode, grids, alpha, diag_common))
        except FourvolError as exc:
            if errors is None:
                raise
            errors[g.id] = str(exc)
    return reports, path


def _report(path, g, sums, keep, tuning, mode, grids, alpha, diag_common):
    with stage(f"plug-in {g.id}"):
        s_hat = plug_in_estimate(path, g, L=tuning.L)
    with stage(f"inference {g.id}"):
        v_hat = float(avar_contributions(path, g, sums)[keep].sum())
        mu = None
        diag = dict(diag_common)
        if mode == "biased-optimal-rate":
            kappa_eff = tuning.N / min(gr.n for gr in grids) ** 0.8
            mu = async_bias_estimate(path, g, grids, kappa_eff)
            diag["kappa_effective"] = kappa_eff
        return build_report(g, s_hat, v_hat, tuning.N, mode, grids, alpha, mu, diag)


def _common_window(ticks, T):
    if T is None:
        T = max(float(t.grid.times[-1]) for t in ticks)
    out = []
    for t in ticks:
        keep = t.grid.times <= T * (1 + 1e-12)
        if keep.sum() < 2:
            raise DataError(f"asset {t.asset_id} has fewer than two observations in [0, {T}]")
        out.append(TickSeries(t.asset_id, ObservationGrid(t.grid.times[keep], T), t.log_prices[keep]))
    return out


def load_ticks(cfg: RunConfig):
    if not cfg.files:
        raise ConfigurationError("estimate needs at least one file in 'files'")
    ticks = []
    with stage("ingest"):
        for f in cfg.files:
            ticks.extend(io.parse_ticks(f, T=cfg.T))
        ids = [t.asset_id for t in ticks]
        if len(set(ids)) != len(ids):
            raise DataError(f"asset ids repeat across files: {ids}")
        if cfg.assets is not None:
            by_id = {t.asset_id: t for t in ticks}
            missing = [a for a in cfg.assets if a not in by_id]
            if missing:
                raise DataError(f"no observations for asset(s) {', '.join(missing)}")
            ticks = [by_id[a] for a in cfg.assets]
        return _common_window(ticks, cfg.T)


def run_estimation(cfg: RunConfig, write: bool = True) -> dict:
    """Estimate every configured functional on the configured tick files."""
    ticks = load_ticks(cfg)
    with stage("tuning"):
        tuning = cfg.tuning.resolve([t.n for t in ticks], cfg.periodic, cfg.mode)
    reports, path = estimate_ticks(ticks, tuning, cfg.functionals, cfg.mode, cfg.alpha, cfg.periodic)
    result = {"mode": cfg.mode, "T": ticks[0].grid.T, "reports": [r.to_dict() for r in reports]}
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "report.json", result)
        io.write_spot_path(out / "spot_path.csv", path)
    return result


def simulate_path(sim: SimulationConfig, seed) -> LatentPath:
    p = dict(sim.params)
    try:
        if sim.model == "heston-bridge":
            return simulate_heston_bridge(T=sim.T, n_steps=sim.n_steps, seed=seed, d=sim.d, **p)
        if sim.model == "constant":
            cov = p.pop("cov", 0.16)
            cov = np.atleast_2d(cov) if np.ndim(cov) else np.eye(sim.d) * cov
            return simulate_constant_vol(cov, T=sim.T, n_steps=sim.n_steps, seed=seed, **p)
        if sim.model == "fbm":
            if sim.d != 1:
                raise ConfigurationError("the fbm model is univariate")
            return simulate_fbm_vol(T=sim.T, n_steps=sim.n_steps, seed=seed, **p)
    except TypeError as exc:
        raise ConfigurationError(f"bad simulation.params for {sim.model}: {exc}") from None
    raise ConfigurationError(f"unknown model {sim.model!r}")


def sample_path(path: LatentPath, sim: SimulationConfig):
    schemes = [SamplingScheme(**dataclasses.asdict(s)) for s in sim.sampling]
    return sample_asynchronous(path, schemes)


def to_seconds(path: LatentPath, ticks, step_seconds: float = 1.0):
    """Re-express path and ticks with one fine step = ``step_seconds`` seconds.

    Variances are per second afterwards, so functionals of the rescaled path
    match estimates computed from the written tick file.
    """
    u = step_seconds / path.dt
    sec_path = LatentPath(dt=step_seconds, X=path.X, c=path.c / u, seed=path.seed)
    T = path.T * u
    sec_ticks = [TickSeries(t.asset_id, ObservationGrid(t.grid.times * u, T), t.log_prices)
                 for t in ticks]
    return sec_path, sec_ticks


def run_simulate(cfg: RunConfig) -> dict:
    """Simulate one path, write its ticks (seconds, one per fine step) and the truth."""
    if cfg.simulation is None:
        raise ConfigurationError("simulate needs a 'simulation' block")
    with stage("simulate"):
        path = simulate_path(cfg.simulation, cfg.seed)
        ticks = sample_path(path, cfg.simulation)
        path_s, ticks_s = to_seconds(path, ticks)
        truth = {}
        for fid in cfg.functionals:
            g = get_functional(fid)
            truth[g.id] = true_functional(path_s, g)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    io.write_ticks(out / "ticks.csv", ticks_s)
    summary = {
        "seed": cfg.seed, "model": cfg.simulation.model, "T_seconds": path_s.T,
        "n_steps": path.n_steps, "sizes": [t.n for t in ticks_s], "true_functionals": truth,
        "c_mean": path_s.c.mean(axis=0), "c_min_diag": path_s.c.diagonal(axis1=1, axis2=2).min(axis=0),
    }
    io.write_json(out / "truth.json", summary)
    return summary


def one_replication(cfg: RunConfig, rep: int) -> dict:
    """Simulate, estimate and studentise for one replication index.

    Library errors are caught and returned as a failure record so the loop
    can continue.
    """
    seed = replication_seed(cfg.seed, rep)
    out = {"rep": rep, "seed": seed, "results": {}, "error": None}
    try:
        with stage("simulate"):
            path = simulate_path(cfg.simulation, seed)
            ticks = sample_path(path, cfg.simulation)
        with stage("tuning"):
            tuning = cfg.tuning.resolve([t.n for t in ticks], cfg.periodic, cfg.mode)
    except FourvolError as exc:
        out["error"] = str(exc)
        return out
    errs = {}
    try:
        reports, _ = estimate_ticks(ticks, tuning, cfg.functionals, cfg.mode, cfg.alpha,
                                    cfg.periodic, errors=errs)
    except FourvolError as exc:
        out["error"] = str(exc)
        return out
    out["results"].update({gid: {"error": msg} for gid, msg in errs.items()})
    for rep_ in reports:
        gid = rep_.functional
        try:
            with stage(f"truth {gid}"):
                S = true_functional(path, get_functional(gid))
            v_raw = rep_.diagnostics["v_hat_raw_sqrtN"]
            if not v_raw > 0:
                raise FourvolError(f"[inference {gid}] non-positive variance estimate {v_raw:.3g}")
        except FourvolError as exc:
            out["results"][gid] = {"error": str(exc)}
            continue
        mu = rep_.mu_hat or 0.0
        z = (rep_.rate * (rep_.s_hat - S) - mu) / math.sqrt(rep_.v_hat)
        lo, hi = rep_.ci
        out["results"][gid] = {
            "z": z, "covered": bool(lo <= S <= hi), "s_hat": rep_.s_hat, "S": S,
            "v_hat": rep_.v_hat, "mu_hat": rep_.mu_hat, "rate": rep_.rate, "N": tuning.N,
            "M": tuning.M, "B": tuning.B}
    return out


def _replicate(args):
    cfg_dict, rep = args
    return one_replication(config_from_dict(cfg_dict), rep)


def summarize(records: list, functionals: Sequence[str]) -> dict:
    summary = {}
    for fid in functionals:
        g = get_functional(fid)
        ok = [r["results"][g.id] for r in records
              if r["error"] is None and "z" in r["results"].get(g.id, {})]
        failed = len(records) - len(ok)
        z = np.array([o["z"] for o in ok], dtype=float)
        entry = {"replications": len(records), "ok": len(ok), "failed": failed}
        finite = z[np.isfinite(z)]
        if finite.size >= 2 and np.std(finite) > 1e-8:
            ks = stats.kstest(finite, "norm")
            entry.update(
                mean=float(finite.mean()), std=float(finite.std(ddof=1)),
                skew=float(stats.skew(finite)), coverage=float(np.mean([o["covered"] for o in ok])),
                ks_stat=float(ks.statistic), ks_pvalue=float(ks.pvalue),
                median_rel_error=float(np.median([abs(o["s_hat"] / o["S"] - 1) for o in ok if o["S"]]
                                                 or [math.nan])),
                degenerate=False)
        else:
            entry.update(degenerate=True, mean=float(finite.mean()) if finite.size else None,
                         std=None, skew=None, coverage=None, ks_stat=None, ks_pvalue=None)
        errors = sorted({r["error"] or r["results"].get(g.id, {}).get("error", "")
                         for r in records} - {"", None})
        entry["errors"] = errors[:10]
        summary[g.id] = entry
    return summary


def run_montecarlo(cfg: RunConfig, write: bool = True, progress=None) -> dict:
    """Replication loop; per-functional summaries of the studentised statistics."""
    if cfg.simulation is None:
        raise ConfigurationError("montecarlo needs a 'simulation' block")
    reps = range(cfg.replications)
    if cfg.workers > 1:
        cfg_dict = config_to_dict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_replicate, [(cfg_dict, r) for r in reps], chunksize=4))
    else:
        records = []
        for r in reps:
            records.append(one_replication(cfg, r))
            if progress is not None:
                progress(r)
    records.sort(key=lambda r: r["rep"])
    summary = summarize(records, cfg.functionals)
    samples = {fid: [(r["rep"], r["results"][fid]["z"]) for r in records
                     if "z" in r["results"].get(fid, {})] for fid in summary}
    result = {"config": config_to_dict(cfg), "summary": summary}
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "summary.json", result)
        io.write_samples(out / "samples.csv", samples)
        io.write_json(out / "replications.json", records)
    result["records"] = records
    result["samples"] = samples
    return result
