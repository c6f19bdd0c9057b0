"""Seeded replicate execution and per-intensity statistics.

Replicate ``k`` at intensity index ``i`` draws all of its randomness from
``Generator(PCG64(SeedSequence(seed, spawn_key=(i, k))))``, so any single
replicate can be regenerated in isolation and results do not depend on how
replicates are distributed over threads.  Chunks are reassembled in replicate
order before any reduction.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import _accel
from ..fredholm import build_operator, fredholm_laplace, nystrom_grid, trace_series
from ..limits import (gaussian_fdd_laplace, gaussian_limit, poisson_prelimit_laplace,
                      sample_stable, stable_limit)
from ..pointproc import dpp_build, kernel_l2_integral, sample_dpp, sample_poisson
from ..shotnoise import centralize_scale, field_eval
from .config import ExperimentConfig
from .stats import cf_distance, ecf, fit_stable_sigma, ks_gaussian

# largest grid for which eigenvalues (and hence trace partial sums) are computed
TRACE_SERIES_MAX_NODES = 20000
TRACE_TERMS = 6
REFERENCE_DRAWS = 100_000
ECDF_POINTS = 200


def replicate_rng(seed: int, lam_index: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(lam_index, k))))


class _Sampler:
    """Draws one replicate of the raw field at the query positions."""

    def __init__(self, cfg: ExperimentConfig, lam: float):
        self.cfg, self.lam = cfg, lam
        q, ell = cfg.query, cfg.response
        self.region = q.hull(ell.radius) if cfg.local_sampling else None
        self.model = dpp_build(lam, cfg.eps, cfg.window) if cfg.process == "dpp" else None

    def __call__(self, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        cfg = self.cfg
        if self.model is None:
            pattern = sample_poisson(self.lam, cfg.window, rng, region=self.region)
        else:
            pattern = sample_dpp(self.model, rng, region=self.region)
        amps = np.atleast_1d(cfg.law.sample(rng, len(pattern)))
        return field_eval(pattern, amps, cfg.response, cfg.query.positions), len(pattern)


def simulate_lambda(cfg: ExperimentConfig, lam_index: int, threads: int = 1,
                    replicates: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Raw field values ``(N, m)`` and point counts ``(N,)`` for one intensity."""
    lam = cfg.lambdas[lam_index]
    n = cfg.replicates if replicates is None else replicates
    sampler = _Sampler(cfg, lam)

    def run(block):
        vals = np.empty((len(block), cfg.query.m))
        counts = np.empty(len(block), dtype=np.int64)
        for r, k in enumerate(block):
            vals[r], counts[r] = sampler(replicate_rng(cfg.seed, lam_index, k))
        return vals, counts

    threads = max(1, int(threads))
    blocks = np.array_split(np.arange(n), max(1, min(n, 8 * threads)))
    if threads == 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def limit_law(cfg: ExperimentConfig):
    if cfg.is_stable:
        return stable_limit(cfg.query, cfg.response, cfg.law.alpha)
    return gaussian_limit(cfg.query, cfg.response, cfg.law)


def dpp_fredholm(cfg: ExperimentConfig, lam: float, order: int | None = None,
                 scale: float = 1.0, series: bool = True) -> dict:
    """Fredholm determinant data for the DPP field at ``lam``."""
    order = cfg.tests.nystrom_order if order is None else order
    model = dpp_build(lam, cfg.eps, cfg.window)
    grid = nystrom_grid(cfg.query, cfg.response, model.bandwidth, order)
    opr = build_operator(model, cfg.law, cfg.query, cfg.response, grid, scale=scale)
    out = {"laplace": fredholm_laplace(opr), "logdet": opr.logdet, "trace": opr.trace,
           "trace_sq": opr.trace_sq, "n2_contribution": abs(opr.logdet + opr.trace),
           "grid_size": grid.size, "order": order,
           "trace_partial_sums": None, "remainder_bound": None}
    if series and grid.size <= TRACE_SERIES_MAX_NODES:
        ts = trace_series(opr, TRACE_TERMS)
        out["trace_partial_sums"] = ts.partial_sums
        out["remainder_bound"] = ts.remainder_bound
    return out


def _laplace_block(cfg: ExperimentConfig, lam: float, raw: np.ndarray, tilde: np.ndarray) -> dict:
    s = cfg.query.weights
    if cfg.process == "poisson":
        y, target = tilde @ s, "centred"
        oracle = poisson_prelimit_laplace(lam, cfg.law, cfg.query, cfg.response)
    else:
        y, target = raw @ s, "raw"
        oracle = dpp_fredholm(cfg, lam, series=False)["laplace"]
    e = np.exp(-y)
    mc, se = float(e.mean()), float(e.std(ddof=1) / math.sqrt(len(e)))
    return {"target": target, "monte_carlo": mc, "standard_error": se, "oracle": oracle,
            "z_score": (mc - oracle) / se if se > 0 else (0.0 if mc == oracle else math.inf)}


def _ecdf_rows(lam, y, limit_cdf):
    xs = np.quantile(y, np.linspace(0.0, 1.0, ECDF_POINTS))
    emp = np.searchsorted(np.sort(y), xs, side="right") / len(y)
    return [[lam, float(x), float(f), float(g)] for x, f, g in zip(xs, emp, limit_cdf(xs))]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: dict
    raw: dict = field(default_factory=dict)        # lam -> (N, m)
    tilde: dict = field(default_factory=dict)      # lam -> (N, m)
    plotdata: dict = field(default_factory=dict)   # name -> (header, rows)
    theory_rows: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.report["passed"]


def run_experiment(cfg: ExperimentConfig, threads: int = 1, log=None) -> ExperimentResult:
    """Run every intensity of the sweep, compute statistics and evaluate the checks."""
    t_start = time.perf_counter()
    tests = cfg.tests
    grid = np.asarray(tests.cf_grid, dtype=float)
    limit = limit_law(cfg)
    s = cfg.query.weights
    if cfg.is_stable:
        theory_cf = limit.cf(grid)
        ref = sample_stable(limit.alpha, limit.sigma, np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(cfg.seed, spawn_key=(len(cfg.lambdas), 0, 0)))), REFERENCE_DRAWS)
        ref.sort()
        limit_cdf = lambda x: np.searchsorted(ref, x, side="right") / len(ref)
        theory = {"sigma": limit.sigma, "alpha": limit.alpha, "covariance": None,
                  "laplace": math.exp(limit.log_laplace)}
    else:
        theory_cf = limit.cf(grid)
        limit_cdf = limit.cdf
        theory = {"sigma": None, "covariance": limit.cov.tolist(), "variance": limit.variance(),
                  "laplace": gaussian_fdd_laplace(limit)}
    theory["cf_grid"] = {"t": grid.tolist(), "re": theory_cf.real.tolist(),
                         "im": theory_cf.imag.tolist()}

    res = ExperimentResult(cfg, {})
    rows, ecdf_rows, ecf_rows, var_rows, fred_rows = [], [], [], [], []
    per_lambda_time = []
    for i, lam in enumerate(cfg.lambdas):
        t0 = time.perf_counter()
        raw, counts = simulate_lambda(cfg, i, threads)
        tilde = centralize_scale(raw, lam, cfg.law, cfg.response)
        res.raw[lam], res.tilde[lam] = raw, tilde
        y = tilde @ s
        e = ecf(y, grid)
        row = {
            "lambda": lam, "g": cfg.law.scaling_g(lam), "seed": cfg.seed,
            "replicates": len(y), "mean_points": float(counts.mean()),
            "mean": tilde.mean(axis=0).tolist(), "variance": tilde.var(axis=0, ddof=1).tolist(),
            "combined_mean": float(y.mean()), "combined_variance": float(y.var(ddof=1)),
            "ecf": {"re": e.real.tolist(), "im": e.imag.tolist()},
            "cf_distance": cf_distance(e, theory_cf),
        }
        if cfg.is_stable:
            fit = fit_stable_sigma(y, limit.alpha)
            row["sigma_fit"] = fit
            row["sigma_rel_err"] = abs(fit - limit.sigma) / limit.sigma
        else:
            vt = limit.variance()
            ks, p = ks_gaussian(y, vt)
            row.update({"variance_theory": vt, "variance_gap": abs(row["combined_variance"] - vt) / vt,
                        "ks_statistic": ks, "ks_pvalue": p})
        if cfg.process == "dpp":
            model = dpp_build(lam, cfg.eps, cfg.window)
            row["L_over_s"] = model.resolution_ratio
            row["kernel_l2_over_lambda"] = kernel_l2_integral(model) / lam
        else:
            row["padding_ratio"] = cfg.window.pad / cfg.response.radius
        if "laplace" in tests.checks:
            row["laplace"] = _laplace_block(cfg, lam, raw, tilde)
        if cfg.process == "dpp":
            scaled = dpp_fredholm(cfg, lam, scale=cfg.law.scaling_g(lam))
            fred = {"laplace_raw": row["laplace"]["oracle"] if "laplace" in row else None,
                    "laplace": scaled["laplace"], "trace_partial_sums": scaled["trace_partial_sums"],
                    "remainder_bound": scaled["remainder_bound"],
                    "n2_contribution": scaled["n2_contribution"], "grid_size": scaled["grid_size"]}
            if "selfconv" in tests.checks:
                a = dpp_fredholm(cfg, lam, series=False)["laplace"]
                b = dpp_fredholm(cfg, lam, order=2 * tests.nystrom_order, series=False)["laplace"]
                fred["selfconv_rel"] = abs(a - b) / abs(b)
            row["fredholm"] = fred
            fred_rows.append([lam, fred["laplace"], fred["n2_contribution"]])
        rows.append(row)
        ecdf_rows += _ecdf_rows(lam, y, limit_cdf)
        ecf_rows += [[lam, float(t), float(a.real), float(a.imag), float(b.real), float(b.imag)]
                     for t, a, b in zip(grid, e, theory_cf)]
        var_rows.append([lam, row["combined_variance"], theory.get("variance", math.nan)])
        dt = time.perf_counter() - t0
        per_lambda_time.append({"lambda": lam, "seconds": dt})
        if log:
            log(f"lambda={lam:g}: {len(y)} replicates in {dt:.1f}s")

    checks = evaluate_checks(cfg, rows, limit)
    res.report = {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "theory": theory,
        "rows": rows,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    res.plotdata = {
        "ecdf": (["lambda", "x", "ecdf", "limit_cdf"], ecdf_rows),
        "ecf": (["lambda", "t", "ecf_re", "ecf_im", "theory_re", "theory_im"], ecf_rows),
        "variance": (["lambda", "sample_variance", "limit_variance"], var_rows),
    }
    res.theory_rows = _theory_rows(theory, rows)
    res.timing = {"total_seconds": time.perf_counter() - t_start, "per_lambda": per_lambda_time,
                  "threads": threads, "backend": _accel.backend_name()}
    return res


def _theory_rows(theory: dict, rows: list) -> list:
    out = []
    for key in ("variance", "sigma", "laplace"):
        if theory.get(key) is not None:
            out.append(["limit_" + key, "", theory[key]])
    for t, re, im in zip(theory["cf_grid"]["t"], theory["cf_grid"]["re"], theory["cf_grid"]["im"]):
        out.append([f"limit_cf_re@{t:g}", "", re])
        out.append([f"limit_cf_im@{t:g}", "", im])
    for r in rows:
        if "laplace" in r:
            out.append([f"laplace_oracle_{r['laplace']['target']}", r["lambda"], r["laplace"]["oracle"]])
        if "fredholm" in r:
            out.append(["fredholm_laplace_centred", r["lambda"], r["fredholm"]["laplace"]])
            out.append(["fredholm_n2_contribution", r["lambda"], r["fredholm"]["n2_contribution"]])
    return out


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), **detail}


def evaluate_checks(cfg: ExperimentConfig, rows: list, limit) -> list:
    """Acceptance checks: monotone gap between the extreme intensities plus final thresholds."""
    t = cfg.tests
    first, last = rows[0], rows[-1]
    multi = len(rows) > 1
    out = []
    for name in t.checks:
        if name == "variance":
            if multi:
                out.append(_check("variance_gap_decreasing",
                                  last["variance_gap"] < first["variance_gap"],
                                  first=first["variance_gap"], last=last["variance_gap"]))
            out.append(_check("variance_gap_final", last["variance_gap"] < t.variance_rel_gap,
                              value=last["variance_gap"], threshold=t.variance_rel_gap))
        elif name == "ks":
            out.append(_check("ks_final", last["ks_pvalue"] > t.ks_pvalue,
                              value=last["ks_pvalue"], threshold=t.ks_pvalue))
        elif name == "cf":
            thr = max(t.cf_threshold, 5.0 / math.sqrt(last["replicates"]))
            out.append(_check("cf_distance_final", last["cf_distance"] < thr,
                              value=last["cf_distance"], threshold=thr))
        elif name == "cf_decreasing" and multi:
            out.append(_check("cf_distance_decreasing", last["cf_distance"] < first["cf_distance"],
                              first=first["cf_distance"], last=last["cf_distance"]))
        elif name == "sigma":
            out.append(_check("sigma_fit_final", last["sigma_rel_err"] < t.sigma_rel,
                              value=last["sigma_fit"], theory=limit.sigma, rel_err=last["sigma_rel_err"],
                              threshold=t.sigma_rel))
        elif name == "laplace":
            for r in rows:
                lb = r["laplace"]
                out.append(_check(f"laplace_agreement@{r['lambda']:g}",
                                  abs(lb["z_score"]) < t.laplace_se, z_score=lb["z_score"],
                                  threshold=t.laplace_se))
        elif name == "selfconv" and cfg.process == "dpp":
            worst = max(r["fredholm"]["selfconv_rel"] for r in rows)
            out.append(_check("nystrom_selfconv", worst < t.selfconv_rel, value=worst,
                              threshold=t.selfconv_rel))
    return out
