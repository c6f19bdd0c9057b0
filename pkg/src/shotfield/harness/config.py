"""Experiment configuration: loading, validation and derived objects."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from ..amplitudes import AmplitudeLaw, law_from_dict
from ..pointproc import Window, dpp_bandwidth
from ..shotnoise import FddQuery, ResponseFn, response_from_dict

DEFAULT_CF_GRID = (-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0)
MIN_REPLICATES = 100
MIN_L_OVER_S = 50.0
MIN_L_OVER_RTOL = 10.0

CHECKS = ("variance", "ks", "cf", "cf_decreasing", "sigma", "laplace", "selfconv")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class TestSettings:
    checks: tuple[str, ...] = ()
    cf_grid: tuple[float, ...] = DEFAULT_CF_GRID
    ks_pvalue: float = 0.01
    cf_threshold: float = 0.03
    variance_rel_gap: float = 0.05
    sigma_rel: float = 0.10
    laplace_se: float = 3.0
    selfconv_rel: float = 1e-4
    nystrom_order: int = 4

    @classmethod
    def from_dict(cls, d: Mapping[str, Any] | None, stable: bool) -> "TestSettings":
        d = dict(d or {})
        default = ("cf_decreasing", "cf", "sigma") if stable else ("variance", "ks")
        checks = tuple(d.pop("checks", default))
        bad = set(checks) - set(CHECKS)
        if bad:
            raise ConfigError(f"unknown checks {sorted(bad)}; known: {list(CHECKS)}")
        if "cf_grid" in d:
            d["cf_grid"] = tuple(float(t) for t in d["cf_grid"])
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown test settings {sorted(extra)}")
        return cls(checks=checks, **d)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment description; ``raw`` keeps the normalised input record."""

    name: str
    process: str
    eps: float
    law: AmplitudeLaw
    response: ResponseFn
    window: Window
    query: FddQuery
    lambdas: tuple[float, ...]
    replicates: int
    seed: int
    tests: TestSettings
    local_sampling: bool = True
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def is_stable(self) -> bool:
        return not self.law.has_finite_m2

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        raw["seed"] = int(seed)
        return config_from_dict(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def config_from_dict(d: Mapping[str, Any]) -> ExperimentConfig:
    d = copy.deepcopy(dict(d))
    for key in ("process", "amplitudes", "response", "window", "query", "lambdas",
                "replicates", "seed"):
        _require(key in d, f"missing config key {key!r}")

    proc = d["process"] if isinstance(d["process"], Mapping) else {"kind": d["process"]}
    kind = str(proc.get("kind", "")).lower()
    _require(kind in ("poisson", "dpp"), "process must be 'poisson' or 'dpp'")
    eps = float(proc.get("eps", 0.0))
    _require(eps >= 0, "repulsion exponent eps must be nonnegative")

    win = dict(d["window"])
    dim = int(win.get("d", 1))
    response = response_from_dict(d["response"], dim)
    law = law_from_dict(d["amplitudes"])
    boundary = win.get("boundary", "padded" if kind == "poisson" else "torus")
    _require(kind == "poisson" or boundary == "torus", "DPP experiments need a torus window")
    pad = float(win.get("pad", response.radius if boundary == "padded" else 0.0))
    if boundary == "padded":
        _require(pad >= response.radius, "padding must be at least the response radius")
    window = Window(dim, float(win.get("L", 1.0)), boundary, pad)
    if boundary == "torus":
        _require(window.L >= MIN_L_OVER_RTOL * response.radius,
                 f"torus side must be at least {MIN_L_OVER_RTOL:g} response radii")

    qd = d["query"]
    query = FddQuery(qd["positions"], qd.get("weights"))
    _require(query.dim == dim, "query positions must match the window dimension")
    _require(query.m <= 4, "at most four query positions are supported")
    _require(bool(np.all((query.positions >= 0) & (query.positions <= window.L))),
             "query positions must lie in [0, L]^d")

    lambdas = tuple(float(x) for x in d["lambdas"])
    _require(len(lambdas) >= 1 and all(x > 0 for x in lambdas), "intensities must be positive")
    _require(all(a < b for a, b in zip(lambdas, lambdas[1:])), "lambda grid must be strictly increasing")
    reps = int(d["replicates"])
    _require(reps >= MIN_REPLICATES, f"need at least {MIN_REPLICATES} replicates")
    seed = d["seed"]
    _require(isinstance(seed, int) and seed >= 0, "seed must be a nonnegative integer")
    if kind == "dpp":
        for lam in lambdas:
            ratio = window.L / dpp_bandwidth(lam, eps, dim)
            _require(ratio >= MIN_L_OVER_S, f"L / s = {ratio:.3g} < {MIN_L_OVER_S:g} at lambda={lam:g}")

    tests = TestSettings.from_dict(d.get("tests"), stable=not law.has_finite_m2)
    _require(not ({"variance", "ks"} & set(tests.checks)) or law.has_finite_m2,
             "variance/KS checks need a finite second moment")
    _require(not ({"cf", "cf_decreasing", "sigma"} & set(tests.checks)) or not law.has_finite_m2,
             "stable checks need a heavy-tailed amplitude law")

    raw = {
        "name": str(d.get("name", "experiment")),
        "process": {"kind": kind, **({"eps": eps} if kind == "dpp" else {})},
        "amplitudes": law.to_dict(),
        "response": response.to_dict(),
        "window": window.to_dict(),
        "query": query.to_dict(),
        "lambdas": list(lambdas),
        "replicates": reps,
        "seed": seed,
        "local_sampling": bool(d.get("local_sampling", True)),
        "tests": {k: (list(v) if isinstance(v, tuple) else v)
                  for k, v in tests.__dict__.items()},
    }
    return ExperimentConfig(raw["name"], kind, eps, law, response, window, query, lambdas,
                            reps, seed, tests, raw["local_sampling"], raw)


def load_config(path) -> ExperimentConfig:
    """Read a YAML or JSON config file (JSON is valid YAML)."""
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)
