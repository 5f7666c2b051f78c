"""Packaged experiments: basket-put regression, stopped fBm, and the two-branch separation test.

Each run is driven by an :class:`ExperimentConfig` and writes CSV reports
into the output directory:

``<name>.csv``
    one row per model (``bs-put``), test Hurst value (``fbm``) or ``n``
    (``figure1``); every row carries the config hash and seed.
``<name>_summary.csv``
    aggregate scores (test MAPE per rank, chosen hyperparameters).
``<name>_config.json``
    the fully resolved configuration plus run provenance (package version,
    thread setting).  This file is not part of the byte-identical contract
    because the thread setting may legitimately differ between reruns.

Randomness is derived from the master seed with :func:`derive_seed` labels:
``(1,)`` volatilities, ``(2, i)`` paths of model ``i``, ``(3,)`` split,
``(4, i)`` Longstaff-Schwartz label paths of model ``i``.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path as FsPath
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .ckme import EmbeddedEnsemble
from .errors import ConfigError
from ._pde import SCHEMES as SCHEME_NAMES
from .oracles import crr_american_put, geometric_reduction, longstaff_schwartz
from .paths import Ensemble, augment_ensemble, build_grid, prepare
from .regression import (kernel_from_d2, median_heuristic, ridge_solve, select_bandwidth_ridge,
                         select_ridge)
from .simulate import FbmParams, GbmParams, derive_seed, sample_fbm, sample_gbm

log = logging.getLogger(__name__)

EXPERIMENTS = ("bs-put", "fbm", "figure1")
THREADS_ENV = "SIGSTOP_NUM_THREADS"
DEFAULT_RIDGE_GRID = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
DEFAULT_BANDWIDTH_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one experiment run; unknown keys are rejected on load."""

    experiment: str
    seed: int = 0
    models: int = 30
    samples: int = 500
    steps: int = 10
    dim: int = 5
    sigma_range: tuple = (0.1, 0.5)
    lambda_ckme: float = 1e-3
    lambda_ridge: object = "loo"
    ridge_grid: tuple = DEFAULT_RIDGE_GRID
    bandwidth: object = "median"
    bandwidth_grid: tuple = DEFAULT_BANDWIDTH_GRID
    rank: int = 2
    depth: int = 2000
    strike: float = 100.0
    s0: float = 100.0
    rate: float = 0.02
    maturity: float = 1.0
    test_fraction: float = 0.1
    scale: float = 1.0
    refine: int = 4
    scheme: str = "averaged"
    sample_ladder: tuple = ()
    mape_target: Optional[float] = None
    hurst_test: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    label_source: str = "ls"
    label_paths: int = 100_000
    label_steps: int = 100
    figure1_levels: tuple = (4, 16, 64)
    figure1_samples: int = 64
    figure1_mode: str = "biased"
    out: str = "."

    def __post_init__(self):
        for name in ("sigma_range", "ridge_grid", "bandwidth_grid", "sample_ladder", "hurst_test",
                     "figure1_levels"):
            val = getattr(self, name)
            if isinstance(val, (str, bytes)) or not isinstance(val, Sequence):
                raise ConfigError(f"{name}: expected a list, got {val!r}")
            object.__setattr__(self, name, tuple(val))
        _validate(self)

    def as_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def digest(self) -> str:
        """Hash of every field except the output directory."""
        doc = self.as_dict()
        doc.pop("out")
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) \
        and np.isfinite(v)


def _require(cond: bool, name: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _validate(c: ExperimentConfig) -> None:
    _require(c.experiment in EXPERIMENTS, "experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    _require(_is_int(c.seed) and c.seed >= 0, "seed", "must be a nonnegative integer")
    for name in ("models", "samples", "steps", "dim", "depth", "label_paths", "label_steps",
                 "figure1_samples", "refine"):
        v = getattr(c, name)
        _require(_is_int(v) and v >= 1, name, f"must be an integer >= 1, got {v!r}")
    _require(len(c.sigma_range) == 2 and all(_is_real(s) and s > 0 for s in c.sigma_range)
             and c.sigma_range[0] <= c.sigma_range[1], "sigma_range",
             "must be [lo, hi] with 0 < lo <= hi")
    _require(_is_real(c.lambda_ckme) and c.lambda_ckme >= 0, "lambda_ckme", "must be >= 0")
    _require(c.lambda_ridge == "loo" or (_is_real(c.lambda_ridge) and c.lambda_ridge >= 0),
             "lambda_ridge", "must be 'loo' or a number >= 0")
    _require(len(c.ridge_grid) > 0 and all(_is_real(v) and v >= 0 for v in c.ridge_grid),
             "ridge_grid", "must be a nonempty list of numbers >= 0")
    _require(c.bandwidth in ("median", "loo") or (_is_real(c.bandwidth) and c.bandwidth > 0),
             "bandwidth", "must be 'median', 'loo' or a positive number")
    _require(len(c.bandwidth_grid) > 0 and all(_is_real(v) and v > 0 for v in c.bandwidth_grid),
             "bandwidth_grid", "must be a nonempty list of positive numbers")
    _require(c.rank in (1, 2), "rank", "must be 1 or 2")
    for name in ("strike", "s0", "maturity", "scale"):
        v = getattr(c, name)
        _require(_is_real(v) and v > 0, name, f"must be a positive number, got {v!r}")
    _require(_is_real(c.rate), "rate", "must be a finite number")
    _require(_is_real(c.test_fraction) and 0 < c.test_fraction < 1, "test_fraction",
             "must lie in (0, 1)")
    _require(c.scheme in SCHEME_NAMES, "scheme", f"must be one of {', '.join(SCHEME_NAMES)}")
    _require(all(_is_int(n) and n >= 2 for n in c.sample_ladder), "sample_ladder",
             "entries must be integers >= 2")
    _require(c.mape_target is None or (_is_real(c.mape_target) and c.mape_target > 0),
             "mape_target", "must be a positive number")
    _require(all(_is_real(h) and 0 < h <= 1 for h in c.hurst_test), "hurst_test",
             "entries must lie in (0, 1]")
    _require(isinstance(c.label_source, str) and c.label_source != "", "label_source",
             "must be 'ls' or a path to a CSV file")
    _require(len(c.figure1_levels) > 0 and all(_is_int(n) and n >= 1 for n in c.figure1_levels),
             "figure1_levels", "entries must be integers >= 1")
    _require(c.figure1_samples % 2 == 0, "figure1_samples", "must be even (balanced branches)")
    _require(c.figure1_mode in ("biased", "unbiased"), "figure1_mode",
             "must be 'biased' or 'unbiased'")
    _require(isinstance(c.out, str), "out", "must be a path string")


def packaged_config(name: str) -> FsPath:
    """Path of the configuration shipped for experiment ``name``."""
    if name not in RUNNERS:
        raise ConfigError(f"experiment: unknown experiment {name!r}")
    return FsPath(str(resources.files("sigstop.configs") / f"{name}.json"))


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON or YAML config file; ``overrides`` win over file entries."""
    path = FsPath(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except Exception as exc:  # parse errors of either format
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown config field")
    if "experiment" not in doc:
        raise ConfigError("experiment: missing required field")
    try:
        return ExperimentConfig(**doc)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


# ---------------------------------------------------------------- reporting

def fmt(v) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def write_table(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.as_dict(),
        "config_hash": cfg.digest(),
        "version": __version__,
        "threads": os.environ.get(THREADS_ENV, ""),
    }


def _outdir(cfg: ExperimentConfig) -> FsPath:
    out = FsPath(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out: cannot create {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------- shared KRR steps

def pairwise_mmds(embs: Sequence[EmbeddedEnsemble], rows: Sequence[int],
                  cols: Sequence[int], ranks: Sequence[int]) -> dict:
    """Squared MMDs between ``embs[rows]`` and ``embs[cols]``; zero where indices coincide."""
    out = {r: np.zeros((len(rows), len(cols))) for r in ranks}
    done = {}
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            if key not in done:
                done[key] = embs[key[0]].mmd(embs[key[1]])
            for r in ranks:
                out[r][a, b] = done[key][r]
    return out


def fit_and_predict(D_train: np.ndarray, D_query: np.ndarray, labels: np.ndarray,
                    cfg: ExperimentConfig, relative: bool = True) -> tuple[np.ndarray, float, float]:
    """KRR on a precomputed training distance matrix; returns predictions, sigma, ridge.

    ``relative`` picks percent (True) or absolute leave-one-out errors for
    the hyperparameter search.
    """
    loo_ok = labels.size > 2
    try:
        sigma = median_heuristic(D_train)
        spread = True
    except ValueError:
        # no positive distance: the kernel is constant whatever the bandwidth
        sigma, spread = 1.0, False
    if not isinstance(cfg.bandwidth, str):
        sigma = float(cfg.bandwidth)
    ridge = None if cfg.lambda_ridge == "loo" else float(cfg.lambda_ridge)
    if cfg.bandwidth == "loo" and loo_ok and spread:
        grid = cfg.ridge_grid if ridge is None else (ridge,)
        sigma, ridge = select_bandwidth_ridge(D_train, labels, cfg.bandwidth_grid, grid, relative)
    K = kernel_from_d2(D_train, sigma)
    if ridge is None:
        ridge = select_ridge(K, labels, cfg.ridge_grid, relative) if loo_ok else cfg.ridge_grid[0]
    coeffs = ridge_solve(K, labels, ridge)
    return kernel_from_d2(D_query, sigma) @ coeffs, sigma, ridge


def mape(pred, labels) -> float:
    """Mean absolute percentage error, in percent."""
    pred, labels = np.asarray(pred), np.asarray(labels)
    return float(100.0 * np.mean(np.abs(pred - labels) / np.abs(labels)))


def _embed_all(ensembles, cfg: ExperimentConfig) -> list:
    return [EmbeddedEnsemble(e, cfg.lambda_ckme, cfg.refine, cfg.scheme, cfg.rank)
            for e in ensembles]


# ---------------------------------------------------------------- bs-put

def bs_put_label(d: int, sigma: float, cfg: ExperimentConfig) -> float:
    red = geometric_reduction(d, sigma, cfg.rate)
    return crr_american_put(cfg.s0, cfg.strike, cfg.rate, red.div_yield, red.sigma_eff,
                            cfg.maturity, cfg.depth)


def bs_put_split(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    M = cfg.models
    n_test = min(M - 1, max(1, int(round(cfg.test_fraction * M)))) if M > 1 else 0
    perm = np.random.default_rng(derive_seed(cfg.seed, 3)).permutation(M)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def run_bs_put(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    digest = cfg.digest()
    M, d = cfg.models, cfg.dim
    grid = build_grid(0.0, cfg.maturity, cfg.steps)
    lo, hi = cfg.sigma_range
    sigmas = np.random.default_rng(derive_seed(cfg.seed, 1)).uniform(lo, hi, M)
    labels = np.array([bs_put_label(d, s, cfg) for s in sigmas])
    train, test = bs_put_split(cfg)
    split = np.where(np.isin(np.arange(M), test), "test", "train")
    # labels are cheap and useful on their own: flush them before the kernel stage
    write_table(out / "bs-put_labels.csv", ["model", "split", "sigma", "label", "config_hash", "seed"],
                [(i, split[i], sigmas[i], labels[i], digest, cfg.seed) for i in range(M)])
    n_max = max((cfg.samples,) + cfg.sample_ladder)
    raw = [sample_gbm(GbmParams(d, cfg.s0, cfg.rate, float(s)), grid, n_max,
                      derive_seed(cfg.seed, 2, i)) for i, s in enumerate(sigmas)]
    ranks = (1, 2) if cfg.rank == 2 else (1,)

    def evaluate(n):
        ens = [prepare(e.subset(slice(0, n)), cfg.scale) for e in raw]
        embs = _embed_all(ens, cfg)
        everyone = np.arange(M)
        D = pairwise_mmds(embs, everyone, everyone, ranks)
        res = {}
        for r in ranks:
            Dr = D[r]
            if train.size:
                pred, sig, ridge = fit_and_predict(Dr[np.ix_(train, train)], Dr[:, train],
                                                   labels[train], cfg)
            else:
                pred, sig, ridge = np.zeros(M), float("nan"), float("nan")
            res[r] = (pred, sig, ridge, mape(pred[test], labels[test]) if test.size else None)
        return res

    res = evaluate(cfg.samples)
    header = ["model", "split", "sigma", "label"] + [f"pred_rank{r}" for r in ranks] \
        + ["config_hash", "seed"]
    rows = [[i, split[i], sigmas[i], labels[i]] + [res[r][0][i] for r in ranks] + [digest, cfg.seed]
            for i in range(M)]
    write_table(out / "bs-put.csv", header, rows)
    summary = [[r, cfg.samples, res[r][3], res[r][1], res[r][2], digest, cfg.seed] for r in ranks]
    write_table(out / "bs-put_summary.csv",
                ["rank", "samples", "test_mape", "bandwidth", "lambda_ridge", "config_hash", "seed"],
                summary)
    result = {"mape": {r: res[r][3] for r in ranks}, "labels": labels, "sigmas": sigmas,
              "train": train, "test": test, "pred": {r: res[r][0] for r in ranks}}
    if cfg.sample_ladder:
        ladder_rows = []
        smallest = {r: None for r in ranks}
        for n in sorted(cfg.sample_ladder):
            rn = evaluate(n)
            for r in ranks:
                ok = cfg.mape_target is not None and rn[r][3] is not None \
                    and rn[r][3] <= cfg.mape_target
                if ok and smallest[r] is None:
                    smallest[r] = n
                ladder_rows.append([n, r, rn[r][3], int(ok), digest, cfg.seed])
        for r in ranks:
            ladder_rows.append(["smallest", r, smallest[r], "", digest, cfg.seed])
        write_table(out / "bs-put_ladder.csv",
                    ["samples", "rank", "test_mape", "meets_target", "config_hash", "seed"],
                    ladder_rows)
        result["smallest_n"] = smallest
    _write_provenance(out, "bs-put", cfg)
    return result


# ---------------------------------------------------------------- fbm

def fbm_training_hurst(test: Sequence[float]) -> np.ndarray:
    """``(i + 1) / 40`` for ``i = 1..39`` without the test values."""
    grid = np.arange(2, 41) / 40.0
    keep = ~np.any(np.isclose(grid[:, None], np.asarray(test)[None, :], atol=1e-12), axis=1)
    return grid[keep]


def fbm_features(values: np.ndarray, k: int) -> np.ndarray:
    """Current level and the last increment: a two-number summary of the past."""
    x = values[:, k, 0]
    prev = values[:, k - 1, 0] if k > 0 else x
    return np.column_stack([x, x - prev])


def fbm_ls_value(hurst: float, cfg: ExperimentConfig, seed: int) -> float:
    """Longstaff-Schwartz estimate of ``sup_tau E[X^H_tau]`` on a fine grid."""
    grid = build_grid(0.0, 1.0, cfg.label_steps)
    ens = sample_fbm(FbmParams(hurst, grid), cfg.label_paths, seed, augment=False)
    res = longstaff_schwartz(ens.values, grid.points, lambda s, k: s[:, 0], 0.0, 2, fbm_features,
                             itm_only=False)
    return res.price


def read_label_file(path) -> dict:
    """``hurst,value`` or ``hurst,lower,upper`` rows; returns ``{H: (value, lower, upper)}``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"label_source: cannot read {path}: {exc}") from exc
    table = {}
    for row in rows:
        try:
            h = float(row["hurst"])
            if row.get("value") not in (None, ""):
                v = float(row["value"])
                lo = float(row["lower"]) if row.get("lower") else v
                up = float(row["upper"]) if row.get("upper") else v
            else:
                lo, up = float(row["lower"]), float(row["upper"])
                v = 0.5 * (lo + up)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"label_source: malformed row {row!r}") from exc
        table[round(h, 10)] = (v, lo, up)
    return table


def run_fbm(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    digest = cfg.digest()
    test_h = np.array(cfg.hurst_test, dtype=np.float64)
    train_h = fbm_training_hurst(test_h)
    if train_h.size == 0:
        raise ConfigError("hurst_test: leaves no training Hurst values")
    all_h = np.concatenate([train_h, test_h])
    grid = build_grid(0.0, 1.0, cfg.steps)
    if cfg.label_source == "ls":
        table = None
        labels = np.array([fbm_ls_value(h, cfg, derive_seed(cfg.seed, 4, i))
                           for i, h in enumerate(all_h)])
        lower = upper = labels
    else:
        table = read_label_file(cfg.label_source)
        missing = [h for h in train_h if round(h, 10) not in table]
        if missing:
            raise ConfigError(f"label_source: no label for H={missing[0]}")
        nan3 = (np.nan, np.nan, np.nan)
        vals = np.array([table.get(round(h, 10), nan3) for h in all_h])
        labels, lower, upper = vals[:, 0], vals[:, 1], vals[:, 2]
    ntr = train_h.size
    write_table(out / "fbm_labels.csv", ["hurst", "role", "label", "config_hash", "seed"],
                [(h, "train" if i < ntr else "test", labels[i], digest, cfg.seed)
                 for i, h in enumerate(all_h)])
    ens = [prepare(sample_fbm(FbmParams(float(h), grid), cfg.samples,
                              derive_seed(cfg.seed, 2, i)), cfg.scale)
           for i, h in enumerate(all_h)]
    embs = _embed_all(ens, cfg)
    ranks = (1, 2) if cfg.rank == 2 else (1,)
    tr = np.arange(ntr)
    te = np.arange(ntr, all_h.size)
    D_tr = pairwise_mmds(embs, tr, tr, ranks)
    D_te = pairwise_mmds(embs, te, tr, ranks)
    preds, meta = {}, {}
    for r in ranks:
        preds[r], sig, ridge = fit_and_predict(D_tr[r], D_te[r], labels[:ntr], cfg, relative=False)
        meta[r] = (sig, ridge)
    header = ["hurst"] + [f"pred_rank{r}" for r in ranks] + ["label", "label_lower",
                                                             "label_upper", "config_hash", "seed"]
    rows = [[test_h[k]] + [preds[r][k] for r in ranks]
            + [labels[ntr + k], lower[ntr + k], upper[ntr + k], digest, cfg.seed]
            for k in range(test_h.size)]
    write_table(out / "fbm.csv", header, rows)
    write_table(out / "fbm_summary.csv",
                ["rank", "train_models", "bandwidth", "lambda_ridge", "config_hash", "seed"],
                [[r, ntr, meta[r][0], meta[r][1], digest, cfg.seed] for r in ranks])
    _write_provenance(out, "fbm", cfg)
    return {"hurst": test_h, "pred": preds, "labels": labels[ntr:], "train_labels": labels[:ntr]}


# ---------------------------------------------------------------- figure1

def figure1_ensembles(level: int, samples: int) -> tuple[Ensemble, Ensemble]:
    """Balanced two-branch laws on the grid ``{0, 1, 2}``.

    The first ensemble moves to ``+-1/level`` at ``t = 1`` and then to
    ``+-1`` with the same sign, so its branch is already revealed at ``t = 1``.
    The second stays at 0 until ``t = 1`` and then splits to ``+-1``.
    """
    if samples % 2:
        raise ValueError("samples must be even")
    h = samples // 2
    grid = build_grid(0.0, 2.0, 2)
    a = 1.0 / level
    near = np.array([[0.0, a, 1.0]] * h + [[0.0, -a, -1.0]] * h)
    limit = np.array([[0.0, 0.0, 1.0]] * h + [[0.0, 0.0, -1.0]] * h)
    return (augment_ensemble(Ensemble(grid, near)), augment_ensemble(Ensemble(grid, limit)))


def run_figure1(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    digest = cfg.digest()
    rows, d1, d2 = [], [], []
    for level in cfg.figure1_levels:
        X, Y = figure1_ensembles(level, cfg.figure1_samples)
        ex = EmbeddedEnsemble(X, cfg.lambda_ckme, cfg.refine, cfg.scheme, 2)
        ey = EmbeddedEnsemble(Y, cfg.lambda_ckme, cfg.refine, cfg.scheme, 2)
        res = ex.mmd(ey, cfg.figure1_mode)
        d1.append(res[1])
        d2.append(res[2])
        rows.append([level, cfg.figure1_samples, cfg.figure1_mode, res[1], res[2], digest, cfg.seed])
    write_table(out / "figure1.csv",
                ["n", "samples", "mode", "mmd2_rank1", "mmd2_rank2", "config_hash", "seed"], rows)
    _write_provenance(out, "figure1", cfg)
    return {"levels": list(cfg.figure1_levels), "rank1": np.array(d1), "rank2": np.array(d2)}


def _write_provenance(out: FsPath, name: str, cfg: ExperimentConfig) -> None:
    (out / f"{name}_config.json").write_text(json.dumps(_provenance(cfg), indent=2, sort_keys=True))


RUNNERS = {"bs-put": run_bs_put, "fbm": run_fbm, "figure1": run_figure1}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.experiment](cfg)
