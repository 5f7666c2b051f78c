"""Kernel ridge regression over process laws with ``K = exp(-sigma^2 D^2)``.

``D^2`` is the squared rank-1 or rank-2 signature MMD between two
ensembles.  Diagonal entries use ``D^2(X, X) = 0`` (the V-statistic on
identical samples), off-diagonal entries the unbiased estimator, and
negative estimates are clamped to zero before exponentiation.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .ckme import EmbeddedEnsemble, Lambda, LambdaSchedule, resolve_lambda
from .errors import NumericalError
from .goursat import DEFAULT_REFINE, DEFAULT_SCHEME
from .paths import Ensemble, prepare, read_csv

log = logging.getLogger(__name__)

JITTER_LADDER = (1e-10, 1e-8, 1e-6)


def rbf_from_mmd(d2: float, sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return float(np.exp(-sigma**2 * max(float(d2), 0.0)))


def median_heuristic(d2_matrix) -> float:
    """``sigma = median(positive off-diagonal d2) ** -0.5``."""
    D = np.asarray(d2_matrix, dtype=np.float64)
    off = D[~np.eye(D.shape[0], D.shape[1], dtype=bool)]
    pos = off[off > 0]
    if pos.size == 0:
        raise ValueError("median heuristic needs a strictly positive off-diagonal entry")
    return float(np.median(pos) ** -0.5)


def ridge_solve(A, b, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(A + ridge I) x = b`` for symmetric ``A`` by Cholesky.

    On factorisation failure jitter ``1e-10, 1e-8, 1e-6`` (relative to the
    mean diagonal) is tried in turn.  A solution is accepted only if its
    residual in the unjittered system is at most ``1e-8 ||b||``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    n = A.shape[0]
    if A.shape != (n, n) or b.shape[0] != n:
        raise ValueError(f"shape mismatch {A.shape} vs {b.shape}")
    S = A + ridge * np.eye(n)
    scale = max(float(np.mean(np.abs(np.diag(S)))), 1e-300)
    for jitter in (0.0,) + JITTER_LADDER:
        M = S + jitter * scale * np.eye(n) if jitter else S
        try:
            fac = linalg.cho_factor(M, lower=True, check_finite=True)
        except linalg.LinAlgError:
            continue
        x = linalg.cho_solve(fac, b)
        if not np.all(np.isfinite(x)):
            continue
        # one step of iterative refinement
        x = x + linalg.cho_solve(fac, b - M @ x)
        if np.linalg.norm(S @ x - b) <= 1e-8 * np.linalg.norm(b):
            if jitter:
                log.warning("ridge_solve needed jitter %g", jitter)
            return x
    raise NumericalError("kernel matrix singular or not positive definite after maximum jitter")


@dataclass
class KRRModel:
    training: list
    labels: np.ndarray
    rank: int
    sigma: float
    lambda_ckme: float
    lambda_ridge: float
    coeffs: np.ndarray
    gram: np.ndarray
    d2: np.ndarray
    refine: int = DEFAULT_REFINE
    scheme: str = DEFAULT_SCHEME
    embeddings: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict)


def pairwise_d2(embeddings: Sequence[EmbeddedEnsemble], rank: int,
                mode: str = "unbiased") -> dict:
    """Symmetric squared-MMD matrices keyed by rank (1, and 2 when available).

    The diagonal is exactly zero.
    """
    M = len(embeddings)
    ranks = (1, 2) if rank == 2 else (1,)
    out = {r: np.zeros((M, M)) for r in ranks}
    for i in range(M):
        for j in range(i + 1, M):
            vals = embeddings[i].mmd(embeddings[j], mode)
            for r in ranks:
                out[r][i, j] = out[r][j, i] = vals[r]
    return out


def kernel_from_d2(d2: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-sigma**2 * np.maximum(d2, 0.0))


def embed(ens: Ensemble, rank: int, lambda_ckme: Lambda, refine: int,
          scheme: str) -> EmbeddedEnsemble:
    return EmbeddedEnsemble(ens, lambda_ckme, refine, scheme, rank)


def krr_fit(training: Sequence[Ensemble], labels, rank: int = 2, sigma: Optional[float] = None,
            lambda_ckme: Lambda = 1e-3, lambda_ridge: float = 1e-6,
            refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME,
            embeddings: Optional[Sequence[EmbeddedEnsemble]] = None,
            d2: Optional[np.ndarray] = None) -> KRRModel:
    """Fit ``a = (K + lambda_ridge I)^{-1} v`` over training ensembles.

    ``embeddings`` and ``d2`` may be passed to reuse work done elsewhere
    (e.g. when several ranks or ridge values are fitted on the same data).
    """
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if rank not in (1, 2):
        raise ValueError("rank must be 1 or 2")
    if len(training) != labels.size or labels.size < 1:
        raise ValueError("need as many labels as training ensembles (at least one)")
    if not np.all(np.isfinite(labels)):
        raise ValueError("labels must be finite")
    first = training[0]
    for e in training[1:]:
        if not e.compatible_with(first):
            raise ValueError("training ensembles differ in grid length, dimension or augmentation")
    if embeddings is None:
        embeddings = [embed(e, rank, lambda_ckme, refine, scheme) for e in training]
    if d2 is None:
        d2 = pairwise_d2(embeddings, rank)[rank]
    if sigma is None:
        sigma = median_heuristic(d2) if labels.size > 1 else 1.0
    K = kernel_from_d2(d2, sigma)
    coeffs = ridge_solve(K, labels, lambda_ridge)
    if not callable(lambda_ckme):
        lambda_ckme = resolve_lambda(lambda_ckme, len(first))
    return KRRModel(list(training), labels, rank, float(sigma), lambda_ckme, float(lambda_ridge),
                    coeffs, K, d2, refine, scheme, list(embeddings))


def query_d2(model: KRRModel, query) -> np.ndarray:
    """Squared MMD from ``query`` (ensemble or embedding) to each training ensemble."""
    if isinstance(query, EmbeddedEnsemble):
        q = query
    else:
        if not query.compatible_with(model.training[0]):
            raise ValueError("query ensemble is incompatible with the training ensembles")
        lam = model.lambda_ckme
        q = embed(query, model.rank, lam, model.refine, model.scheme)
    return np.array([q.mmd(e)[model.rank] for e in model.embeddings])


def krr_predict(model: KRRModel, query) -> float:
    """``sum_i a_i exp(-sigma^2 max(D^2(query, Y_i), 0))``."""
    k = kernel_from_d2(query_d2(model, query), model.sigma)
    return float(k @ model.coeffs)


def loo_residuals(K: np.ndarray, labels: np.ndarray, ridge: float) -> np.ndarray:
    """Closed-form leave-one-out residuals of kernel ridge regression.

    Raises ``LinAlgError`` when ``K + ridge I`` is not positive definite.
    """
    n = K.shape[0]
    fac = linalg.cho_factor(K + ridge * np.eye(n), lower=True)
    H = linalg.cho_solve(fac, np.eye(n))
    return (H @ labels) / np.diag(H)


def select_ridge(K: np.ndarray, labels: np.ndarray, grid: Sequence[float],
                 relative: bool = True) -> float:
    """Ridge weight from ``grid`` minimising the leave-one-out score of :func:`loo_score`."""
    labels = np.asarray(labels, dtype=np.float64)
    best, best_score = None, np.inf
    for lam in grid:
        score = loo_score(K, labels, lam, relative)
        if score < best_score:
            best, best_score = float(lam), score
    if best is None:
        raise NumericalError("no ridge value in the grid gave a finite leave-one-out score; "
                             "extend the grid towards larger values")
    return best


def loo_score(K: np.ndarray, labels: np.ndarray, ridge: float, relative: bool = True) -> float:
    """Mean absolute (percent, when ``relative``) leave-one-out error.

    Returns ``inf`` when ``K + ridge I`` is not positive definite or too
    ill-conditioned for :func:`ridge_solve` to meet its residual bound, so a
    selected candidate can always be fitted.
    """
    try:
        res = loo_residuals(K, labels, ridge)
        ridge_solve(K, labels, ridge)
    except (linalg.LinAlgError, ValueError, NumericalError):
        return np.inf
    if relative and np.all(labels != 0):
        res = res / labels
    score = float(np.mean(np.abs(res)))
    return score if np.isfinite(score) else np.inf


def select_bandwidth_ridge(d2: np.ndarray, labels, factors: Sequence[float],
                           ridge_grid: Sequence[float], relative: bool = True) -> tuple[float, float]:
    """Joint leave-one-out choice of ``(sigma, ridge)``.

    Candidate bandwidths are ``sigma_med * sqrt(f)`` for ``f`` in ``factors``,
    where ``sigma_med`` is the median heuristic, so ``f`` multiplies the
    exponent ``sigma^2 D^2``.  Ties keep the earlier candidate.
    """
    labels = np.asarray(labels, dtype=np.float64)
    base = median_heuristic(d2)
    best, best_score = None, np.inf
    for f in factors:
        sigma = base * float(np.sqrt(f))
        K = kernel_from_d2(d2, sigma)
        for lam in ridge_grid:
            score = loo_score(K, labels, lam, relative)
            if score < best_score:
                best, best_score = (sigma, float(lam)), score
    if best is None:
        raise NumericalError("no (bandwidth, ridge) pair gave a finite leave-one-out score")
    return best


def _lambda_to_json(lam):
    if isinstance(lam, LambdaSchedule):
        return {"schedule": {"c": lam.c, "power": lam.power}}
    if callable(lam):
        raise ValueError("only constant or LambdaSchedule CKME regularisation can be saved")
    return float(lam)


def _lambda_from_json(obj):
    if isinstance(obj, dict):
        return LambdaSchedule(**obj["schedule"])
    return float(obj)


def _sha256(path) -> str:
    return hashlib.sha256(FsPath(path).read_bytes()).hexdigest()


def save_model(model: KRRModel, path, training_files: Sequence) -> None:
    """JSON document with hyperparameters, coefficients and hashed training files."""
    if len(training_files) != len(model.training):
        raise ValueError("one file per training ensemble is required")
    doc = {
        "format": "sigstop-krr/1",
        "rank": model.rank,
        "sigma": model.sigma,
        "lambda_ckme": _lambda_to_json(model.lambda_ckme),
        "lambda_ridge": model.lambda_ridge,
        "refine": model.refine,
        "scheme": model.scheme,
        "scale": model.meta.get("scale", 1.0),
        "labels": [float(v) for v in model.labels],
        "coeffs": [float(v) for v in model.coeffs],
        "training": [{"path": str(f), "sha256": _sha256(f)} for f in training_files],
    }
    FsPath(path).write_text(json.dumps(doc, indent=2))


def load_model(path) -> KRRModel:
    """Rebuild a model saved by :func:`save_model`, verifying training-file hashes."""
    doc = json.loads(FsPath(path).read_text())
    if doc.get("format") != "sigstop-krr/1":
        raise ValueError(f"{path}: not a sigstop model file")
    base = FsPath(path).parent
    training = []
    for entry in doc["training"]:
        f = FsPath(entry["path"])
        if not f.is_absolute() and not f.exists():
            f = base / f
        if _sha256(f) != entry["sha256"]:
            raise ValueError(f"{f}: content hash does not match the model file")
        training.append(prepare(read_csv(f), doc.get("scale", 1.0)))
    lam = _lambda_from_json(doc["lambda_ckme"])
    embs = [embed(e, doc["rank"], lam, doc["refine"], doc["scheme"]) for e in training]
    d2 = pairwise_d2(embs, doc["rank"])[doc["rank"]]
    K = kernel_from_d2(d2, doc["sigma"])
    model = KRRModel(training, np.array(doc["labels"]), doc["rank"], doc["sigma"], lam,
                     doc["lambda_ridge"], np.array(doc["coeffs"]), K, d2, doc["refine"],
                     doc["scheme"], embs, {"scale": doc.get("scale", 1.0)})
    return model
