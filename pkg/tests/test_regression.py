import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigstop.ckme import LambdaSchedule
from sigstop.errors import NumericalError
from sigstop.paths import build_grid, prepare, write_csv
from sigstop.regression import (kernel_from_d2, krr_fit, krr_predict, load_model, loo_residuals,
                                median_heuristic, pairwise_d2, embed, loo_score, rbf_from_mmd, ridge_solve,
                                save_model, select_ridge)
from sigstop.simulate import GbmParams, sample_gbm

GRID = build_grid(0, 1, 4)


def toy_models(count=5):
    """Deterministic growth paths: every sample of a model coincides, so the MMDs are exact."""
    s0 = np.linspace(0.2, 1.0, count)
    raw = [sample_gbm(GbmParams(1, s0=s, r=0.5, sigma=0.0), GRID, 4, i) for i, s in enumerate(s0)]
    return s0, raw, [prepare(e) for e in raw]


# ---------------------------------------------------------------- primitives

def test_rbf_from_mmd():
    assert rbf_from_mmd(0.0, 2.0) == 1.0
    assert rbf_from_mmd(-0.1, 2.0) == 1.0
    assert rbf_from_mmd(0.25, 2.0) == pytest.approx(np.exp(-1.0))
    with pytest.raises(ValueError):
        rbf_from_mmd(1.0, 0.0)


def test_median_heuristic_example():
    D = np.array([[0, 1, 4], [1, 0, 9], [4, 9, 0]], dtype=float)
    assert median_heuristic(D) == pytest.approx(0.5)
    assert kernel_from_d2(np.array([[4.0]]), 0.5)[0, 0] == pytest.approx(np.exp(-1))
    with pytest.raises(ValueError):
        median_heuristic(np.zeros((3, 3)))


def test_ridge_solve_examples():
    b = np.array([3.0, -1.0, 2.0])
    np.testing.assert_allclose(ridge_solve(np.eye(3), b), b)
    np.testing.assert_allclose(ridge_solve(np.diag([2.0, 2.0]), [2.0, 4.0]), [1.0, 2.0])
    np.testing.assert_allclose(ridge_solve(np.eye(2), [2.0, 4.0], 1.0), [1.0, 2.0])
    with pytest.raises(ValueError):
        ridge_solve(np.eye(2), [1.0, 1.0], -1.0)


def test_ridge_solve_rejects_indefinite():
    with pytest.raises(NumericalError):
        ridge_solve(np.diag([1.0, -1.0]), [1.0, 1.0])


@settings(max_examples=40)
@given(st.integers(1, 8), st.floats(0, 10))
def test_ridge_solve_residual(n, ridge):
    rng = np.random.default_rng(n)
    F = rng.normal(size=(n, n))
    A = F @ F.T + 0.1 * np.eye(n)
    b = rng.normal(size=n)
    x = ridge_solve(A, b, ridge)
    assert np.linalg.norm((A + ridge * np.eye(n)) @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_loo_residuals_match_refits():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=7)
    K = np.exp(-(x[:, None] - x[None]) ** 2 / 0.1)
    y = np.sin(3 * x)
    res = loo_residuals(K, y, 1e-3)
    for i in range(7):
        keep = np.arange(7) != i
        a = np.linalg.solve(K[np.ix_(keep, keep)] + 1e-3 * np.eye(6), y[keep])
        assert res[i] == pytest.approx(y[i] - K[i, keep] @ a, rel=1e-8, abs=1e-10)
    assert select_ridge(K, y, [1e-6, 1e-3, 1e3]) in (1e-6, 1e-3)


def test_loo_score_rejects_unsolvable_candidates():
    # rank 3 out of 6: a tiny ridge leaves the system too ill-conditioned to fit accurately
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    K = Q @ np.diag([5.0, 1.0, 1e-3, 0.0, 0.0, 0.0]) @ Q.T
    K = (K + K.T) / 2
    y = rng.normal(size=6)
    with pytest.raises(NumericalError):
        ridge_solve(K, y, 1e-8)
    assert loo_score(K, y, 1e-8, relative=False) == np.inf
    assert np.isfinite(loo_score(K, y, 1e-6, relative=False))
    assert select_ridge(K, y, [1e-8, 1e-6], relative=False) == 1e-6


# ---------------------------------------------------------------- fitting

@pytest.fixture(scope="module")
def toy():
    s0, raw, ens = toy_models()
    return raw, ens, 1.0 + 10 * s0


def test_single_model_returns_label(toy):
    _, ens, labels = toy
    model = krr_fit(ens[:1], labels[:1], rank=1, lambda_ridge=0.0, refine=2)
    assert model.coeffs[0] == pytest.approx(labels[0])
    assert krr_predict(model, ens[0]) == pytest.approx(labels[0])


@pytest.mark.parametrize("rank", [1, 2])
def test_interpolation_without_ridge(toy, rank):
    _, ens, labels = toy
    model = krr_fit(ens, labels, rank=rank, lambda_ckme=1e-2, lambda_ridge=0.0, refine=2)
    K = model.gram
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert np.all((K > 0) & (K <= 1))
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.trace(K)
    np.testing.assert_allclose(K @ model.coeffs, labels, rtol=1e-6)
    for e, v in zip(ens, labels):
        assert krr_predict(model, e) == pytest.approx(v, rel=1e-6)


def test_huge_ridge_shrinks_predictions(toy):
    _, ens, labels = toy
    model = krr_fit(ens, labels, rank=1, lambda_ridge=1e9, refine=2)
    assert abs(krr_predict(model, ens[2])) <= 1e-6 * labels.max()


def test_duplicate_training_model_with_ridge(toy):
    _, ens, labels = toy
    model = krr_fit(ens + ens[:1], np.append(labels, labels[0]), rank=1, lambda_ridge=1e-3,
                    refine=2)
    assert np.isfinite(krr_predict(model, ens[1]))


def test_duplicate_training_model_without_ridge(toy):
    _, ens, labels = toy
    with pytest.raises(NumericalError):
        krr_fit([ens[0], ens[0]], [1.0, 2.0], rank=1, sigma=1.0, lambda_ridge=0.0, refine=2)


def test_fit_validates_inputs(toy):
    _, ens, labels = toy
    with pytest.raises(ValueError):
        krr_fit(ens, labels[:-1])
    with pytest.raises(ValueError):
        krr_fit(ens, labels, rank=3)
    other = prepare(sample_gbm(GbmParams(2), GRID, 5, 0))
    with pytest.raises(ValueError):
        krr_fit([ens[0], other], [1.0, 2.0])


def test_fit_reuses_supplied_distances(toy):
    _, ens, labels = toy
    embs = [embed(e, 1, 1e-3, 2, "averaged") for e in ens]
    d2 = pairwise_d2(embs, 1)[1]
    a = krr_fit(ens, labels, rank=1, refine=2, embeddings=embs, d2=d2)
    b = krr_fit(ens, labels, rank=1, refine=2)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_save_load_round_trip(tmp_path, toy):
    _, ens, labels = toy
    raw = toy[0]
    files = []
    for i, e in enumerate(raw):
        f = tmp_path / f"m{i}.csv"
        write_csv(e, f)
        files.append(f)
    model = krr_fit(ens, labels, rank=2, lambda_ckme=LambdaSchedule(1.0, 0.25), lambda_ridge=1e-4,
                    refine=2)
    out = tmp_path / "model.json"
    save_model(model, out, files)
    doc = json.loads(out.read_text())
    assert doc["lambda_ckme"] == {"schedule": {"c": 1.0, "power": 0.25}}
    back = load_model(out)
    assert back.sigma == model.sigma
    assert krr_predict(back, ens[3]) == pytest.approx(krr_predict(model, ens[3]), rel=1e-12)
    files[0].write_text(files[0].read_text() + "\n")
    with pytest.raises(ValueError, match="hash"):
        load_model(out)
