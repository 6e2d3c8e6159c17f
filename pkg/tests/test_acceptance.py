"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; tolerances are fixed here, not tuned elsewhere.
"""

import json
import time

import numpy as np
import pytest

from conftest import make_dataset
from corrspace.cca import fit_cca, project
from corrspace.cli import main
from corrspace.config import ExperimentConfig
from corrspace.data import ViewMatrix, synth_correlated
from corrspace.dcca import dcca_objective
from corrspace.dgcca import dgcca_gradient, gcca_solve, train_dgcca
from corrspace.nn import Mlp
from corrspace.retrieval import random_baseline, recall_at_n
from corrspace.scoring import SentenceCorpus, bleu, score_retrieval_as_task, wer
from oracles import cca_correlations_eig, central_difference, max_relative_error


def check(num, description, ok, detail=""):
    verdict = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {num:2d} {verdict}: {description}{suffix}")
    assert ok, f"criterion {num}: {description}{suffix}"


def random_pair(rng, n=200, dims=(6, 5)):
    return rng.standard_normal((n, dims[0])), rng.standard_normal((n, dims[1]))


def test_criterion_1_cca_oracle_equivalence():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        x, y = random_pair(rng)
        model = fit_cca(x, y, k=3, r=1e-16)
        want = cca_correlations_eig(x, y, 3, 1e-16)
        worst = max(worst, float(np.max(np.abs(model.correlations - want))))
    elapsed = time.perf_counter() - start
    check(1, "fit_cca matches generalized-eigenproblem oracle on 20 instances",
          worst < 1e-8 and elapsed < 1.0,
          f"max err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_projected_covariance_identity():
    rng = np.random.default_rng(1002)
    worst = 0.0
    fitted = []
    for _ in range(20):
        x, y = random_pair(rng)
        fitted.append((fit_cca(x, y, k=3, r=1e-16), x, y))
    ds = synth_correlated((1000, 0, 0), [40, 24], 12, 0.1, seed=1002)
    xs, ys = ds.rows("view0", "train"), ds.rows("view1", "train")
    fitted.append((fit_cca(xs, ys, k=12, r=1e-16), xs, ys))
    for model, x, y in fitted:
        for z, side in ((x, "x"), (y, "y")):
            p = project(model, z, side)
            cov = np.cov(p.T)
            worst = max(worst, float(np.linalg.norm(cov - np.eye(model.k))))
    check(2, "projected train covariance equals I_k (Frobenius 1e-6)",
          worst < 1e-6, f"max deviation {worst:.2e}")


def test_criterion_3_affine_invariance():
    rng = np.random.default_rng(1003)
    x, y = random_pair(rng, n=300)
    base = fit_cca(x, y, k=3).correlations
    worst = 0.0
    for _ in range(10):
        a = rng.standard_normal((6, 6)) + 5 * np.eye(6)
        b = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        refit = fit_cca(x @ a.T + rng.standard_normal(6), y @ b.T, k=3)
        worst = max(worst, float(np.max(np.abs(refit.correlations - base))))
    check(3, "canonical correlations invariant under per-view affine maps",
          worst < 1e-6, f"max change {worst:.2e}")


def test_criterion_4_random_baseline():
    exact_ok = (
        round(random_baseline(2022, 10), 4) == 0.4946
        and round(random_baseline(2361, 10), 4) == 0.4235
    )
    deviations = []
    for n_refs, expected in ((2022, 0.4946), (2361, 0.4235)):
        scores = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            s = rng.standard_normal((n_refs, 6))
            r = rng.standard_normal((n_refs, 6))
            scores.append(recall_at_n(s, r, 10))
        deviations.append(abs(float(np.mean(scores)) - expected))
    check(4, "random baseline arithmetic and Monte Carlo within +/-0.25",
          exact_ok and max(deviations) < 0.25,
          f"MC deviations {deviations[0]:.3f} / {deviations[1]:.3f}")


def test_criterion_5_gradient_correctness():
    rng = np.random.default_rng(1005)
    worst_dcca = 0.0
    for _ in range(25):
        k = int(rng.integers(1, 5))
        m = int(rng.integers(k + 2, 21))
        yx = rng.standard_normal((k, m))
        yy = rng.standard_normal((k, m))
        _, d_yx, d_yy = dcca_objective(yx, yy, 1e-4)
        want_x = central_difference(lambda v: dcca_objective(v, yy, 1e-4)[0], yx)
        want_y = central_difference(lambda v: dcca_objective(yx, v, 1e-4)[0], yy)
        worst_dcca = max(worst_dcca, max_relative_error(d_yx, want_x),
                         max_relative_error(d_yy, want_y))

    worst_dg = 0.0
    for _ in range(25):
        k = int(rng.integers(1, 5))
        m = int(rng.integers(k + 1, 21))
        h = int(rng.integers(k, 7))
        y = rng.standard_normal((h, m))
        g = rng.standard_normal((k, m))
        u = rng.standard_normal((h, k))
        w = float(rng.uniform(0.5, 2.0))
        got = dgcca_gradient(y, g, u, w)

        def loss(v):
            resid = g - u.T @ v
            return w * float(np.sum(resid * resid))

        worst_dg = max(worst_dg, max_relative_error(got, central_difference(loss, y)))

    worst_mlp = 0.0
    for _ in range(5):
        net = Mlp.init(4, 3, seed=int(rng.integers(1 << 31)), hidden=5)
        x = rng.standard_normal((4, 6))
        dy = rng.standard_normal((3, 6))
        _, cache = net.forward(x)
        grads, _ = net.backward(cache, dy)
        for name, got in grads.items():
            def loss_param(v, name=name):
                params = dict(net.params())
                params[name] = v
                clone = Mlp(params["W1"], params["b1"], params["W2"], params["b2"])
                return float(np.sum(dy * clone.forward(x)[0]))

            worst_mlp = max(
                worst_mlp,
                max_relative_error(got, central_difference(loss_param, net.params()[name])),
            )
    check(5, "analytic gradients match central finite differences",
          worst_dcca < 1e-4 and worst_dg < 1e-4 and worst_mlp < 1e-5,
          f"dcca {worst_dcca:.2e}, dgcca {worst_dg:.2e}, mlp {worst_mlp:.2e}")


def test_criterion_6_dgcca_cca_consistency():
    rng = np.random.default_rng(1006)
    worst_loss = 0.0
    worst_eig = 0.0
    for _ in range(10):
        h1, h2 = int(rng.integers(3, 7)), int(rng.integers(3, 7))
        k = min(h1, h2) - 1
        m = 60
        y1 = rng.standard_normal((h1, m))
        y2 = rng.standard_normal((h2, m))
        rho = fit_cca(y1.T, y2.T, k=k, r=1e-16).correlations
        _, _, loss = gcca_solve([y1, y2], k=k, r=1e-16)
        worst_loss = max(worst_loss, abs(loss - (k - rho.sum())))

        grams = []
        for y in (y1, y2):
            c = y - y.mean(axis=1, keepdims=True)
            grams.append(c.T @ np.linalg.solve(c @ c.T + 1e-16 * np.eye(c.shape[0]), c))
        top = np.sort(np.linalg.eigvalsh(grams[0] + grams[1]))[::-1][:k]
        worst_eig = max(worst_eig, float(np.max(np.abs(top - (1 + rho)))))
    check(6, "J=2 gcca_solve agrees with linear CCA (loss and eigenvalues)",
          worst_loss < 1e-6 and worst_eig < 1e-6,
          f"loss err {worst_loss:.2e}, eig err {worst_eig:.2e}")


def test_criterion_7_loss_bounds_and_orthonormal_g():
    rng = np.random.default_rng(1007)
    ok = True
    detail = ""
    for _ in range(25):
        j = int(rng.integers(1, 5))
        m = int(rng.integers(10, 40))
        dims = [int(rng.integers(2, 8)) for _ in range(j)]
        k = int(rng.integers(1, min(min(dims), m) + 1))
        weights = [float(rng.uniform(0.2, 3.0)) for _ in range(j)]
        outputs = [rng.standard_normal((d, m)) for d in dims]
        g, _, loss = gcca_solve(outputs, k=k, r=1e-8, weights=weights)
        bound = k * sum(weights)
        orth = float(np.max(np.abs(g @ g.T - np.eye(k))))
        if not (-1e-12 <= loss <= bound + 1e-8 and orth < 1e-8):
            ok = False
            detail = f"loss {loss:.3e} bound {bound:.3e} orth {orth:.2e}"
            break
    check(7, "gcca_solve loss in [0, k*sum(w)] and G G^T = I_k", ok, detail)


def test_criterion_8_end_to_end_synthetic_retrieval():
    start = time.perf_counter()
    ds = synth_correlated((4000, 500, 500), [800, 320], 160, 0.1, seed=1008)
    tr = ds.split_indices("train")
    model = fit_cca(
        ViewMatrix("speech", ds.views[0].data[tr]),
        ViewMatrix("text", ds.views[1].data[tr]),
        k=160,
        r=1e-16,
    )
    recalls = []
    for split in ("dev", "test"):
        idx = ds.split_indices(split)
        a = model.embed(ds.views[0].data[idx], "speech")
        b = model.embed(ds.views[1].data[idx], "text")
        recalls += [recall_at_n(a, b, 10), recall_at_n(b, a, 10)]
    linear_elapsed = time.perf_counter() - start
    linear_ok = min(recalls) >= 99.0 and linear_elapsed < 120.0

    ds3 = synth_correlated((4000, 500, 500), [800, 320, 1000], 160, 0.1, seed=1009)
    cfg = ExperimentConfig(
        method="dgcca", views=list(ds3.view_names), k=160, seed=8,
        batch_size=2000, max_epochs=3, lr=1e-3,
    )
    deep = train_dgcca(ds3, ds3.view_names, cfg)
    best = max(e.aggregate for e in deep.log.epochs)
    deep_ok = best >= 95.0 and len(deep.log.epochs) <= 50
    check(8, "end-to-end synthetic retrieval (linear >= 99, dgcca >= 95)",
          linear_ok and deep_ok,
          f"linear min {min(recalls):.2f} in {linear_elapsed:.0f}s, dgcca best {best:.2f}")


def test_criterion_9_metric_fixtures():
    wer_ok = (
        wer("a b c".split(), "a b c".split()) == 0.0
        and round(wer("a x c d".split(), "a b c".split()), 2) == 66.67
        and wer([], "a b c".split()) == 100.0
    )
    bleu_identical = bleu([["q", "r", "s"]], [["q", "r", "s"]])
    bleu_ok = (
        round(bleu([["a", "b", "c", "d", "x", "f"]], [["a", "b", "c", "d", "e", "f"]]), 2) == 53.73
        and round(bleu([["a", "b"]], [["a", "b", "c", "d"]]), 2) == 36.79
        and bleu_identical == pytest.approx(100.0)
    )
    check(9, "WER and BLEU reproduce the hand-computed fixtures exactly",
          wer_ok and bleu_ok)


def test_criterion_10_protocol_fidelity(tmp_path):
    assert main(["synth", "--views", "8,7,9,6", "--latent", "3", "--n", "150,40,40",
                 "--noise", "0.1", "--seed", "4", "--out", str(tmp_path / "ds")]) == 0
    cfg = {
        "manifest": str(tmp_path / "ds" / "manifest.json"),
        "method": "dgcca",
        "views": ["view0", "view1", "view2", "view3"],
        "k": 3,
        "seed": 6,
        "max_epochs": 3,
        "batch_size": 75,
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["fit", "--config", str(tmp_path / "cfg.json"), "--out", str(out)]) == 0
        outs.append(out)

    record = json.loads((outs[0] / "run.json").read_text())
    pair_counts = {len(e["dev_scores"]) for e in record["epochs"]}
    aggregates = [e["aggregate"] for e in record["epochs"]]
    selected = record["selected_epoch"]
    selection_ok = aggregates[selected] == max(aggregates) and selected == aggregates.index(max(aggregates))

    identical = (outs[0] / "run.json").read_bytes() == (outs[1] / "run.json").read_bytes()
    for rel in sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.fmat")):
        identical = identical and (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
    check(10, "4-view run emits 12 ordered pair scores, max-aggregate selection, byte-identical rerun",
          pair_counts == {12} and selection_ok and identical,
          f"pair counts {pair_counts}, selected {selected}")


def test_criterion_11_reference_set_ordering():
    ds = synth_correlated((80, 10, 30), [10, 8], 5, 0.0, seed=1011)
    named = make_dataset(
        [v.data for v in ds.views], np.asarray(ds.splits), names=["speech", "text"]
    )
    test_rows = set(named.split_indices("test").tolist())
    sents = tuple(
        (("t" if i in test_rows else "w") + str(i), "ok") for i in range(named.n)
    )
    corpus = SentenceCorpus(sents)
    tr = named.split_indices("train")
    model = fit_cca(
        ViewMatrix("speech", named.view("speech").data[tr]),
        ViewMatrix("text", named.view("text").data[tr]),
        k=5,
        r=1e-16,
    )
    scores = {}
    for ref_set in ("train", "train+test"):
        scores[ref_set] = {
            metric: score_retrieval_as_task(
                model, named, "speech", "text", "test", ref_set, corpus, metric
            )
            for metric in ("wer", "bleu")
        }
    ok = (
        scores["train+test"]["wer"] < scores["train"]["wer"]
        and scores["train+test"]["bleu"] > scores["train"]["bleu"]
    )
    check(11, "train+test reference set strictly beats train when train lacks the answers",
          ok,
          f"wer {scores['train']['wer']:.1f} -> {scores['train+test']['wer']:.1f}, "
          f"bleu {scores['train']['bleu']:.1f} -> {scores['train+test']['bleu']:.1f}")
