"""Smoke tests for the Python bindings: the main operations round-trip
through numpy and agree with simple references."""

import math

import numpy as np
import pytest

import selret


def test_version():
    assert selret.__version__


def test_cosine_similarity():
    fp = selret.Fingerprint(np.array([1, 0, 0], dtype=np.uint8))
    assert selret.cosine_similarity(np.array([1.0, 0.0, 0.0]), fp) == pytest.approx(1.0)
    half = selret.Fingerprint(np.array([1, 0], dtype=np.uint8))
    got = selret.cosine_similarity(np.array([0.5, 0.5]), half)
    assert got == pytest.approx(0.5 / math.sqrt(0.5), abs=1e-12)
    with pytest.raises(ValueError):
        selret.cosine_similarity(np.array([0.0, 0.0]), half)


def test_candidate_distribution_matches_numpy():
    rng = np.random.default_rng(0)
    scores = rng.uniform(0, 1, size=17)
    t = 0.07
    probs = np.asarray(selret.candidate_distribution(scores, t))
    ref = np.exp((scores - scores.max()) / t)
    ref /= ref.sum()
    np.testing.assert_allclose(probs, ref, atol=1e-12)


def _small_instance():
    candidates = [
        selret.Fingerprint(np.array([1, 0, 1, 0], dtype=np.uint8)),
        selret.Fingerprint(np.array([0, 1, 0, 1], dtype=np.uint8)),
        selret.Fingerprint(np.array([1, 1, 0, 0], dtype=np.uint8)),
    ]
    return selret.Instance("py-1", candidates, 0)


def test_ranking_and_hit():
    inst = _small_instance()
    theta = np.array([0.9, 0.1, 0.8, 0.2])
    ranking = selret.rank_candidates(inst, theta, temperature=0.1)
    assert list(ranking.order)[0] == 0
    assert selret.hit_at_k(ranking, 0, 1) == 1
    assert selret.hit_at_k(ranking, 1, 1) == 0
    assert sum(ranking.probs) == pytest.approx(1.0, abs=1e-9)


def test_decompositions_and_rank_variance():
    inst = _small_instance()
    samples = np.array([[0.9, 0.1, 0.8, 0.2], [0.7, 0.3, 0.6, 0.4]])
    bundle = selret.PredictionBundle("py-1", samples)
    bit = selret.bitwise_decomposition(bundle)
    assert bit.tot == bit.al + bit.ep
    assert bit.ep <= 0.0
    ret = selret.retrieval_decomposition(bundle, inst, temperature=0.05)
    assert ret.tot == ret.al + ret.ep
    assert -ret.ep <= math.log(2) + 1e-9
    rv = selret.rank_variance(bundle, inst, k=2, temperature=0.05)
    assert rv <= 0.0


def test_clopper_pearson_closed_form():
    for n in (10, 100, 10000):
        want = 1.0 - 0.05 ** (1.0 / n)
        assert selret.clopper_pearson_upper(0, n, 0.05) == pytest.approx(want, abs=1e-10)
    assert selret.clopper_pearson_upper(5, 5, 0.1) == 1.0


def test_sgr_and_curve():
    rng = np.random.default_rng(1)
    n = 800
    p = rng.uniform(0, 0.6, size=n)
    kappa = 1.0 - p
    losses = (rng.uniform(size=n) < p).astype(float)

    result = selret.sgr_select(kappa, losses, target_risk=0.3, delta=0.05)
    assert result.iterations == math.ceil(math.log2(n))
    if result.feasible:
        assert result.bound_b_star < 0.3
        accepted = kappa >= result.tau_star
        assert losses[accepted].mean() <= result.bound_b_star + 1e-12

    curve = selret.risk_coverage_curve(losses, kappa)
    assert curve["aurc_oracle"] <= curve["aurc"] + 1e-12
    assert curve["risk"][-1] == pytest.approx(losses.mean())

    cal, ev = selret.calibration_split(10, seed=3)
    assert sorted(list(cal) + list(ev)) == list(range(10))


def test_distance_scores():
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(50, 6))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    index = selret.TrainEmbeddingIndex(rows)
    assert index.knn_score(rows[0], 1) == pytest.approx(0.0, abs=1e-12)
    q = rows[3]
    brute = np.sort(np.linalg.norm(rows - q, axis=1))[:5].mean()
    assert index.knn_score(q, 5) == pytest.approx(-brute, abs=1e-10)


def test_synth_and_io_round_trip(tmp_path):
    config = selret.SynthConfig()
    config.n_instances = 20
    config.dim = 16
    config.m_min = 1
    config.m_max = 6
    config.num_samples = 2
    config.noise_level = 0.4
    config.seed = 11
    data = selret.generate(config)
    assert len(data["instances"]) == 20

    ds = tmp_path / "d.jsonl"
    pr = tmp_path / "p.rgp"
    selret.write_dataset(str(ds), 16, 256, data["instances"])
    selret.write_predictions(str(pr), data["bundles"])
    instances = selret.load_dataset(str(ds))
    bundles = selret.load_predictions(str(pr))
    assert len(instances) == 20
    assert len(bundles) == 20
    np.testing.assert_array_equal(
        np.asarray(bundles[3].samples), np.asarray(data["bundles"][3].samples)
    )
    assert len(selret.sha256_file(str(ds))) == 64


def test_mc_validation_small():
    config = selret.SynthConfig()
    config.n_instances = 300
    config.noise_level = 0.5
    config.seed = 9
    rate = selret.mc_validate_sgr(config, target_risk=0.3, delta=0.1, trials=100)
    assert rate <= 0.1
