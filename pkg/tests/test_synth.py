"""Synthetic population generator: planted structure and determinism."""

import json
import math

import numpy as np
import pytest

from eibench import (
    ConfigError,
    Population,
    PopulationConfig,
    accuracy,
    ei_aggregate,
    expected_ei,
    generate_population,
    pair,
    pearson,
    read_predictions_file,
    validate,
    SampleXY,
)
from eibench.synth import TRUTH_COLUMNS, _other_class, _rows_from_confidence


def _config(**over):
    # link maps accuracy (0.3, 0.9) onto EI (0.25, 0.95) with headroom
    base = dict(
        num_models=4,
        num_samples=300,
        num_classes=6,
        accuracy_range=(0.3, 0.9),
        link_slope=4.35,
        link_intercept=-1.935,
        seed=0,
    )
    base.update(over)
    return PopulationConfig(**base)


def test_generation_is_seed_deterministic(tmp_path):
    cfg = _config()
    d1 = tmp_path / "run1"
    d2 = tmp_path / "run2"
    assert generate_population(cfg).write_to_dir(d1) == 8
    assert generate_population(cfg).write_to_dir(d2) == 8
    files = sorted(p.name for p in d1.iterdir())
    assert files == sorted(p.name for p in d2.iterdir())
    for name in files:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


def test_different_seeds_differ():
    a = generate_population(_config(seed=1))
    b = generate_population(_config(seed=2))
    assert not np.array_equal(a.models[0].original.probs, b.models[0].original.probs)


def test_expected_ei_hand_values():
    assert expected_ei(1.0, 1.0, 1.0) == 1.0
    assert expected_ei(0.0, 0.9, 0.9) == 0.0
    assert expected_ei(0.5, 0.64, 0.25) == pytest.approx(0.2, abs=1e-15)
    assert expected_ei(0.8, 0.7, 0.7) == pytest.approx(0.56, abs=1e-15)


def test_expected_ei_monte_carlo():
    # crank a synthetic dump by hand: consistency 0.5, confidence 0.8
    rng = np.random.default_rng(61)
    n, k = 100_000, 5
    pred = rng.integers(0, k, size=n)
    keeps = rng.random(n) < 0.5
    pred_t = np.where(keeps, pred, _other_class(rng, pred, k))
    conf = np.full(n, 0.8)
    rows_o = _rows_from_confidence(pred, conf, k)
    rows_t = _rows_from_confidence(pred_t, conf, k)

    same = pred == pred_t
    got = float(np.mean(np.where(same, np.sqrt(rows_o[np.arange(n), pred] *
                                               rows_t[np.arange(n), pred_t]), 0.0)))
    assert got == pytest.approx(expected_ei(0.5, 0.8, 0.8), abs=0.01)


@pytest.mark.parametrize("n,tol", [(100, 0.08), (1000, 0.02), (10000, 0.01)])
def test_measured_ei_converges_to_target(n, tol):
    cfg = _config(num_models=3, num_samples=n, conf_concentration=400.0, seed=70)
    pop = generate_population(cfg)
    for m in pop.models:
        got = ei_aggregate(pair(m.original, m.transformed)).score
        assert got == pytest.approx(m.truth["expected_ei"], abs=tol), (m.model_id, n)


def test_measured_accuracy_matches_target():
    cfg = _config(num_models=1, num_samples=10_000, seed=63)
    m = generate_population(cfg).models[0]
    a = m.truth["accuracy_target"]
    sigma = math.sqrt(a * (1 - a) / 10_000)
    assert accuracy(m.original) == pytest.approx(a, abs=4 * sigma)


def test_noiseless_population_correlates_tightly():
    cfg = _config(num_models=50, num_samples=2000, num_classes=10, seed=64)
    pop = generate_population(cfg)
    ei = [ei_aggregate(pair(m.original, m.transformed)).score for m in pop.models]
    acc = [accuracy(m.original) for m in pop.models]
    assert pearson(SampleXY(ei, acc)) > 0.98


def test_noise_decorrelates():
    quiet = _config(num_models=40, num_samples=500, seed=65)
    loud = _config(num_models=40, num_samples=500, seed=65, noise_sd=0.6,
                   accuracy_range=(0.35, 0.85), link_slope=10.0, link_intercept=-3.5)
    def r(cfg):
        pop = generate_population(cfg)
        ei = [m.truth["ei_target"] for m in pop.models]
        acc = [m.truth["accuracy_target"] for m in pop.models]
        return pearson(SampleXY(ei, acc))
    assert r(loud) < r(quiet)


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="accuracy_range"):
        _config(accuracy_range=(0.0, 0.5))
    with pytest.raises(ConfigError, match="accuracy_range"):
        _config(accuracy_range=(0.5, 0.5))
    with pytest.raises(ConfigError, match="accuracy_range"):
        _config(accuracy_range=(0.3, 1.0))
    with pytest.raises(ConfigError, match="num_models"):
        _config(num_models=0)
    with pytest.raises(ConfigError, match="noise_sd"):
        _config(noise_sd=-0.1)
    with pytest.raises(ConfigError, match="slope"):
        _config(link_slope=0.0)
    with pytest.raises(ConfigError, match="transform"):
        _config(transform="identity")
    with pytest.raises(ConfigError, match="transform"):
        _config(transform="blur")
    with pytest.raises(ConfigError, match="budget"):
        _config(num_samples=10_000, num_classes=100, memory_budget_bytes=1000)
    with pytest.raises(ConfigError, match="conf_concentration"):
        _config(conf_concentration=0.0)


def test_infeasible_link_raises_at_generation():
    cfg = _config(link_slope=1.0, link_intercept=0.0)  # logit(0.9) = 2.2 -> EI 2.2
    with pytest.raises(ConfigError, match="outside \\[0, 1\\]"):
        generate_population(cfg)


def test_config_dict_roundtrip(tmp_path):
    cfg = _config(noise_sd=0.2, group_tags=("a", "b"), hard_margin_range=(0.3, 0.9))
    d = cfg.to_dict()
    assert d["invariance_link"] == {"slope": 4.35, "intercept": -1.935}
    assert PopulationConfig.from_dict(d) == cfg

    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    assert PopulationConfig.from_json_file(path) == cfg

    with pytest.raises(ConfigError, match="unknown config fields"):
        PopulationConfig.from_dict({**d, "bogus": 1})
    with pytest.raises(ConfigError, match="missing"):
        PopulationConfig.from_dict({"num_models": 3})


def test_hard_set_rows_stay_flat():
    cfg = _config(
        num_models=6,
        num_classes=10,
        accuracy_range=(0.3, 0.9),
        link_slope=32.04,
        link_intercept=-1.488,  # EI planted in (0.02, 0.115)
        hard_set=True,
        seed=66,
    )
    pop = generate_population(cfg)
    for m in pop.models:
        assert validate(m.original).ok and validate(m.transformed).ok
        # flat regime: top-class mass stays near 1/K on average
        top = m.original.probs.max(axis=1)
        assert float(top.mean()) < 0.3
        assert m.truth["consistency"] <= 1.0
        assert m.truth["conf_mean"] <= 0.25 + 1e-9


def test_hard_set_infeasible_link_raises():
    cfg = _config(num_classes=10, hard_set=True)  # plants EI up to 0.95 > conf 0.25
    with pytest.raises(ConfigError, match="consistency > 1"):
        generate_population(cfg)


def test_dumps_share_labels_and_structure():
    cfg = _config(num_models=2, seed=67)
    for m in generate_population(cfg).models:
        assert np.array_equal(m.original.labels, m.transformed.labels)
        assert m.original.header.has_labels and m.transformed.header.has_labels
        assert m.original.header.transform == "identity"
        assert m.transformed.header.transform == "rot90"
        assert m.original.header.dataset_id == "synth"
        assert validate(m.original).ok and validate(m.transformed).ok


def test_group_tags_cycle():
    cfg = _config(num_models=5, group_tags=("a", "b"))
    tags = [m.group_tag for m in generate_population(cfg).models]
    assert tags == ["a", "b", "a", "b", "a"]


def test_model_ids_are_zero_padded_and_sorted():
    ids = [m.model_id for m in generate_population(_config(num_models=5)).models]
    assert ids == ["m000", "m001", "m002", "m003", "m004"]
    cfg = _config(num_models=101, num_samples=10)
    ids = [m.model_id for m in generate_population(cfg).models]
    assert ids[0] == "m000" and ids[-1] == "m100"
    assert ids == sorted(ids)


def test_write_to_dir_layout(tmp_path):
    cfg = _config(num_models=2, seed=68)
    pop = generate_population(cfg)
    count = pop.write_to_dir(tmp_path / "out")
    assert count == 4
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == [
        "ground_truth.csv",
        "m000_identity.pred", "m000_rot90.pred",
        "m001_identity.pred", "m001_rot90.pred",
    ]
    back = read_predictions_file(tmp_path / "out" / "m001_rot90.pred")
    assert back.header.model_id == "m001"
    assert np.array_equal(back.probs, pop.models[1].transformed.probs)
    lines = (tmp_path / "out" / "ground_truth.csv").read_text().strip().splitlines()
    assert lines[0] == ",".join(TRUTH_COLUMNS)
    assert len(lines) == 3
    assert lines[1].startswith("m000,standard,")


def test_truth_table_is_internally_consistent():
    pop = generate_population(_config(num_models=8, seed=69))
    for m in pop.models:
        t = m.truth
        assert t["expected_ei"] == pytest.approx(
            expected_ei(t["consistency"], t["conf_mean"], t["conf_mean"]), abs=1e-12)
        assert t["expected_ei"] == pytest.approx(t["ei_target"], abs=1e-12)
        assert 0.0 <= t["consistency"] <= 1.0
        assert 0.3 <= t["accuracy_target"] <= 0.9
