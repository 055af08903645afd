"""Synthetic model populations with planted accuracy/invariance structure.

Each simulated model gets a target accuracy a and a target invariance
score tied to it through a linear link in logit space,
logit(a) = slope * EI + intercept + noise. The generator realizes the
target by choosing a per-model prediction-consistency rate c and a
confidence level q with c * q = EI, then emitting labeled softmax dumps:
rows put mass p on the predicted class (p drawn from a Beta around q)
and spread the remainder uniformly; the transformed row keeps the class
with probability c. The flat remainder is deliberate: it also exercises
the regime where distance-style measures go blind on hard test sets.

Hard-set mode pins all confidences just above 1/K with an independent
per-model margin, emulating very hard test data where softmax vectors
are nearly flat.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .predstore import (
    IDENTITY,
    TRANSFORM_TAGS,
    PredictionHeader,
    PredictionSet,
    write_predictions_file,
)
from .stats import logit_scale

TRUTH_COLUMNS = (
    "model_id",
    "group_tag",
    "accuracy_target",
    "ei_target",
    "consistency",
    "conf_mean",
    "expected_ei",
)


@dataclass
class PopulationConfig:
    num_models: int
    num_samples: int
    num_classes: int
    accuracy_range: tuple
    link_slope: float
    link_intercept: float
    noise_sd: float = 0.0
    seed: int = 0
    transform: str = "rot90"
    dataset_id: str = "synth"
    group_tags: tuple = ("standard",)
    conf_concentration: float = 50.0
    conf_jitter: float = 0.05
    hard_set: bool = False
    hard_margin_range: tuple = (0.2, 1.5)
    memory_budget_bytes: int = 512 * 1024 * 1024

    def __post_init__(self):
        lo, hi = self.accuracy_range
        if not (0.0 < lo < hi < 1.0):
            raise ConfigError(f"accuracy_range must satisfy 0 < low < high < 1, got {lo}, {hi}")
        if self.num_models < 1 or self.num_samples < 1 or self.num_classes < 2:
            raise ConfigError("need num_models >= 1, num_samples >= 1, num_classes >= 2")
        if self.noise_sd < 0.0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.link_slope == 0.0:
            raise ConfigError("link slope of 0 cannot plant any structure")
        if self.transform == IDENTITY or self.transform not in TRANSFORM_TAGS:
            raise ConfigError(f"transform must be a non-identity tag, got {self.transform!r}")
        if 4 * self.num_samples * self.num_classes > self.memory_budget_bytes:
            raise ConfigError(
                f"N*K = {self.num_samples}*{self.num_classes} exceeds the "
                f"{self.memory_budget_bytes} byte budget"
            )
        if self.conf_concentration <= 0.0:
            raise ConfigError("conf_concentration must be positive")

    def to_dict(self):
        return {
            "num_models": self.num_models,
            "num_samples": self.num_samples,
            "num_classes": self.num_classes,
            "accuracy_range": list(self.accuracy_range),
            "invariance_link": {"slope": self.link_slope, "intercept": self.link_intercept},
            "noise_sd": self.noise_sd,
            "seed": self.seed,
            "transform": self.transform,
            "dataset_id": self.dataset_id,
            "group_tags": list(self.group_tags),
            "conf_concentration": self.conf_concentration,
            "conf_jitter": self.conf_jitter,
            "hard_set": self.hard_set,
            "hard_margin_range": list(self.hard_margin_range),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            link = d.pop("invariance_link")
            kwargs = {
                "num_models": d.pop("num_models"),
                "num_samples": d.pop("num_samples"),
                "num_classes": d.pop("num_classes"),
                "accuracy_range": tuple(d.pop("accuracy_range")),
                "link_slope": link["slope"],
                "link_intercept": link["intercept"],
            }
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"config is missing a required field: {exc}") from exc
        for key in ("noise_sd", "seed", "transform", "dataset_id", "conf_concentration",
                    "conf_jitter", "hard_set"):
            if key in d:
                kwargs[key] = d.pop(key)
        if "group_tags" in d:
            kwargs["group_tags"] = tuple(d.pop("group_tags"))
        if "hard_margin_range" in d:
            kwargs["hard_margin_range"] = tuple(d.pop("hard_margin_range"))
        if d:
            raise ConfigError(f"unknown config fields: {sorted(d)}")
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def expected_ei(consistency, conf_orig, conf_trans) -> float:
    """Expected per-sample score under the generator's independence assumptions."""
    return consistency * math.sqrt(conf_orig * conf_trans)


@dataclass
class SyntheticModel:
    model_id: str
    group_tag: str
    original: PredictionSet
    transformed: PredictionSet
    truth: dict


@dataclass
class Population:
    config: PopulationConfig
    models: list = field(default_factory=list)

    def truth_rows(self):
        return [[m.truth[c] for c in TRUTH_COLUMNS] for m in self.models]

    def write_to_dir(self, out_dir):
        """Write dumps plus ground_truth.csv; returns the number of files."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        count = 0
        for m in self.models:
            write_predictions_file(m.original, out / f"{m.model_id}_{IDENTITY}.pred")
            write_predictions_file(m.transformed, out / f"{m.model_id}_{self.config.transform}.pred")
            count += 2
        with open(out / "ground_truth.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRUTH_COLUMNS)
            writer.writerows(self.truth_rows())
        return count


def _plant_targets(cfg: PopulationConfig, rng: np.random.Generator):
    """Draw (accuracy, ei_target, consistency, conf_mean) for one model."""
    lo, hi = cfg.accuracy_range
    acc = float(rng.uniform(lo, hi))
    noise = float(rng.normal(0.0, cfg.noise_sd)) if cfg.noise_sd > 0 else 0.0
    ei_target = (logit_scale(acc) - cfg.link_intercept - noise) / cfg.link_slope
    if not 0.0 <= ei_target <= 1.0:
        raise ConfigError(
            f"infeasible target: accuracy {acc:.4f} maps to EI {ei_target:.4f} outside [0, 1]; "
            "adjust the link or the accuracy range"
        )

    k = cfg.num_classes
    if cfg.hard_set:
        margin = float(rng.uniform(*cfg.hard_margin_range))
        conf = (1.0 + margin) / k
        if conf >= 1.0:
            raise ConfigError(f"hard-set margin {margin:.3f} pushes confidence past 1 at K={k}")
        if ei_target > conf:
            raise ConfigError(
                f"infeasible target: EI {ei_target:.4f} needs consistency > 1 at "
                f"hard-set confidence {conf:.4f}"
            )
    else:
        jitter = float(rng.uniform(-cfg.conf_jitter, cfg.conf_jitter))
        conf = math.sqrt(ei_target) * (1.0 + jitter) if ei_target > 0 else 0.5
        conf = min(max(conf, 1.2 / k, ei_target), 1.0 - 1e-6)
    consistency = 0.0 if ei_target == 0.0 else ei_target / conf
    return acc, ei_target, consistency, conf


def _confidence_draws(rng, mean, concentration, size, k):
    alpha = mean * concentration
    beta = (1.0 - mean) * concentration
    draws = rng.beta(alpha, beta, size=size)
    return np.clip(draws, (1.0 + 1e-3) / k, 1.0 - 1e-6)


def _rows_from_confidence(pred_class, conf, k):
    """(N, K) rows: mass conf on pred_class, remainder spread uniformly."""
    n = pred_class.size
    rows = np.repeat(((1.0 - conf) / (k - 1))[:, None], k, axis=1)
    rows[np.arange(n), pred_class] = conf
    return rows


def _other_class(rng, base, k):
    return (base + rng.integers(1, k, size=base.size)) % k


def generate_population(cfg: PopulationConfig) -> Population:
    """Emit dump pairs plus the ground-truth table; deterministic given seed."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.num_models)
    width = max(3, len(str(cfg.num_models - 1)))
    n, k = cfg.num_samples, cfg.num_classes

    pop = Population(config=cfg)
    for i in range(cfg.num_models):
        rng = np.random.default_rng(children[i])
        acc, ei_target, consistency, conf = _plant_targets(cfg, rng)

        pred = rng.integers(0, k, size=n)
        correct = rng.random(n) < acc
        labels = np.where(correct, pred, _other_class(rng, pred, k))

        keeps = rng.random(n) < consistency
        pred_t = np.where(keeps, pred, _other_class(rng, pred, k))

        conf_o = _confidence_draws(rng, conf, cfg.conf_concentration, n, k)
        conf_t = _confidence_draws(rng, conf, cfg.conf_concentration, n, k)

        model_id = f"m{i:0{width}d}"
        group_tag = cfg.group_tags[i % len(cfg.group_tags)]

        def _pset(tag, pred_class, confs):
            header = PredictionHeader(
                model_id=model_id,
                dataset_id=cfg.dataset_id,
                transform=tag,
                num_samples=n,
                num_classes=k,
                has_labels=True,
            )
            return PredictionSet(
                header=header,
                probs=_rows_from_confidence(pred_class, confs, k),
                labels=labels,
            )

        truth = dict(
            zip(
                TRUTH_COLUMNS,
                [
                    model_id,
                    group_tag,
                    acc,
                    ei_target,
                    consistency,
                    conf,
                    expected_ei(consistency, conf, conf),
                ],
            )
        )
        pop.models.append(
            SyntheticModel(
                model_id=model_id,
                group_tag=group_tag,
                original=_pset(IDENTITY, pred, conf_o),
                transformed=_pset(cfg.transform, pred_t, conf_t),
                truth=truth,
            )
        )
    return pop
