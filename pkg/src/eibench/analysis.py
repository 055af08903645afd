"""Population-level studies: correlation, accuracy prediction, ranking.

Works over per-model score records rather than raw dumps, so a study can
mix models measured at different times. Accuracy enters every fit on the
logit scale; rank statistics are checked to be identical on both scales
on every run (a monotone axis change must not move Spearman). Points are
processed in sorted id order, which makes reports invariant under
permutation of the input records, bootstrap band included.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .errors import DegenerateInputError, FormatError
from .metrics import MEASURE_KINDS, accuracy, measure
from .stats import (
    BootstrapBand,
    CorrelationStats,
    LinearFit,
    SampleXY,
    bootstrap_band,
    correlate,
    huber_fit,
    inverse_logit,
    logit_scale,
    pearson,
    spearman,
)

MODEL_CENTRIC = "model_centric"
DATASET_CENTRIC = "dataset_centric"

_MIN_STUDY_POINTS = 3


@dataclass
class DatasetEntry:
    dataset_id: str
    accuracy: float
    scores: dict

    def to_dict(self):
        return {
            "dataset_id": self.dataset_id,
            "accuracy": self.accuracy,
            "scores": {k: self.scores[k] for k in sorted(self.scores)},
        }

    @classmethod
    def from_dict(cls, d):
        try:
            dataset_id = d["dataset_id"]
            acc = d["accuracy"]
            scores = d["scores"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"entry missing field: {exc}") from exc
        if acc is not None and not isinstance(acc, (int, float)):
            raise FormatError(f"accuracy must be a number or null, got {acc!r}")
        if not isinstance(scores, dict):
            raise FormatError("scores must be an object")
        for k, v in scores.items():
            if not isinstance(v, (int, float)):
                raise FormatError(f"score {k!r} must be a number, got {v!r}")
        return cls(dataset_id=str(dataset_id), accuracy=acc, scores=dict(scores))


@dataclass
class ModelRecord:
    model_id: str
    group_tag: str = "standard"
    entries: list = field(default_factory=list)

    def entry_for(self, dataset_id):
        for e in self.entries:
            if e.dataset_id == dataset_id:
                return e
        return None

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "group_tag": self.group_tag,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            model_id = d["model_id"]
            group_tag = d["group_tag"]
            entries = d["entries"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"record missing field: {exc}") from exc
        if not isinstance(entries, list):
            raise FormatError("entries must be a list")
        return cls(
            model_id=str(model_id),
            group_tag=str(group_tag),
            entries=[DatasetEntry.from_dict(e) for e in entries],
        )


def entry_from_pair(pp, arithmetic=False, confidence_source="transformed") -> DatasetEntry:
    """Score one dump pair under every applicable measure."""
    kinds = list(MEASURE_KINDS)
    has_labels = pp.original.header.has_labels and pp.transformed.header.has_labels
    if not has_labels:
        kinds.remove("acc_diff")
    scores = {
        kind: measure(pp, kind, arithmetic=arithmetic, confidence_source=confidence_source).score
        for kind in kinds
    }
    acc = accuracy(pp.original) if pp.original.header.has_labels else None
    return DatasetEntry(dataset_id=pp.original.header.dataset_id, accuracy=acc, scores=scores)


def load_records(records_dir) -> list:
    root = Path(records_dir)
    if not root.is_dir():
        raise FormatError(f"records directory not found: {root}")
    records = []
    for path in sorted(root.glob("*.json")):
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path.name}: {exc}") from exc
        records.append(ModelRecord.from_dict(payload))
    if not records:
        raise FormatError(f"no record files in {root}")
    return records


def save_records(records, records_dir):
    root = Path(records_dir)
    root.mkdir(parents=True, exist_ok=True)
    for rec in records:
        with open(root / f"{rec.model_id}.json", "w") as fh:
            json.dump(rec.to_dict(), fh, indent=2)
            fh.write("\n")


@dataclass
class StudyReport:
    axis: str
    measure: str
    anchor_id: str
    points: list
    stats: CorrelationStats
    fit: LinearFit
    band: BootstrapBand
    pearson_raw: float
    groups: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.stats.n

    def to_dict(self):
        return {
            "axis": self.axis,
            "measure": self.measure,
            "anchor_id": self.anchor_id,
            "n": self.n,
            "stats": self.stats.to_dict(),
            "fit": self.fit.to_dict(),
            "band": self.band.to_dict(),
            "pearson_raw": self.pearson_raw,
            "groups": self.groups,
            "points": list(self.points),
        }


def _rank_invariance_check(s_raw: SampleXY, s_logit: SampleXY) -> float:
    rho_raw = spearman(s_raw)
    rho_logit = spearman(s_logit)
    if abs(rho_raw - rho_logit) > 1e-9:
        raise AssertionError(
            f"rank statistic moved under a monotone axis change: {rho_raw} vs {rho_logit}"
        )
    return rho_logit


def _study(axis, measure_kind, anchor_id, points, resamples, level, seed) -> StudyReport:
    """Shared study core; points are dicts with id/invariance/accuracy."""
    points = sorted(points, key=lambda p: p["id"])
    if len(points) < _MIN_STUDY_POINTS:
        raise DegenerateInputError(
            f"{axis} study of {measure_kind!r} on {anchor_id!r} has {len(points)} usable "
            f"points, needs {_MIN_STUDY_POINTS}"
        )
    x = np.array([p["invariance"] for p in points], dtype=np.float64)
    acc = np.array([p["accuracy"] for p in points], dtype=np.float64)
    s_raw = SampleXY(x, acc)
    s_logit = SampleXY(x, logit_scale(acc))
    rho = _rank_invariance_check(s_raw, s_logit)
    stats = correlate(s_logit)
    if abs(stats.spearman_rho - rho) > 1e-9:
        raise AssertionError("correlate disagrees with the direct rank computation")
    report = StudyReport(
        axis=axis,
        measure=measure_kind,
        anchor_id=anchor_id,
        points=points,
        stats=stats,
        fit=huber_fit(s_logit),
        band=bootstrap_band(s_logit, resamples=resamples, level=level, seed=seed),
        pearson_raw=pearson(s_raw),
    )
    tags = [p.get("group_tag") for p in points]
    for tag in sorted({t for t in tags if t is not None}):
        idx = [i for i, t in enumerate(tags) if t == tag]
        if len(idx) < _MIN_STUDY_POINTS:
            continue
        try:
            gs_raw = SampleXY(x[idx], acc[idx])
            gs_logit = SampleXY(x[idx], logit_scale(acc[idx]))
            report.groups[tag] = {
                "n": len(idx),
                "pearson_logit": pearson(gs_logit),
                "spearman": _rank_invariance_check(gs_raw, gs_logit),
            }
        except DegenerateInputError:
            continue
    return report


def _usable(entry, measure_kind):
    return (
        entry is not None
        and entry.accuracy is not None
        and measure_kind in entry.scores
        and math.isfinite(entry.scores[measure_kind])
    )


def model_centric_study(records, dataset_id, measure_kind,
                        resamples=1000, level=0.95, seed=0) -> StudyReport:
    """Correlate score with accuracy across models on one dataset."""
    points = []
    for rec in records:
        entry = rec.entry_for(dataset_id)
        if not _usable(entry, measure_kind):
            continue
        points.append({
            "id": rec.model_id,
            "invariance": float(entry.scores[measure_kind]),
            "accuracy": float(entry.accuracy),
            "group_tag": rec.group_tag,
        })
    return _study(MODEL_CENTRIC, measure_kind, dataset_id, points, resamples, level, seed)


def dataset_centric_study(record: ModelRecord, measure_kind,
                          resamples=1000, level=0.95, seed=0) -> StudyReport:
    """Correlate score with accuracy across datasets for one model."""
    points = []
    for entry in record.entries:
        if not _usable(entry, measure_kind):
            continue
        points.append({
            "id": entry.dataset_id,
            "invariance": float(entry.scores[measure_kind]),
            "accuracy": float(entry.accuracy),
        })
    return _study(DATASET_CENTRIC, measure_kind, record.model_id, points, resamples, level, seed)


def _training_sample(record: ModelRecord, measure_kind, train_ids) -> SampleXY:
    xs, ys = [], []
    for did in train_ids:
        entry = record.entry_for(did)
        if not _usable(entry, measure_kind):
            raise DegenerateInputError(
                f"training set {did!r} lacks accuracy or a {measure_kind!r} score "
                f"in record {record.model_id!r}"
            )
        xs.append(entry.scores[measure_kind])
        ys.append(entry.accuracy)
    if len(xs) < _MIN_STUDY_POINTS:
        raise DegenerateInputError(
            f"{len(xs)} training sets given, needs {_MIN_STUDY_POINTS}"
        )
    x = np.array(xs, dtype=np.float64)
    return SampleXY(x, logit_scale(np.array(ys, dtype=np.float64)))


def fit_accuracy_predictor(record: ModelRecord, measure_kind, train_ids) -> LinearFit:
    """Huber fit of logit accuracy on invariance over the training sets."""
    return huber_fit(_training_sample(record, measure_kind, train_ids))


@dataclass
class AccuracyPrediction:
    dataset_id: str
    predicted_accuracy: float
    interval: tuple
    logit_interval: tuple
    score: float
    extrapolated: bool

    def to_dict(self):
        return {
            "dataset_id": self.dataset_id,
            "predicted_accuracy": self.predicted_accuracy,
            "interval": [self.interval[0], self.interval[1]],
            "logit_interval": [self.logit_interval[0], self.logit_interval[1]],
            "score": self.score,
            "extrapolated": self.extrapolated,
        }


def predict_accuracy(fit: LinearFit, band: BootstrapBand, score, dataset_id="",
                     residual_scale=0.0, level=0.95) -> AccuracyPrediction:
    """Point prediction plus interval at one invariance score.

    The interval combines the fit-uncertainty band with a residual term
    (`residual_scale`, standard deviation of observation noise on the
    logit scale; 0 keeps the bare band, which then covers the mean line
    rather than new observations). Scores outside the band's grid clamp
    to its edge and set the extrapolated flag.
    """
    score = float(score)
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    lo_b, hi_b = band.at(score)
    half = math.sqrt(((hi_b - lo_b) / 2.0) ** 2 + (z * residual_scale) ** 2)
    mid = (lo_b + hi_b) / 2.0
    center = fit.predict(score)
    logit_lo = min(mid - half, center)
    logit_hi = max(mid + half, center)
    extrapolated = bool(score < band.grid[0] or score > band.grid[-1])
    return AccuracyPrediction(
        dataset_id=dataset_id,
        predicted_accuracy=float(inverse_logit(center)),
        interval=(float(inverse_logit(logit_lo)), float(inverse_logit(logit_hi))),
        logit_interval=(float(logit_lo), float(logit_hi)),
        score=score,
        extrapolated=extrapolated,
    )


@dataclass
class AccuracyPredictor:
    """Fitted line, band, and residual scale bundled for repeated predictions."""

    measure: str
    model_id: str
    train_ids: list
    fit: LinearFit
    band: BootstrapBand
    residual_scale: float
    level: float

    def predict(self, score, dataset_id="") -> AccuracyPrediction:
        return predict_accuracy(
            self.fit, self.band, score, dataset_id=dataset_id,
            residual_scale=self.residual_scale, level=self.level,
        )

    def to_dict(self):
        return {
            "measure": self.measure,
            "model_id": self.model_id,
            "train_ids": list(self.train_ids),
            "fit": self.fit.to_dict(),
            "band": self.band.to_dict(),
            "residual_scale": self.residual_scale,
            "level": self.level,
        }


def accuracy_predictor(record: ModelRecord, measure_kind, train_ids,
                       resamples=1000, level=0.95, seed=0) -> AccuracyPredictor:
    """Fit plus bootstrap band plus residual scale over the training sets.

    The residual scale is the root mean square fit residual with two
    degrees of freedom spent on the line; predictions fold it into their
    intervals so coverage refers to new test sets, not to the mean line.
    """
    train_ids = list(train_ids)
    s = _training_sample(record, measure_kind, train_ids)
    fit = huber_fit(s)
    band = bootstrap_band(s, resamples=resamples, level=level, seed=seed)
    resid = s.y - fit.predict(s.x)
    dof = max(s.n - 2, 1)
    residual_scale = float(np.sqrt(np.sum(resid * resid) / dof))
    return AccuracyPredictor(
        measure=measure_kind,
        model_id=record.model_id,
        train_ids=train_ids,
        fit=fit,
        band=band,
        residual_scale=residual_scale,
        level=level,
    )


def rank_models(records, dataset_id, measure_kind, descending=True) -> dict:
    """Order models by score on one dataset; no labels required.

    Ties break lexicographically by model_id. When at least three ranked
    models carry accuracy, the result also reports Spearman correlation
    between score and accuracy as a sanity signal.
    """
    rows = []
    for rec in records:
        entry = rec.entry_for(dataset_id)
        if entry is None or measure_kind not in entry.scores:
            continue
        score = entry.scores[measure_kind]
        if not math.isfinite(score):
            continue
        rows.append((rec.model_id, float(score), entry.accuracy))
    if len(rows) < 2:
        raise DegenerateInputError(
            f"ranking needs at least 2 models with measure {measure_kind!r} "
            f"on dataset {dataset_id!r}, found {len(rows)}"
        )
    rows.sort(key=lambda r: (-r[1] if descending else r[1], r[0]))
    ranking = [
        {"rank": i + 1, "model_id": mid, "score": score}
        for i, (mid, score, _) in enumerate(rows)
    ]
    rho = None
    labeled = [(score, acc) for _, score, acc in rows if acc is not None]
    if len(labeled) >= _MIN_STUDY_POINTS:
        xs = np.array([p[0] for p in labeled])
        ys = np.array([p[1] for p in labeled])
        try:
            rho = spearman(SampleXY(xs, ys))
        except DegenerateInputError:
            rho = None
    return {
        "measure": measure_kind,
        "dataset_id": dataset_id,
        "descending": descending,
        "ranking": ranking,
        "spearman_vs_accuracy": rho,
    }
