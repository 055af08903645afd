"""Invariance measures over paired softmax dumps.

The headline measure is effective invariance: the geometric mean of the
two top confidences when original and transformed predictions agree on
the class, zero otherwise. Five baselines ride along: Jensen-Shannon
divergence, l2 distance, accuracy difference, confidence-only and the
two consistency variants. Aggregation is the arithmetic mean over rows
for every kind.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .predstore import PairedPredictions, PredictionSet, pair

MEASURE_KINDS = (
    "ei",
    "js",
    "l2",
    "acc_diff",
    "confidence_only",
    "consistency_only",
    "consistency_conf_diff",
)

ROTATION_AVG = "rotation_avg"


@dataclass
class TopPrediction:
    class_index: int
    confidence: float


@dataclass
class InvarianceRecord:
    """One model's aggregate score on one (dataset, transform, measure)."""

    model_id: str
    dataset_id: str
    transform: str
    measure: str
    score: float
    accuracy: float | None
    n: int

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "transform": self.transform,
            "measure": self.measure,
            "score": self.score,
            "accuracy": self.accuracy,
            "n": self.n,
        }


def _rows64(probs) -> np.ndarray:
    arr = np.ascontiguousarray(probs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def _check_same_k(p, q):
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]} classes")


def top_prediction(row) -> TopPrediction:
    """Argmax class and its probability; ties go to the lowest index."""
    arr = np.asarray(row, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty softmax row")
    idx = int(arr.argmax())
    return TopPrediction(class_index=idx, confidence=float(arr[idx]))


def ei_sample(orig, trans, arithmetic=False) -> float:
    """Effective invariance of one sample pair."""
    p = _rows64(orig)
    q = _rows64(trans)
    _check_same_k(p, q)
    return float(_kernels.ei_rows(p, q, arithmetic)[0])


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence, log base 2, so the value lives in [0, 1]."""
    a = _rows64(p)
    b = _rows64(q)
    _check_same_k(a, b)
    return float(_kernels.js_rows(a, b)[0])


def l2_distance(p, q) -> float:
    a = _rows64(p)
    b = _rows64(q)
    _check_same_k(a, b)
    return float(_kernels.l2_rows(a, b)[0])


def accuracy(pset: PredictionSet) -> float:
    """Fraction of rows whose argmax class equals the label."""
    if pset.labels is None:
        raise ValueError("prediction set has no labels")
    idx, _ = _kernels.row_top(_rows64(pset.probs))
    return float(np.mean(idx == pset.labels.astype(np.int64)))


def _maybe_accuracy(pset: PredictionSet):
    return accuracy(pset) if pset.labels is not None else None


def _record(pp: PairedPredictions, measure_name, score, transform=None) -> InvarianceRecord:
    h = pp.original.header
    return InvarianceRecord(
        model_id=h.model_id,
        dataset_id=h.dataset_id,
        transform=transform if transform is not None else pp.transformed.header.transform,
        measure=measure_name,
        score=float(score),
        accuracy=_maybe_accuracy(pp.original),
        n=h.num_samples,
    )


def ei_aggregate(pp: PairedPredictions, arithmetic=False) -> InvarianceRecord:
    """Mean effective invariance over all sample pairs."""
    rows = _kernels.ei_rows(_rows64(pp.original.probs), _rows64(pp.transformed.probs), arithmetic)
    return _record(pp, "ei", rows.mean())


def rotation_ei(orig, r90, r180, r270, arithmetic=False) -> InvarianceRecord:
    """Mean of the three per-angle aggregate scores; tagged rotation_avg."""
    scores = [
        ei_aggregate(pair(orig, rotated), arithmetic).score
        for rotated in (r90, r180, r270)
    ]
    pp = pair(orig, r90)
    return _record(pp, "ei", float(np.mean(scores)), transform=ROTATION_AVG)


def accuracy_difference(pp: PairedPredictions) -> float:
    """accuracy(original) minus accuracy(transformed); needs labels on both."""
    if pp.original.labels is None or pp.transformed.labels is None:
        raise ValueError("accuracy difference needs labels on both sets")
    return accuracy(pp.original) - accuracy(pp.transformed)


def confidence_only(pset: PredictionSet) -> float:
    """Mean top-class probability over all rows."""
    _, conf = _kernels.row_top(_rows64(pset.probs))
    return float(conf.mean())


def consistency_only(pp: PairedPredictions) -> float:
    """Fraction of rows keeping the same predicted class."""
    rows = _kernels.consistency_rows(_rows64(pp.original.probs), _rows64(pp.transformed.probs))
    return float(rows.mean())


def consistency_conf_diff(pp: PairedPredictions) -> float:
    """Per row 1 - |confidence difference| when the class holds, else 0; averaged."""
    rows = _kernels.conf_diff_rows(_rows64(pp.original.probs), _rows64(pp.transformed.probs))
    return float(rows.mean())


def measure(pp: PairedPredictions, kind, arithmetic=False,
            confidence_source="transformed") -> InvarianceRecord:
    """Dispatch to one measure kind and wrap the aggregate in a record.

    confidence_only is computed on the transformed set unless
    confidence_source says "original".
    """
    if kind not in MEASURE_KINDS:
        raise ValueError(f"unknown measure kind {kind!r}")
    if kind == "ei":
        return ei_aggregate(pp, arithmetic)

    po = _rows64(pp.original.probs)
    pt = _rows64(pp.transformed.probs)
    if kind == "js":
        score = _kernels.js_rows(po, pt).mean()
    elif kind == "l2":
        score = _kernels.l2_rows(po, pt).mean()
    elif kind == "acc_diff":
        score = accuracy_difference(pp)
    elif kind == "confidence_only":
        src = pp.transformed if confidence_source == "transformed" else pp.original
        score = confidence_only(src)
    elif kind == "consistency_only":
        score = consistency_only(pp)
    else:
        score = consistency_conf_diff(pp)
    return _record(pp, kind, score)
