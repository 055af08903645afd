"""Shared fixture builders for the test suite."""

import numpy as np

from eibench import IDENTITY, PredictionHeader, PredictionSet


def random_probs(rng, n, k, alpha=None):
    """Valid softmax rows via Dirichlet draws; float64 in, float32 storage."""
    if alpha is None:
        alpha = np.full(k, 0.8)
    return rng.dirichlet(alpha, size=n)


def make_pset(probs, labels=None, transform=IDENTITY, model_id="m0",
              dataset_id="d0", metadata=""):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = probs[None, :]
    n, k = probs.shape
    header = PredictionHeader(
        model_id=model_id,
        dataset_id=dataset_id,
        transform=transform,
        num_samples=n,
        num_classes=k,
        has_labels=labels is not None,
        metadata=metadata,
    )
    return PredictionSet(header=header, probs=probs,
                         labels=None if labels is None else np.asarray(labels))


def random_pset(rng, n, k, labels=True, transform=IDENTITY, **kw):
    lab = rng.integers(0, k, size=n) if labels else None
    return make_pset(random_probs(rng, n, k), labels=lab, transform=transform, **kw)


def random_pair_sets(rng, n, k, model_id="m0", dataset_id="d0", transform="rot90"):
    """Two aligned sets sharing labels, original tagged identity."""
    lab = rng.integers(0, k, size=n)
    orig = make_pset(random_probs(rng, n, k), labels=lab,
                     model_id=model_id, dataset_id=dataset_id)
    trans = make_pset(random_probs(rng, n, k), labels=lab, transform=transform,
                      model_id=model_id, dataset_id=dataset_id)
    return orig, trans
