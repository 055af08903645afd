"""Softmax prediction dumps: the EIPRED1 container, validation, pairing.

An EIPRED1 stream is::

    bytes 0-7    magic b"EIPRED1\\n"
    bytes 8-11   little-endian u32, byte length H of the header JSON
    bytes 12..   H bytes of UTF-8 JSON (the PredictionHeader fields)
    then         if has_labels: N little-endian u32 class labels
    then         N*K little-endian float32 probabilities, row-major

No padding, no checksum. The header JSON is written in a canonical form
(fixed field order, compact separators) so that writing the same set twice
is byte-identical.

Row i of an identity dump and row i of a transformed dump refer to the
same underlying sample; alignment is by row index only.
"""

import csv
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    HeaderPayloadMismatchError,
    PairingMismatchError,
    TruncatedStreamError,
    ValidationFailure,
)

MAGIC = b"EIPRED1\n"
FORMAT_VERSION = 1
ROW_SUM_TOL = 1e-4

IDENTITY = "identity"
ROTATION_TAGS = ("rot90", "rot180", "rot270")
TRANSFORM_TAGS = (IDENTITY,) + ROTATION_TAGS + ("grayscale",)

# canonical header field order for byte-stable writes
_HEADER_FIELDS = (
    "format_version",
    "model_id",
    "dataset_id",
    "transform",
    "num_samples",
    "num_classes",
    "has_labels",
    "metadata",
)


@dataclass
class PredictionHeader:
    model_id: str
    dataset_id: str
    transform: str
    num_samples: int
    num_classes: int
    has_labels: bool
    format_version: int = FORMAT_VERSION
    metadata: str = ""

    def to_dict(self):
        return {name: getattr(self, name) for name in _HEADER_FIELDS}


@dataclass
class PredictionSet:
    """One (model, dataset, transform) dump: header plus the N x K matrix.

    Arrays are stored C-contiguous (probs float32, labels uint32) and
    marked read-only, so sets are safe to share across threads.
    """

    header: PredictionHeader
    probs: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.probs = np.ascontiguousarray(self.probs, dtype=np.float32)
        self.probs.flags.writeable = False
        if self.labels is not None:
            self.labels = np.ascontiguousarray(self.labels, dtype=np.uint32)
            self.labels.flags.writeable = False


@dataclass
class PairedPredictions:
    """Aligned identity/transformed dumps of one model on one dataset."""

    original: PredictionSet
    transformed: PredictionSet


@dataclass
class Violation:
    field: str
    message: str
    rows: list = None

    def to_dict(self):
        d = {"field": self.field, "message": self.message}
        if self.rows is not None:
            d["rows"] = list(self.rows)
        return d

    def __str__(self):
        if self.rows is not None:
            shown = ", ".join(str(r) for r in self.rows[:5])
            more = "" if len(self.rows) <= 5 else f", ... ({len(self.rows)} rows total)"
            return f"{self.field}: {self.message} [rows {shown}{more}]"
        return f"{self.field}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, field_name, message, rows=None):
        self.violations.append(Violation(field_name, message, rows))

    def to_dict(self):
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}

    def __str__(self):
        if self.ok:
            return "valid"
        return "; ".join(str(v) for v in self.violations)


def validate(pset: PredictionSet) -> ValidationReport:
    """Check every PredictionSet invariant; reports, never raises."""
    report = ValidationReport()
    h = pset.header

    if h.format_version != FORMAT_VERSION:
        report.add("format_version", f"unsupported version {h.format_version}")
    if not h.model_id:
        report.add("model_id", "must be non-empty")
    if not h.dataset_id:
        report.add("dataset_id", "must be non-empty")
    if h.transform not in TRANSFORM_TAGS:
        report.add("transform", f"unknown tag {h.transform!r}")
    if h.num_samples < 1:
        report.add("num_samples", f"must be >= 1, got {h.num_samples}")
    if h.num_classes < 2:
        report.add("num_classes", f"must be >= 2, got {h.num_classes}")

    probs = pset.probs
    if probs.ndim != 2 or probs.shape != (h.num_samples, h.num_classes):
        report.add(
            "probs",
            f"shape {probs.shape} does not match header "
            f"({h.num_samples}, {h.num_classes})",
        )
        return report

    finite = np.isfinite(probs)
    if not finite.all():
        rows = np.unique(np.nonzero(~finite)[0]).tolist()
        report.add("probs", "NaN or Inf entries", rows)
        # range/sum checks on non-finite data would only duplicate noise
        probs = np.where(finite, probs, 0.0)

    in_range = (probs >= 0.0) & (probs <= 1.0)
    if not in_range.all():
        rows = np.unique(np.nonzero(~in_range)[0]).tolist()
        report.add("probs", "entries outside [0, 1]", rows)

    sums = probs.sum(axis=1, dtype=np.float64)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    if bad.any():
        rows = np.nonzero(bad)[0].tolist()
        report.add("probs", f"row sums deviate from 1 by more than {ROW_SUM_TOL}", rows)

    if h.has_labels and pset.labels is None:
        report.add("labels", "header declares labels but none are present")
    elif not h.has_labels and pset.labels is not None:
        report.add("labels", "labels present but header declares none")
    elif pset.labels is not None:
        labels = pset.labels
        if labels.shape != (h.num_samples,):
            report.add("labels", f"length {labels.shape} does not match N={h.num_samples}")
        else:
            bad = labels >= h.num_classes
            if bad.any():
                rows = np.nonzero(bad)[0].tolist()
                report.add("labels", f"class indices outside [0, {h.num_classes})", rows)

    return report


def _header_bytes(header: PredictionHeader) -> bytes:
    return json.dumps(header.to_dict(), separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def write_predictions(pset: PredictionSet) -> bytes:
    """Serialize a valid set to EIPRED1 bytes; reading them back is bit-exact."""
    report = validate(pset)
    if not report.ok:
        raise ValidationFailure(report)

    hdr = _header_bytes(pset.header)
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", len(hdr)))
    out.write(hdr)
    if pset.header.has_labels:
        out.write(pset.labels.astype("<u4", copy=False).tobytes())
    out.write(pset.probs.astype("<f4", copy=False).tobytes())
    return out.getvalue()


def read_predictions(data: bytes) -> PredictionSet:
    """Parse EIPRED1 bytes; the returned set passes validation or this raises."""
    if len(data) < len(MAGIC):
        raise TruncatedStreamError(f"stream of {len(data)} bytes is shorter than the magic")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    if len(data) < 12:
        raise TruncatedStreamError("stream ends inside the header-length word")

    (hlen,) = struct.unpack_from("<I", data, 8)
    if len(data) < 12 + hlen:
        raise TruncatedStreamError(
            f"declared header length {hlen} exceeds remaining {len(data) - 12} bytes"
        )
    try:
        raw = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError("header JSON must be an object")

    unknown = set(raw) - set(_HEADER_FIELDS)
    if unknown:
        raise FormatError(f"unknown header fields: {sorted(unknown)}")
    missing = set(_HEADER_FIELDS) - {"metadata"} - set(raw)
    if missing:
        raise FormatError(f"missing header fields: {sorted(missing)}")
    header = PredictionHeader(
        model_id=raw["model_id"],
        dataset_id=raw["dataset_id"],
        transform=raw["transform"],
        num_samples=raw["num_samples"],
        num_classes=raw["num_classes"],
        has_labels=raw["has_labels"],
        format_version=raw["format_version"],
        metadata=raw.get("metadata", ""),
    )

    n, k = header.num_samples, header.num_classes
    if not (isinstance(n, int) and isinstance(k, int)) or n < 0 or k < 0:
        raise FormatError(f"num_samples/num_classes must be non-negative integers, got {n!r}/{k!r}")
    body = data[12 + hlen :]
    expected = n * k * 4 + (n * 4 if header.has_labels else 0)
    if len(body) < expected:
        raise TruncatedStreamError(f"payload has {len(body)} bytes, expected {expected}")
    if len(body) > expected:
        raise HeaderPayloadMismatchError(
            f"payload has {len(body)} bytes, header declares {expected}"
        )

    offset = 0
    labels = None
    if header.has_labels:
        labels = np.frombuffer(body, dtype="<u4", count=n, offset=0)
        offset = n * 4
    probs = np.frombuffer(body, dtype="<f4", count=n * k, offset=offset).reshape(n, k)

    pset = PredictionSet(header=header, probs=probs, labels=labels)
    report = validate(pset)
    if not report.ok:
        raise ValidationFailure(report)
    return pset


def read_predictions_file(path) -> PredictionSet:
    with open(path, "rb") as fh:
        return read_predictions(fh.read())


def write_predictions_file(pset: PredictionSet, path) -> None:
    data = write_predictions(pset)
    with open(path, "wb") as fh:
        fh.write(data)


def read_csv_predictions(path, model_id, dataset_id, transform) -> PredictionSet:
    """Import the hand-written CSV fixture format.

    First row holds the two integers N,K; each following row holds K
    probabilities and, optionally, one trailing integer label. Either
    every row carries a label or none does.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    try:
        n, k = (int(cell) for cell in rows[0][:2])
    except ValueError as exc:
        raise FormatError(f"{path}: first row must be the two integers N,K") from exc
    if len(rows) - 1 != n:
        raise FormatError(f"{path}: header declares {n} rows, found {len(rows) - 1}")

    has_labels = len(rows[1]) == k + 1 if n else False
    probs = np.empty((n, k), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint32) if has_labels else None
    for i, row in enumerate(rows[1:]):
        want = k + 1 if has_labels else k
        if len(row) != want:
            raise FormatError(f"{path}: row {i} has {len(row)} fields, expected {want}")
        probs[i] = [float(cell) for cell in row[:k]]
        if has_labels:
            labels[i] = int(row[k])

    header = PredictionHeader(
        model_id=model_id,
        dataset_id=dataset_id,
        transform=transform,
        num_samples=n,
        num_classes=k,
        has_labels=has_labels,
    )
    pset = PredictionSet(header=header, probs=probs, labels=labels)
    report = validate(pset)
    if not report.ok:
        raise ValidationFailure(report)
    return pset


def pair(original: PredictionSet, transformed: PredictionSet) -> PairedPredictions:
    """Pair an identity dump with a transformed dump of the same samples."""
    for pset, name in ((original, "original"), (transformed, "transformed")):
        report = validate(pset)
        if not report.ok:
            raise ValidationFailure(report)

    ho, ht = original.header, transformed.header
    for fname in ("num_samples", "num_classes", "model_id", "dataset_id"):
        vo, vt = getattr(ho, fname), getattr(ht, fname)
        if vo != vt:
            raise PairingMismatchError(fname, f"{vo!r} vs {vt!r}")
    if ho.transform != IDENTITY:
        raise PairingMismatchError(
            "transform", f"original must be tagged {IDENTITY!r}, got {ho.transform!r}"
        )
    if ht.transform == IDENTITY:
        raise PairingMismatchError(
            "transform", f"transformed must not be tagged {IDENTITY!r}"
        )
    return PairedPredictions(original=original, transformed=transformed)
