"""Container format, validation, and pairing behavior."""

import json
import struct

import numpy as np
import pytest

from eibench import (
    BadMagicError,
    FormatError,
    HeaderPayloadMismatchError,
    MAGIC,
    PairingMismatchError,
    PredictionSet,
    TruncatedStreamError,
    ValidationFailure,
    pair,
    read_csv_predictions,
    read_predictions,
    read_predictions_file,
    validate,
    write_predictions,
    write_predictions_file,
)
from helpers import make_pset, random_pair_sets, random_probs, random_pset


def test_roundtrip_bit_exact_randomized():
    rng = np.random.default_rng(101)
    for n, k, labeled in [(1, 2, False), (3, 5, True), (17, 4, True), (64, 11, False)]:
        pset = random_pset(rng, n, k, labels=labeled)
        data = write_predictions(pset)
        back = read_predictions(data)
        assert np.array_equal(back.probs, pset.probs)
        if labeled:
            assert np.array_equal(back.labels, pset.labels)
        else:
            assert back.labels is None
        assert back.header == pset.header
        # write o read o write is byte-stable
        assert write_predictions(back) == data


def test_minimal_unlabeled_byte_layout():
    pset = make_pset([[1.0, 0.0]])
    data = write_predictions(pset)
    assert data[:8] == MAGIC
    (hlen,) = struct.unpack_from("<I", data, 8)
    assert len(data) == 12 + hlen + 8  # N*K*4 = 1*2*4 payload bytes
    header = json.loads(data[12 : 12 + hlen])
    assert header["num_samples"] == 1 and header["num_classes"] == 2
    assert not header["has_labels"]


def test_labels_section_precedes_probs():
    pset = make_pset([[0.5, 0.25, 0.25], [0.1, 0.2, 0.7]], labels=[0, 2])
    data = write_predictions(pset)
    (hlen,) = struct.unpack_from("<I", data, 8)
    body = data[12 + hlen :]
    assert len(body) == 8 + 24
    assert np.frombuffer(body[:8], dtype="<u4").tolist() == [0, 2]
    probs = np.frombuffer(body[8:], dtype="<f4").reshape(2, 3)
    assert probs[1, 2] == np.float32(0.7)


def test_header_is_canonical_and_compact():
    pset = make_pset([[0.5, 0.5]], metadata="abc")
    data = write_predictions(pset)
    (hlen,) = struct.unpack_from("<I", data, 8)
    raw = data[12 : 12 + hlen].decode()
    assert raw.startswith('{"format_version":')
    assert ": " not in raw and ", " not in raw
    assert list(json.loads(raw)) == [
        "format_version", "model_id", "dataset_id", "transform",
        "num_samples", "num_classes", "has_labels", "metadata",
    ]


def test_bad_row_sum_rejected_with_row_index():
    pset = make_pset([[0.5, 0.4]])  # sums to 0.9
    with pytest.raises(ValidationFailure) as exc:
        write_predictions(pset)
    (violation,) = exc.value.report.violations
    assert violation.rows == [0]


def test_bad_magic():
    with pytest.raises(BadMagicError):
        read_predictions(b"XXPRED1\n" + b"\0" * 32)


def test_truncated_stream_variants():
    data = write_predictions(make_pset([[0.5, 0.5]], labels=[1]))
    with pytest.raises(TruncatedStreamError):
        read_predictions(data[:4])  # inside the magic
    with pytest.raises(TruncatedStreamError):
        read_predictions(data[:10])  # inside the length word
    with pytest.raises(TruncatedStreamError):
        read_predictions(data[:-1])  # payload short by one byte


def test_payload_longer_than_declared():
    data = write_predictions(make_pset([[0.5, 0.5]]))
    with pytest.raises(HeaderPayloadMismatchError):
        read_predictions(data + b"\0\0\0\0")


def test_header_json_errors():
    good = write_predictions(make_pset([[0.5, 0.5]]))
    (hlen,) = struct.unpack_from("<I", good, 8)
    body = good[12 + hlen :]

    def rebuild(header_obj):
        hdr = json.dumps(header_obj, separators=(",", ":")).encode()
        return MAGIC + struct.pack("<I", len(hdr)) + hdr + body

    base = json.loads(good[12 : 12 + hlen])
    with pytest.raises(FormatError, match="unknown"):
        read_predictions(rebuild({**base, "extra": 1}))
    missing = dict(base)
    del missing["num_classes"]
    with pytest.raises(FormatError, match="missing"):
        read_predictions(rebuild(missing))
    with pytest.raises(FormatError, match="JSON"):
        read_predictions(MAGIC + struct.pack("<I", 3) + b"{x}" + body)
    with pytest.raises(FormatError, match="object"):
        read_predictions(MAGIC + struct.pack("<I", 2) + b"[]" + body)
    with pytest.raises(FormatError, match="integer"):
        read_predictions(rebuild({**base, "num_samples": "1"}))


def test_metadata_field_roundtrips_and_is_optional():
    pset = make_pset([[0.5, 0.5]], metadata="files:3;hash:abc123")
    back = read_predictions(write_predictions(pset))
    assert back.header.metadata == "files:3;hash:abc123"

    # a header written without metadata is still accepted
    data = write_predictions(make_pset([[0.5, 0.5]]))
    (hlen,) = struct.unpack_from("<I", data, 8)
    header = json.loads(data[12 : 12 + hlen])
    del header["metadata"]
    hdr = json.dumps(header, separators=(",", ":")).encode()
    rebuilt = MAGIC + struct.pack("<I", len(hdr)) + hdr + data[12 + hlen :]
    assert read_predictions(rebuilt).header.metadata == ""


def test_row_sum_within_tolerance_passes():
    pset = make_pset([[0.50005, 0.5]])  # off by 5e-5 < 1e-4
    assert validate(pset).ok


def test_validate_reports_nan_row():
    probs = random_probs(np.random.default_rng(0), 6, 4)
    probs[3, 1] = np.nan
    report = validate(make_pset(probs))
    assert not report.ok
    assert any(v.rows == [3] and "NaN" in v.message for v in report.violations)


def test_validate_finds_exactly_the_planted_violation():
    rng = np.random.default_rng(7)

    def fresh():
        return random_pset(rng, 8, 5, labels=True)

    # each perturbation plants one violation; validate must flag that field
    def plant_negative(ps):
        probs = np.array(ps.probs, dtype=np.float64)
        shift = probs[2, 0] + 0.01
        probs[2, 0] = -0.01
        probs[2, 1] += shift  # row sum stays 1, only the range check fires
        return make_pset(probs, labels=np.array(ps.labels)), "probs"

    def plant_over_one(ps):
        probs = np.array(ps.probs, dtype=np.float64)
        probs[1] = 0.0
        probs[1, 0] = 1.5
        probs[1, 1] = -0.5
        return make_pset(probs, labels=np.array(ps.labels)), "probs"

    def plant_inf(ps):
        probs = np.array(ps.probs, dtype=np.float64)
        probs[4, 2] = np.inf
        return make_pset(probs, labels=np.array(ps.labels)), "probs"

    def plant_row_sum(ps):
        probs = np.array(ps.probs, dtype=np.float64)
        probs[5] = probs[5] * 0.98
        return make_pset(probs, labels=np.array(ps.labels)), "probs"

    def plant_label_range(ps):
        labels = np.array(ps.labels)
        labels[0] = 5
        return make_pset(np.array(ps.probs, dtype=np.float64), labels=labels), "labels"

    def plant_bad_tag(ps):
        out = make_pset(np.array(ps.probs, dtype=np.float64), labels=np.array(ps.labels))
        out.header.transform = "rot45"
        return out, "transform"

    def plant_empty_model(ps):
        out = make_pset(np.array(ps.probs, dtype=np.float64), labels=np.array(ps.labels))
        out.header.model_id = ""
        return out, "model_id"

    def plant_shape_mismatch(ps):
        out = make_pset(np.array(ps.probs, dtype=np.float64), labels=np.array(ps.labels))
        out.header.num_samples = 9
        return out, "probs"

    def plant_missing_labels(ps):
        out = make_pset(np.array(ps.probs, dtype=np.float64))
        out.header.has_labels = True
        return out, "labels"

    def plant_undeclared_labels(ps):
        out = make_pset(np.array(ps.probs, dtype=np.float64), labels=np.array(ps.labels))
        out.header.has_labels = False
        return out, "labels"

    plants = [
        plant_negative, plant_over_one, plant_inf, plant_row_sum,
        plant_label_range, plant_bad_tag, plant_empty_model,
        plant_shape_mismatch, plant_missing_labels, plant_undeclared_labels,
    ]
    for plant in plants:
        ps = fresh()
        assert validate(ps).ok
        bad, expect_field = plant(ps)
        report = validate(bad)
        assert not report.ok, plant.__name__
        assert {v.field for v in report.violations} == {expect_field}, plant.__name__


def test_pair_accepts_matching_sets():
    rng = np.random.default_rng(3)
    orig, trans = random_pair_sets(rng, 10, 4)
    pp = pair(orig, trans)
    assert pp.original is orig and pp.transformed is trans


@pytest.mark.parametrize("fname", ["num_samples", "num_classes", "model_id", "dataset_id"])
def test_pair_mismatch_names_field(fname):
    rng = np.random.default_rng(4)
    orig, _ = random_pair_sets(rng, 10, 4)
    tweaks = {"num_samples": (9, 4), "num_classes": (10, 3)}
    if fname in tweaks:
        n, k = tweaks[fname]
        trans = random_pset(rng, n, k, transform="rot90")
    else:
        trans = random_pset(rng, 10, 4, transform="rot90",
                            **{fname: "other"})
    with pytest.raises(PairingMismatchError) as exc:
        pair(orig, trans)
    assert exc.value.field == fname


def test_pair_tag_rules_and_swap_symmetry():
    rng = np.random.default_rng(5)
    orig, trans = random_pair_sets(rng, 6, 3)
    with pytest.raises(PairingMismatchError) as exc:
        pair(orig, orig)  # both identity
    assert exc.value.field == "transform"
    with pytest.raises(PairingMismatchError) as exc:
        pair(trans, orig)  # swapped roles never silently succeed
    assert exc.value.field == "transform"
    with pytest.raises(PairingMismatchError):
        pair(trans, trans)


def test_pair_validates_inputs():
    rng = np.random.default_rng(6)
    orig, trans = random_pair_sets(rng, 6, 3)
    probs = np.array(orig.probs, dtype=np.float64)
    probs[0] *= 0.5
    bad = make_pset(probs, labels=np.array(orig.labels))
    with pytest.raises(ValidationFailure):
        pair(bad, trans)


def test_file_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    pset = random_pset(rng, 12, 6, labels=True)
    path = tmp_path / "dump.pred"
    write_predictions_file(pset, path)
    back = read_predictions_file(path)
    assert np.array_equal(back.probs, pset.probs)
    assert np.array_equal(back.labels, pset.labels)


def test_csv_import_with_labels(tmp_path):
    path = tmp_path / "fixture.csv"
    path.write_text("2,3\n0.5,0.25,0.25,0\n0.1,0.2,0.7,2\n")
    pset = read_csv_predictions(path, "m0", "d0", "identity")
    assert pset.header.num_samples == 2 and pset.header.num_classes == 3
    assert pset.header.has_labels
    assert pset.labels.tolist() == [0, 2]
    assert pset.probs[1, 2] == np.float32(0.7)


def test_csv_import_without_labels(tmp_path):
    path = tmp_path / "fixture.csv"
    path.write_text("2,2\n0.5,0.5\n1.0,0.0\n")
    pset = read_csv_predictions(path, "m0", "d0", "rot90")
    assert not pset.header.has_labels and pset.labels is None
    assert pset.header.transform == "rot90"


def test_csv_import_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("2,2\n0.5,0.5\n")
    with pytest.raises(FormatError, match="declares 2 rows"):
        read_csv_predictions(path, "m", "d", "identity")
    path.write_text("x,2\n")
    with pytest.raises(FormatError, match="N,K"):
        read_csv_predictions(path, "m", "d", "identity")
    path.write_text("1,3\n0.5,0.5\n")
    with pytest.raises(FormatError, match="fields"):
        read_csv_predictions(path, "m", "d", "identity")
    path.write_text("1,2\n0.9,0.2\n")  # sums to 1.1
    with pytest.raises(ValidationFailure):
        read_csv_predictions(path, "m", "d", "identity")


def test_prediction_set_arrays_are_read_only():
    pset = make_pset([[0.5, 0.5]], labels=[1])
    with pytest.raises(ValueError):
        pset.probs[0, 0] = 0.0
    with pytest.raises(ValueError):
        pset.labels[0] = 0
