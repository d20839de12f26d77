"""Binary feature-file format: exact byte layout, round trips, and the
rejection paths for corrupted inputs."""

import struct

import numpy as np
import pytest

from raad.errors import ConfigError, DimensionError, FormatError
from raad.features import (
    FORMAT_VERSION,
    LABEL_ID,
    LABEL_OOD,
    LABEL_UNLABELED,
    LABELS_FLAG,
    MAGIC,
    FeatureDataset,
    Manifest,
    ManifestEntry,
    label_code,
    label_name,
    load_split,
    read_features,
    read_manifest,
    write_features,
    write_manifest,
)


def roundtrip(dataset, tmp_path, name="data.rdaf", **read_kwargs):
    path = tmp_path / name
    write_features(dataset, path)
    return read_features(path, **read_kwargs)


# ---------------------------------------------------------------------------
# byte layout
# ---------------------------------------------------------------------------


def test_two_vectors_dim_three_unlabeled_is_forty_bytes(tmp_path):
    # 16-byte header + 2 * 3 * 4 payload bytes + 0 label bytes = 40.
    ds = FeatureDataset(np.zeros((2, 3), dtype=np.float32))
    path = tmp_path / "two.rdaf"
    n = write_features(ds, path)
    assert n == 40
    assert path.stat().st_size == 40


def test_header_fields_little_endian(tmp_path):
    ds = FeatureDataset(
        np.arange(6, dtype=np.float32).reshape(2, 3),
        labels=np.array([LABEL_ID, LABEL_OOD], dtype=np.uint8),
    )
    path = tmp_path / "hdr.rdaf"
    write_features(ds, path)
    blob = path.read_bytes()
    assert blob[:4] == MAGIC
    version, count, dim = struct.unpack("<III", blob[4:16])
    assert version == (FORMAT_VERSION | LABELS_FLAG)
    assert count == 2 and dim == 3
    np.testing.assert_array_equal(
        np.frombuffer(blob, dtype="<f4", count=6, offset=16).reshape(2, 3), ds.features
    )
    assert blob[16 + 24 :] == bytes([LABEL_ID, LABEL_OOD])
    assert len(blob) == 16 + 24 + 2


def test_unlabeled_file_has_no_labels_flag(tmp_path):
    ds = FeatureDataset(np.zeros((1, 2), dtype=np.float32))
    path = tmp_path / "u.rdaf"
    write_features(ds, path)
    (version,) = struct.unpack("<I", path.read_bytes()[4:8])
    assert version == FORMAT_VERSION
    assert not version & LABELS_FLAG


# ---------------------------------------------------------------------------
# round trips
# ---------------------------------------------------------------------------


def test_empty_dataset_round_trips(tmp_path):
    ds = FeatureDataset(np.zeros((0, 5), dtype=np.float32))
    back = roundtrip(ds, tmp_path)
    assert back.n == 0 and back.dim == 5
    assert back.labels is None


def test_large_dataset_round_trips_bit_exact(tmp_path):
    rng = np.random.default_rng(17)
    feats = rng.standard_normal((1000, 512)).astype(np.float32)
    back = roundtrip(FeatureDataset(feats), tmp_path)
    assert back.features.dtype == np.float32
    np.testing.assert_array_equal(back.features, feats)


def test_labels_round_trip(tmp_path):
    labels = np.array([LABEL_ID, LABEL_OOD, LABEL_UNLABELED, LABEL_ID], dtype=np.uint8)
    ds = FeatureDataset(np.ones((4, 2), dtype=np.float32), labels=labels)
    back = roundtrip(ds, tmp_path)
    np.testing.assert_array_equal(back.labels, labels)
    assert back.label_names() == ["ID", "OOD", None, "ID"]


def test_split_and_source_tags_pass_through(tmp_path):
    ds = FeatureDataset(np.zeros((1, 1), dtype=np.float32))
    back = roundtrip(ds, tmp_path, split="val", source_name="bench")
    assert back.split == "val" and back.source == "bench"


def test_random_datasets_round_trip_property(tmp_path):
    rng = np.random.default_rng(99)
    for trial in range(50):
        n = int(rng.integers(0, 20))
        dim = int(rng.integers(1, 12))
        feats = rng.standard_normal((n, dim)).astype(np.float32)
        labels = None
        if rng.random() < 0.5:
            labels = rng.choice(
                [LABEL_ID, LABEL_OOD, LABEL_UNLABELED], size=n
            ).astype(np.uint8)
        ds = FeatureDataset(feats, labels=labels)
        back = roundtrip(ds, tmp_path, name=f"t{trial}.rdaf")
        np.testing.assert_array_equal(back.features, feats)
        if labels is None:
            assert back.labels is None
        else:
            np.testing.assert_array_equal(back.labels, labels)


def test_write_returns_byte_count(tmp_path):
    ds = FeatureDataset(
        np.zeros((7, 4), dtype=np.float32), labels=np.zeros(7, dtype=np.uint8)
    )
    n = write_features(ds, tmp_path / "c.rdaf")
    assert n == 16 + 7 * 4 * 4 + 7


# ---------------------------------------------------------------------------
# rejection paths
# ---------------------------------------------------------------------------


def write_raw(tmp_path, blob, name="bad.rdaf"):
    path = tmp_path / name
    path.write_bytes(blob)
    return path


def test_bad_magic_rejected(tmp_path):
    path = write_raw(tmp_path, b"XXXX" + struct.pack("<III", FORMAT_VERSION, 0, 1))
    with pytest.raises(FormatError, match="magic"):
        read_features(path)


def test_unknown_version_rejected(tmp_path):
    path = write_raw(tmp_path, MAGIC + struct.pack("<III", 99, 0, 1))
    with pytest.raises(FormatError, match="version"):
        read_features(path)


def test_truncated_header_rejected(tmp_path):
    path = write_raw(tmp_path, MAGIC + b"\x01\x00")
    with pytest.raises(FormatError, match="truncated"):
        read_features(path)


def test_declared_ten_vectors_but_nine_present_rejected(tmp_path):
    payload = np.zeros((9, 2), dtype="<f4").tobytes()
    path = write_raw(tmp_path, MAGIC + struct.pack("<III", FORMAT_VERSION, 10, 2) + payload)
    with pytest.raises(FormatError, match="truncated payload, expected 96 bytes, got 88"):
        read_features(path)


def test_trailing_bytes_rejected(tmp_path):
    payload = np.zeros((2, 2), dtype="<f4").tobytes()
    blob = MAGIC + struct.pack("<III", FORMAT_VERSION, 2, 2) + payload + b"xx"
    with pytest.raises(FormatError, match="trailing"):
        read_features(write_raw(tmp_path, blob))


def test_zero_dimension_rejected(tmp_path):
    path = write_raw(tmp_path, MAGIC + struct.pack("<III", FORMAT_VERSION, 0, 0))
    with pytest.raises(FormatError, match="dimension"):
        read_features(path)


def test_non_finite_payload_rejected(tmp_path):
    feats = np.array([[1.0, np.inf]], dtype="<f4")
    blob = MAGIC + struct.pack("<III", FORMAT_VERSION, 1, 2) + feats.tobytes()
    with pytest.raises(FormatError, match="non-finite"):
        read_features(write_raw(tmp_path, blob))


def test_bad_label_byte_rejected(tmp_path):
    payload = np.zeros((1, 1), dtype="<f4").tobytes()
    blob = (
        MAGIC
        + struct.pack("<III", FORMAT_VERSION | LABELS_FLAG, 1, 1)
        + payload
        + bytes([7])
    )
    with pytest.raises(FormatError):
        read_features(write_raw(tmp_path, blob))


# ---------------------------------------------------------------------------
# dataset construction / helpers
# ---------------------------------------------------------------------------


def test_dataset_rejects_bad_shapes_and_values():
    with pytest.raises(DimensionError):
        FeatureDataset(np.zeros(3, dtype=np.float32))
    with pytest.raises(DimensionError):
        FeatureDataset(np.zeros((2, 0), dtype=np.float32))
    with pytest.raises(ConfigError):
        FeatureDataset(np.array([[np.nan]], dtype=np.float32))
    with pytest.raises(DimensionError):
        FeatureDataset(np.zeros((2, 2)), labels=np.zeros(3, dtype=np.uint8))
    with pytest.raises(ConfigError):
        FeatureDataset(np.zeros((1, 1)), labels=np.array([4], dtype=np.uint8))
    with pytest.raises(ConfigError):
        FeatureDataset(np.zeros((1, 1)), split="holdout")


def test_mask_and_subset():
    ds = FeatureDataset(
        np.arange(8, dtype=np.float32).reshape(4, 2),
        labels=np.array([LABEL_ID, LABEL_OOD, LABEL_ID, LABEL_UNLABELED], dtype=np.uint8),
    )
    np.testing.assert_array_equal(ds.mask("ID"), [True, False, True, False])
    np.testing.assert_array_equal(ds.mask("OOD"), [False, True, False, False])
    sub = ds.subset(ds.mask("ID"))
    assert sub.n == 2
    np.testing.assert_array_equal(sub.features, ds.features[[0, 2]])
    np.testing.assert_array_equal(sub.labels, [LABEL_ID, LABEL_ID])


def test_mask_is_all_false_without_labels():
    ds = FeatureDataset(np.zeros((3, 2), dtype=np.float32))
    np.testing.assert_array_equal(ds.mask("ID"), np.zeros(3, dtype=bool))


def test_label_code_name_round_trip():
    assert label_code("ID") == LABEL_ID
    assert label_code("OOD") == LABEL_OOD
    assert label_code(None) == LABEL_UNLABELED
    assert label_name(LABEL_ID) == "ID"
    assert label_name(LABEL_UNLABELED) is None
    with pytest.raises(ConfigError):
        label_code("weird")


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


def make_manifest_dir(tmp_path):
    rng = np.random.default_rng(5)
    entries = []
    for split, n in [("train", 6), ("val", 4), ("test", 3)]:
        ds = FeatureDataset(
            rng.standard_normal((n, 3)).astype(np.float32),
            labels=np.zeros(n, dtype=np.uint8),
            split=split,
        )
        write_features(ds, tmp_path / f"{split}.rdaf")
        entries.append(
            ManifestEntry(path=f"{split}.rdaf", split=split, source="synthetic", count=n, dim=3)
        )
    write_manifest(Manifest(entries), tmp_path / "manifest.json")
    return tmp_path / "manifest.json"


def test_manifest_round_trip_and_load_split(tmp_path):
    mpath = make_manifest_dir(tmp_path)
    manifest = read_manifest(mpath)
    assert [e.split for e in manifest.entries] == ["train", "val", "test"]
    ds = load_split(mpath, "val")
    assert ds.n == 4 and ds.dim == 3 and ds.split == "val"
    assert ds.source == "synthetic"


def test_load_split_missing_split_rejected(tmp_path):
    mpath = make_manifest_dir(tmp_path)
    with pytest.raises(ConfigError, match="holdout"):
        Manifest(read_manifest(mpath).entries).for_split("holdout")


def test_load_split_count_mismatch_rejected(tmp_path):
    mpath = make_manifest_dir(tmp_path)
    # Rewrite the val file with one fewer vector than the manifest declares.
    ds = FeatureDataset(np.zeros((3, 3), dtype=np.float32), labels=np.zeros(3, dtype=np.uint8))
    write_features(ds, tmp_path / "val.rdaf")
    with pytest.raises(FormatError, match="manifest declares"):
        load_split(mpath, "val")


def test_manifest_rejects_bad_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(FormatError, match="JSON"):
        read_manifest(path)
    path.write_text('{"a": 1}', encoding="utf-8")
    with pytest.raises(FormatError, match="list"):
        read_manifest(path)
    path.write_text('[{"path": "x"}]', encoding="utf-8")
    with pytest.raises(FormatError, match="entry 0"):
        read_manifest(path)


def test_duplicate_split_entries_rejected():
    entries = [
        ManifestEntry("a.rdaf", "val", "s", 1, 2),
        ManifestEntry("b.rdaf", "val", "s", 1, 2),
    ]
    with pytest.raises(ConfigError, match="2 entries"):
        Manifest(entries).for_split("val")
