"""Synthetic ID/OOD benchmark generation: moment checks against the stated
distributions, exact transform arithmetic, determinism, and file output."""

import numpy as np
import pytest

from raad.errors import ConfigError
from raad.features import load_split
from raad.synthetic import (
    GaussianMixture,
    IsotropicGaussian,
    MeanShift,
    ScaleShift,
    SubspaceOffset,
    SyntheticSpec,
    default_benchmark_spec,
    generate,
    write_benchmark,
)


# ---------------------------------------------------------------------------
# composition of the splits
# ---------------------------------------------------------------------------


def test_default_benchmark_shapes_and_label_counts():
    data = generate(default_benchmark_spec())
    assert set(data) == {"train", "val", "test"}
    train, val, test = data["train"], data["val"], data["test"]
    assert train.features.shape == (2000, 16)
    assert val.features.shape == (600, 16)
    assert test.features.shape == (1200, 16)
    assert train.features.dtype == np.float32
    assert int(train.mask("ID").sum()) == 2000 and int(train.mask("OOD").sum()) == 0
    assert int(val.mask("ID").sum()) == 400 and int(val.mask("OOD").sum()) == 200
    assert int(test.mask("ID").sum()) == 800 and int(test.mask("OOD").sum()) == 400
    assert train.split == "train" and val.split == "val" and test.split == "test"
    for ds in data.values():
        assert ds.source == default_benchmark_spec().describe()


def test_zero_ood_counts_give_pure_id_splits():
    spec = SyntheticSpec(n_val_ood=0, n_test_ood=0)
    data = generate(spec)
    assert int(data["val"].mask("OOD").sum()) == 0
    assert int(data["test"].mask("OOD").sum()) == 0
    assert data["val"].n == spec.n_val_id


def test_splits_are_shuffled():
    # Labels must not come out as one contiguous ID block then an OOD block.
    val = generate(default_benchmark_spec())["val"]
    first_block = val.labels[:400]
    assert int(first_block.sum()) > 0  # some OOD landed in the first 400 rows


# ---------------------------------------------------------------------------
# distribution checks
# ---------------------------------------------------------------------------


def test_isotropic_moments():
    spec = SyntheticSpec(dim=16, n_train=10_000, seed=1)
    train = generate(spec)["train"]
    means = train.features.mean(axis=0)
    stds = train.features.std(axis=0)
    assert np.all(np.abs(means) <= 0.05)
    np.testing.assert_allclose(stds, 1.0, rtol=0.05)


def test_isotropic_scale_parameter():
    spec = SyntheticSpec(dim=8, n_train=10_000, id_kind=IsotropicGaussian(scale=2.5), seed=2)
    train = generate(spec)["train"]
    np.testing.assert_allclose(train.features.std(axis=0), 2.5, rtol=0.05)


def test_mixture_spreads_the_population():
    spec = SyntheticSpec(
        dim=4, n_train=10_000, id_kind=GaussianMixture(k=3, spread=5.0), seed=3
    )
    train = generate(spec)["train"]
    # Pooled variance = within-component (1) + between-component spread.
    assert float(train.features.std()) > 2.0


def test_mean_shift_moves_mean_by_delta_euclidean():
    spec = SyntheticSpec(dim=16, n_test_id=4000, n_test_ood=4000, seed=4)
    test = generate(spec)["test"]
    id_mean = test.features[test.mask("ID")].mean(axis=0)
    ood_mean = test.features[test.mask("OOD")].mean(axis=0)
    gap = ood_mean - id_mean
    # shift of delta / sqrt(dim) per coordinate, Euclidean length delta = 2
    np.testing.assert_allclose(gap, 2.0 / 4.0, atol=0.1)
    assert np.linalg.norm(gap) == pytest.approx(2.0, abs=0.2)


def test_scale_shift_multiplies_spread():
    spec = SyntheticSpec(
        dim=8, n_test_id=5000, n_test_ood=5000, ood_kind=ScaleShift(gamma=1.5), seed=5
    )
    test = generate(spec)["test"]
    id_std = test.features[test.mask("ID")].std()
    ood_std = test.features[test.mask("OOD")].std()
    assert ood_std / id_std == pytest.approx(1.5, rel=0.05)


def test_subspace_offset_shifts_one_axis_only():
    spec = SyntheticSpec(
        dim=6,
        n_test_id=5000,
        n_test_ood=5000,
        ood_kind=SubspaceOffset(axis=2, delta=3.0),
        seed=6,
    )
    test = generate(spec)["test"]
    gap = test.features[test.mask("OOD")].mean(axis=0) - test.features[
        test.mask("ID")
    ].mean(axis=0)
    assert gap[2] == pytest.approx(3.0, abs=0.15)
    others = np.delete(gap, 2)
    assert np.all(np.abs(others) < 0.15)


def test_zero_shift_makes_ood_distributionally_identical():
    # delta = 0: the OOD block is another draw from the ID law; population
    # moments agree within Monte Carlo error.
    spec = SyntheticSpec(
        dim=8, n_test_id=8000, n_test_ood=8000, ood_kind=MeanShift(delta=0.0), seed=7
    )
    test = generate(spec)["test"]
    id_block = test.features[test.mask("ID")]
    ood_block = test.features[test.mask("OOD")]
    np.testing.assert_allclose(id_block.mean(axis=0), ood_block.mean(axis=0), atol=0.06)
    np.testing.assert_allclose(id_block.std(axis=0), ood_block.std(axis=0), rtol=0.06)


def test_unit_scale_shift_is_also_identity_in_law():
    spec = SyntheticSpec(
        dim=4, n_test_id=6000, n_test_ood=6000, ood_kind=ScaleShift(gamma=1.0), seed=8
    )
    test = generate(spec)["test"]
    id_block = test.features[test.mask("ID")]
    ood_block = test.features[test.mask("OOD")]
    np.testing.assert_allclose(id_block.std(axis=0), ood_block.std(axis=0), rtol=0.06)


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------


def test_same_spec_and_seed_is_bit_identical():
    a = generate(SyntheticSpec(seed=11))
    b = generate(SyntheticSpec(seed=11))
    for split in ("train", "val", "test"):
        np.testing.assert_array_equal(a[split].features, b[split].features)
        np.testing.assert_array_equal(a[split].labels, b[split].labels)


def test_different_seed_changes_the_data():
    a = generate(SyntheticSpec(seed=11))["train"]
    b = generate(SyntheticSpec(seed=12))["train"]
    assert not np.array_equal(a.features, b.features)


def test_write_benchmark_regeneration_is_byte_identical(tmp_path):
    spec = SyntheticSpec(n_train=50, n_val_id=20, n_val_ood=10, n_test_id=20, n_test_ood=10)
    paths = write_benchmark(spec, tmp_path / "bench")
    first = {k: open(p, "rb").read() for k, p in paths.items()}
    paths2 = write_benchmark(spec, tmp_path / "bench")
    assert paths2 == paths
    for k, p in paths.items():
        assert open(p, "rb").read() == first[k]


def test_write_benchmark_files_load_through_manifest(tmp_path):
    spec = SyntheticSpec(n_train=30, n_val_id=10, n_val_ood=5, n_test_id=10, n_test_ood=5)
    paths = write_benchmark(spec, tmp_path / "bench")
    assert set(paths) == {"train", "val", "test", "manifest"}
    train = load_split(paths["manifest"], "train")
    assert train.n == 30 and train.split == "train"
    val = load_split(paths["manifest"], "val")
    assert int(val.mask("OOD").sum()) == 5
    assert val.source == spec.describe()


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_spec_validation_names_the_offending_field():
    with pytest.raises(ConfigError, match="dim"):
        SyntheticSpec(dim=0)
    with pytest.raises(ConfigError, match="n_train"):
        SyntheticSpec(n_train=-1)
    with pytest.raises(ConfigError, match="n_val_ood"):
        SyntheticSpec(n_val_ood=-5)
    with pytest.raises(ConfigError, match="scale"):
        SyntheticSpec(id_kind=IsotropicGaussian(scale=0.0))
    with pytest.raises(ConfigError, match="k must"):
        SyntheticSpec(id_kind=GaussianMixture(k=0))
    with pytest.raises(ConfigError, match="delta"):
        SyntheticSpec(ood_kind=MeanShift(delta=-1.0))
    with pytest.raises(ConfigError, match="gamma"):
        SyntheticSpec(ood_kind=ScaleShift(gamma=0.0))
    with pytest.raises(ConfigError, match="axis"):
        SyntheticSpec(dim=4, ood_kind=SubspaceOffset(axis=4))
    with pytest.raises(ConfigError, match="id_kind"):
        SyntheticSpec(id_kind=MeanShift())  # an OOD transform is not an ID source


def test_describe_mentions_both_kinds_and_seed():
    text = SyntheticSpec(seed=42).describe()
    assert "seed=42" in text
    assert "IsotropicGaussian" in text and "MeanShift" in text
