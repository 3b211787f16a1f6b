import numpy as np
import pytest

from propforge import dataset as dm
from propforge import hydro
from propforge.dataset import (
    DEFAULT_RANGES,
    DatasetFormatError,
    DesignRecord,
    LabeledDataset,
    fit_norm,
    generate_dataset,
    lhs_sample,
    load_dataset,
    save_dataset,
    split,
)
from propforge.geometry import DesignVector
from propforge.hydro import LabelVector


class TestLhsSample:
    def test_single_sample_in_box(self):
        (design,) = lhs_sample(1, seed=0)
        assert design.n_blades in (2, 3, 4, 5)
        for name, (lo, hi) in DEFAULT_RANGES.items():
            assert lo <= getattr(design, name) <= hi

    def test_pitch_stratification_n4(self):
        designs = lhs_sample(4, seed=5)
        values = sorted(d.P for d in designs)
        edges = [0.5, 0.75, 1.0, 1.25, 1.5]
        for value, lo, hi in zip(values, edges[:-1], edges[1:]):
            assert lo <= value < hi

    def test_blade_counts_balanced_at_n100(self):
        designs = lhs_sample(100, seed=9)
        counts = {b: 0 for b in (2, 3, 4, 5)}
        for d in designs:
            counts[d.n_blades] += 1
        assert counts == {2: 25, 3: 25, 4: 25, 5: 25}

    @pytest.mark.parametrize("n", [3, 7, 16])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_marginal_stratification_every_dimension(self, n, seed):
        designs = lhs_sample(n, seed=seed)
        for name, (lo, hi) in DEFAULT_RANGES.items():
            strata = sorted(int((getattr(d, name) - lo) / (hi - lo) * n) for d in designs)
            assert strata == list(range(n))

    def test_range_override_respected(self):
        designs = lhs_sample(20, seed=3, ranges={"P": (0.9, 1.1)})
        assert all(0.9 <= d.P <= 1.1 for d in designs)
        with pytest.raises(ValueError, match="range override"):
            lhs_sample(5, seed=0, ranges={"P": (0.4, 1.0)})

    def test_invalid_count(self):
        with pytest.raises(ValueError, match="count"):
            lhs_sample(0, seed=0)


class TestGenerateDataset:
    def test_small_dataset_valid_by_construction(self, tiny_dataset):
        assert len(tiny_dataset) == 120
        for rec in tiny_dataset.records:
            assert rec.provenance == "simulated"
            assert 0.0 < rec.labels.eta_star < 1.0
            assert 0.25 < rec.labels.j_star < 1.6
            assert rec.labels.kt_star > 0

    def test_determinism_byte_identical(self, tmp_path):
        a = generate_dataset(12, seed=21)
        b = generate_dataset(12, seed=21)
        save_dataset(a, tmp_path / "a.csv")
        save_dataset(b, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_resimulation_reproduces_stored_labels(self, tiny_dataset):
        for rec in tiny_dataset.records[:5]:
            again = hydro.extract_labels(hydro.simulate_design(rec.design))
            assert np.max(np.abs(again.to_array() - rec.labels.to_array())) < 1e-9

    def test_attempt_cap_with_hostile_grid(self):
        # a short high-J grid leaves most low-pitch designs without positive
        # thrust, forcing the resample path and the attempt cap
        grid = np.array([1.4, 1.45, 1.5, 1.55, 1.6])
        with pytest.warns(UserWarning, match="attempt cap"):
            ds = generate_dataset(40, seed=2, grid=grid)
        assert 0 < len(ds) < 40


class TestSplit:
    def test_sizes_and_disjointness(self, tiny_dataset):
        train, test = split(tiny_dataset, 90)
        assert len(train) == 90 and len(test) == 30
        assert train.records + test.records == tiny_dataset.records

    @pytest.mark.parametrize("n_train", [0, 120, 121])
    def test_out_of_range_rejected(self, tiny_dataset, n_train):
        with pytest.raises(ValueError, match="n_train"):
            split(tiny_dataset, n_train)


class TestNormStats:
    def test_apply_invert_identity(self, tiny_dataset, rng):
        stats = fit_norm(tiny_dataset)
        x = rng.normal(size=(100, 6))
        assert np.max(np.abs(stats.denormalize_designs(stats.normalize_designs(x)) - x)) < 1e-10
        y = rng.normal(size=(100, 3))
        assert np.max(np.abs(stats.denormalize_labels(stats.normalize_labels(y)) - y)) < 1e-10

    def test_normalized_training_matrix_standardized(self, tiny_dataset):
        stats = fit_norm(tiny_dataset)
        z = stats.normalize_designs(tiny_dataset.design_matrix())
        assert np.max(np.abs(z.mean(axis=0))) < 1e-9
        assert np.max(np.abs(z.std(axis=0) - 1.0)) < 1e-9

    def test_constant_column_rejected_by_name(self):
        design = DesignVector(4, 1.0, 0.7, 0.8, 0.6, 0.02)
        records = [DesignRecord(design, LabelVector(0.7, 0.9 + 0.01 * i, 0.1))
                   for i in range(5)]
        with pytest.raises(ValueError, match="n_blades"):
            fit_norm(LabeledDataset(records))


class TestPersistence:
    def test_round_trip(self, tiny_dataset, tmp_path):
        path = tmp_path / "ds.csv"
        save_dataset(tiny_dataset, path)
        loaded = load_dataset(path)
        assert loaded.seed == tiny_dataset.seed
        assert loaded.records == tiny_dataset.records

    def test_header_contract(self, tiny_dataset, tmp_path):
        path = tmp_path / "ds.csv"
        save_dataset(tiny_dataset, path)
        header = path.read_text().splitlines()[0]
        assert header == "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed"

    def test_norm_sidecar_round_trip(self, tiny_dataset, tmp_path):
        ds = LabeledDataset(tiny_dataset.records, seed=tiny_dataset.seed,
                            norm=fit_norm(tiny_dataset))
        save_dataset(ds, tmp_path / "ds.csv")
        loaded = load_dataset(tmp_path / "ds.csv")
        assert loaded.norm is not None
        assert np.allclose(loaded.norm.design_mean, ds.norm.design_mean)

    def test_invalid_blade_count_cites_allowed_values(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed\n"
            "6,1.0,0.7,0.8,0.6,0.02,0.7,0.9,0.1,simulated,0\n"
        )
        with pytest.raises(DatasetFormatError, match=r"line 2.*\(2, 3, 4, 5\)"):
            load_dataset(path)

    def test_missing_column_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed\n"
            "4,1.0,0.7,0.8,0.6,0.02,0.7,0.9,0.1,simulated\n"
        )
        with pytest.raises(DatasetFormatError, match="line 2.*11 columns"):
            load_dataset(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(DatasetFormatError, match="line 1"):
            load_dataset(path)

    def test_unparseable_float_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed\n"
            "4,1.0,0.7,0.8,0.6,0.02,0.7,0.9,0.1,simulated,0\n"
            "4,oops,0.7,0.8,0.6,0.02,0.7,0.9,0.1,simulated,0\n"
        )
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_dataset(path)

    def test_label_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed\n"
            "4,1.0,0.7,0.8,0.6,0.02,1.2,0.9,0.1,simulated,0\n"
        )
        with pytest.raises(DatasetFormatError, match="eta_star"):
            load_dataset(path)


class TestLabelEnvelope:
    def test_2000_sample_labels_inside_loose_envelopes(self):
        # statistical envelope of the stand-in solver on a full-size sample
        ds = generate_dataset(2000, seed=2024)
        labels = ds.label_matrix()
        assert len(ds) == 2000
        assert labels[:, 0].min() > 0.35 and labels[:, 0].max() < 0.95
        assert labels[:, 1].min() > 0.25 and labels[:, 1].max() < 1.60
        assert labels[:, 2].min() > 0.01 and labels[:, 2].max() < 0.30
