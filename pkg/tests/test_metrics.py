import csv
import json

import numpy as np
import pytest
from scipy import linalg

from nestedvae.errors import DimensionError, UsageError
from nestedvae.metrics import (
    ForestParams,
    MetricsReport,
    ScoreRow,
    accuracy,
    adjusted_parity,
    aggregate_runs,
    change_detection_accuracy,
    forest_fit,
    forest_predict,
    kmeans2_scalar,
    linear_r2,
    macro_f1,
    normalize_score,
    pca2,
    population_std,
    principal_components,
    standard_error,
)
from nestedvae.utils import THREADS_ENV

NESTED_DIGIT_F1 = [0.708, 0.696, 0.714, 0.738, 0.721, 0.647]
BETA_VAE_DIGIT_F1 = [0.551, 0.546, 0.555, 0.575, 0.573, 0.509]


class TestAdjustedParity:
    def test_published_f1_columns(self):
        assert adjusted_parity(NESTED_DIGIT_F1) == pytest.approx(0.664, abs=5e-4)
        # population std; the sample std would give 0.5251
        assert adjusted_parity(BETA_VAE_DIGIT_F1) == pytest.approx(0.5274, abs=5e-4)

    def test_permutation_invariant(self, rng):
        for _ in range(10):
            scores = rng.uniform(size=6)
            assert adjusted_parity(rng.permutation(scores)) == pytest.approx(adjusted_parity(scores), abs=1e-12)

    def test_equal_scores_give_the_mean(self):
        assert adjusted_parity([0.7, 0.7, 0.7]) == pytest.approx(0.7, abs=1e-15)

    def test_maximal_spread_gives_zero(self):
        assert adjusted_parity([0.0, 1.0]) == 0.0
        assert adjusted_parity([1.0, 0.0, 1.0, 0.0]) == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(UsageError):
            adjusted_parity([0.5])
        with pytest.raises(UsageError):
            adjusted_parity([0.5, 1.5])

    def test_spread(self):
        assert population_std([1.0, 3.0]) == 1.0
        assert standard_error([1.0, 3.0]) == pytest.approx(1.0)
        assert standard_error([2.0]) == 0.0


class TestScores:
    def test_normalize_score(self):
        assert normalize_score(0.1, 10) == 0.0
        assert normalize_score(0.05, 10) == 0.0
        assert normalize_score(1.0, 10) == 1.0
        assert normalize_score(0.75, 2) == pytest.approx(0.5)
        with pytest.raises(UsageError):
            normalize_score(0.5, 1)

    def test_accuracy(self):
        assert accuracy([0, 1, 1], [0, 1, 0]) == pytest.approx(2 / 3)
        with pytest.raises(DimensionError):
            accuracy([0, 1], [0])
        with pytest.raises(UsageError):
            accuracy([], [])

    def test_macro_f1_perfect(self):
        truth = np.arange(10).repeat(3)
        assert macro_f1(truth, truth, 10) == 1.0

    def test_macro_f1_binary(self):
        assert macro_f1([0, 0, 1, 1], [0, 1, 0, 1], 2) == pytest.approx(0.5)

    def test_macro_f1_constant_predictor(self):
        truth = np.arange(10).repeat(5)
        assert macro_f1(np.zeros_like(truth), truth, 10) == pytest.approx(2 / 110)

    def test_macro_f1_skips_absent_classes(self):
        assert macro_f1([0, 1], [0, 1], 10) == 1.0


def _blobs(rng, n_per_class=60, n_classes=3, dim=4, spread=6.0, centres=None):
    centres = rng.standard_normal((n_classes, dim)) * spread if centres is None else centres
    y = np.repeat(np.arange(n_classes), n_per_class)
    return centres[y] + rng.standard_normal((y.size, dim)), y


class TestForest:
    def test_separable(self, rng):
        X = rng.uniform(-1, 1, size=(200, 1))
        y = (X[:, 0] > 0).astype(int)
        model = forest_fit(X, y, ForestParams(n_trees=10), seed=0)
        test = np.array([[-0.9], [-0.5], [0.5], [0.9]])
        np.testing.assert_array_equal(forest_predict(model, test), [0, 0, 1, 1])

    def test_blobs(self, rng):
        centres = np.array([[0.0, 0.0, 0.0, 0.0], [6.0, 0.0, 0.0, 0.0], [0.0, 6.0, 0.0, 0.0]])
        X, y = _blobs(rng, centres=centres)
        X_test, y_test = _blobs(np.random.default_rng(99), centres=centres)
        model = forest_fit(X, y, ForestParams(n_trees=25, max_depth=6), seed=1)
        assert accuracy(forest_predict(model, X_test), y_test) >= 0.95

    def test_seeded(self, rng):
        X, y = _blobs(rng, dim=6, spread=1.0)
        a = forest_fit(X, y, ForestParams(n_trees=8), seed=3)
        b = forest_fit(X, y, ForestParams(n_trees=8), seed=3)
        np.testing.assert_array_equal(forest_predict(a, X), forest_predict(b, X))
        assert a.seeds == b.seeds
        assert [t.n_nodes for t in a.trees] == [t.n_nodes for t in b.trees]

    def test_thread_count_does_not_matter(self, rng, monkeypatch):
        X, y = _blobs(rng, dim=6, spread=1.0)
        monkeypatch.setenv(THREADS_ENV, '1')
        serial = forest_fit(X, y, ForestParams(n_trees=12), seed=5)
        monkeypatch.setenv(THREADS_ENV, '4')
        threaded = forest_fit(X, y, ForestParams(n_trees=12), seed=5)
        for a, b in zip(serial.trees, threaded.trees):
            np.testing.assert_array_equal(a.feature_, b.feature_)
            np.testing.assert_array_equal(a.threshold_, b.threshold_)

    def test_label_out_of_range(self, rng):
        with pytest.raises(UsageError):
            forest_fit(rng.standard_normal((4, 2)), [0, 1, 2, 3], n_classes=2)


class TestKMeans:
    def test_two_values(self):
        np.testing.assert_array_equal(kmeans2_scalar([0.0, 0.0, 10.0, 10.0]), [0, 0, 1, 1])
        np.testing.assert_array_equal(kmeans2_scalar([10.0, 0.0]), [1, 0])

    def test_all_equal(self):
        np.testing.assert_array_equal(kmeans2_scalar([3.0] * 5), 0)

    @pytest.mark.parametrize('seed', range(5))
    def test_matches_exhaustive_threshold(self, seed):
        gen = np.random.default_rng(seed)
        d = np.concatenate([gen.normal(0.0, 1.0, 40), gen.normal(10.0, 1.0, 60)])
        s = np.sort(d)
        costs = [np.sum((s[:k] - s[:k].mean()) ** 2) + np.sum((s[k:] - s[k:].mean()) ** 2)
                 for k in range(1, s.size)]
        k = int(np.argmin(costs)) + 1
        expected = (d > s[k - 1]).astype(int)
        np.testing.assert_array_equal(kmeans2_scalar(d), expected)


class TestChangeDetection:
    def _pairs(self, rng, n=60, dim=5):
        a = rng.standard_normal((n, dim)) * 3
        labels = np.arange(n) % 2
        offset = rng.standard_normal((n, dim))
        offset *= np.where(labels == 1, 5.0, 0.05)[:, None] / np.linalg.norm(offset, axis=1, keepdims=True)
        return a, a + offset, labels

    def test_separated_distances(self, rng):
        a, b, labels = self._pairs(rng)
        assert change_detection_accuracy(a, b, labels) == 1.0

    def test_rigid_motion_invariance(self, rng):
        a, b, labels = self._pairs(rng)
        b[labels == 0] += rng.standard_normal((30, 5)) * 2
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        shift = rng.standard_normal(5)
        moved = change_detection_accuracy(a @ q + shift, b @ q + shift, labels)
        assert moved == pytest.approx(change_detection_accuracy(a, b, labels), abs=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            change_detection_accuracy(np.zeros((3, 2)), np.zeros((3, 3)), [0, 1, 0])


class TestProjection:
    def test_matches_eigh(self, rng):
        X = rng.standard_normal((300, 5)) * np.array([5.0, 3.0, 2.0, 1.0, 0.5])
        X = X @ np.linalg.qr(rng.standard_normal((5, 5)))[0]
        components, variances = principal_components(X, 2)
        centred = X - X.mean(axis=0)
        values, vectors = linalg.eigh(centred.T @ centred / X.shape[0])
        for i in range(2):
            ref = vectors[:, -1 - i]
            sign = np.sign(ref @ components[i])
            np.testing.assert_allclose(components[i], sign * ref, atol=1e-6)
            assert variances[i] == pytest.approx(values[-1 - i], rel=1e-6)

    def test_points_on_a_line(self, rng):
        t = rng.standard_normal(50)
        X = np.outer(t, [1.0, 2.0]) + np.array([3.0, -1.0])
        components, variances = principal_components(X, 2)
        np.testing.assert_allclose(components[0], np.array([1.0, 2.0]) / np.sqrt(5.0), atol=1e-8)
        assert variances[1] < 1e-10 * variances[0]
        projected = pca2(X)
        assert projected.shape == (50, 2)
        np.testing.assert_allclose(np.abs(projected[:, 0]), np.abs(t - t.mean()) * np.sqrt(5.0), atol=1e-8)

    def test_linear_r2(self, rng):
        X = rng.standard_normal((100, 3))
        targets = np.column_stack([X @ [1.0, -2.0, 0.5] + 4.0, rng.standard_normal(100)])
        r2 = linear_r2(X, targets)
        assert r2[0] == pytest.approx(1.0, abs=1e-10)
        assert r2[1] < 0.2


class TestReport:
    def _report(self):
        runs = [{('digit', d, 'macro_f1'): v + 0.01 * s for d, v in enumerate([0.7, 0.6, 0.65])}
                for s in range(3)]
        for s, run in enumerate(runs):
            run[('digit', None, 'macro_f1')] = 0.5 + 0.1 * s
        return MetricsReport('lodo', 'nested', aggregate_runs(runs), config={'protocol': 'lodo'}, seeds=[0, 1, 2])

    def test_aggregate(self):
        report = self._report()
        assert [r.domain for r in report.rows] == [None, 0, 1, 2]
        pooled = report.pooled('digit', 'macro_f1')
        assert pooled == ScoreRow('digit', None, 'macro_f1', pytest.approx(0.6), pytest.approx(0.1 / np.sqrt(3)), 3)
        assert report.domain_scores('digit', 'macro_f1')[1] == pytest.approx(0.61)

    def test_parity_matches_domain_means(self):
        report = self._report()
        value = report.add_parity('digit', 'macro_f1')
        assert value == pytest.approx(adjusted_parity([0.71, 0.61, 0.66]))
        assert report.domain_spread['digit/macro_f1'] == pytest.approx(population_std([0.71, 0.61, 0.66]))
        assert report.add_parity('rotation', 'macro_f1') is None

    def test_json_round_trip(self, tmp_path):
        report = self._report()
        report.add_parity('digit', 'macro_f1')
        path = str(tmp_path / 'metrics.json')
        report.write_json(path)
        assert MetricsReport.read_json(path) == report
        with open(path) as fh:
            assert json.load(fh)['protocol'] == 'lodo'

    def test_csv(self, tmp_path):
        report = self._report()
        report.add_parity('digit', 'macro_f1')
        path = tmp_path / 'metrics.csv'
        report.write_csv(str(path))
        lines = path.read_text().splitlines()
        assert lines[0].startswith('# config: ')
        rows = list(csv.DictReader(lines[1:]))
        assert len(rows) == 5
        parity = [r for r in rows if r['metric'] == 'adjusted_parity_macro_f1']
        assert float(parity[0]['mean']) == report.adjusted_parity['digit/macro_f1']
