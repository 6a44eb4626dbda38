import logging
import math

import numpy as np
from django.test import SimpleTestCase
from sklearn.neighbors import LocalOutlierFactor

from .engines import (
    Algorithm, InsertStats, ReachabilityMatrix, eilof_insert, ilof_insert, init_detector, insert, scores,
)
from .evaluation import EvalReport, ThresholdRule, evaluate_scores, f1_report, flag_outliers
from .exceptions import (
    DetectionError, DimensionMismatchError, EngineStateError, InsufficientPointsError, InvalidParameterError,
)
from .lof import (
    LRD_EPSILON, Dataset, LofParams, compute_lof_tables, euclidean_distance, knn_query, lrd, reach_distance,
    static_lof,
)

logger = logging.getLogger(__name__)

UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]

# Пять точек a–e и новая точка p_c: p_c ближе всего к c и b, но входит только в kNN(c) при k=2
FIVE_POINTS = [[4.0, 2.3], [3.0, 1.0], [2.0, 0.0], [6.0, 2.0], [1.0, 4.0]]
FIVE_NEW_POINT = [0.0, 0.0]
A, B, C, D, E = range(5)


def transcribed_lof(points, k):
    """
    Прямая двойная петля по определениям k-distance, reach-distance, LRD и LOF.
    Независимый эталон для static_lof.
    """
    n = len(points)
    neighbors = []
    for i in range(n):
        candidates = sorted((math.dist(points[i], points[j]), j) for j in range(n) if j != i)
        neighbors.append(candidates[:k])
    k_dist = [row[-1][0] for row in neighbors]
    densities = []
    for i in range(n):
        total = 0.0
        for d, j in neighbors[i]:
            total += max(d, k_dist[j])
        densities.append(1.0 / max(total / k, LRD_EPSILON))
    result = []
    for i in range(n):
        result.append(sum(densities[j] for _, j in neighbors[i]) / k / densities[i])
    return np.array(result)


def random_points(seed, n, dim=2):
    return np.random.default_rng(seed).normal(size=(n, dim))


def prefix_lof(pairwise, n, k):
    """Пакетный LOF первых n точек по готовой матрице попарных расстояний."""
    block = pairwise[:n, :n].copy()
    np.fill_diagonal(block, np.inf)
    neighbors = np.argsort(block, axis=1, kind='stable')[:, :k]
    neighbor_distances = np.take_along_axis(block, neighbors, axis=1)
    reach = np.maximum(neighbor_distances, neighbor_distances[:, -1][neighbors])
    densities = 1.0 / np.maximum(reach.mean(axis=1), LRD_EPSILON)
    return densities[neighbors].mean(axis=1) / densities


def pairwise_distances(points):
    return np.sqrt(np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2))


class CoreLofTests(SimpleTestCase):
    def test_euclidean_distance(self):
        """
        Тест евклидова расстояния на аналитических примерах.
        """
        self.assertEqual(euclidean_distance([0, 0], [3, 4]), 5.0)
        self.assertEqual(euclidean_distance([1.5, -2.0], [1.5, -2.0]), 0.0)
        self.assertAlmostEqual(euclidean_distance([1, 1, 1], [2, 2, 2]), math.sqrt(3), places=15)
        with self.assertRaises(DimensionMismatchError):
            euclidean_distance([0, 0], [0, 0, 0])

    def test_knn_query_square_and_tie_break(self):
        """
        Тест kNN: соседние вершины квадрата и разрешение равенства в пользу меньшего индекса.
        """
        square = knn_query(Dataset(UNIT_SQUARE), 0, 2)
        self.assertEqual(square.indices, (1, 2))
        self.assertEqual(square.k_distance, 1.0)

        line = knn_query(Dataset([[0.0], [1.0], [2.0]]), 1, 1)
        self.assertEqual(line.indices, (0,))
        self.assertEqual(line.k_distance, 1.0)

        with self.assertRaises(InsufficientPointsError):
            knn_query(Dataset(UNIT_SQUARE), 0, 4)

    def test_knn_query_matches_full_sort(self):
        """
        Тест kNN против полного перебора с сортировкой по (расстояние, индекс).
        """
        points = random_points(3, 50)
        ds = Dataset(points)
        for idx in (0, 17, 49):
            expected = sorted((math.dist(points[idx], points[j]), j) for j in range(50) if j != idx)[:5]
            result = knn_query(ds, idx, 5)
            self.assertEqual(result.indices, tuple(j for _, j in expected))
            self.assertAlmostEqual(result.k_distance, expected[-1][0], places=12)
            self.assertNotIn(idx, result.indices)

    def test_reach_distance_max_law(self):
        """
        Тест reach-distance: максимум из двух величин, отрицательные значения отвергаются.
        """
        self.assertEqual(reach_distance(5, 3), 5)
        self.assertEqual(reach_distance(2, 3), 3)
        self.assertEqual(reach_distance(3, 3), 3)
        rng = np.random.default_rng(11)
        for d, kd in rng.uniform(0, 10, size=(200, 2)):
            value = reach_distance(d, kd)
            self.assertGreaterEqual(value, d)
            self.assertGreaterEqual(value, kd)
        with self.assertRaises(DetectionError):
            reach_distance(-1.0, 2.0)
        with self.assertRaises(DetectionError):
            reach_distance(1.0, float('inf'))

    def test_reach_distance_asymmetry(self):
        """
        Тест асимметрии: reach-dist(a, b) != reach-dist(b, a) на пяти точках при k=2.
        """
        tables = compute_lof_tables(np.array(FIVE_POINTS), 2)
        d_ab = euclidean_distance(FIVE_POINTS[A], FIVE_POINTS[B])
        forward = reach_distance(d_ab, tables.k_distances[B])
        backward = reach_distance(d_ab, tables.k_distances[A])
        self.assertNotEqual(forward, backward)

    def test_lrd_floor(self):
        self.assertEqual(lrd(2.0), 0.5)
        self.assertEqual(lrd(0.0), 1e12)

    def test_symmetric_configurations(self):
        """
        Тест симметричных конфигураций: LOF = 1 для каждой точки.
        """
        np.testing.assert_array_equal(static_lof(Dataset(UNIT_SQUARE), LofParams(2)), np.ones(4))
        np.testing.assert_array_equal(static_lof(Dataset([[0.0], [1.0], [2.0]]), 1), np.ones(3))
        np.testing.assert_array_equal(compute_lof_tables(np.array(UNIT_SQUARE), 2).lrd, np.ones(4))

        angles = 2 * np.pi * np.arange(12) / 12
        polygon = np.column_stack([np.cos(angles), np.sin(angles)]) * 7.5
        np.testing.assert_allclose(static_lof(Dataset(polygon), 2), np.ones(12), rtol=0, atol=1e-12)

        # Решётка 4x4, k=1: у каждой точки ближайший сосед на расстоянии 1
        grid = np.array([[x, y] for x in range(4) for y in range(4)], dtype=float)
        np.testing.assert_allclose(static_lof(Dataset(grid), 1), np.ones(16), rtol=0, atol=1e-12)

    def test_far_point_scores_highest(self):
        points = UNIT_SQUARE + [[10.0, 10.0]]
        result = static_lof(Dataset(points), 2)
        self.assertEqual(int(np.argmax(result)), 4)
        self.assertGreater(result[4], 1.0)
        np.testing.assert_allclose(result, transcribed_lof(np.array(points), 2), rtol=1e-12)

    def test_duplicate_points_are_finite(self):
        """
        Тест совпадающих точек: k+1 одинаковых точек дают конечные оценки.
        """
        points = [[1.0, 1.0]] * 4 + [[2.0, 3.0], [5.0, -1.0], [0.5, 0.5]]
        result = static_lof(Dataset(points), 3)
        self.assertTrue(np.all(np.isfinite(result)))
        self.assertEqual(compute_lof_tables(np.array(points), 3).lrd[0], 1.0 / LRD_EPSILON)

    def test_matches_transcription_oracle(self):
        """
        Тест static_lof против прямой транскрипции определений на 100 случайных наборах.
        """
        for seed in range(100):
            points = random_points(seed, 60)
            k = (2, 5, 10)[seed % 3]
            np.testing.assert_allclose(static_lof(Dataset(points), k), transcribed_lof(points, k), rtol=1e-12)
        logger.info("Тест транскрипции успешно пройден")

    def test_matches_sklearn(self):
        """
        Тест против LocalOutlierFactor из scikit-learn (у него LRD сдвинут на 1e-10).
        """
        for seed, k in ((1, 5), (2, 10), (3, 20)):
            points = random_points(seed, 120, dim=3)
            reference = LocalOutlierFactor(n_neighbors=k, algorithm='brute').fit(points)
            np.testing.assert_allclose(
                static_lof(Dataset(points), k), -reference.negative_outlier_factor_, rtol=1e-6,
            )

    def test_rigid_motion_invariance(self):
        points = random_points(5, 80)
        angle = 0.7
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        moved = points @ rotation.T + np.array([12.5, -3.0])
        np.testing.assert_allclose(static_lof(Dataset(moved), 5), static_lof(Dataset(points), 5), rtol=1e-9)

    def test_dataset_validation(self):
        with self.assertRaises(DetectionError):
            Dataset([[0.0, float('nan')]])
        with self.assertRaises(DetectionError):
            Dataset([[0.0], [1.0]], labels=[0, 2])
        with self.assertRaises(InvalidParameterError):
            LofParams(0)
        with self.assertRaises(InsufficientPointsError):
            static_lof(Dataset(UNIT_SQUARE), 4)


class ReachabilityMatrixTests(SimpleTestCase):
    def test_grow_set_and_delete(self):
        matrix = ReachabilityMatrix()
        self.assertEqual(matrix.grow(), 0)
        self.assertEqual(matrix.grow(), 1)
        matrix.set(0, 1, 2.5)
        self.assertEqual(matrix.get(0, 1), 2.5)
        self.assertEqual(matrix.get(1, 0), 0.0)
        matrix.delete(0, 1)
        self.assertEqual(matrix.row_size(0), 0)
        np.testing.assert_array_equal(matrix.to_dense(), np.zeros((2, 2)))

    def test_rejects_invalid_cells(self):
        matrix = ReachabilityMatrix()
        matrix.grow()
        matrix.grow()
        with self.assertRaises(EngineStateError):
            matrix.set(0, 0, 1.0)
        with self.assertRaises(EngineStateError):
            matrix.set(0, 1, -1.0)
        with self.assertRaises(EngineStateError):
            matrix.values(0, [1])
        with self.assertRaises(EngineStateError):
            matrix.set_many([0, 1], [1, 1], [1.0, 2.0])
        with self.assertRaises(EngineStateError):
            matrix.set_many([0], [1], [float('nan')])

    def test_set_many_writes_cells(self):
        matrix = ReachabilityMatrix()
        for _ in range(3):
            matrix.grow()
        matrix.set_many(np.array([0, 2, 1]), np.array([1, 0, 2]), np.array([1.5, 2.0, 0.25]))
        matrix.set_many([], [], [])
        self.assertEqual(matrix.row(0), {1: 1.5})
        self.assertEqual(matrix.get(2, 0), 2.0)
        self.assertEqual(matrix.get(1, 2), 0.25)


class StreamingEngineTests(SimpleTestCase):
    def five_point_states(self):
        ds = Dataset(FIVE_POINTS)
        return init_detector(ds, 2, Algorithm.ILOF), init_detector(ds, 2, Algorithm.EILOF)

    def test_init_matches_static(self):
        """
        Тест инициализации: оба движка стартуют со статического LOF.
        """
        ds = Dataset(random_points(8, 300, dim=4))
        expected = static_lof(ds, 10)
        for algo in Algorithm:
            state = init_detector(ds, 10, algo)
            np.testing.assert_array_equal(scores(state), expected)
            self.assertEqual(len(state.rdm), 300)
            self.assertTrue(all(state.rdm.row_size(i) == 10 for i in range(300)))
        square = init_detector(Dataset(UNIT_SQUARE), 2, 'eilof')
        np.testing.assert_array_equal(scores(square), np.ones(4))
        with self.assertRaises(InsufficientPointsError):
            init_detector(Dataset(UNIT_SQUARE), 4, Algorithm.ILOF)

    def test_eilof_micro_instance(self):
        """
        Тест EILOF на пяти точках: новая строка из 2 ячеек, в новом столбце только ячейка c.
        """
        _, state = self.five_point_states()
        before = state.rdm.row(B)
        state, stats = eilof_insert(state, FIVE_NEW_POINT)
        new = 5
        self.assertEqual(stats.row_entries_written, 2)
        self.assertEqual(stats.column_entries_written, 1)
        self.assertEqual(stats.lrd_recomputed, 2)
        self.assertEqual(stats.lof_recomputed, 1)
        self.assertEqual(sorted(state.rdm.row(new)), [B, C])
        self.assertEqual(sorted(state.rdm.row(C)), [B, new])
        # reach-dist(c, p_c) = max(2, k-distance(p_c) = d(p_c, b))
        self.assertAlmostEqual(state.rdm.get(C, new), math.sqrt(10), places=12)
        self.assertAlmostEqual(state.rdm.get(new, C), 2.0, places=12)
        # строка b не трогается, хотя k-distance(c) изменилась
        self.assertEqual(state.rdm.row(B), before)
        self.assertEqual(state.neighbor_list(C).indices, (B, new))

    def test_ilof_micro_instance(self):
        """
        Тест ILOF на тех же точках: столбец c пересчитывается по всем прежним строкам.
        """
        state, _ = self.five_point_states()
        state, stats = ilof_insert(state, FIVE_NEW_POINT)
        self.assertEqual(stats.row_entries_written, 2)
        self.assertEqual(stats.column_entries_written, 1 + 5)
        self.assertEqual(stats.lrd_recomputed, 3)
        self.assertEqual(stats.lof_recomputed, 6)
        self.assertAlmostEqual(state.rdm.get(B, C), 2.0, places=12)
        np.testing.assert_allclose(
            scores(state), static_lof(Dataset(FIVE_POINTS + [FIVE_NEW_POINT]), 2), rtol=1e-12,
        )

    def test_isolated_insertion(self):
        """
        Тест изолированной точки: никто не принимает её в kNN, старые оценки не меняются.
        """
        base = Dataset(random_points(4, 40))
        far = [100.0, 100.0]
        union = static_lof(Dataset(np.vstack([base.points, far])), 5)
        results = {}
        for algo in Algorithm:
            state = init_detector(base, 5, algo)
            before = scores(state)
            state, stats = insert(state, far)
            self.assertEqual(stats.column_entries_written, 0)
            self.assertEqual(stats.row_entries_written, 5)
            self.assertEqual(stats.lof_recomputed, 1)
            np.testing.assert_array_equal(scores(state)[:40], before)
            self.assertGreater(scores(state)[40], 10.0)
            self.assertAlmostEqual(scores(state)[40], union[40], delta=1e-9 * union[40])
            results[algo] = scores(state)[40]
        self.assertEqual(results[Algorithm.ILOF], results[Algorithm.EILOF])

    def test_ilof_matches_batch_after_every_insertion(self):
        """
        Тест эквивалентности ILOF и пакетного LOF после каждой вставки:
        52 последовательности (13 затравок x 4 значения k) по 100 вставок.
        """
        sample = random_points(1000, 150)
        np.testing.assert_allclose(
            prefix_lof(pairwise_distances(sample), 150, 7), static_lof(Dataset(sample), 7), rtol=1e-12,
        )
        sequences = 0
        for seed in range(13):
            points = np.random.default_rng(1000 + seed).normal(size=(200, 2))
            pairwise = pairwise_distances(points)
            for k in (3, 5, 10, 25):
                state = init_detector(Dataset(points[:100]), k, Algorithm.ILOF)
                for j in range(100, 200):
                    state, _ = ilof_insert(state, points[j])
                    np.testing.assert_allclose(
                        scores(state), prefix_lof(pairwise, j + 1, k), rtol=1e-9,
                        err_msg=f"seed={seed}, k={k}, вставка {j}",
                    )
                np.testing.assert_array_equal(state.k_distances, state.exact_k_distances)
                sequences += 1
        self.assertGreaterEqual(sequences, 50)
        logger.info(f"Тест эквивалентности ILOF успешно пройден: {sequences} последовательностей")

    def test_eilof_frozen_prefix_and_bounds(self):
        """
        Тест EILOF: старые оценки побитово неизменны, не более k ячеек в столбце.
        """
        for k in (3, 10):
            points = random_points(21 + k, 220, dim=3)
            state = init_detector(Dataset(points[:120]), k, Algorithm.EILOF)
            for j in range(120, 220):
                before = scores(state)
                state, stats = eilof_insert(state, points[j])
                np.testing.assert_array_equal(scores(state)[:j], before)
                self.assertEqual(stats.row_entries_written, k)
                self.assertLessEqual(stats.column_entries_written, k)
                self.assertEqual(stats.lof_recomputed, 1)
                self.assertTrue(all(state.rdm.row_size(i) == k for i in range(j + 1)))

    def test_eilof_touches_no_more_than_ilof(self):
        points = random_points(77, 260)
        ilof = init_detector(Dataset(points[:160]), 8, Algorithm.ILOF)
        eilof = init_detector(Dataset(points[:160]), 8, Algorithm.EILOF)
        total_ilof, total_eilof = InsertStats(), InsertStats()
        for point in points[160:]:
            ilof, ilof_stats = insert(ilof, point)
            eilof, eilof_stats = insert(eilof, point)
            self.assertLessEqual(eilof_stats.touched, ilof_stats.touched)
            total_ilof += ilof_stats
            total_eilof += eilof_stats
        self.assertLess(total_eilof.touched, total_ilof.touched)

    def test_eilof_tracks_exact_k_distance_on_dense_stream(self):
        """
        Тест EILOF на малой базе при k=3: точные k-distance совпадают с пакетными,
        принявшие p_c точки лежат в N(p_c, k), и на каждой вставке EILOF
        затрагивает не больше ячеек, чем ILOF.
        """
        for seed in (0, 1, 11):
            points = random_points(seed, 80)
            ilof = init_detector(Dataset(points[:30]), 3, Algorithm.ILOF)
            eilof = init_detector(Dataset(points[:30]), 3, Algorithm.EILOF)
            for j in range(30, 80):
                ilof, ilof_stats = insert(ilof, points[j])
                eilof, eilof_stats = insert(eilof, points[j])
                self.assertLessEqual(eilof_stats.touched, ilof_stats.touched, f"seed={seed}, вставка {j}")
                self.assertLessEqual(eilof_stats.lrd_recomputed, ilof_stats.lrd_recomputed)
                self.assertLessEqual(eilof_stats.column_entries_written, ilof_stats.column_entries_written)

                tables = compute_lof_tables(points[:j + 1], 3)
                np.testing.assert_allclose(eilof.exact_k_distances, tables.k_distances, rtol=1e-12)
                # строка новой точки опирается на точные k-distance соседей
                for o, reach in zip(tables.neighbors[j], tables.reach[j]):
                    self.assertAlmostEqual(eilof.rdm.get(j, o), reach, places=12)
                # в новом столбце только соседи p_c
                column = [i for i in range(j) if j in eilof.rdm.row(i)]
                self.assertTrue(set(column) <= set(int(o) for o in tables.neighbors[j]))
        logger.info("Тест точных k-distance EILOF успешно пройден")

    def test_ilof_large_k_insertions_stay_fast(self):
        """
        Тест скорости ILOF на базе размера Shuttle (1000 точек, D=7, k=100):
        64 вставки укладываются в 3 секунды и остаются точными.
        """
        points = random_points(64, 1064, dim=7)
        state = init_detector(Dataset(points[:1000]), 100, Algorithm.ILOF)
        total = InsertStats()
        for point in points[1000:]:
            state, stats = ilof_insert(state, point)
            total += stats
        self.assertLess(total.wall_time, 3.0)
        np.testing.assert_allclose(scores(state), static_lof(Dataset(points), 100), rtol=1e-9)
        logger.info(f"64 вставки ILOF при k=100: {total.wall_time:.2f} с")

    def test_duplicate_insertion_is_finite(self):
        points = random_points(9, 60)
        state = init_detector(Dataset(points), 4, Algorithm.EILOF)
        state, _ = eilof_insert(state, points[10])
        self.assertTrue(np.all(np.isfinite(scores(state))))

    def test_determinism(self):
        points = random_points(31, 150)
        for algo in Algorithm:
            snapshots = []
            for _ in range(2):
                state = init_detector(Dataset(points[:100]), 6, algo)
                for point in points[100:]:
                    insert(state, point)
                snapshots.append(state.snapshot())
            first, second = snapshots
            for key in ('points', 'neighbors', 'neighbor_distances', 'k_distances', 'exact_k_distances', 'lrd', 'lof'):
                np.testing.assert_array_equal(first[key], second[key])
            self.assertEqual(first['rdm'], second['rdm'])

    def test_insert_errors(self):
        state = init_detector(Dataset(UNIT_SQUARE), 2, Algorithm.EILOF)
        with self.assertRaises(DimensionMismatchError):
            eilof_insert(state, [1.0, 2.0, 3.0])
        with self.assertRaises(InvalidParameterError):
            ilof_insert(state, [1.0, 2.0])
        with self.assertRaises(InvalidParameterError):
            Algorithm.parse('milof')

    def test_engine_log_messages_are_formatted(self):
        with self.assertLogs('detection.engines', level='DEBUG') as logs:
            state = init_detector(Dataset(FIVE_POINTS), 2, Algorithm.EILOF)
            eilof_insert(state, FIVE_NEW_POINT)
        with self.assertLogs('detection.lof', level='DEBUG') as lof_logs:
            compute_lof_tables(np.array(UNIT_SQUARE), 2)
        records = logs.records + lof_logs.records
        self.assertTrue(all(not record.args for record in records))
        self.assertIn("Детектор eilof инициализирован: n0=5, k=2, D=2", logs.output[0])
        self.assertIn("EILOF вставка #5: строка=2, столбец=1", logs.output[-1])
        self.assertIn("n=4, k=2", lof_logs.output[-1])

    def test_labels_follow_insertions(self):
        state = init_detector(Dataset(UNIT_SQUARE, labels=[0, 0, 0, 0]), 2, Algorithm.ILOF)
        insert(state, [5.0, 5.0], label=1)
        np.testing.assert_array_equal(state.dataset.labels, [0, 0, 0, 0, 1])


class EvaluationTests(SimpleTestCase):
    def test_flag_outliers_examples(self):
        """
        Тест пометки выбросов: верхние оценки, разрешение равенства и округление вверх.
        """
        np.testing.assert_array_equal(flag_outliers([1.0, 1.1, 3.0, 1.05], ThresholdRule(0.25)), [0, 0, 1, 0])
        np.testing.assert_array_equal(flag_outliers([2.0] * 4, 0.5), [1, 1, 0, 0])
        self.assertEqual(int(flag_outliers(np.linspace(0, 1, 1640), 0.07).sum()), 115)
        with self.assertRaises(DetectionError):
            flag_outliers([], 0.1)
        with self.assertRaises(InvalidParameterError):
            ThresholdRule(0)
        with self.assertRaises(InvalidParameterError):
            ThresholdRule(1.5)

    def test_flag_outliers_rank_based(self):
        values = np.random.default_rng(2).uniform(0.5, 4.0, size=200)
        np.testing.assert_array_equal(flag_outliers(values, 0.1), flag_outliers(np.exp(values) * 3 + 1, 0.1))

    def test_f1_report_examples(self):
        """
        Тест метрик: TP=2, FP=1, FN=1 дают F1 = 2/3; нулевые знаменатели дают 0.
        """
        report = f1_report([1, 1, 1, 0, 0, 0], [1, 1, 0, 1, 0, 0])
        self.assertEqual((report.tp, report.fp, report.fn, report.tn), (2, 1, 1, 2))
        self.assertAlmostEqual(report.precision, 2 / 3)
        self.assertAlmostEqual(report.recall, 2 / 3)
        self.assertAlmostEqual(report.f1, 2 / 3)

        empty = f1_report([0, 0, 0, 0], [0, 1, 1, 0])
        self.assertEqual(empty.f1, 0.0)
        self.assertEqual(empty.precision, 0.0)

        perfect = f1_report([0, 1, 0, 1], [0, 1, 0, 1])
        self.assertEqual(perfect.f1, 1.0)
        with self.assertRaises(DetectionError):
            f1_report([0, 1], [0, 1, 1])

    def test_f1_properties(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            predicted = rng.integers(0, 2, size=40)
            truth = rng.integers(0, 2, size=40)
            report = f1_report(predicted, truth)
            swapped = f1_report(truth, predicted)
            self.assertEqual(report.n, 40)
            self.assertAlmostEqual(report.f1, swapped.f1, places=12)
            for value in (report.precision, report.recall, report.f1):
                self.assertTrue(0.0 <= value <= 1.0)
            low = min(report.precision, report.recall)
            self.assertLessEqual(report.f1, 2 * low / (1 + low) + 1e-12)

    def test_evaluate_scores(self):
        report = evaluate_scores(static_lof(Dataset(UNIT_SQUARE + [[10.0, 10.0]]), 2), [0, 0, 0, 0, 1], 0.2)
        self.assertIsInstance(report, EvalReport)
        self.assertEqual(report.f1, 1.0)
