# detection/lof.py
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import DetectionError, DimensionMismatchError, InsufficientPointsError, InvalidParameterError

logger = logging.getLogger(__name__)

# Нижняя граница среднего reach-distance перед взятием обратной величины
LRD_EPSILON = 1e-12


def as_point(coords, dim=None):
    """
    Приводит координаты к одномерному массиву float64 и проверяет их.

    Args:
        coords (array-like): Координаты точки.
        dim (int, optional): Ожидаемая размерность.

    Returns:
        np.ndarray: Массив формы (D,).

    Raises:
        DetectionError: Если координаты пустые или содержат NaN/Inf.
        DimensionMismatchError: Если размерность не совпадает с dim.
    """
    point = np.asarray(coords, dtype=np.float64)
    if point.ndim != 1 or point.size == 0:
        raise DetectionError(f"Точка должна быть непустым вектором, получена форма {point.shape}")
    if dim is not None and point.size != dim:
        raise DimensionMismatchError(dim, point.size)
    if not np.all(np.isfinite(point)):
        raise DetectionError("Координаты точки должны быть конечными (без NaN/Inf)")
    return point


@dataclass
class Dataset:
    """
    Упорядоченный набор D-мерных точек с необязательными бинарными метками
    (0 норма, 1 выброс). Строки идут в порядке вставки.
    """
    points: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] < 1:
            raise DetectionError(f"Ожидается матрица формы (n, D) с D >= 1, получена {points.shape}")
        if not np.all(np.isfinite(points)):
            raise DetectionError("Набор данных содержит NaN или Inf")
        self.points = points
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (len(points),):
                raise DetectionError(
                    f"Число меток ({labels.size}) не совпадает с числом точек ({len(points)})"
                )
            if not np.isin(labels, (0, 1)).all():
                raise DetectionError("Метки должны принимать значения 0 или 1")
            self.labels = labels.astype(np.int8)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def slice(self, start, stop):
        labels = self.labels[start:stop] if self.labels is not None else None
        return Dataset(self.points[start:stop].copy(), labels)

    def concat(self, other):
        if other.dim != self.dim:
            raise DimensionMismatchError(self.dim, other.dim)
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = np.concatenate([self.labels, other.labels])
        return Dataset(np.vstack([self.points, other.points]), labels)


@dataclass(frozen=True)
class LofParams:
    k: int

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise InvalidParameterError(f"k должен быть целым числом >= 1, получено {self.k!r}")

    def check_size(self, n):
        """Проверяет условие k <= n - 1."""
        if n < self.k + 1:
            raise InsufficientPointsError(n, self.k)


@dataclass(frozen=True)
class NeighborList:
    """N(p, k): ровно k соседей, отсортированных по (расстояние, индекс)."""
    owner: int
    indices: tuple
    distances: tuple

    @property
    def k_distance(self):
        return self.distances[-1]

    def __len__(self):
        return len(self.indices)


def as_params(params):
    return params if isinstance(params, LofParams) else LofParams(params)


def distances_to(points, point):
    """Евклидовы расстояния от каждой строки points до point."""
    return np.sqrt(np.sum((points - point) ** 2, axis=1))


def euclidean_distance(a, b):
    a = as_point(a)
    b = as_point(b)
    if a.size != b.size:
        raise DimensionMismatchError(a.size, b.size)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def nearest(distances, k):
    """
    Индексы k ближайших по правилу (расстояние, индекс вставки).

    Args:
        distances (np.ndarray): Расстояния до всех кандидатов; исключённые кандидаты имеют inf.
        k (int): Число соседей.

    Returns:
        np.ndarray: Индексы длины k.
    """
    return np.lexsort((np.arange(distances.size), distances))[:k]


def knn_query(ds, idx, k):
    """
    Точный поиск k ближайших соседей точки idx внутри набора.

    Raises:
        InsufficientPointsError: Если k > n - 1.
    """
    params = as_params(k)
    params.check_size(ds.n)
    if not 0 <= idx < ds.n:
        raise DetectionError(f"Индекс {idx} вне диапазона [0, {ds.n})")
    distances = distances_to(ds.points, ds.points[idx])
    distances[idx] = np.inf
    order = nearest(distances, params.k)
    return NeighborList(
        owner=int(idx),
        indices=tuple(int(i) for i in order),
        distances=tuple(float(d) for d in distances[order]),
    )


def reach_distance(d_pq, k_dist_q):
    """reach-distance(p, q) = max(d(p, q), k-dist(q))."""
    if not (np.isfinite(d_pq) and np.isfinite(k_dist_q)) or d_pq < 0 or k_dist_q < 0:
        raise DetectionError(f"reach_distance ожидает конечные неотрицательные значения: d={d_pq}, k-dist={k_dist_q}")
    return max(float(d_pq), float(k_dist_q))


def mean_reach(values):
    return float(np.mean(values))


def lrd(mean_reach_value):
    """Обратная величина среднего reach-distance с полом LRD_EPSILON."""
    return 1.0 / max(float(mean_reach_value), LRD_EPSILON)


def lof_score(neighbor_lrds, own_lrd):
    """Отношение среднего LRD соседей к собственному LRD точки."""
    return float(np.mean(neighbor_lrds) / own_lrd)


@dataclass
class LofTables:
    """Полный статический расчёт: соседи, k-distance, reach-distance, LRD и LOF."""
    neighbors: np.ndarray
    neighbor_distances: np.ndarray
    k_distances: np.ndarray
    reach: np.ndarray
    lrd: np.ndarray
    lof: np.ndarray


def neighbor_tables(points, k):
    n = len(points)
    neighbors = np.empty((n, k), dtype=np.int64)
    neighbor_distances = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        distances = distances_to(points, points[i])
        distances[i] = np.inf
        order = nearest(distances, k)
        neighbors[i] = order
        neighbor_distances[i] = distances[order]
    return neighbors, neighbor_distances


def compute_lof_tables(points, k):
    """
    Пакетный (статический) расчёт LOF для всех точек.

    Args:
        points (np.ndarray): Матрица (n, D).
        k (int): Число соседей, n >= k + 1.

    Returns:
        LofTables: Все промежуточные таблицы расчёта.
    """
    params = as_params(k)
    params.check_size(len(points))
    neighbors, neighbor_distances = neighbor_tables(points, params.k)
    k_distances = neighbor_distances[:, -1].copy()
    reach = np.maximum(neighbor_distances, k_distances[neighbors])
    lrd_values = np.array([lrd(mean_reach(row)) for row in reach], dtype=np.float64)
    lof_values = np.array(
        [lof_score(lrd_values[row], lrd_values[i]) for i, row in enumerate(neighbors)],
        dtype=np.float64,
    )
    logger.debug(f"Статический LOF рассчитан: n={len(points)}, k={params.k}")
    return LofTables(neighbors, neighbor_distances, k_distances, reach, lrd_values, lof_values)


def static_lof(ds, params):
    """
    Рассчитывает LOF для каждой точки набора заново (эталон для потоковых движков).

    Args:
        ds (Dataset): Набор данных.
        params (LofParams | int): Параметры LOF.

    Returns:
        np.ndarray: LOF-оценки в порядке вставки.
    """
    return compute_lof_tables(ds.points, as_params(params)).lof
