# detection/engines.py
import logging
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .exceptions import EngineStateError, InvalidParameterError
from .lof import (
    LRD_EPSILON, Dataset, NeighborList, as_params, as_point, compute_lof_tables, distances_to,
    lof_score, lrd, mean_reach, nearest, reach_distance,
)

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    ILOF = 'ilof'
    EILOF = 'eilof'

    @classmethod
    def parse(cls, value):
        try:
            return value if isinstance(value, cls) else cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(
                f"Неизвестный алгоритм: {value!r}. Допустимые: {[a.value for a in cls]}"
            )


class ReachabilityMatrix:
    """
    Растущая матрица reach-distance, разреженная по строкам.

    Строка i хранит значения только для текущих k ближайших соседей точки i;
    незаполненные ячейки концептуально равны 0. Не потокобезопасна.
    """

    def __init__(self):
        self._rows = []

    @classmethod
    def from_tables(cls, neighbors, reach):
        matrix = cls()
        for row_neighbors, row_reach in zip(neighbors, reach):
            matrix._rows.append({int(j): float(v) for j, v in zip(row_neighbors, row_reach)})
        return matrix

    @property
    def n(self):
        return len(self._rows)

    def __len__(self):
        return self.n

    def grow(self):
        """Добавляет пустую строку и столбец; возвращает индекс новой точки."""
        self._rows.append({})
        return self.n - 1

    def set(self, i, j, value):
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            raise EngineStateError(f"Недопустимая ячейка матрицы ({i}, {j}) при n={self.n}")
        if not np.isfinite(value) or value < 0:
            raise EngineStateError(f"reach-distance должен быть конечным и неотрицательным: {value}")
        self._rows[i][int(j)] = float(value)

    def delete(self, i, j):
        self._rows[i].pop(int(j), None)

    def get(self, i, j):
        return self._rows[i].get(int(j), 0.0)

    def row(self, i):
        return dict(self._rows[i])

    def row_size(self, i):
        return len(self._rows[i])

    def set_many(self, rows, cols, values):
        """Пакетная запись ячеек (rows[t], cols[t]) = values[t]."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.size == 0:
            return
        if np.any(rows == cols) or rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= self.n:
            raise EngineStateError(f"Недопустимые ячейки матрицы при n={self.n}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise EngineStateError("reach-distance должен быть конечным и неотрицательным")
        for i, j, value in zip(rows.tolist(), cols.tolist(), values.tolist()):
            self._rows[i][j] = value

    def values(self, i, indices):
        """Сохранённые значения строки i в порядке indices."""
        row = self._rows[i]
        try:
            return [row[int(j)] for j in indices]
        except KeyError as e:
            raise EngineStateError(f"В строке {i} нет значения для соседа {e.args[0]}")

    def to_dense(self):
        dense = np.zeros((self.n, self.n), dtype=np.float64)
        for i, row in enumerate(self._rows):
            for j, value in row.items():
                dense[i, j] = value
        return dense

    def __eq__(self, other):
        return isinstance(other, ReachabilityMatrix) and self._rows == other._rows


@dataclass
class InsertStats:
    row_entries_written: int = 0
    column_entries_written: int = 0
    lrd_recomputed: int = 0
    lof_recomputed: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def touched(self):
        return self.row_entries_written + self.column_entries_written + self.lrd_recomputed + self.lof_recomputed

    def __add__(self, other):
        return InsertStats(
            self.row_entries_written + other.row_entries_written,
            self.column_entries_written + other.column_entries_written,
            self.lrd_recomputed + other.lrd_recomputed,
            self.lof_recomputed + other.lof_recomputed,
            self.wall_time + other.wall_time,
        )

    def to_dict(self):
        data = asdict(self)
        data['touched'] = self.touched
        return data


class DetectorState:
    """
    Изменяемое состояние одного движка: точки, списки соседей, k-distance,
    матрица reach-distance, массивы LRD и LOF.

    Помимо сохранённых списков соседей состояние ведёт точную таблицу
    расстояний до k ближайших (_exact_distances) для каждой точки. У ILOF она
    совпадает с сохранёнными списками; у EILOF сохранённые списки точек вне
    N(p_c, k) не обновляются и отстают от неё.

    Состояние однописательское: вставки строго последовательны.
    """

    def __init__(self, params, algo, dim, capacity=1024):
        self.params = as_params(params)
        self.algo = Algorithm.parse(algo)
        self.dim = dim
        self.n = 0
        self.rdm = ReachabilityMatrix()
        self._labels = []
        self._allocate(max(capacity, 1))

    def _allocate(self, capacity):
        k = self.params.k
        self._points = np.empty((capacity, self.dim), dtype=np.float64)
        self._neighbors = np.empty((capacity, k), dtype=np.int64)
        self._neighbor_distances = np.empty((capacity, k), dtype=np.float64)
        self._exact_distances = np.empty((capacity, k), dtype=np.float64)
        self._k_distances = np.empty(capacity, dtype=np.float64)
        self._lrd = np.empty(capacity, dtype=np.float64)
        self._lof = np.empty(capacity, dtype=np.float64)

    def _buffers(self):
        return (self._points, self._neighbors, self._neighbor_distances, self._exact_distances,
                self._k_distances, self._lrd, self._lof)

    def _grow(self):
        old = self._buffers()
        self._allocate(2 * len(self._points))
        for source, target in zip(old, self._buffers()):
            target[:self.n] = source[:self.n]

    @property
    def k(self):
        return self.params.k

    @property
    def points(self):
        return self._points[:self.n]

    @property
    def neighbors(self):
        return self._neighbors[:self.n]

    @property
    def neighbor_distances(self):
        return self._neighbor_distances[:self.n]

    @property
    def k_distances(self):
        return self._k_distances[:self.n]

    @property
    def exact_k_distances(self):
        """Истинные k-distance всех точек на текущем наборе."""
        return self._exact_distances[:self.n, -1]

    @property
    def lrd(self):
        return self._lrd[:self.n]

    @property
    def lof(self):
        return self._lof[:self.n]

    @property
    def dataset(self):
        labels = np.array(self._labels) if self._labels is not None else None
        return Dataset(self.points.copy(), labels)

    def neighbor_list(self, i):
        return NeighborList(
            owner=int(i),
            indices=tuple(int(j) for j in self._neighbors[i]),
            distances=tuple(float(d) for d in self._neighbor_distances[i]),
        )

    def append(self, point, label=None):
        if self.n == len(self._points):
            self._grow()
        index = self.n
        self._points[index] = point
        self.n += 1
        if self._labels is not None:
            if label is None:
                self._labels = None
            else:
                self._labels.append(int(label))
        if self.rdm.grow() != index:
            raise EngineStateError("Матрица reach-distance рассинхронизирована с набором точек")
        return index

    def admit_neighbor(self, i, new_index, distance):
        """
        Вставляет new_index в список соседей i и вытесняет прежнего k-го соседа.

        new_index имеет наибольший индекс вставки, поэтому при равных расстояниях
        он встаёт после существующих соседей.

        Returns:
            int: Индекс вытесненного соседа.
        """
        row = self._neighbors[i]
        row_distances = self._neighbor_distances[i]
        position = int(np.searchsorted(row_distances, distance, side='right'))
        if position >= self.k:
            raise EngineStateError(f"Точка {new_index} не входит в k ближайших соседей точки {i}")
        evicted = int(row[-1])
        row[position + 1:] = row[position:-1].copy()
        row_distances[position + 1:] = row_distances[position:-1].copy()
        row[position] = new_index
        row_distances[position] = distance
        self._k_distances[i] = row_distances[-1]
        return evicted

    def refresh_lrd(self, i):
        self._lrd[i] = lrd(mean_reach(self.rdm.values(i, self._neighbors[i])))

    def refresh_lof(self, i):
        self._lof[i] = lof_score(self._lrd[self._neighbors[i]], self._lrd[i])

    def refresh_lrd_from_lists(self, indices):
        """LRD по сохранённым спискам соседей и k-distance, без обращения к матрице."""
        reach = np.maximum(self._neighbor_distances[indices], self._k_distances[self._neighbors[indices]])
        self._lrd[indices] = 1.0 / np.maximum(reach.mean(axis=1), LRD_EPSILON)

    def refresh_lof_many(self, indices):
        self._lof[indices] = self._lrd[self._neighbors[indices]].mean(axis=1) / self._lrd[indices]

    def tighten_exact(self, distances):
        """
        Учитывает новую точку в точных k-расстояниях всех прежних точек.

        Args:
            distances (np.ndarray): Расстояния от новой точки до прежних n точек.

        Returns:
            np.ndarray: Булева маска точек, чьё k-соседство приняло новую точку.
        """
        exact = self._exact_distances[:distances.size]
        admitted = distances < exact[:, -1]
        if admitted.any():
            rows = np.concatenate([exact[admitted], distances[admitted][:, None]], axis=1)
            rows.sort(axis=1)
            exact[admitted] = rows[:, :self.k]
        return admitted

    def snapshot(self):
        """Копия всех массивов состояния (для сравнения на детерминированность)."""
        return {
            'points': self.points.copy(),
            'neighbors': self.neighbors.copy(),
            'neighbor_distances': self.neighbor_distances.copy(),
            'k_distances': self.k_distances.copy(),
            'exact_k_distances': self.exact_k_distances.copy(),
            'lrd': self.lrd.copy(),
            'lof': self.lof.copy(),
            'rdm': [self.rdm.row(i) for i in range(self.n)],
        }


def init_detector(ds, params, algo):
    """
    Строит статическую базу, с которой стартуют оба потоковых алгоритма.

    Args:
        ds (Dataset): Статический набор, n0 >= k + 1.
        params (LofParams | int): Параметры LOF.
        algo (Algorithm | str): 'ilof' или 'eilof'.

    Returns:
        DetectorState: Состояние, идентичное пакетному расчёту static_lof.

    Raises:
        InsufficientPointsError: Если n0 < k + 1.
    """
    params = as_params(params)
    params.check_size(ds.n)
    tables = compute_lof_tables(ds.points, params)
    state = DetectorState(params, algo, ds.dim, capacity=2 * ds.n)
    state.n = ds.n
    state._points[:ds.n] = ds.points
    state._neighbors[:ds.n] = tables.neighbors
    state._neighbor_distances[:ds.n] = tables.neighbor_distances
    state._exact_distances[:ds.n] = tables.neighbor_distances
    state._k_distances[:ds.n] = tables.k_distances
    state._lrd[:ds.n] = tables.lrd
    state._lof[:ds.n] = tables.lof
    state.rdm = ReachabilityMatrix.from_tables(tables.neighbors, tables.reach)
    state._labels = [int(v) for v in ds.labels] if ds.labels is not None else None
    logger.info(f"Детектор {state.algo.value} инициализирован: n0={ds.n}, k={params.k}, D={ds.dim}")
    return state


def _prepare_insert(state, p_c, expected):
    if state.algo != expected:
        raise InvalidParameterError(
            f"Состояние создано для {state.algo.value}, а вызвана вставка {expected.value}"
        )
    point = as_point(p_c, state.dim)
    distances = distances_to(state.points, point)
    order = nearest(distances, state.k)
    return point, distances, order


def ilof_insert(state, p_c, label=None):
    """
    Инкрементальная вставка ILOF: после возврата state.lof совпадает
    со static_lof на объединённом наборе.

    Точка p_c получает наибольший индекс вставки, поэтому она входит в N(p_i, k)
    только при d(p_i, p_c) < k-dist(p_i). Для каждой такой точки k-dist меняется,
    и столбец p_i пересчитывается по всем прежним строкам. Строки, содержащие p_i,
    находятся одной векторной выборкой по таблице соседей.

    Returns:
        tuple: (DetectorState, InsertStats).
    """
    started = time.perf_counter()
    point, distances, order = _prepare_insert(state, p_c, Algorithm.ILOF)
    stats = InsertStats()
    n_old = state.n
    k_dist_c = float(distances[order[-1]])
    entering = np.flatnonzero(state.tighten_exact(distances))

    c = state.append(point, label)
    state._neighbors[c] = order
    state._neighbor_distances[c] = distances[order]
    state._exact_distances[c] = distances[order]
    state._k_distances[c] = k_dist_c

    # S_update: списки соседей и k-distance, новый столбец p_c
    for i in entering:
        evicted = state.admit_neighbor(i, c, distances[i])
        state.rdm.delete(i, evicted)
        state.rdm.set(i, c, reach_distance(distances[i], k_dist_c))
        stats.column_entries_written += 1

    old_neighbors = state._neighbors[:n_old]
    is_entering = np.zeros(c + 1, dtype=bool)
    is_entering[entering] = True
    hits = is_entering[old_neighbors]

    # reach-dist(p_j, p_i) для всех прежних p_j; сохраняются только ячейки соседей
    rows, slots = np.nonzero(hits)
    cols = old_neighbors[rows, slots]
    state.rdm.set_many(rows, cols, np.maximum(state._neighbor_distances[rows, slots], state._k_distances[cols]))
    stats.column_entries_written += entering.size * n_old

    for o in order:
        state.rdm.set(c, o, reach_distance(distances[o], state._k_distances[o]))
        stats.row_entries_written += 1

    lrd_mask = hits.any(axis=1)
    lrd_mask[entering] = True
    lrd_set = np.flatnonzero(lrd_mask)
    state.refresh_lrd_from_lists(np.append(lrd_set, c))

    in_lrd_set = np.zeros(c + 1, dtype=bool)
    in_lrd_set[lrd_set] = True
    lof_mask = in_lrd_set[old_neighbors].any(axis=1)
    lof_mask[lrd_set] = True
    lof_set = np.flatnonzero(lof_mask)
    state.refresh_lof_many(np.append(lof_set, c))

    stats.lrd_recomputed = lrd_set.size + 1
    stats.lof_recomputed = lof_set.size + 1
    stats.wall_time = time.perf_counter() - started
    logger.debug(f"ILOF вставка #{c}: S_update={entering.size}, LRD={stats.lrd_recomputed}, "
                 f"LOF={stats.lof_recomputed}")
    return state, stats


def eilof_insert(state, p_c, label=None):
    """
    Эффективная инкрементальная вставка EILOF.

    Записывает ровно k ячеек новой строки и не более k ячеек нового столбца,
    пересчитывает LRD только у точек из N(p_c, k), принявших p_c в своё
    k-соседство, по сохранённым значениям строк, и вычисляет LOF одной новой
    точки. LOF существующих точек не меняется.

    Принятие p_c проверяется по точным k-distance, а не по сохранённым спискам:
    списки точек вне N(p_c, k) после прошлых вставок могут отставать.

    Returns:
        tuple: (DetectorState, InsertStats).
    """
    started = time.perf_counter()
    point, distances, order = _prepare_insert(state, p_c, Algorithm.EILOF)
    stats = InsertStats()
    k_dist_c = float(distances[order[-1]])
    admitted = state.tighten_exact(distances)

    c = state.append(point, label)
    state._neighbors[c] = order
    state._neighbor_distances[c] = distances[order]
    state._exact_distances[c] = distances[order]
    state._k_distances[c] = k_dist_c

    s_updates = []
    for o in order:
        if admitted[o]:
            evicted = state.admit_neighbor(o, c, distances[o])
            state.rdm.delete(o, evicted)
            state.rdm.set(o, c, reach_distance(distances[o], k_dist_c))
            stats.column_entries_written += 1
            s_updates.append(o)
        # точный k-dist(p_j) уже учитывает p_c
        state.rdm.set(c, o, reach_distance(distances[o], state._exact_distances[o, -1]))
        stats.row_entries_written += 1

    for o in s_updates:
        state.refresh_lrd(o)
    state.refresh_lrd(c)
    state.refresh_lof(c)

    stats.lrd_recomputed = len(s_updates) + 1
    stats.lof_recomputed = 1
    stats.wall_time = time.perf_counter() - started
    logger.debug(f"EILOF вставка #{c}: строка={stats.row_entries_written}, "
                 f"столбец={stats.column_entries_written}")
    return state, stats


INSERT_HANDLERS = {
    Algorithm.ILOF: ilof_insert,
    Algorithm.EILOF: eilof_insert,
}


def insert(state, p_c, label=None):
    """Вставка точки движком, выбранным при инициализации состояния."""
    return INSERT_HANDLERS[state.algo](state, p_c, label)


def scores(state):
    """Текущие LOF-оценки в порядке вставки (копия)."""
    return state.lof.copy()
