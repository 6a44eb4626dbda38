# experiments/synth.py
import logging
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from detection.exceptions import InvalidParameterError
from detection.lof import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthRecipe:
    """
    Рецепт синтетического набора: гауссово ядро в начале координат и
    гауссовы скопления выбросов с ковариацией outlier_scale² · I, центры
    которых удалены от начала координат на outlier_shift.

    outlier_clusters задаёт число скоплений; при 0 каждый выброс получает
    собственное случайное направление сдвига (рассеянные выбросы).
    """
    dim: int = 2
    n_initial: int = 1000
    n_stream: int = 1280
    outlier_fraction: float = 0.05
    outlier_scale: float = 2.0
    outlier_shift: float = 30.0
    outlier_clusters: int = 2
    seed: int = 0

    def __post_init__(self):
        for field in ('dim', 'n_initial', 'n_stream'):
            value = getattr(self, field)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidParameterError(f"{field} должен быть положительным целым, получено {value!r}")
        if not 0 < self.outlier_fraction < 1:
            raise InvalidParameterError(
                f"outlier_fraction должен лежать в интервале (0, 1), получено {self.outlier_fraction}"
            )
        if not self.outlier_scale > 1:
            raise InvalidParameterError(f"outlier_scale должен быть > 1, получено {self.outlier_scale}")
        if not (np.isfinite(self.outlier_shift) and self.outlier_shift >= 0):
            raise InvalidParameterError(f"outlier_shift должен быть конечным и >= 0, получено {self.outlier_shift}")
        clusters = self.outlier_clusters
        if isinstance(clusters, bool) or not isinstance(clusters, (int, np.integer)) or clusters < 0:
            raise InvalidParameterError(f"outlier_clusters должен быть неотрицательным целым, получено {clusters!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidParameterError(f"seed должен быть неотрицательным целым, получено {self.seed!r}")
        if self.outlier_counts()[1] > self.n_stream:
            raise InvalidParameterError("Поток слишком мал, чтобы вместить требуемую долю выбросов")

    @property
    def total(self):
        return self.n_initial + self.n_stream

    def outlier_counts(self):
        """
        Returns:
            tuple: (выбросов в начальном наборе, выбросов в потоке).
        """
        total = math.floor(round(self.outlier_fraction * self.total, 9))
        initial = math.floor(round(self.outlier_fraction / 2 * self.n_initial, 9))
        return initial, total - initial

    def to_dict(self):
        return asdict(self)


PRESETS = {
    'gauss-2d': SynthRecipe(dim=2),
    'gauss-50d': SynthRecipe(dim=50),
}


def from_preset(name, **overrides):
    try:
        recipe = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"Неизвестный пресет: {name!r}. Доступные: {sorted(PRESETS)}")
    overrides = {key: value for key, value in overrides.items() if value is not None}
    return replace(recipe, **overrides)


def _unit_directions(rng, count, dim):
    directions = rng.standard_normal((count, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    return directions / np.where(norms > 0, norms, 1.0)


def cluster_directions(rng, recipe):
    """
    Направления центров скоплений выбросов, общие для начального набора и потока.

    При outlier_clusters <= dim направления попарно ортогональны.

    Returns:
        np.ndarray | None: Матрица (outlier_clusters, dim) или None для рассеянных выбросов.
    """
    if recipe.outlier_clusters == 0:
        return None
    if recipe.outlier_clusters > recipe.dim:
        return _unit_directions(rng, recipe.outlier_clusters, recipe.dim)
    basis, _ = np.linalg.qr(rng.standard_normal((recipe.dim, recipe.outlier_clusters)))
    return basis.T


def _sample(rng, n, n_outliers, recipe, centers):
    points = rng.standard_normal((n, recipe.dim))
    positions = np.sort(rng.permutation(n)[:n_outliers])
    if centers is None:
        directions = _unit_directions(rng, n_outliers, recipe.dim)
    else:
        # скопления растут по потоку поочерёдно
        directions = centers[np.arange(n_outliers) % len(centers)]
    outliers = recipe.outlier_shift * directions + recipe.outlier_scale * rng.standard_normal((n_outliers, recipe.dim))
    points[positions] = outliers
    labels = np.zeros(n, dtype=np.int8)
    labels[positions] = 1
    return Dataset(points, labels)


def generate(recipe):
    """
    Генерирует начальный набор и поток по рецепту.

    Генератор Philox (счётный, 64-битный) с seed рецепта: одинаковый seed
    даёт побитово одинаковые наборы.

    Args:
        recipe (SynthRecipe): Рецепт.

    Returns:
        tuple: (initial: Dataset, stream: Dataset).
    """
    if not isinstance(recipe, SynthRecipe):
        raise InvalidParameterError(f"Ожидается SynthRecipe, получено {type(recipe).__name__}")
    rng = np.random.Generator(np.random.Philox(recipe.seed))
    initial_outliers, stream_outliers = recipe.outlier_counts()
    centers = cluster_directions(rng, recipe)
    initial = _sample(rng, recipe.n_initial, initial_outliers, recipe, centers)
    stream = _sample(rng, recipe.n_stream, stream_outliers, recipe, centers)
    logger.info(
        f"Синтетический набор: D={recipe.dim}, {recipe.n_initial}+{recipe.n_stream} точек, "
        f"выбросов {initial_outliers}+{stream_outliers}, скоплений {recipe.outlier_clusters}, seed={recipe.seed}"
    )
    return initial, stream
