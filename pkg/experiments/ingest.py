# experiments/ingest.py
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from detection.exceptions import InvalidParameterError
from detection.lof import Dataset
from .exceptions import CsvFormatError, InsufficientRowsError

logger = logging.getLogger(__name__)

LABEL_COLUMN = 'label'
SHUTTLE_CLASSES = frozenset(range(1, 8))


@dataclass(frozen=True)
class CsvSchema:
    """
    Описание входного CSV.

    feature_columns: имена или позиции столбцов признаков (None: все, кроме метки).
    label_column: имя или позиция столбца меток 0/1 (None: без меток).
    label_optional: метка читается, только если столбец присутствует.
    """
    feature_columns: tuple = None
    label_column: object = LABEL_COLUMN
    delimiter: str = ','
    header: bool = True
    label_optional: bool = True


CANONICAL_SCHEMA = CsvSchema()


def read_table(path, schema=CANONICAL_SCHEMA):
    """
    Читает CSV как строки, без подстановки NaN, сохраняя порядок строк.

    Raises:
        OSError: Если файл недоступен.
        CsvFormatError: Если файл пуст или не разбирается.
    """
    path = Path(path)
    sep = r'\s+' if schema.delimiter.isspace() else schema.delimiter
    try:
        frame = pd.read_csv(
            path, sep=sep, header=0 if schema.header else None, dtype=str,
            keep_default_na=False, encoding='utf-8', skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"Файл {path} пуст")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvFormatError(f"Не удалось разобрать {path}: {e}")
    if schema.header:
        frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def resolve_column(frame, column, header=True):
    """Имя столбца по имени или позиции."""
    if column in frame.columns:
        return column
    if isinstance(column, (int, np.integer)) and not isinstance(column, bool) and header:
        if 0 <= column < len(frame.columns):
            return frame.columns[column]
    if isinstance(column, str) and column.isdigit():
        return resolve_column(frame, int(column), header)
    raise CsvFormatError("Столбец не найден", column=column)


def _row_number(position, header):
    # Номер строки в файле, с единицы и с учётом заголовка
    return position + (2 if header else 1)


def numeric_columns(frame, columns, header=True):
    """
    Преобразует столбцы в float64 с проверкой каждой ячейки.

    Raises:
        CsvFormatError: На первой нечисловой или бесконечной ячейке (строка и столбец).
    """
    result = {}
    for column in columns:
        raw = frame[column]
        values = pd.to_numeric(raw.astype(str).str.strip(), errors='coerce').to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            position = int(bad[0])
            raise CsvFormatError(
                f"Нечисловое или бесконечное значение {raw.iloc[position]!r}",
                row=_row_number(position, header), column=column,
            )
        result[column] = values
    return pd.DataFrame(result, index=frame.index)


def _label_values(frame, column, header):
    values = numeric_columns(frame, [column], header)[column].to_numpy()
    bad = np.flatnonzero(~np.isin(values, (0.0, 1.0)))
    if bad.size:
        position = int(bad[0])
        raise CsvFormatError(
            f"Метка должна быть 0 или 1, получено {frame[column].iloc[position]!r}",
            row=_row_number(position, header), column=column,
        )
    return values.astype(np.int8)


def load_csv(path, schema=CANONICAL_SCHEMA):
    """
    Загружает набор точек из CSV.

    Args:
        path (str | Path): Путь к файлу.
        schema (CsvSchema): Схема столбцов.

    Returns:
        Dataset: Точки в порядке строк файла и метки, если они есть.

    Raises:
        CsvFormatError: Ошибка разбора, нечисловое значение или отсутствующий столбец.
    """
    frame = read_table(path, schema)
    label_column = None
    if schema.label_column is not None:
        try:
            label_column = resolve_column(frame, schema.label_column, schema.header)
        except CsvFormatError:
            if not schema.label_optional:
                raise
    if schema.feature_columns is None:
        features = [c for c in frame.columns if c != label_column]
    else:
        features = [resolve_column(frame, c, schema.header) for c in schema.feature_columns]
    if not features:
        raise CsvFormatError(f"В файле {path} нет столбцов признаков")
    if frame.empty:
        raise CsvFormatError(f"В файле {path} нет строк данных")
    points = numeric_columns(frame, features, schema.header).to_numpy()
    labels = _label_values(frame, label_column, schema.header) if label_column is not None else None
    logger.info(f"Загружено {len(points)} точек размерности {points.shape[1]} из {path}")
    return Dataset(points, labels)


def load_raw(path, schema=None):
    """
    Загружает сырую таблицу (с многоклассовыми метками, Time/Class и т. п.),
    проверяя, что все ячейки числовые.

    Returns:
        pd.DataFrame: Таблица float64 с исходными именами столбцов.
    """
    schema = schema or CsvSchema(label_column=None)
    frame = read_table(path, schema)
    if frame.empty:
        raise CsvFormatError(f"В файле {path} нет строк данных")
    table = numeric_columns(frame, list(frame.columns), schema.header)
    logger.info(f"Сырая таблица {path}: {table.shape[0]} строк, {table.shape[1]} столбцов")
    return table


def write_csv(ds, path):
    """
    Пишет набор в каноническом формате: f0..f{D-1}[,label], 17 значащих цифр.

    Returns:
        Path: Путь к записанному файлу.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(ds.points, columns=[f"f{i}" for i in range(ds.dim)])
    if ds.labels is not None:
        frame[LABEL_COLUMN] = ds.labels.astype(int)
    frame.to_csv(path, index=False, float_format='%.17g')
    logger.debug(f"Записано {ds.n} строк в {path}")
    return path


def standardize(ds):
    """
    z-преобразование каждого признака по этому набору (стандартное отклонение генеральной совокупности).
    Постоянные признаки становятся нулями.
    """
    if ds.n == 0:
        return ds
    points = StandardScaler().fit_transform(ds.points)
    points[:, np.ptp(ds.points, axis=0) == 0] = 0.0
    return Dataset(points, ds.labels)


class PrepVariant(str, Enum):
    SHUTTLE = 'shuttle'
    CREDIT = 'credit'
    PASSTHROUGH = 'passthrough'


@dataclass(frozen=True)
class PrepRecipe:
    """
    Рецепт подготовки реального набора к потоковому эксперименту.

    Первые static_count строк образуют статическую базу, следующие stream_count идут потоком.
    """
    variant: PrepVariant = PrepVariant.PASSTHROUGH
    static_count: int = 1000
    stream_count: int = 640
    target_fraud_fraction: float = 0.05
    subsample_seed: int = 0
    standardize: bool = True
    shuttle_class6: str = 'outlier'
    shuttle_feature_count: int = 7
    feature_columns: tuple = None
    class_column: object = None
    time_column: str = 'Time'

    def __post_init__(self):
        variant = self.variant.value if isinstance(self.variant, PrepVariant) else str(self.variant).lower()
        try:
            object.__setattr__(self, 'variant', PrepVariant(variant))
        except ValueError:
            raise InvalidParameterError(f"Неизвестный вариант подготовки: {self.variant!r}")
        if self.static_count < 1 or self.stream_count < 0:
            raise InvalidParameterError("static_count должен быть >= 1, stream_count >= 0")
        if not 0 < self.target_fraud_fraction < 1:
            raise InvalidParameterError(
                f"target_fraud_fraction должен лежать в (0, 1), получено {self.target_fraud_fraction}"
            )
        if self.shuttle_class6 not in ('outlier', 'drop'):
            raise InvalidParameterError(f"shuttle_class6 должен быть 'outlier' или 'drop', получено {self.shuttle_class6!r}")
        if self.shuttle_feature_count < 1:
            raise InvalidParameterError("shuttle_feature_count должен быть >= 1")

    @property
    def window(self):
        return self.static_count + self.stream_count

    def to_dict(self):
        data = asdict(self)
        data['variant'] = self.variant.value
        if data['feature_columns'] is not None:
            data['feature_columns'] = list(data['feature_columns'])
        return data


def _class_column(raw, recipe, default):
    if recipe.class_column is not None:
        return resolve_column(raw, recipe.class_column)
    if default is None:
        return None
    return resolve_column(raw, default)


def _features(raw, recipe, exclude, limit=None):
    if recipe.feature_columns is not None:
        return [resolve_column(raw, c) for c in recipe.feature_columns]
    columns = [c for c in raw.columns if c not in exclude]
    return columns[:limit] if limit is not None else columns


def _split(points, labels, recipe, what):
    if len(points) < recipe.window:
        raise InsufficientRowsError(
            f"{what}: после фильтрации осталось {len(points)} строк, требуется {recipe.window}"
        )
    points = points[:recipe.window]
    labels = labels[:recipe.window] if labels is not None else None
    static = Dataset(points[:recipe.static_count], None if labels is None else labels[:recipe.static_count])
    stream = Dataset(points[recipe.static_count:], None if labels is None else labels[recipe.static_count:])
    if recipe.standardize:
        static, stream = standardize(static), standardize(stream)
    return static, stream


def prep_shuttle(raw, recipe=None):
    """
    Подготовка Shuttle: удаляются строки класса 4, класс 1 считается нормой,
    классы 2, 3, 5, 7 объединяются в выбросы, класс 6 считается выбросом или удаляется
    (recipe.shuttle_class6). Берутся первые static_count + stream_count строк.

    Args:
        raw (pd.DataFrame): Сырая таблица; метка класса по умолчанию в последнем столбце.
        recipe (PrepRecipe, optional): Параметры подготовки.

    Returns:
        tuple: (static: Dataset, stream: Dataset).
    """
    recipe = recipe or PrepRecipe(variant=PrepVariant.SHUTTLE)
    class_column = _class_column(raw, recipe, raw.columns[-1])
    classes = raw[class_column].astype(int)
    present = set(classes.unique())
    unknown = present - SHUTTLE_CLASSES
    if unknown:
        raise InvalidParameterError(f"Неизвестные классы Shuttle: {sorted(unknown)}")
    missing = sorted(SHUTTLE_CLASSES - present)
    if missing:
        logger.warning(f"В данных Shuttle отсутствуют классы {missing}")

    keep = classes != 4
    if recipe.shuttle_class6 == 'drop':
        keep &= classes != 6
    filtered = raw[keep]
    labels = (classes[keep] != 1).to_numpy(dtype=np.int8)
    features = _features(filtered, recipe, {class_column}, recipe.shuttle_feature_count)
    logger.info(
        f"Shuttle: {len(raw)} строк, после фильтрации {len(filtered)}, "
        f"доля выбросов {labels.mean() if labels.size else 0:.4f}, класс 6: {recipe.shuttle_class6}"
    )
    return _split(filtered[features].to_numpy(dtype=np.float64), labels, recipe, "Shuttle")


def prep_credit(raw, recipe=None):
    """
    Подготовка Credit Card Fraud: все мошеннические транзакции плюс случайная
    выборка легитимных до доли target_fraud_fraction, сортировка по времени,
    первые static_count + stream_count строк, независимая стандартизация частей.

    Raises:
        InsufficientRowsError: Если легитимных строк не хватает для нужной доли.
    """
    recipe = recipe or PrepRecipe(variant=PrepVariant.CREDIT)
    class_column = _class_column(raw, recipe, 'Class')
    time_column = resolve_column(raw, recipe.time_column)
    classes = raw[class_column].astype(int)
    fraud = raw[classes == 1]
    legit = raw[classes == 0]
    if fraud.empty:
        raise InsufficientRowsError("В данных нет мошеннических транзакций (Class = 1)")
    fraction = recipe.target_fraud_fraction
    needed = int(round(len(fraud) * (1 - fraction) / fraction))
    if len(legit) < needed:
        raise InsufficientRowsError(
            f"Для доли {fraction} нужно {needed} легитимных транзакций, доступно {len(legit)}"
        )
    sample = legit.sample(n=needed, random_state=recipe.subsample_seed)
    combined = pd.concat([fraud, sample]).sort_index(kind='stable').sort_values(time_column, kind='stable')
    labels = (combined[class_column].astype(int) == 1).to_numpy(dtype=np.int8)
    features = _features(combined, recipe, {class_column, time_column})
    logger.info(
        f"Credit: {len(fraud)} мошеннических из {len(raw)}, выборка {needed} легитимных, "
        f"доля в окне {labels[:recipe.window].mean():.4f}"
    )
    return _split(combined[features].to_numpy(dtype=np.float64), labels, recipe, "Credit")


def prep_passthrough(raw, recipe=None):
    """Без фильтрации: признаки и, если задан class_column, метки 0/1 в исходном порядке."""
    recipe = recipe or PrepRecipe()
    class_column = _class_column(raw, recipe, None)
    labels = None
    if class_column is not None:
        values = raw[class_column].to_numpy()
        if not np.isin(values, (0.0, 1.0)).all():
            raise CsvFormatError("Метка должна быть 0 или 1", column=class_column)
        labels = values.astype(np.int8)
    features = _features(raw, recipe, {class_column})
    return _split(raw[features].to_numpy(dtype=np.float64), labels, recipe, "Passthrough")


PREP_HANDLERS = {
    PrepVariant.SHUTTLE: prep_shuttle,
    PrepVariant.CREDIT: prep_credit,
    PrepVariant.PASSTHROUGH: prep_passthrough,
}


def prepare(raw, recipe):
    """Запускает рецепт подготовки по его варианту."""
    return PREP_HANDLERS[recipe.variant](raw, recipe)
