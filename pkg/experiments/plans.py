# experiments/plans.py
import hashlib
import json
import logging
from dataclasses import asdict, dataclass

from detection.engines import Algorithm
from .exceptions import PlanValidationError
from .ingest import CsvSchema, PrepRecipe, load_csv, load_raw, prepare
from .synth import SynthRecipe, generate

logger = logging.getLogger(__name__)

# Размеры приращений потока в синтетических сериях
DEFAULT_INCREMENTS = (1, 5, 10, 20, 40, 80, 160, 320, 640, 1280)

SOURCE_SYNTHETIC = 'synthetic'
SOURCE_PREPARED = 'prepared'
SOURCE_FILES = 'files'
SOURCES = (SOURCE_SYNTHETIC, SOURCE_PREPARED, SOURCE_FILES)

SCOPE_ALL = 'all_points'
SCOPE_STREAMED = 'streamed_only'
SCOPE_BOTH = 'both'
EVAL_SCOPES = (SCOPE_ALL, SCOPE_STREAMED, SCOPE_BOTH)


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Декларативное описание серии: источник данных, сетка k × m × порог,
    набор алгоритмов, область оценки, число повторов и seed.
    """
    source: str
    k_values: tuple
    thresholds: tuple
    algos: tuple = (Algorithm.ILOF.value, Algorithm.EILOF.value)
    m_schedule: tuple = None
    eval_scope: str = SCOPE_ALL
    repetitions: int = 3
    seed: int = 0
    synth: SynthRecipe = None
    prep: PrepRecipe = None
    raw_path: str = None
    raw_delimiter: str = ','
    raw_header: bool = True
    initial_path: str = None
    stream_path: str = None

    @property
    def scopes(self):
        if self.eval_scope == SCOPE_BOTH:
            return (SCOPE_ALL, SCOPE_STREAMED)
        return (self.eval_scope,)

    def to_dict(self):
        data = asdict(self)
        data['synth'] = self.synth.to_dict() if self.synth is not None else None
        data['prep'] = self.prep.to_dict() if self.prep is not None else None
        for key in ('k_values', 'thresholds', 'algos', 'm_schedule'):
            if data[key] is not None:
                data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if data.get('synth') is not None:
            data['synth'] = SynthRecipe(**data['synth'])
        if data.get('prep') is not None:
            prep = dict(data['prep'])
            if prep.get('feature_columns') is not None:
                prep['feature_columns'] = tuple(prep['feature_columns'])
            data['prep'] = PrepRecipe(**prep)
        for key in ('k_values', 'thresholds', 'algos', 'm_schedule'):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def fingerprint(self):
        """sha256 канонического JSON плана."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'), ensure_ascii=False)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _load_synthetic(plan):
    return generate(plan.synth)


def _load_prepared(plan):
    schema = CsvSchema(label_column=None, delimiter=plan.raw_delimiter, header=plan.raw_header)
    return prepare(load_raw(plan.raw_path, schema), plan.prep)


def _load_files(plan):
    return load_csv(plan.initial_path), load_csv(plan.stream_path)


DATA_LOADERS = {
    SOURCE_SYNTHETIC: _load_synthetic,
    SOURCE_PREPARED: _load_prepared,
    SOURCE_FILES: _load_files,
}


def load_data(plan):
    """
    Строит (initial, stream) по источнику плана. Детерминирован при одном и том же плане.
    """
    initial, stream = DATA_LOADERS[plan.source](plan)
    logger.info(f"Данные плана ({plan.source}): статических {initial.n}, в потоке {stream.n}")
    return initial, stream


def resolve_checkpoints(plan, initial, stream, require_labels=True):
    """
    Проверяет план против данных и возвращает отсортированные контрольные точки m.

    Без явного расписания берутся приращения серии, помещающиеся в поток.

    Raises:
        PlanValidationError: m больше потока, k >= размера базы, нет меток,
            разная размерность базы и потока.
    """
    errors = {}
    if initial.dim != stream.dim:
        errors['source'] = [f"Размерность базы ({initial.dim}) и потока ({stream.dim}) различается"]
    if require_labels and (initial.labels is None or (stream.n and stream.labels is None)):
        errors.setdefault('source', []).append("Для оценки F1 нужны метки 0/1 в базе и в потоке")
    too_big_k = [k for k in plan.k_values if k >= initial.n]
    if too_big_k:
        errors['k_values'] = [f"k должен быть меньше размера базы ({initial.n}): {too_big_k}"]
    if plan.m_schedule is None:
        checkpoints = tuple(m for m in DEFAULT_INCREMENTS if m <= stream.n) or (0,)
    else:
        checkpoints = tuple(sorted(set(plan.m_schedule)))
        too_big_m = [m for m in checkpoints if m > stream.n]
        if too_big_m:
            errors['m_schedule'] = [f"m не может превышать размер потока ({stream.n}): {too_big_m}"]
    if errors:
        raise PlanValidationError(errors)
    return checkpoints
