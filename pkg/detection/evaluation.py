# detection/evaluation.py
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from .exceptions import DetectionError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdRule:
    """Доля точек, помечаемых как выбросы (например, 0.05, 0.07, 0.10)."""
    contamination: float

    def __post_init__(self):
        try:
            value = float(self.contamination)
        except (TypeError, ValueError):
            raise InvalidParameterError(f"contamination должен быть числом, получено {self.contamination!r}")
        if not 0 < value < 1:
            raise InvalidParameterError(f"contamination должен лежать в интервале (0, 1), получено {value}")
        object.__setattr__(self, 'contamination', value)

    def flag_count(self, n):
        # round() гасит шум представления, например 0.07 * 1640 = 114.80000000000001
        return min(n, math.ceil(round(self.contamination * n, 9)))


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    @property
    def n(self):
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self):
        return asdict(self)


def as_rule(rule):
    return rule if isinstance(rule, ThresholdRule) else ThresholdRule(rule)


def flag_outliers(scores, rule):
    """
    Помечает ровно ceil(contamination * n) точек с наибольшими оценками.

    При равенстве оценок на границе отсечения предпочтение отдаётся
    меньшему индексу вставки.

    Args:
        scores (array-like): Конечные LOF-оценки.
        rule (ThresholdRule | float): Порог загрязнения.

    Returns:
        np.ndarray: Бинарный массив int8 той же длины.

    Raises:
        DetectionError: Если массив пуст или содержит NaN/Inf.
    """
    rule = as_rule(rule)
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise DetectionError("Пустой массив оценок: нечего помечать")
    if not np.all(np.isfinite(scores)):
        raise DetectionError("Оценки должны быть конечными")
    order = np.lexsort((np.arange(scores.size), -scores))
    flags = np.zeros(scores.size, dtype=np.int8)
    flags[order[:rule.flag_count(scores.size)]] = 1
    return flags


def f1_report(predicted, truth):
    """
    Матрица ошибок и precision/recall/F1 с нулевым значением при нулевом знаменателе.

    Raises:
        DetectionError: Если длины массивов различаются.
    """
    predicted = np.asarray(predicted).ravel()
    truth = np.asarray(truth).ravel()
    if predicted.shape != truth.shape:
        raise DetectionError(
            f"Длины предсказаний ({predicted.size}) и разметки ({truth.size}) не совпадают"
        )
    if predicted.size == 0:
        return EvalReport(0, 0, 0, 0, 0.0, 0.0, 0.0)
    tn, fp, fn, tp = confusion_matrix(truth, predicted, labels=[0, 1]).ravel()
    precision, recall, f1, _ = precision_recall_fscore_support(
        truth, predicted, pos_label=1, average='binary', zero_division=0,
    )
    return EvalReport(
        tp=int(tp), fp=int(fp), fn=int(fn), tn=int(tn),
        precision=float(precision), recall=float(recall), f1=float(f1),
    )


def evaluate_scores(scores, truth, rule):
    """flag_outliers и f1_report одним вызовом."""
    return f1_report(flag_outliers(scores, rule), truth)
