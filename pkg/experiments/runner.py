# experiments/runner.py
import hashlib
import logging
import statistics
from dataclasses import dataclass, field

import numpy as np
from celery import current_app, group
from django.core.exceptions import ImproperlyConfigured

from detection.engines import Algorithm, InsertStats, init_detector, insert, scores
from detection.evaluation import EvalReport, evaluate_scores
from detection.exceptions import EngineStateError
from .exceptions import PlanValidationError
from .plans import SCOPE_ALL, SCOPE_STREAMED, load_data, resolve_checkpoints

logger = logging.getLogger(__name__)

# Транспорты, видимые только внутри одного процесса
PROCESS_LOCAL_URLS = ('memory://', 'cache+memory://')


def stream_hash(ds):
    """sha256 координат (float64, C-порядок) и меток потока."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(ds.points, dtype=np.float64).tobytes())
    if ds.labels is not None:
        digest.update(np.ascontiguousarray(ds.labels, dtype=np.int8).tobytes())
    return digest.hexdigest()


@dataclass
class GridCell:
    report: EvalReport
    stats: InsertStats


@dataclass
class ResultGrid:
    """
    Ячейки (algo, k, m, threshold, scope) -> EvalReport и накопленные InsertStats
    на момент контрольной точки m.
    """
    plan_fingerprint: str
    stream_hash: str
    cells: dict = field(default_factory=dict)
    plan: dict = field(default=None, compare=False)

    def cell(self, algo, k, m, threshold, scope=SCOPE_ALL):
        return self.cells[(Algorithm.parse(algo).value, int(k), int(m), float(threshold), scope)]

    def keys(self):
        return sorted(self.cells)

    def axis(self, position):
        return sorted({key[position] for key in self.cells})

    @property
    def algos(self):
        order = [a.value for a in Algorithm]
        return sorted(self.axis(0), key=order.index)


def _evaluate(current, labels, n0, m, thresholds, scopes):
    reports = []
    for scope in scopes:
        if scope == SCOPE_STREAMED:
            if m == 0:
                continue
            values, truth = current[n0:], labels[n0:]
        else:
            values, truth = current, labels
        for threshold in thresholds:
            report = evaluate_scores(values, truth, threshold)
            reports.append({'threshold': float(threshold), 'scope': scope, 'report': report.to_dict()})
    return reports


def run_cell(initial, stream, algo, k, checkpoints, thresholds, scopes):
    """
    Один прогон движка: инициализация на базе, поточечная вставка потока,
    копия оценок в каждой контрольной точке и оценка по всем порогам.

    Returns:
        dict: JSON-совместимый результат ячейки.
    """
    algo = Algorithm.parse(algo)
    state = init_detector(initial, k, algo)
    labels = np.concatenate([initial.labels, stream.labels]) if stream.n else initial.labels
    pending = sorted(set(checkpoints))
    total = InsertStats()
    results = []

    def checkpoint(m):
        snapshot = scores(state)
        results.append({
            'm': m,
            'stats': total.to_dict(),
            'reports': _evaluate(snapshot, labels[:initial.n + m], initial.n, m, thresholds, scopes),
        })
        logger.info(f"{algo.value} k={k}: контрольная точка m={m}, накоплено записей {total.touched}")

    if pending and pending[0] == 0:
        checkpoint(pending.pop(0))
    for j, point in enumerate(stream.points, start=1):
        if not pending:
            break
        _, stats = insert(state, point, stream.labels[j - 1] if stream.labels is not None else None)
        total += stats
        if j == pending[0]:
            checkpoint(pending.pop(0))
    return {
        'algo': algo.value,
        'k': int(k),
        'stream_hash': stream_hash(stream),
        'checkpoints': results,
    }


def assemble_grid(plan, payloads):
    """
    Собирает ResultGrid из результатов ячеек.

    Raises:
        EngineStateError: Если ячейки видели разные последовательности точек.
    """
    hashes = {payload['stream_hash'] for payload in payloads}
    if len(hashes) != 1:
        raise EngineStateError(f"Ячейки получили разные потоки: {sorted(hashes)}")
    grid = ResultGrid(plan_fingerprint=plan.fingerprint(), stream_hash=hashes.pop(), plan=plan.to_dict())
    for payload in payloads:
        for point in payload['checkpoints']:
            stats = InsertStats(**{key: value for key, value in point['stats'].items() if key != 'touched'})
            for item in point['reports']:
                key = (payload['algo'], payload['k'], point['m'], item['threshold'], item['scope'])
                grid.cells[key] = GridCell(report=EvalReport(**item['report']), stats=stats)
    return grid


def check_worker_transport(conf):
    """
    В воркерном режиме брокер и бэкенд результатов должны быть общими для процессов.

    Raises:
        ImproperlyConfigured: Если при CELERY_TASK_ALWAYS_EAGER=false брокер
            или бэкенд результатов хранятся в памяти процесса.
    """
    if conf.task_always_eager:
        return
    for setting, url in (('CELERY_BROKER_URL', conf.broker_url), ('CELERY_RESULT_BACKEND', conf.result_backend)):
        if not url or str(url).startswith(PROCESS_LOCAL_URLS):
            raise ImproperlyConfigured(
                f"{setting}={url!r} недоступен воркерам; задайте общий брокер и бэкенд (например, redis://)"
            )


def run_plan(plan):
    """
    Прогоняет сетку плана: по ячейке Celery на каждую пару (algo, k).

    Ячейки выполняются группой задач (в процессе при eager-режиме или в воркерах),
    сборка результата последовательная.

    Returns:
        ResultGrid: Детерминированная при одном и том же плане сетка.

    Raises:
        PlanValidationError: Если план не согласуется с данными.
    """
    from .tasks import run_cell_task

    check_worker_transport(current_app.conf)

    initial, stream = load_data(plan)
    checkpoints = resolve_checkpoints(plan, initial, stream)
    payload = plan.to_dict()
    cells = [(algo, k) for algo in plan.algos for k in plan.k_values]
    logger.info(f"Запуск плана {plan.fingerprint()[:12]}: {len(cells)} ячеек, m={list(checkpoints)}")
    job = group(run_cell_task.s(payload, algo, k, list(checkpoints)) for algo, k in cells)
    results = job.apply_async().get(disable_sync_subtasks=False)
    return assemble_grid(plan, results)


@dataclass
class BenchSeries:
    algo: str
    k: int
    series: list
    wall_times: list

    @property
    def totals(self):
        total = InsertStats()
        for stats in self.series:
            total += stats
        return total

    @property
    def median_wall_time(self):
        return statistics.median(self.wall_times)

    @property
    def cumulative_touched(self):
        return np.cumsum([stats.touched for stats in self.series])


@dataclass
class BenchReport:
    plan_fingerprint: str
    stream_hash: str
    runs: list = field(default_factory=list)

    def run(self, algo, k):
        for item in self.runs:
            if item.algo == Algorithm.parse(algo).value and item.k == k:
                return item
        raise KeyError((algo, k))

    def summary(self):
        return {
            'plan_fingerprint': self.plan_fingerprint,
            'stream_hash': self.stream_hash,
            'runs': [
                {
                    'algo': item.algo,
                    'k': item.k,
                    'insertions': len(item.series),
                    'totals': item.totals.to_dict(),
                    'median_wall_time': item.median_wall_time,
                    'wall_times': item.wall_times,
                }
                for item in self.runs
            ],
        }


def _timed_pass(initial, stream, algo, k):
    state = init_detector(initial, k, algo)
    series = []
    for point in stream.points:
        _, stats = insert(state, point)
        series.append(stats)
    return series


def bench_updates(plan, data=None):
    """
    Поточечные ряды InsertStats для ILOF и EILOF на одной и той же последовательности.

    Первый прогон каждого движка (прогрев) отбрасывается; время вставки
    в ряду и общее время берутся медианой по plan.repetitions прогонам.
    Счётчики детерминированы и от прогона к прогону не меняются.

    Raises:
        PlanValidationError: Если в плане нет обоих алгоритмов.
    """
    if set(plan.algos) != {a.value for a in Algorithm}:
        raise PlanValidationError({'algos': ["Для бенчмарка нужны оба алгоритма (ilof и eilof)."]})
    initial, stream = data if data is not None else load_data(plan)
    resolve_checkpoints(plan, initial, stream, require_labels=False)
    report = BenchReport(plan_fingerprint=plan.fingerprint(), stream_hash=stream_hash(stream))
    for k in plan.k_values:
        for algo in plan.algos:
            passes = [_timed_pass(initial, stream, algo, k) for _ in range(plan.repetitions + 1)][1:]
            series = []
            for i, stats in enumerate(passes[0]):
                seconds = statistics.median(p[i].wall_time for p in passes)
                series.append(InsertStats(
                    stats.row_entries_written, stats.column_entries_written,
                    stats.lrd_recomputed, stats.lof_recomputed, seconds,
                ))
            wall_times = [sum(s.wall_time for s in p) for p in passes]
            report.runs.append(BenchSeries(algo=algo, k=int(k), series=series, wall_times=wall_times))
            logger.info(
                f"Бенчмарк {algo} k={k}: затронуто {report.runs[-1].totals.touched}, "
                f"медиана времени {statistics.median(wall_times):.4f} с"
            )
    return report
