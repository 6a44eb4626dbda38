# experiments/tasks.py
from celery import shared_task
import time
import logging
import sentry_sdk

from detection.exceptions import DetectionError
from .models import ExperimentRun
from .plans import ExperimentPlan, load_data
from .runner import run_cell

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_cell_task(self, plan_payload, algo, k, checkpoints):
    """
    Выполняет одну ячейку сетки (algo, k).

    Данные восстанавливаются из плана заново: при одном seed поток совпадает
    во всех ячейках, что проверяется хэшем при сборке.

    Args:
        plan_payload (dict): ExperimentPlan.to_dict().
        algo (str): 'ilof' или 'eilof'.
        k (int): Число соседей.
        checkpoints (list): Контрольные точки m.

    Returns:
        dict: Результат ячейки (см. runner.run_cell).
    """
    start_time = time.time()
    logger.info(f"Запуск ячейки {algo} k={k}")
    try:
        plan = ExperimentPlan.from_dict(plan_payload)
        initial, stream = load_data(plan)
        result = run_cell(initial, stream, algo, k, checkpoints, plan.thresholds, plan.scopes)
        logger.info(f"Ячейка {algo} k={k} завершена за {time.time() - start_time:.2f} с")
        return result
    except DetectionError:
        raise
    except Exception as e:
        logger.error(f"Ошибка в ячейке {algo} k={k}: {str(e)}", exc_info=True)
        sentry_sdk.capture_exception(e)
        raise


@shared_task
def record_run(command, status, parameters=None, summary=None, output_paths=None, error_message=None,
               duration=0.0, plan_fingerprint='', stream_hash=''):
    """
    Записывает запуск команды в журнал ExperimentRun.

    Ошибка записи журнала только логируется и не влияет на результат команды.
    """
    try:
        run = ExperimentRun.objects.create(
            command=command,
            status=status,
            parameters=parameters or {},
            summary=summary or {},
            output_paths=output_paths or [],
            error_message=error_message,
            duration=duration,
            plan_fingerprint=plan_fingerprint or '',
            stream_hash=stream_hash or '',
        )
        logger.info(f"Запуск {command} записан в журнал: id={run.id}, статус {status}")
        return run.id
    except Exception as e:
        logger.error(f"Ошибка при записи журнала запуска {command}: {str(e)}", exc_info=True)
        sentry_sdk.capture_exception(e)
        return None
