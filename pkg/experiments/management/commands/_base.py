# experiments/management/commands/_base.py
from pathlib import Path
import logging
import time

import sentry_sdk
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from experiments.tasks import record_run

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


class CommandResult:
    """Итог команды для журнала: сводка, файлы и провенанс."""

    def __init__(self, summary=None, output_paths=None, plan_fingerprint='', stream_hash=''):
        self.summary = summary or {}
        self.output_paths = [str(p) for p in (output_paths or [])]
        self.plan_fingerprint = plan_fingerprint
        self.stream_hash = stream_hash


class LofstreamCommand(BaseCommand):
    """
    Общая основа команд: единое отображение ошибок в коды выхода
    (2 проверка входных данных, 3 ввод-вывод, 4 внутренняя ошибка движка)
    и запись каждого запуска в журнал ExperimentRun.
    """
    command_name = None

    def run_command(self, **options):
        raise NotImplementedError

    def output_dir(self, options, key='out_dir'):
        return Path(options.get(key) or settings.LOFSTREAM_OUTPUT_DIR)

    def handle(self, *args, **options):
        started = time.perf_counter()
        parameters = {key: (str(value) if isinstance(value, Path) else value)
                      for key, value in options.items()
                      if key not in ('stdout', 'stderr', 'skip_checks', 'no_color', 'force_color', 'traceback',
                                     'settings', 'pythonpath', 'verbosity')}
        try:
            result = self.run_command(**options)
        except CommandError as e:
            self._record('error', parameters, started, error_message=str(e))
            raise
        except (ValueError, ImproperlyConfigured) as e:
            self._record('error', parameters, started, error_message=str(e))
            raise CommandError(str(e), returncode=EXIT_VALIDATION)
        except OSError as e:
            logger.error(f"Ошибка ввода-вывода в команде {self.command_name}: {str(e)}")
            self._record('error', parameters, started, error_message=str(e))
            raise CommandError(f"Ошибка ввода-вывода: {e}", returncode=EXIT_IO)
        except Exception as e:
            logger.error(f"Внутренняя ошибка в команде {self.command_name}: {str(e)}", exc_info=True)
            sentry_sdk.capture_exception(e)
            self._record('error', parameters, started, error_message=str(e))
            raise CommandError(f"Внутренняя ошибка: {e}", returncode=EXIT_INTERNAL)
        self._record('success', parameters, started, result=result)

    def _record(self, status, parameters, started, result=None, error_message=None):
        result = result or CommandResult()
        try:
            record_run.delay(
                command=self.command_name,
                status=status,
                parameters=parameters,
                summary=result.summary,
                output_paths=result.output_paths,
                error_message=error_message,
                duration=time.perf_counter() - started,
                plan_fingerprint=result.plan_fingerprint,
                stream_hash=result.stream_hash,
            )
        except Exception as e:
            logger.error(f"Не удалось отправить запись журнала для {self.command_name}: {str(e)}")


def add_plan_arguments(parser):
    """Флаги плана, общие для run и bench."""
    parser.add_argument('--plan', help="Файл плана key=value; остальные флаги плана игнорируются")
    parser.add_argument('--algo', choices=['ilof', 'eilof', 'both'], default='both')
    parser.add_argument('--k', type=int, nargs='+', default=None,
                        help="Значения k (по умолчанию LOFSTREAM_DEFAULT_K)")
    parser.add_argument('--thresholds', type=float, nargs='+', default=None,
                        help="Пороги загрязнения (по умолчанию LOFSTREAM_DEFAULT_CONTAMINATION)")
    parser.add_argument('--m-checkpoints', type=int, nargs='+', default=None)
    parser.add_argument('--initial', help="CSV статической базы")
    parser.add_argument('--stream', help="CSV потока")
    parser.add_argument('--preset', default=None, help="Синтетический пресет, если файлы не заданы")
    parser.add_argument('--eval-scope', choices=['all_points', 'streamed_only', 'both'], default='all_points')
    parser.add_argument('--repetitions', type=int, default=3)
    parser.add_argument('--seed', type=int, default=0)


def plan_data(options):
    """Словарь плана из флагов команды (проверяется сериализатором)."""
    data = {
        'algos': [options['algo']],
        'k_values': options.get('k') or [settings.LOFSTREAM_DEFAULT_K],
        'thresholds': options.get('thresholds') or [settings.LOFSTREAM_DEFAULT_CONTAMINATION],
        'm_schedule': options.get('m_checkpoints'),
        'eval_scope': options['eval_scope'],
        'repetitions': options['repetitions'],
        'seed': options['seed'],
    }
    if options.get('initial') or options.get('stream'):
        data.update(source='files', initial_path=options.get('initial'), stream_path=options.get('stream'))
    else:
        data.update(source='synthetic', preset=options.get('preset') or 'gauss-2d')
    return data
