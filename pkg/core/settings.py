"""
Django settings for the lofstream project.

Generated by 'django-admin startproject' using Django 5.2, trimmed down to a
command-line experiment harness (no HTTP surface).
"""

from pathlib import Path
import sentry_sdk
from sentry_sdk.integrations.django import DjangoIntegration
from sentry_sdk.integrations.celery import CeleryIntegration
import environ
import subprocess
import logging
import json

# Инициализация переменных окружения
env = environ.Env()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

environ.Env.read_env(BASE_DIR / '.env')

SECRET_KEY = env('SECRET_KEY', default='lofstream-insecure-development-key')

DEBUG = env.bool('DEBUG', default=True)

ALLOWED_HOSTS = env.list('ALLOWED_HOSTS', default=['localhost', '127.0.0.1'])

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'detection',
    'experiments',
]

# Database
DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'lofstream.sqlite3'}"),
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TIME_ZONE = 'UTC'
USE_TZ = True

# Каталог по умолчанию для всех файлов, которые пишут команды
LOFSTREAM_OUTPUT_DIR = env('LOFSTREAM_OUTPUT_DIR', default=str(BASE_DIR / 'results'))

# Канонические настройки экспериментов (k=50, 5% загрязнения, разбиение 1000/640)
LOFSTREAM_DEFAULT_K = env.int('LOFSTREAM_DEFAULT_K', default=50)
LOFSTREAM_DEFAULT_CONTAMINATION = env.float('LOFSTREAM_DEFAULT_CONTAMINATION', default=0.05)
LOFSTREAM_STATIC_COUNT = env.int('LOFSTREAM_STATIC_COUNT', default=1000)
LOFSTREAM_STREAM_COUNT = env.int('LOFSTREAM_STREAM_COUNT', default=640)

# Celery settings: без брокера задачи выполняются в процессе (eager)
CELERY_TASK_ALWAYS_EAGER = env.bool('CELERY_TASK_ALWAYS_EAGER', default=True)
CELERY_BROKER_URL = env('CELERY_BROKER_URL', default='memory://')
# Воркерам нужен общий бэкенд результатов: по умолчанию им служит брокер
CELERY_RESULT_BACKEND = env(
    'CELERY_RESULT_BACKEND', default='cache+memory://' if CELERY_TASK_ALWAYS_EAGER else CELERY_BROKER_URL,
)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_BROKER_CONNECTION_RETRY_ON_STARTUP = True
CELERY_TASK_TIME_LIMIT = env.int('CELERY_TASK_TIME_LIMIT', default=3600)
CELERY_TASK_SOFT_TIME_LIMIT = env.int('CELERY_TASK_SOFT_TIME_LIMIT', default=3540)

# Настройка очередей
CELERY_TASK_QUEUES = {
    'default': {
        'exchange': 'default',
        'routing_key': 'default',
    },
    'experiments': {
        'exchange': 'experiments',
        'routing_key': 'experiments',
    },
    'ledger': {
        'exchange': 'ledger',
        'routing_key': 'ledger',
    },
}

# Назначение задач в очереди
CELERY_TASK_ROUTES = {
    'experiments.tasks.run_cell_task': {'queue': 'experiments'},
    'experiments.tasks.record_run': {'queue': 'ledger'},
}

# Логирование
class JsonFormatter(logging.Formatter):
    def format(self, record):
        log_data = {
            'level': record.levelname,
            'timestamp': self.formatTime(record, self.datefmt),
            'module': record.module,
            'message': record.getMessage(),
        }
        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)
        return json.dumps(log_data, ensure_ascii=False)

LOG_FORMAT = env('LOG_FORMAT', default='verbose')
LOG_LEVEL = env('LOG_LEVEL', default='DEBUG' if DEBUG else 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'json': {
            '()': JsonFormatter,
        },
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'json' if LOG_FORMAT == 'json' else 'verbose',
        },
    },
    'loggers': {
        '': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'detection': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        # Поштучные логи вставок слишком шумные для DEBUG по умолчанию
        'detection.engines': {
            'handlers': ['console'],
            'level': env('ENGINE_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'experiments': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

# Sentry integration
def get_git_commit_hash():
    try:
        return subprocess.check_output(['git', 'rev-parse', '--short', 'HEAD'], stderr=subprocess.DEVNULL).decode('ascii').strip()
    except (subprocess.CalledProcessError, FileNotFoundError):
        return 'unknown'

# Без SENTRY_DSN клиент инициализируется выключенным
sentry_sdk.init(
    dsn=env('SENTRY_DSN', default=None),
    integrations=[
        DjangoIntegration(),
        CeleryIntegration(),
    ],
    send_default_pii=False,
    traces_sample_rate=0.1 if not DEBUG else 1.0,
    environment='development' if DEBUG else 'production',
    release=get_git_commit_hash(),
    send_client_reports=True
)
