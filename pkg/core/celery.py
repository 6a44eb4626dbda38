import logging.config
import os

from celery import Celery
from celery.signals import setup_logging

# Устанавливаем модуль настроек Django
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')

# Создаём экземпляр Celery
app = Celery('lofstream')

# Загружаем настройки из settings.py с префиксом CELERY
app.config_from_object('django.conf:settings', namespace='CELERY')
app.conf.task_default_queue = 'default'

# Автоматически обнаруживаем задачи в приложениях (experiments.tasks)
app.autodiscover_tasks()


@setup_logging.connect
def configure_worker_logging(**kwargs):
    """Воркеры пишут логи через тот же LOGGING, что и команды manage.py."""
    from django.conf import settings

    logging.config.dictConfig(settings.LOGGING)
