# experiments/models.py
from django.db import models
from django.utils import timezone
import logging

logger = logging.getLogger(__name__)


class ExperimentRun(models.Model):
    """Журнал запусков команд: параметры, сводка и пути к результатам."""

    class Status(models.TextChoices):
        SUCCESS = 'success', 'Успех'
        ERROR = 'error', 'Ошибка'

    command = models.CharField(max_length=32, verbose_name="Команда")
    status = models.CharField(max_length=16, choices=Status.choices, verbose_name="Статус")
    plan_fingerprint = models.CharField(max_length=64, blank=True, default='', verbose_name="Отпечаток плана")
    stream_hash = models.CharField(max_length=64, blank=True, default='', verbose_name="Хэш потока")
    parameters = models.JSONField(default=dict, blank=True, verbose_name="Параметры")
    summary = models.JSONField(default=dict, blank=True, verbose_name="Сводка")
    output_paths = models.JSONField(default=list, blank=True, verbose_name="Файлы результатов")
    error_message = models.TextField(null=True, blank=True, verbose_name="Сообщение об ошибке")
    duration = models.FloatField(default=0.0, verbose_name="Длительность (с)")
    created_at = models.DateTimeField(default=timezone.now, db_index=True, verbose_name="Время запуска")

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'created_at'], name='experiments_command_9b1f2e_idx'),
            models.Index(fields=['status'], name='experiments_status_4c7a1d_idx'),
        ]
        verbose_name = "Запуск эксперимента"
        verbose_name_plural = "Запуски экспериментов"

    def __str__(self):
        return f"[{self.created_at}] {self.command} ({self.status})"
