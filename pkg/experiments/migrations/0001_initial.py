# Generated by Django 5.2.1

import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32, verbose_name='Команда')),
                ('status', models.CharField(choices=[('success', 'Успех'), ('error', 'Ошибка')], max_length=16, verbose_name='Статус')),
                ('plan_fingerprint', models.CharField(blank=True, default='', max_length=64, verbose_name='Отпечаток плана')),
                ('stream_hash', models.CharField(blank=True, default='', max_length=64, verbose_name='Хэш потока')),
                ('parameters', models.JSONField(blank=True, default=dict, verbose_name='Параметры')),
                ('summary', models.JSONField(blank=True, default=dict, verbose_name='Сводка')),
                ('output_paths', models.JSONField(blank=True, default=list, verbose_name='Файлы результатов')),
                ('error_message', models.TextField(blank=True, null=True, verbose_name='Сообщение об ошибке')),
                ('duration', models.FloatField(default=0.0, verbose_name='Длительность (с)')),
                ('created_at', models.DateTimeField(db_index=True, default=django.utils.timezone.now, verbose_name='Время запуска')),
            ],
            options={
                'verbose_name': 'Запуск эксперимента',
                'verbose_name_plural': 'Запуски экспериментов',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'created_at'], name='experiments_command_9b1f2e_idx'), models.Index(fields=['status'], name='experiments_status_4c7a1d_idx')],
            },
        ),
    ]
