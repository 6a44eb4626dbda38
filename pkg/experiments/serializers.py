# experiments/serializers.py
from pathlib import Path
import logging

from dotenv import dotenv_values
from rest_framework import serializers

from detection.engines import Algorithm
from detection.exceptions import DetectionError
from .exceptions import PlanValidationError
from .ingest import PrepRecipe, PrepVariant
from .plans import EVAL_SCOPES, SCOPE_ALL, SOURCE_FILES, SOURCE_PREPARED, SOURCE_SYNTHETIC, SOURCES, ExperimentPlan
from .synth import PRESETS, from_preset

logger = logging.getLogger(__name__)


class CommaListField(serializers.ListField):
    """Список из строки 'a,b,c' (формат файлов плана) или из обычного списка."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(',') if item.strip()]
        elif isinstance(data, (int, float)):
            data = [data]
        return super().to_internal_value(data)


class ContaminationField(serializers.FloatField):
    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not 0 < value < 1:
            raise serializers.ValidationError(f"Порог должен лежать в интервале (0, 1), получено {value}.")
        return value


class ExistingFileField(serializers.CharField):
    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not Path(value).is_file():
            raise serializers.ValidationError(f"Файл не найден: {value}")
        return value


class ExperimentPlanSerializer(serializers.Serializer):
    """
    Сериализатор плана эксперимента. Ключи совпадают с полями ExperimentPlan
    и параметрами рецептов источника.
    """
    source = serializers.ChoiceField(choices=SOURCES, default=SOURCE_SYNTHETIC)
    k_values = CommaListField(child=serializers.IntegerField(min_value=1), allow_empty=False)
    thresholds = CommaListField(child=ContaminationField(), allow_empty=False)
    algos = CommaListField(child=serializers.ChoiceField(choices=['ilof', 'eilof', 'both']), allow_empty=False,
                           default=['both'])
    m_schedule = CommaListField(child=serializers.IntegerField(min_value=0), allow_empty=False, required=False,
                                allow_null=True, default=None)
    eval_scope = serializers.ChoiceField(choices=EVAL_SCOPES, default=SCOPE_ALL)
    repetitions = serializers.IntegerField(min_value=1, default=3)
    seed = serializers.IntegerField(min_value=0, default=0)

    # synthetic
    preset = serializers.ChoiceField(choices=sorted(PRESETS), default='gauss-2d')
    dim = serializers.IntegerField(min_value=1, required=False)
    n_initial = serializers.IntegerField(min_value=1, required=False)
    n_stream = serializers.IntegerField(min_value=1, required=False)
    outlier_fraction = serializers.FloatField(required=False)
    outlier_scale = serializers.FloatField(required=False)
    outlier_shift = serializers.FloatField(required=False)
    outlier_clusters = serializers.IntegerField(min_value=0, required=False)

    # prepared
    raw_path = ExistingFileField(required=False)
    raw_delimiter = serializers.CharField(default=',', trim_whitespace=False)
    raw_header = serializers.BooleanField(default=True)
    variant = serializers.ChoiceField(choices=[v.value for v in PrepVariant], default=PrepVariant.PASSTHROUGH.value)
    static_count = serializers.IntegerField(min_value=1, default=1000)
    stream_count = serializers.IntegerField(min_value=0, default=640)
    target_fraud_fraction = ContaminationField(default=0.05)
    subsample_seed = serializers.IntegerField(min_value=0, required=False)
    standardize = serializers.BooleanField(default=True)
    shuttle_class6 = serializers.ChoiceField(choices=['outlier', 'drop'], default='outlier')
    shuttle_feature_count = serializers.IntegerField(min_value=1, default=7)
    class_column = serializers.CharField(required=False, allow_null=True, default=None)

    # files
    initial_path = ExistingFileField(required=False)
    stream_path = ExistingFileField(required=False)

    SOURCE_REQUIRED = {
        SOURCE_SYNTHETIC: (),
        SOURCE_PREPARED: ('raw_path',),
        SOURCE_FILES: ('initial_path', 'stream_path'),
    }

    def validate_algos(self, value):
        algos = []
        for algo in value:
            for name in ([Algorithm.ILOF.value, Algorithm.EILOF.value] if algo == 'both' else [algo]):
                if name not in algos:
                    algos.append(name)
        return algos

    def validate(self, data):
        """
        Проверка обязательных полей источника и сборка рецептов.
        """
        missing = [name for name in self.SOURCE_REQUIRED[data['source']] if not data.get(name)]
        if missing:
            raise serializers.ValidationError(
                {name: [f"Обязательно для источника {data['source']}."] for name in missing}
            )
        try:
            if data['source'] == SOURCE_SYNTHETIC:
                data['synth'] = from_preset(
                    data['preset'], dim=data.get('dim'), n_initial=data.get('n_initial'),
                    n_stream=data.get('n_stream'), outlier_fraction=data.get('outlier_fraction'),
                    outlier_scale=data.get('outlier_scale'), outlier_shift=data.get('outlier_shift'),
                    outlier_clusters=data.get('outlier_clusters'),
                    seed=data['seed'],
                )
            elif data['source'] == SOURCE_PREPARED:
                data['prep'] = PrepRecipe(
                    variant=data['variant'], static_count=data['static_count'], stream_count=data['stream_count'],
                    target_fraud_fraction=data['target_fraud_fraction'],
                    subsample_seed=data.get('subsample_seed', data['seed']), standardize=data['standardize'],
                    shuttle_class6=data['shuttle_class6'], shuttle_feature_count=data['shuttle_feature_count'],
                    class_column=data.get('class_column'),
                )
        except DetectionError as e:
            raise serializers.ValidationError({'source': [str(e)]})
        return data

    def create(self, validated_data):
        source = validated_data['source']
        plan = ExperimentPlan(
            source=source,
            k_values=tuple(validated_data['k_values']),
            thresholds=tuple(validated_data['thresholds']),
            algos=tuple(validated_data['algos']),
            m_schedule=tuple(validated_data['m_schedule']) if validated_data.get('m_schedule') else None,
            eval_scope=validated_data['eval_scope'],
            repetitions=validated_data['repetitions'],
            seed=validated_data['seed'],
            synth=validated_data.get('synth'),
            prep=validated_data.get('prep'),
            raw_path=validated_data.get('raw_path') if source == SOURCE_PREPARED else None,
            raw_delimiter=validated_data['raw_delimiter'] if source == SOURCE_PREPARED else ',',
            raw_header=validated_data['raw_header'] if source == SOURCE_PREPARED else True,
            initial_path=validated_data.get('initial_path') if source == SOURCE_FILES else None,
            stream_path=validated_data.get('stream_path') if source == SOURCE_FILES else None,
        )
        logger.info(f"План собран: источник {source}, k={list(plan.k_values)}, отпечаток {plan.fingerprint()[:12]}")
        return plan


def build_plan(data):
    """
    Проверяет словарь плана (из файла или флагов команды) и собирает ExperimentPlan.

    Raises:
        PlanValidationError: С ошибками по полям.
    """
    data = {key: value for key, value in data.items() if value is not None}
    serializer = ExperimentPlanSerializer(data=data)
    unknown = sorted(set(data) - set(serializer.fields))
    if unknown:
        raise PlanValidationError({name: ["Неизвестный ключ плана."] for name in unknown})
    if not serializer.is_valid():
        logger.warning(f"План отклонён: {serializer.errors}")
        raise PlanValidationError(serializer.errors)
    return serializer.save()


def load_plan(path):
    """
    Читает файл плана в формате key=value (списки через запятую).

    Raises:
        OSError: Если файл недоступен.
        PlanValidationError: Если план некорректен.
    """
    if not Path(path).is_file():
        raise PlanValidationError({'plan': [f"Файл плана не найден: {path}"]})
    data = dotenv_values(path)
    logger.debug(f"Прочитан план {path}: {sorted(data)}")
    return build_plan(data)
