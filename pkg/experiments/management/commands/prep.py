from pathlib import Path

from django.conf import settings

from experiments.ingest import CsvSchema, PrepRecipe, PrepVariant, load_raw, prepare, write_csv
from experiments.exceptions import PlanValidationError
from ._base import CommandResult, LofstreamCommand


class Command(LofstreamCommand):
    help = 'Готовит реальный набор (Shuttle, Credit Card Fraud) к потоковому эксперименту'
    command_name = 'prep'

    def add_arguments(self, parser):
        parser.add_argument('--input', required=True, help="Сырой файл")
        parser.add_argument('--variant', choices=[v.value for v in PrepVariant], required=True)
        parser.add_argument('--delimiter', default=',', help="Разделитель; пробел означает любые пробельные символы")
        parser.add_argument('--no-header', action='store_true', help="В файле нет строки заголовка")
        parser.add_argument('--static-count', type=int, default=None, help="По умолчанию LOFSTREAM_STATIC_COUNT")
        parser.add_argument('--stream-count', type=int, default=None, help="По умолчанию LOFSTREAM_STREAM_COUNT")
        parser.add_argument('--fraud-fraction', type=float, default=0.05)
        parser.add_argument('--subsample-seed', type=int, default=0)
        parser.add_argument('--class6', choices=['outlier', 'drop'], default='outlier')
        parser.add_argument('--feature-count', type=int, default=7, help="Число признаков Shuttle")
        parser.add_argument('--class-column', help="Столбец класса (имя или позиция)")
        parser.add_argument('--time-column', default='Time')
        parser.add_argument('--no-standardize', action='store_true')
        parser.add_argument('--out-dir', help="Каталог результатов (по умолчанию LOFSTREAM_OUTPUT_DIR)")

    def run_command(self, **options):
        recipe = PrepRecipe(
            variant=options['variant'],
            static_count=(options['static_count'] if options['static_count'] is not None
                          else settings.LOFSTREAM_STATIC_COUNT),
            stream_count=(options['stream_count'] if options['stream_count'] is not None
                          else settings.LOFSTREAM_STREAM_COUNT),
            target_fraud_fraction=options['fraud_fraction'],
            subsample_seed=options['subsample_seed'],
            standardize=not options['no_standardize'],
            shuttle_class6=options['class6'],
            shuttle_feature_count=options['feature_count'],
            class_column=options.get('class_column'),
            time_column=options['time_column'],
        )
        path = options['input']
        if not Path(path).is_file():
            raise PlanValidationError({'input': [f"Файл не найден: {path}"]})
        raw = load_raw(path, CsvSchema(label_column=None, delimiter=options['delimiter'],
                                       header=not options['no_header']))
        static, stream = prepare(raw, recipe)
        out_dir = self.output_dir(options)
        paths = [write_csv(static, out_dir / 'initial.csv'), write_csv(stream, out_dir / 'stream.csv')]
        fraction = float(static.concat(stream).labels.mean()) if static.labels is not None else None

        self.stdout.write(f"{recipe.variant.value}: {len(raw)} строк во входном файле")
        self.stdout.write(f"initial: {static.n} точек -> {paths[0]}")
        self.stdout.write(f"stream: {stream.n} точек -> {paths[1]}")
        if fraction is not None:
            self.stdout.write(f"Доля выбросов в окне: {fraction:.4f}", self.style.SUCCESS)
        return CommandResult(
            summary={'recipe': recipe.to_dict(), 'rows': len(raw), 'initial': static.n, 'stream': stream.n,
                     'outlier_fraction': fraction},
            output_paths=paths,
        )
