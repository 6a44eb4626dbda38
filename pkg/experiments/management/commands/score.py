from pathlib import Path

from django.conf import settings

from detection.evaluation import ThresholdRule, f1_report, flag_outliers
from detection.lof import static_lof
from experiments.exceptions import PlanValidationError
from experiments.ingest import CsvSchema, load_csv, read_table
from ._base import CommandResult, LofstreamCommand


class Command(LofstreamCommand):
    help = 'Считает статический LOF для CSV и дописывает столбцы lof и flag'
    command_name = 'score'

    def add_arguments(self, parser):
        parser.add_argument('--input', required=True)
        parser.add_argument('--k', type=int, default=None, help="По умолчанию LOFSTREAM_DEFAULT_K")
        parser.add_argument('--contamination', type=float, default=None,
                            help="По умолчанию LOFSTREAM_DEFAULT_CONTAMINATION")
        parser.add_argument('--label-column', default='label', help="Столбец меток 0/1, если есть")
        parser.add_argument('--out', help="Файл результата (по умолчанию LOFSTREAM_OUTPUT_DIR/scored.csv)")

    def run_command(self, **options):
        path = Path(options['input'])
        if not path.is_file():
            raise PlanValidationError({'input': [f"Файл не найден: {path}"]})
        k = options['k'] if options.get('k') is not None else settings.LOFSTREAM_DEFAULT_K
        contamination = options['contamination']
        rule = ThresholdRule(contamination if contamination is not None else settings.LOFSTREAM_DEFAULT_CONTAMINATION)

        schema = CsvSchema(label_column=options['label_column'])
        ds = load_csv(path, schema)
        lof = static_lof(ds, k)
        flags = flag_outliers(lof, rule)

        frame = read_table(path, schema)
        frame['lof'] = lof
        frame['flag'] = flags
        out = Path(options['out']) if options.get('out') else self.output_dir(options) / 'scored.csv'
        out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format='%.17g')

        summary = {'n': ds.n, 'k': k, 'contamination': rule.contamination, 'flagged': int(flags.sum())}
        self.stdout.write(f"Оценено {ds.n} точек (k={k}), помечено выбросов: {int(flags.sum())}")
        if ds.labels is not None:
            report = f1_report(flags, ds.labels)
            summary['report'] = report.to_dict()
            self.stdout.write(
                f"precision {report.precision:.4f}, recall {report.recall:.4f}, F1 {report.f1:.4f}"
            )
        self.stdout.write(f"Результат сохранён в {out}", self.style.SUCCESS)
        return CommandResult(summary=summary, output_paths=[out])
