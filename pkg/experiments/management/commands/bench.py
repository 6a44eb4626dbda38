from experiments.export import export_bench
from experiments.runner import bench_updates
from experiments.serializers import build_plan, load_plan
from ._base import CommandResult, LofstreamCommand, add_plan_arguments, plan_data


class Command(LofstreamCommand):
    help = 'Сравнивает ILOF и EILOF по числу обновлений и времени вставки'
    command_name = 'bench'

    def add_arguments(self, parser):
        add_plan_arguments(parser)
        parser.add_argument('--out-dir', help="Каталог результатов (по умолчанию LOFSTREAM_OUTPUT_DIR)")

    def run_command(self, **options):
        plan = load_plan(options['plan']) if options.get('plan') else build_plan(plan_data(options))
        report = bench_updates(plan)
        paths = export_bench(report, self.output_dir(options))

        for run in report.runs:
            totals = run.totals
            self.stdout.write(
                f"{run.algo} k={run.k}: строка {totals.row_entries_written}, столбец {totals.column_entries_written}, "
                f"LRD {totals.lrd_recomputed}, LOF {totals.lof_recomputed}, всего {totals.touched}, "
                f"медиана времени {run.median_wall_time:.4f} с"
            )
        self.stdout.write(f"stream hash: {report.stream_hash}")
        self.stdout.write(f"Результаты сохранены в {paths[0].parent}", self.style.SUCCESS)
        return CommandResult(
            summary=report.summary(),
            output_paths=paths,
            plan_fingerprint=report.plan_fingerprint,
            stream_hash=report.stream_hash,
        )
