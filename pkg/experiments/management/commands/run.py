from pathlib import Path

from experiments.export import FORMATS, SUFFIXES, export_grid, import_grid, render_markdown
from experiments.runner import run_plan
from experiments.serializers import build_plan, load_plan
from ._base import CommandResult, LofstreamCommand, add_plan_arguments, plan_data


class Command(LofstreamCommand):
    help = 'Прогоняет сетку ILOF/EILOF по k, m и порогам и экспортирует F1'
    command_name = 'run'

    def add_arguments(self, parser):
        add_plan_arguments(parser)
        parser.add_argument('--out', help="Файл экспорта (по умолчанию LOFSTREAM_OUTPUT_DIR/grid.<ext>)")
        parser.add_argument('--format', choices=FORMATS, default='csv')

    def run_command(self, **options):
        plan = load_plan(options['plan']) if options.get('plan') else build_plan(plan_data(options))
        grid = run_plan(plan)

        fmt = options['format']
        out = Path(options['out']) if options.get('out') else self.output_dir(options) / f"grid{SUFFIXES[fmt]}"
        export_grid(grid, out, fmt)
        # Сводка строится из записанного экспорта, а не из объекта в памяти
        rendered = out.read_text(encoding='utf-8') if fmt == 'markdown' else render_markdown(import_grid(out))

        self.stdout.write(rendered)
        self.stdout.write(f"plan fingerprint: {grid.plan_fingerprint}")
        self.stdout.write(f"stream hash: {grid.stream_hash}")
        self.stdout.write(f"Результаты сохранены в {out}", self.style.SUCCESS)
        return CommandResult(
            summary={'cells': len(grid.cells), 'algos': grid.algos, 'k_values': grid.axis(1), 'm': grid.axis(2)},
            output_paths=[out],
            plan_fingerprint=grid.plan_fingerprint,
            stream_hash=grid.stream_hash,
        )
