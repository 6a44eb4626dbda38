from experiments.ingest import write_csv
from experiments.synth import PRESETS, from_preset, generate
from ._base import CommandResult, LofstreamCommand


class Command(LofstreamCommand):
    help = 'Генерирует синтетические initial.csv и stream.csv (гауссово ядро и выбросы)'
    command_name = 'simulate'

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=sorted(PRESETS), default='gauss-2d')
        parser.add_argument('--dim', type=int)
        parser.add_argument('--n-initial', type=int)
        parser.add_argument('--n-stream', type=int)
        parser.add_argument('--fraction', type=float)
        parser.add_argument('--scale', type=float)
        parser.add_argument('--shift', type=float)
        parser.add_argument('--clusters', type=int, help="Число скоплений выбросов; 0 - рассеянные выбросы")
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out-dir', help="Каталог результатов (по умолчанию LOFSTREAM_OUTPUT_DIR)")

    def run_command(self, **options):
        recipe = from_preset(
            options['preset'], dim=options.get('dim'), n_initial=options.get('n_initial'),
            n_stream=options.get('n_stream'), outlier_fraction=options.get('fraction'),
            outlier_scale=options.get('scale'), outlier_shift=options.get('shift'),
            outlier_clusters=options.get('clusters'), seed=options['seed'],
        )
        initial, stream = generate(recipe)
        out_dir = self.output_dir(options)
        paths = [write_csv(initial, out_dir / 'initial.csv'), write_csv(stream, out_dir / 'stream.csv')]
        initial_outliers, stream_outliers = int(initial.labels.sum()), int(stream.labels.sum())

        self.stdout.write(f"initial: {initial.n} точек, выбросов {initial_outliers} -> {paths[0]}")
        self.stdout.write(f"stream: {stream.n} точек, выбросов {stream_outliers} -> {paths[1]}")
        self.stdout.write(
            f"Всего {initial.n + stream.n} точек, выбросов {initial_outliers + stream_outliers}",
            self.style.SUCCESS,
        )
        return CommandResult(
            summary={'recipe': recipe.to_dict(), 'initial': initial.n, 'stream': stream.n,
                     'outliers': initial_outliers + stream_outliers},
            output_paths=paths,
        )
