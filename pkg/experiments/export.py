# experiments/export.py
import json
import logging
from pathlib import Path

import pandas as pd

from detection.engines import InsertStats
from detection.evaluation import EvalReport
from detection.exceptions import InvalidParameterError
from .runner import GridCell, ResultGrid

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json', 'markdown')
SUFFIXES = {'csv': '.csv', 'json': '.json', 'markdown': '.md'}

REPORT_FIELDS = ('tp', 'fp', 'fn', 'tn', 'precision', 'recall', 'f1')
STATS_FIELDS = ('row_entries_written', 'column_entries_written', 'lrd_recomputed', 'lof_recomputed', 'wall_time')
GRID_COLUMNS = (
    'plan_fingerprint', 'stream_hash', 'algo', 'k', 'm', 'threshold', 'scope',
    *REPORT_FIELDS, *STATS_FIELDS, 'touched',
)
SERIES_COLUMNS = ('insertion', 'algo', 'k', 'row', 'column', 'lrd', 'lof', 'touched', 'seconds')


def grid_rows(grid):
    """Плоские строки сетки в детерминированном порядке ключей."""
    rows = []
    for key in grid.keys():
        algo, k, m, threshold, scope = key
        cell = grid.cells[key]
        row = {
            'plan_fingerprint': grid.plan_fingerprint,
            'stream_hash': grid.stream_hash,
            'algo': algo, 'k': k, 'm': m, 'threshold': threshold, 'scope': scope,
        }
        row.update(cell.report.to_dict())
        row.update({name: getattr(cell.stats, name) for name in STATS_FIELDS})
        row['touched'] = cell.stats.touched
        rows.append(row)
    return rows


def render_markdown(grid):
    """
    Одна таблица на пару (порог, область): строки k, столбцы m (и алгоритм, если их несколько), значения F1.
    """
    algos = grid.algos
    ks = grid.axis(1)
    ms = grid.axis(2)
    lines = [f"# F1 grid (plan {grid.plan_fingerprint[:12]}, stream {grid.stream_hash[:12]})", ""]
    for threshold in grid.axis(3):
        for scope in grid.axis(4):
            columns = [(m, algo) for m in ms for algo in algos if (algo, ks[0], m, threshold, scope) in grid.cells]
            if not columns:
                continue
            lines.append(f"## threshold = {threshold:g}, scope = {scope}")
            lines.append("")
            header = ['k'] + [f"m={m}" if len(algos) == 1 else f"m={m} {algo}" for m, algo in columns]
            lines.append("| " + " | ".join(header) + " |")
            lines.append("|" + "|".join(["---"] + ["---:"] * len(columns)) + "|")
            for k in ks:
                values = []
                for m, algo in columns:
                    cell = grid.cells.get((algo, k, m, threshold, scope))
                    values.append(f"{cell.report.f1:.4f}" if cell is not None else "")
                lines.append("| " + " | ".join([str(k)] + values) + " |")
            lines.append("")
    return "\n".join(lines)


def export_grid(grid, path, fmt='csv'):
    """
    Сохраняет сетку в CSV (длинный формат), JSON (с отпечатком плана) или markdown.

    Returns:
        Path: Путь к файлу.

    Raises:
        InvalidParameterError: Неизвестный формат.
        OSError: Ошибка записи.
    """
    if fmt not in FORMATS:
        raise InvalidParameterError(f"Неизвестный формат экспорта: {fmt!r}. Допустимые: {FORMATS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        pd.DataFrame(grid_rows(grid), columns=list(GRID_COLUMNS)).to_csv(path, index=False, float_format='%.17g')
    elif fmt == 'json':
        document = {
            'plan_fingerprint': grid.plan_fingerprint,
            'stream_hash': grid.stream_hash,
            'plan': grid.plan,
            'cells': grid_rows(grid),
        }
        path.write_text(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False), encoding='utf-8')
    else:
        path.write_text(render_markdown(grid), encoding='utf-8')
    logger.info(f"Сетка ({len(grid.cells)} ячеек) экспортирована в {path} ({fmt})")
    return path


def _grid_from_rows(rows, plan=None):
    if not rows:
        raise InvalidParameterError("Экспорт не содержит ячеек")
    grid = ResultGrid(plan_fingerprint=rows[0]['plan_fingerprint'], stream_hash=rows[0]['stream_hash'], plan=plan)
    for row in rows:
        key = (str(row['algo']), int(row['k']), int(row['m']), float(row['threshold']), str(row['scope']))
        report = EvalReport(**{
            name: int(row[name]) if name in ('tp', 'fp', 'fn', 'tn') else float(row[name]) for name in REPORT_FIELDS
        })
        stats = InsertStats(
            int(row['row_entries_written']), int(row['column_entries_written']),
            int(row['lrd_recomputed']), int(row['lof_recomputed']), float(row['wall_time']),
        )
        grid.cells[key] = GridCell(report=report, stats=stats)
    return grid


def import_grid(path):
    """Читает CSV- или JSON-экспорт обратно в ResultGrid."""
    path = Path(path)
    if path.suffix == '.csv':
        frame = pd.read_csv(path, dtype={'plan_fingerprint': str, 'stream_hash': str, 'algo': str, 'scope': str},
                            float_precision='round_trip')
        return _grid_from_rows(frame.to_dict('records'))
    if path.suffix == '.json':
        document = json.loads(path.read_text(encoding='utf-8'))
        return _grid_from_rows(document['cells'], plan=document.get('plan'))
    raise InvalidParameterError(f"Импорт поддерживает только .csv и .json, получено {path.suffix!r}")


def export_bench(report, out_dir):
    """
    Пишет поточечные ряды (bench_series.csv) и сводку (bench_summary.json).

    Returns:
        list: Пути к файлам.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for run in report.runs:
        for i, stats in enumerate(run.series, start=1):
            rows.append({
                'insertion': i, 'algo': run.algo, 'k': run.k,
                'row': stats.row_entries_written, 'column': stats.column_entries_written,
                'lrd': stats.lrd_recomputed, 'lof': stats.lof_recomputed,
                'touched': stats.touched, 'seconds': stats.wall_time,
            })
    series_path = out_dir / 'bench_series.csv'
    pd.DataFrame(rows, columns=list(SERIES_COLUMNS)).to_csv(series_path, index=False, float_format='%.17g')
    summary_path = out_dir / 'bench_summary.json'
    summary_path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True), encoding='utf-8')
    logger.info(f"Результаты бенчмарка записаны в {out_dir}")
    return [series_path, summary_path]
