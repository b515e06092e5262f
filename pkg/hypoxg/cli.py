"""
Command Line Interface
Evaluate, fit, sample, compare and tabulate HypoXG models from the shell.
"""

import re
import sys
import math
import logging
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

import numpy as np
import pandas as pd

from .config.settings import config, LoggingConfig
from .documents import (
    ComparisonDocument, ComparisonRowDocument, EvalDocument, EvalPoint, FitDocument,
)
from .errors import ConfigError, DataError, HypoXGError, NumericError
from .estimation import (
    ModelSpec, ObservationSet, OptimizerOptions, compare_models, fit_model,
)
from .model import HypoXG

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('eval', 'fit', 'sample', 'compare', 'curves')
OUTPUT_FORMATS = ('json', 'csv')
CURVE_COLUMNS = ['t', 'pdf', 'cdf', 'reliability', 'hazard']

_TOKEN_SPLIT = re.compile(r'[,\s]+')

# Fewest significant digits written to CSV and sample output
MIN_OUTPUT_DIGITS = 12


@dataclass
class RunConfig:
    subcommand: str
    params: Optional[Tuple[float, ...]] = None
    input_path: Optional[str] = None
    output_format: str = 'json'
    seed: int = 0
    grid: Optional[Tuple[float, float, int]] = None
    at: Tuple[float, ...] = ()
    moments: int = 0
    laplace: Tuple[float, ...] = ()
    quantiles: Tuple[float, ...] = ()
    model: str = 'hypoxg'
    n: int = 2
    count: int = 1
    models: Tuple[str, ...] = ('hypoxg:2', 'hypoexp2')
    out: Optional[str] = None
    restarts: int = config.RESTARTS

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Unknown subcommand {self.subcommand!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown output format {self.output_format!r}")
        if self.subcommand in ('eval', 'sample', 'curves') and not self.params:
            raise ConfigError(f"{self.subcommand} requires --params")
        if self.subcommand in ('fit', 'compare') and not self.input_path:
            raise ConfigError(f"{self.subcommand} requires --input")
        if self.subcommand == 'curves' and self.grid is None:
            raise ConfigError("curves requires --grid tmin:tmax:npoints")
        if self.grid is not None:
            t_min, t_max, points = self.grid
            if points < 2:
                raise ConfigError(f"Grid needs at least 2 points, got {points}")
            if not t_max > t_min:
                raise ConfigError(f"Grid upper end {t_max} must exceed lower end {t_min}")
        if self.subcommand == 'sample' and self.count < 1:
            raise ConfigError(f"--count must be at least 1, got {self.count}")
        if self.subcommand == 'fit' and self.model not in ('hypoxg', 'hypoexp2'):
            raise ConfigError(f"Unknown model {self.model!r}; expected hypoxg or hypoexp2")


def output_digits(digits: Optional[int] = None) -> int:
    return max(MIN_OUTPUT_DIGITS, config.OUTPUT_DIGITS if digits is None else digits)


def _float_format(digits: Optional[int] = None) -> str:
    return f'%.{output_digits(digits)}g'


@dataclass
class CurveTable:
    frame: pd.DataFrame = field(repr=False)

    def to_csv(self, digits: Optional[int] = None) -> str:
        return self.frame.to_csv(index=False, float_format=_float_format(digits), lineterminator='\n')


# ---------------------------------------------------------------- input

def parse_observations(stream: TextIO, source_label: str = 'stdin') -> ObservationSet:
    """
    Read positive lifetimes: one or more values per line, comma or
    whitespace separated, '#' lines and blank lines skipped.
    """
    values: List[float] = []
    for number, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith('#'):
            continue
        for token in _TOKEN_SPLIT.split(text):
            if not token:
                continue
            try:
                value = float(token)
            except ValueError:
                raise DataError(f"non-numeric token {token!r}", line=number)
            if not (math.isfinite(value) and value > 0):
                raise DataError(f"value {token!r} is not a positive finite number", line=number)
            values.append(value)

    if not values:
        raise DataError(f"no observations found in {source_label}")
    return ObservationSet(tuple(values), source_label)


def load_observations(path: str) -> ObservationSet:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return parse_observations(handle, Path(path).name)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}")


def _parse_floats(text: str, flag: str) -> Tuple[float, ...]:
    try:
        return tuple(float(token) for token in text.split(',') if token.strip())
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}")


def _parse_grid(text: str) -> Tuple[float, float, int]:
    parts = text.split(':')
    if len(parts) != 3:
        raise ConfigError(f"--grid expects tmin:tmax:npoints, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--grid expects tmin:tmax:npoints, got {text!r}")


# ---------------------------------------------------------------- documents

def build_curve_table(model: HypoXG, grid: Tuple[float, float, int]) -> CurveTable:
    """
    Curve rows on an even grid. Hazard is left empty on rows where the
    reliability underflows to 0.
    """
    t = np.linspace(grid[0], grid[1], grid[2])
    reliability = np.asarray(model.reliability(t))
    hazard = np.full(len(t), np.nan)
    live = reliability > 0
    if np.any(live):
        hazard[live] = model.hazard(t[live])
    if not np.all(live):
        logger.warning(f"Hazard undefined from t={t[~live].min():.6g}: reliability underflows to 0")
    frame = pd.DataFrame({
        't': t,
        'pdf': model.pdf(t),
        'cdf': model.cdf(t),
        'reliability': reliability,
        'hazard': hazard,
    }, columns=CURVE_COLUMNS)
    return CurveTable(frame)


def _eval_point(model: HypoXG, t: float) -> EvalPoint:
    try:
        hazard = model.hazard(t)
    except NumericError as e:
        logger.warning(f"Hazard undefined at t={t}: {e}")
        hazard = None
    return EvalPoint(t=t, pdf=model.pdf(t), cdf=model.cdf(t),
                     reliability=model.reliability(t), hazard=hazard)


def build_eval_document(model: HypoXG, run_config: RunConfig) -> EvalDocument:
    return EvalDocument(
        params=list(model.rates),
        points=[_eval_point(model, t) for t in run_config.at],
        moments={str(r): model.moment(r) for r in range(1, run_config.moments + 1)},
        laplace={repr(s): model.laplace(s) for s in run_config.laplace},
        quantiles={repr(p): model.quantile(p) for p in run_config.quantiles},
    )


def _options(run_config: RunConfig) -> OptimizerOptions:
    return OptimizerOptions(restarts=run_config.restarts, seed=run_config.seed)


def _fit_document(fit) -> FitDocument:
    return FitDocument(model=fit.model, estimates=list(fit.estimates),
                       log_likelihood=fit.log_likelihood, aic=fit.aic,
                       converged=fit.converged, n_evaluations=fit.n_evaluations,
                       restarts_used=fit.restarts_used, seed=fit.seed)


def _comparison_document(comparison) -> ComparisonDocument:
    return ComparisonDocument([
        ComparisonRowDocument(model=row.model_name, estimates=list(row.estimates),
                              log_likelihood=row.log_likelihood, aic=row.aic,
                              ks_distance=row.ks_to_ecdf, error=row.error)
        for row in comparison.rows
    ])


def _records_csv(records: List[dict]) -> str:
    frame = pd.DataFrame(records)
    return frame.to_csv(index=False, float_format=_float_format(), lineterminator='\n')


# ---------------------------------------------------------------- dispatch

def _run_eval(run_config: RunConfig) -> str:
    model = HypoXG(run_config.params)
    if run_config.output_format == 'csv':
        points = [_eval_point(model, t).model_dump() for t in run_config.at]
        return _records_csv(points) if points else ','.join(CURVE_COLUMNS) + '\n'
    return build_eval_document(model, run_config).model_dump_json(indent=2) + '\n'


def _run_fit(run_config: RunConfig) -> str:
    data = load_observations(run_config.input_path)
    spec = ModelSpec('hypoexp2', 2) if run_config.model == 'hypoexp2' else ModelSpec('hypoxg', run_config.n)
    document = _fit_document(fit_model(data, spec, _options(run_config)))
    if run_config.output_format == 'csv':
        record = document.model_dump()
        record['estimates'] = ' '.join(repr(v) for v in record['estimates'])
        return _records_csv([record])
    return document.model_dump_json(indent=2) + '\n'


def _run_sample(run_config: RunConfig) -> str:
    batch = HypoXG(run_config.params).sample(run_config.count, seed=run_config.seed)
    return ''.join(f'{v:.{output_digits()}g}\n' for v in batch.values)


def _run_compare(run_config: RunConfig) -> str:
    data = load_observations(run_config.input_path)
    document = _comparison_document(compare_models(data, run_config.models, _options(run_config)))
    if run_config.output_format == 'csv':
        records = [row.model_dump() for row in document.root]
        for record in records:
            record['estimates'] = ' '.join(repr(v) for v in record['estimates'])
        return _records_csv(records)
    return document.model_dump_json(indent=2) + '\n'


def _run_curves(run_config: RunConfig) -> str:
    table = build_curve_table(HypoXG(run_config.params), run_config.grid)
    if run_config.output_format == 'json':
        return table.frame.to_json(orient='records', double_precision=15) + '\n'
    return table.to_csv()


HANDLERS = {
    'eval': _run_eval,
    'fit': _run_fit,
    'sample': _run_sample,
    'compare': _run_compare,
    'curves': _run_curves,
}


def run(run_config: RunConfig, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """Execute one subcommand; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        status = config.validate_config()
        if status['errors']:
            raise ConfigError('; '.join(status['errors']))

        output = HANDLERS[run_config.subcommand](run_config)
        if run_config.subcommand == 'curves' and run_config.out and run_config.out != '-':
            Path(run_config.out).write_text(output, encoding='utf-8')
            logger.info(f"Wrote {run_config.grid[2]} curve rows to {run_config.out}")
        else:
            stdout.write(output)
        return 0

    except HypoXGError as e:
        stderr.write(e.describe().splitlines()[0] + '\n')
        return e.exit_code
    except OSError as e:
        stderr.write(f"data: {e}\n")
        return DataError.exit_code


# ---------------------------------------------------------------- argv

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--format', dest='output_format', choices=OUTPUT_FORMATS, default='json')
    common.add_argument('--seed', type=int, default=None)
    common.add_argument('--log-level', default=None)

    parser = _Parser(prog='hypoxg', description='Sums of independent XGamma lifetimes')
    commands = parser.add_subparsers(dest='subcommand', required=True, parser_class=_Parser)

    evaluate = commands.add_parser('eval', parents=[common], help='evaluate distribution functions')
    evaluate.add_argument('--params', required=True)
    evaluate.add_argument('--at', default='')
    evaluate.add_argument('--moments', type=int, default=0)
    evaluate.add_argument('--laplace', default='')
    evaluate.add_argument('--quantiles', default='')

    fit = commands.add_parser('fit', parents=[common], help='maximum-likelihood fit')
    fit.add_argument('--input', dest='input_path', required=True)
    fit.add_argument('--model', default='hypoxg')
    fit.add_argument('--n', type=int, default=2)
    fit.add_argument('--restarts', type=int, default=config.RESTARTS)

    sample = commands.add_parser('sample', parents=[common], help='seeded Monte Carlo draws')
    sample.add_argument('--params', required=True)
    sample.add_argument('--count', type=int, required=True)

    compare = commands.add_parser('compare', parents=[common], help='AIC model comparison')
    compare.add_argument('--input', dest='input_path', required=True)
    compare.add_argument('--models', default='hypoxg:2,hypoexp2')
    compare.add_argument('--restarts', type=int, default=config.RESTARTS)

    curves = commands.add_parser('curves', parents=[common], help='pdf/cdf/reliability/hazard table')
    curves.add_argument('--params', required=True)
    curves.add_argument('--grid', required=True)
    curves.add_argument('--out', default=None)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    kwargs = {
        'subcommand': args.subcommand,
        'output_format': args.output_format,
        'seed': config.DEFAULT_SEED if args.seed is None else args.seed,
    }
    if values.get('params') is not None:
        kwargs['params'] = _parse_floats(args.params, '--params')
    if values.get('input_path') is not None:
        kwargs['input_path'] = args.input_path
    if values.get('at'):
        kwargs['at'] = _parse_floats(args.at, '--at')
    if values.get('laplace'):
        kwargs['laplace'] = _parse_floats(args.laplace, '--laplace')
    if values.get('quantiles'):
        kwargs['quantiles'] = _parse_floats(args.quantiles, '--quantiles')
    if values.get('grid') is not None:
        kwargs['grid'] = _parse_grid(args.grid)
    if values.get('models') is not None:
        kwargs['models'] = tuple(m for m in args.models.split(',') if m.strip())
    for name in ('moments', 'model', 'n', 'count', 'out', 'restarts'):
        if values.get(name) is not None:
            kwargs[name] = values[name]
    return RunConfig(**kwargs)


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
         stderr: Optional[TextIO] = None) -> int:
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        LoggingConfig.setup_logging(config, level=args.log_level)
        run_config = config_from_args(args)
    except HypoXGError as e:
        stderr.write(e.describe().splitlines()[0] + '\n')
        return e.exit_code
    return run(run_config, stdout=stdout, stderr=stderr)
