"""
Command-line front end of patternstat

Every command prints one JSON report (schema_version, command, result,
config) or a TSV rendering of it. Exit codes: 0 when nothing is rejected,
10 when a test rejects, the error's exit code (> 63) on failure and 70 on
unexpected errors.
"""

import argparse
import json
import logging
import sys
import traceback
from fractions import Fraction
from math import comb
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd

from .copulas.estimators import cS_level_closed, cS_table
from .copulas.models import parse_model, sample
from .data.data_manager import DataManager
from .inference.nonparametric import null_quantiles, gof_test, symmetry_test, two_sample_test
from .inference.results import TestResult
from .parametric import delay, fgm
from .permutations.counting import SubsetSamplerPlan, count_exact, count_monte_carlo, exact_work, profile
from .permutations.permutation import Permutation, check_pattern_length, patterns_of_length
from .simulation.engine import MonteCarloEngine
from .simulation.power_study import PowerStudy, PowerStudySpec
from .utils.helpers import convert_numpy_types, load_config
from .utils.logger import log_error, log_run_end, log_run_start, setup_logging
from .utils.rng import replicate_rng
from .utils.validators import PatternStatError, RunConfig, RunValidator, ValidationError, validate_run_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REJECT = 10
EXIT_USAGE = 64
EXIT_INTERNAL = 70

TIE_BREAK_STREAM = 0x7469


class UsageError(PatternStatError):
    exit_code = EXIT_USAGE


class PatternStatArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class CommandContext:
    """Configuration, I/O and replicate engine shared by the command handlers."""

    def __init__(self, args: argparse.Namespace, config: Dict[str, Any]):
        self.args = args
        self.config = config
        self.data = DataManager()
        self.workers = args.workers or int(config.get('workers', 1))
        self.engine = MonteCarloEngine(self.workers)
        self.budget = int(config.get('exact_budget'))

    def read_input(self, path: str, slot: int = 0) -> Permutation:
        """
        A permutation file, or the rank permutation of a CSV sample with --csv.

        With --break-ties, tied CSV values are separated by a seeded jitter drawn
        from its own stream (one per input slot).
        """
        if self.args.csv or path.lower().endswith('.csv'):
            rng = None
            if self.args.break_ties:
                if self.args.seed is None:
                    raise ValidationError("--break-ties needs a --seed")
                seed = RunValidator.validate_seed(self.args.seed)
                rng = replicate_rng(seed, slot, TIE_BREAK_STREAM)
            return self.data.read_sample_permutation(path, header=self.args.header,
                                                     break_ties=self.args.break_ties, seed=rng)
        return self.data.read_permutation(path)

    def model(self, text: str):
        return parse_model(text, permuton_loader=self.data.read_permuton)


# ---------------------------------------------------------------------------
# commands; each returns (result, reject or None, optional table view)

CommandOutput = Tuple[Dict[str, Any], Optional[bool], Optional[pd.DataFrame]]


def cmd_count(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    pi = ctx.read_input(args.input)
    n = len(pi)
    monte_carlo = args.mode == 'monte-carlo'

    if args.sigma:
        sigma = Permutation.parse(args.sigma)
        if args.mode == 'auto':
            monte_carlo = comb(n, len(sigma)) > ctx.budget
        if monte_carlo:
            plan = SubsetSamplerPlan.default(n, len(sigma), _require_seed(run), ctx.config['mc_draws_factor'])
            estimate = count_monte_carlo(pi, sigma, plan)
            result = {'pattern': str(sigma), 'n': n, 'mode': f'monte_carlo({plan.draws})',
                      'frequency': estimate.estimate, 'standard_error': estimate.standard_error}
        else:
            counted = count_exact(pi, sigma, budget=ctx.budget)
            result = {'pattern': str(sigma), 'n': n, 'mode': 'exact', 'count': counted.count,
                      'subsets': counted.subsets, 'frequency': float(counted.frequency),
                      'exact': str(counted.frequency), 'standard_error': 0.0}
        return result, None, pd.DataFrame([result])

    k = run.k or 3
    if args.mode == 'auto':
        monte_carlo = exact_work(n, check_pattern_length(k)) > ctx.budget
    if monte_carlo:
        plan = SubsetSamplerPlan.default(n, k, _require_seed(run), ctx.config['mc_draws_factor'])
        frequencies = profile(pi, k, 'monte_carlo', plan)
    else:
        frequencies = profile(pi, k, 'exact', budget=ctx.budget, workers=ctx.workers)
    errors = frequencies.standard_errors()
    rows = []
    for i, (sigma, value) in enumerate(frequencies.entries.items()):
        row = {'pattern': str(sigma), 'frequency': float(value), 'standard_error': float(errors[i])}
        if isinstance(value, Fraction):
            row['exact'] = str(value)
        rows.append(row)
    result = {'n': n, 'k': k, 'mode': frequencies.mode_label, 'frequencies': rows}
    return result, None, pd.DataFrame(rows)


def cmd_sample(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    model = ctx.model(ctx.args.model)
    drawn = sample(model, ctx.args.n, _require_seed(run))
    text = ctx.data.write_samples(drawn.points, run.out_path, drawn.delays)
    result = {'model': model.spec(), 'n': drawn.n, 'permutation': [int(v) for v in drawn.permutation]}
    if run.out_path is None:
        result['csv'] = text
    return result, None, None


def cmd_gof(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    pi = ctx.read_input(args.input)
    model = ctx.model(args.model)
    k = run.k or ctx.config['gof_k']
    cs = None
    if args.cs_reps and any(cS_level_closed(model, m) is None for m in range(1, k + 1)):
        logger.info(f"Estimating C^S of {model.spec()} from {args.cs_reps} samples")
        cs = cS_table(model, k, args.cs_reps, _require_seed(run))
    table = ctx.data.load_null_table(args.null_table) if args.null_table else None
    result = gof_test(pi, model, k, run.flavor, _alpha(run), _reps(ctx, run), _require_seed(run),
                      cs_table=cs, table=table, engine=ctx.engine, budget=ctx.budget)
    return _test_output(result)


def cmd_two_sample(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    pi1 = ctx.read_input(ctx.args.input)
    pi2 = ctx.read_input(ctx.args.other, slot=1)
    result = two_sample_test(pi1, pi2, run.k or ctx.config['two_sample_k'], run.flavor, _alpha(run),
                             _bootstrap(ctx, run), _require_seed(run), ctx.engine, ctx.budget)
    return _test_output(result)


def cmd_symmetry(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    pi = ctx.read_input(ctx.args.input)
    result = symmetry_test(pi, run.k or ctx.config['symmetry_k'], run.flavor, _alpha(run),
                           _bootstrap(ctx, run), _require_seed(run), ctx.engine, ctx.budget)
    return _test_output(result)


def cmd_fgm(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    action = args.action

    if action == 'constants':
        constants = fgm.FGM_CONSTANTS
        eigenvalues, basis = constants.eigenbasis
        result = {
            'xi': [[str(v) for v in row] for row in constants.XI],
            'm': [str(v) for v in constants.M],
            'eigenvalues': eigenvalues.tolist(),
            'eigenvectors': basis.T.tolist(),
            'patterns': [str(sigma) for sigma in patterns_of_length(3)],
        }
        return result, None, None

    if action in ('slope', 'are'):
        a = fgm.CoefficientVector.parse(args.coefficients)
        squared = fgm.slope_squared(a)
        result = {
            'coefficients': str(a),
            'slope': fgm.slope(a),
            'slope_squared': None if squared is None else str(squared),
            'degenerate': squared is None,
            'optimal': fgm.in_optimal_set(a),
            'compound_consistent': fgm.compound_consistent(a),
        }
        if action == 'are':
            b = fgm.CoefficientVector.parse(args.against)
            are = fgm.pitman_are(a, b)
            result.update({'against': str(b), 'pitman_are': float(are), 'pitman_are_exact': str(are)})
        return result, None, None

    pi = ctx.read_input(_required(args.input, 'input'))
    if action == 'test':
        coefficients = args.coefficients if args.coefficients == 'spearman' \
            else fgm.CoefficientVector.parse(args.coefficients)
        result = fgm.la_test(pi, coefficients, _alpha(run), _reps(ctx, run), _require_seed(run),
                             args.direction, ctx.engine)
    else:
        result = fgm.ma_test(pi, fgm.CoefficientVector.parse(args.coefficients), _alpha(run),
                             _reps(ctx, run), _require_seed(run), ctx.engine)
    return _test_output(result)


def cmd_delay(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    action = args.action
    theta0 = args.theta0

    if action == 'efficiency':
        result = {'theta0': theta0, 'efficiency': delay.efficiency(theta0),
                  'phi_I': delay.phi_I(theta0), 'phi_I_prime': delay.phi_I_prime(theta0),
                  'v_I': delay.v_I(theta0)}
        return result, None, None
    if action == 'slopes':
        theta = _required(args.theta, 'theta')
        slope_d = delay.bahadur_slope_d(theta, theta0)
        slope_i = delay.bahadur_slope_i_local(theta, theta0)
        result = {'theta': theta, 'theta0': theta0, 'slope_d': slope_d, 'slope_i': slope_i.value,
                  'slope_i_kind': slope_i.kind, 'ratio': slope_i.value / slope_d}
        return result, None, None
    if action == 'd-test':
        delays = ctx.data.read_delays(_required(args.input, 'input'))
        return _test_output(delay.d_test(delays, theta0, _alpha(run)))

    pi = ctx.read_input(_required(args.input, 'input'))
    config = delay.DelayTestConfig(theta0, _alpha(run), len(pi), _reps(ctx, run), _require_seed(run))
    return _test_output(delay.i_test(pi, config, ctx.engine))


def cmd_power_study(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    spec = PowerStudySpec.from_config(
        ctx.config, _require_seed(run),
        alternatives=args.alternatives, sizes=args.sizes, alphas=args.alphas, tests=args.tests,
        replications=args.reps, critical_replications=args.critical_reps,
    )
    table = PowerStudy(spec, ctx.engine, ctx.budget).run(force=args.force)
    if run.out_path:
        ctx.data.write_table(table.rounded(), run.out_path)
        ctx.data.write_json(table.to_dict(), _json_path(run.out_path))
    return table.to_dict(), None, table.rounded()


def cmd_null_table(ctx: CommandContext, run: RunConfig) -> CommandOutput:
    args = ctx.args
    model = ctx.model(args.model)
    k = run.k or ctx.config['gof_k']
    table = null_quantiles(model, args.n, k, run.flavor, _reps(ctx, run), _require_seed(run),
                           engine=ctx.engine, budget=ctx.budget)
    path = ctx.data.save_null_table(table, _required(run.out_path, 'out'))
    result = {'path': path, 'reps': table.reps, 'metadata': table.metadata,
              'quantiles': {f'{alpha:g}': table.critical_value(alpha) for alpha in (0.1, 0.05, 0.025, 0.01)}}
    return result, None, None


COMMANDS: Dict[str, Tuple[Callable[[CommandContext, RunConfig], CommandOutput], bool]] = {
    # name -> (handler, draws random numbers)
    'count': (cmd_count, False),
    'sample': (cmd_sample, True),
    'gof': (cmd_gof, True),
    'two-sample': (cmd_two_sample, True),
    'symmetry': (cmd_symmetry, True),
    'fgm': (cmd_fgm, False),
    'delay': (cmd_delay, False),
    'power-study': (cmd_power_study, True),
    'null-table': (cmd_null_table, True),
}


# ---------------------------------------------------------------------------
# helpers

def _required(value, name: str):
    if value is None:
        raise ValidationError(f"--{name} is required for this command")
    return value


def _require_seed(run: RunConfig) -> int:
    if run.seed is None:
        raise ValidationError("A --seed is required for stochastic commands")
    return run.seed


def _alpha(run: RunConfig) -> float:
    return run.alpha if run.alpha is not None else 0.05


def _reps(ctx: CommandContext, run: RunConfig) -> int:
    return run.reps or int(ctx.config['default_reps'])


def _bootstrap(ctx: CommandContext, run: RunConfig) -> int:
    return run.bootstrap or int(ctx.config['default_bootstrap'])


def _json_path(path: str) -> str:
    stem = path[:-4] if path.lower().endswith('.csv') else path
    return f'{stem}.json'


def _test_output(result: TestResult) -> CommandOutput:
    return result.to_dict(), result.reject, None


def _render_tsv(result: Dict[str, Any], table: Optional[pd.DataFrame]) -> str:
    if table is not None:
        return table.to_csv(sep='\t', index=False)
    flat = pd.json_normalize(convert_numpy_types(result), sep='.').iloc[0]
    frame = pd.DataFrame({'key': flat.index, 'value': [json.dumps(v) if isinstance(v, (list, dict)) else v
                                                        for v in flat.values]})
    return frame.to_csv(sep='\t', index=False)


# ---------------------------------------------------------------------------
# parser

def _common_arguments() -> argparse.ArgumentParser:
    common = PatternStatArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='unsigned 64-bit seed (required for stochastic commands)')
    common.add_argument('--reps', type=int, help='Monte Carlo replicates')
    common.add_argument('--alpha', type=float, help='significance level')
    common.add_argument('--k', type=int, help='maximal pattern length')
    common.add_argument('--bootstrap', type=int, help='bootstrap replicates')
    common.add_argument('--flavor', choices=['cvm', 'ks'], default='cvm')
    common.add_argument('--format', dest='output_format', choices=['json', 'tsv'], default='json')
    common.add_argument('--out', dest='out_path', help='output file')
    common.add_argument('--workers', type=int, help='worker processes for replicates')
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    common.add_argument('--log-dir', default=None, help='directory for log files')
    common.add_argument('--config', default=None, help='alternative config.json')
    common.add_argument('--csv', action='store_true', help='read inputs as two-column CSV samples')
    common.add_argument('--header', action='store_true', help='CSV inputs have a header line')
    common.add_argument('--break-ties', action='store_true',
                        help='separate tied CSV values by a seeded random jitter (needs --seed)')
    return common


def create_parser() -> argparse.ArgumentParser:
    """Factory of the patternstat argument parser."""
    common = _common_arguments()
    parser = PatternStatArgumentParser(prog='patternstat',
                                       description='Pattern-based inference for bivariate copulas')
    commands = parser.add_subparsers(dest='command', required=True)

    count = commands.add_parser('count', parents=[common], help='pattern frequencies')
    count.add_argument('input')
    count.add_argument('--sigma', help='single pattern, e.g. 231')
    count.add_argument('--mode', choices=['auto', 'exact', 'monte-carlo'], default='auto')

    sampler = commands.add_parser('sample', parents=[common], help='draw a sample from a model')
    sampler.add_argument('model', help="model string, e.g. 'fgm:0.5'")
    sampler.add_argument('--n', type=int, required=True)

    gof = commands.add_parser('gof', parents=[common], help='goodness-of-fit test')
    gof.add_argument('input')
    gof.add_argument('--model', default='indep')
    gof.add_argument('--null-table', help='precomputed null quantile table')
    gof.add_argument('--cs-reps', type=int, help='samples for estimating C^S without a closed form')

    two_sample = commands.add_parser('two-sample', parents=[common], help='two-sample test')
    two_sample.add_argument('input')
    two_sample.add_argument('other')

    symmetry = commands.add_parser('symmetry', parents=[common], help='symmetry test')
    symmetry.add_argument('input')

    fgm_parser = commands.add_parser('fgm', parents=[common], help='FGM linear pattern statistics')
    fgm_parser.add_argument('action', choices=['test', 'two-sided', 'slope', 'are', 'constants'])
    fgm_parser.add_argument('input', nargs='?')
    fgm_parser.add_argument('--coefficients', '-a', default='k3',
                            help='kendall, k3, spearman, ascending-triples or six decimals')
    fgm_parser.add_argument('--against', '-b', default='k3')
    fgm_parser.add_argument('--direction', choices=['greater', 'less'], default='greater')

    delay_parser = commands.add_parser('delay', parents=[common], help='exponential delay tests')
    delay_parser.add_argument('action', choices=['i-test', 'd-test', 'efficiency', 'slopes'])
    delay_parser.add_argument('input', nargs='?')
    delay_parser.add_argument('--theta0', type=float, default=1.0)
    delay_parser.add_argument('--theta', type=float)

    power = commands.add_parser('power-study', parents=[common], help='empirical power table')
    power.add_argument('--alternatives', nargs='+')
    power.add_argument('--sizes', nargs='+', type=int)
    power.add_argument('--alphas', nargs='+', type=float)
    power.add_argument('--tests', nargs='+')
    power.add_argument('--critical-reps', type=int)
    power.add_argument('--force', action='store_true', help='run beyond the work limit')

    null_table = commands.add_parser('null-table', parents=[common], help='write a null quantile table')
    null_table.add_argument('--model', default='indep')
    null_table.add_argument('--n', type=int, required=True)

    return parser


def _is_stochastic(args: argparse.Namespace) -> bool:
    if args.command == 'fgm':
        return args.action in ('test', 'two-sided')
    if args.command == 'delay':
        return args.action == 'i-test'
    if args.command == 'count':
        return args.mode == 'monte-carlo'
    return COMMANDS[args.command][1]


def _run_options(args: argparse.Namespace) -> Dict[str, Any]:
    extra = {}
    for key in ('model', 'n', 'sigma', 'mode', 'action', 'coefficients', 'against', 'direction',
                'theta0', 'theta'):
        value = getattr(args, key, None)
        if value is not None:
            extra[key] = value
    if getattr(args, 'break_ties', False):
        extra['break_ties'] = True
    return {
        'seed': args.seed, 'k': args.k, 'alpha': args.alpha, 'reps': args.reps,
        'bootstrap': args.bootstrap, 'flavor': args.flavor, 'output_format': args.output_format,
        'out_path': args.out_path, 'workers': args.workers, 'extra': extra,
    }


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    command = 'patternstat'
    try:
        args = create_parser().parse_args(argv)
        command = args.command
        config = load_config(args.config)
        try:
            setup_logging(args.log_dir or config.get('log_dir'), args.log_level or config.get('log_level', 'INFO'))
        except ValueError as e:
            raise ValidationError(str(e))

        run = validate_run_config(command, _run_options(args), stochastic=_is_stochastic(args))
        log_run_start(command, run.echo())

        handler, _ = COMMANDS[command]
        result, reject, table = handler(CommandContext(args, config), run)

        report = {'schema_version': config.get('schema_version', '1.0'), 'command': command,
                  'result': result, 'config': run.echo()}
        if run.output_format == 'tsv':
            sys.stdout.write(_render_tsv(result, table))
        else:
            sys.stdout.write(json.dumps(convert_numpy_types(report), indent=2, sort_keys=True) + '\n')

        log_run_end(command, {key: value for key, value in result.items()
                              if isinstance(value, (int, float, bool, str)) and key != 'csv'})
        return EXIT_REJECT if reject else EXIT_OK

    except PatternStatError as e:
        log_error(__name__, type(e).__name__, f"{command} failed: {e}")
        if isinstance(e, UsageError):
            sys.stderr.write(f"{e}\n")
        sys.stdout.write(json.dumps({'error': str(e), 'type': type(e).__name__}) + '\n')
        return e.exit_code
    except Exception as e:
        logger.error(f"{command} failed unexpectedly: {e}\n{traceback.format_exc()}")
        sys.stdout.write(json.dumps({'error': str(e), 'type': type(e).__name__}) + '\n')
        return EXIT_INTERNAL


if __name__ == '__main__':
    sys.exit(main())
