"""
Empirical power of the independence test battery

Critical values are simulated once per sample size under independence; each
alternative then gets its own replicate stream, and the power of a test is
the fraction of alternative replicates whose statistic exceeds the critical
value.
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .engine import MonteCarloEngine
from ..copulas.base import CopulaModel
from ..copulas.independence import Independence
from ..copulas.models import parse_model, sample
from ..inference.comparison import BATTERY, statistic_battery
from ..inference.results import NullQuantileTable
from ..permutations.counting import DEFAULT_EXACT_BUDGET
from ..utils.helpers import DEFAULT_CONFIG
from ..utils.validators import ResourceError, RunValidator, ValidationError

logger = logging.getLogger(__name__)

MIN_REPLICATIONS = 100
SEED_SPACE = 2 ** 63


@dataclass(frozen=True)
class PowerStudySpec:
    """Alternatives, sample sizes, levels, tests and replicate counts of one power study."""
    alternatives: Tuple[str, ...]
    sizes: Tuple[int, ...]
    alphas: Tuple[float, ...]
    tests: Tuple[str, ...] = BATTERY
    replications: int = 2000
    critical_replications: int = 20000
    seed: int = 0
    max_work: float = 2.0e12

    def __post_init__(self):
        for name in ('alternatives', 'sizes', 'alphas', 'tests'):
            values = tuple(getattr(self, name))
            if not values:
                raise ValidationError(f"Power study needs at least one entry in {name}")
            object.__setattr__(self, name, values)
        unknown = [t for t in self.tests if t not in BATTERY]
        if unknown:
            raise ValidationError(f"Unknown tests {unknown}; available: {', '.join(BATTERY)}")
        for alternative in self.alternatives:
            parse_model(alternative)
        for n in self.sizes:
            RunValidator.validate_sample_size(n, minimum=4)
        for alpha in self.alphas:
            RunValidator.validate_alpha(alpha)
        RunValidator.validate_reps(self.replications, 'replications', minimum=MIN_REPLICATIONS)
        RunValidator.validate_reps(self.critical_replications, 'critical_replications', minimum=MIN_REPLICATIONS)
        RunValidator.validate_seed(self.seed)

    @classmethod
    def from_config(cls, config: Dict[str, Any], seed: int, **overrides) -> "PowerStudySpec":
        """Build a spec from the 'power_study' section of the configuration."""
        section = dict(DEFAULT_CONFIG['power_study'])
        section.update(config.get('power_study', {}))
        section.update({key: value for key, value in overrides.items() if value is not None})
        return cls(
            alternatives=tuple(section['alternatives']),
            sizes=tuple(int(n) for n in section['sizes']),
            alphas=tuple(float(a) for a in section['alphas']),
            tests=tuple(section['tests']),
            replications=int(section['replications']),
            critical_replications=int(section['critical_replications']),
            seed=seed,
            max_work=float(section['max_work']),
        )

    def work_estimate(self) -> float:
        """Subset classifications plus quadrant scans over every replicate of the study."""
        reps = self.critical_replications + len(self.alternatives) * self.replications
        return float(sum(reps * (comb(n, 4) + n * n) for n in self.sizes))


@dataclass(frozen=True, eq=False)
class BatteryReplicate:
    """The selected battery statistics of one sample of size n."""
    model: CopulaModel
    n: int
    tests: Tuple[str, ...]
    budget: int = DEFAULT_EXACT_BUDGET

    def __call__(self, rng) -> np.ndarray:
        pi = sample(self.model, self.n, rng).permutation
        values = statistic_battery(pi, seed=int(rng.integers(SEED_SPACE)), budget=self.budget)
        return np.array([values[test] for test in self.tests])


@dataclass
class PowerTable:
    """
    Power estimates with rows (alternative, n) and columns (test, alpha).

    Every estimate p comes with its Monte Carlo standard error sqrt(p(1-p)/R).
    """
    power: pd.DataFrame
    standard_error: pd.DataFrame
    critical_values: pd.DataFrame
    spec: PowerStudySpec
    metadata: Dict[str, Any] = field(default_factory=dict)

    def cell(self, alternative: str, n: int, test: str, alpha: float) -> float:
        return float(self.power.loc[(alternative, n), (test, alpha)])

    def rounded(self, decimals: int = 2) -> pd.DataFrame:
        """Human view of the power table."""
        frame = self.power.round(decimals)
        frame.columns = [f'{test}@{alpha:g}' for test, alpha in frame.columns]
        return frame.reset_index()

    def to_records(self) -> List[Dict[str, Any]]:
        records = []
        for (alternative, n), row in self.power.iterrows():
            for (test, alpha), value in row.items():
                records.append({
                    'alternative': alternative,
                    'n': int(n),
                    'test': test,
                    'alpha': float(alpha),
                    'power': float(value),
                    'standard_error': float(self.standard_error.loc[(alternative, n), (test, alpha)]),
                    'critical_value': float(self.critical_values.loc[n, (test, alpha)]),
                })
        return records

    def to_dict(self) -> Dict[str, Any]:
        return {
            'replications': self.spec.replications,
            'critical_replications': self.spec.critical_replications,
            'seed': self.spec.seed,
            'cells': self.to_records(),
        }


class PowerStudy:
    """Runs a PowerStudySpec on a MonteCarloEngine."""

    def __init__(self, spec: PowerStudySpec, engine: Optional[MonteCarloEngine] = None,
                 budget: int = DEFAULT_EXACT_BUDGET):
        self.spec = spec
        self.engine = engine or MonteCarloEngine()
        self.budget = budget

    def check_resources(self, force: bool = False):
        work = self.spec.work_estimate()
        if work > self.spec.max_work and not force:
            raise ResourceError(f"Power study needs about {work:.3g} elementary operations, "
                                f"above the limit of {self.spec.max_work:.3g}; reduce the "
                                f"replications or force the run")
        logger.info(f"Power study work estimate: {work:.3g} operations")

    def critical_values(self, n: int) -> Dict[Tuple[str, float], float]:
        spec = self.spec
        logger.info(f"Simulating {spec.critical_replications} null replicates at n={n}")
        values = self.engine.run(BatteryReplicate(Independence(), n, spec.tests, self.budget),
                                 spec.critical_replications, spec.seed, stream=(n, 0))
        critical = {}
        for j, test in enumerate(spec.tests):
            table = NullQuantileTable(values[:, j], {'test': test, 'n': n})
            for alpha in spec.alphas:
                critical[(test, alpha)] = table.critical_value(alpha)
        return critical

    def run(self, force: bool = False) -> PowerTable:
        """
        Run the study.

        Raises:
            ResourceError: If the work estimate exceeds max_work and force is False
        """
        spec = self.spec
        self.check_resources(force)
        columns = pd.MultiIndex.from_tuples([(t, a) for t in spec.tests for a in spec.alphas],
                                            names=['test', 'alpha'])
        rows, errors, index, critical_rows = [], [], [], []

        for n in spec.sizes:
            critical = self.critical_values(n)
            critical_rows.append([critical[column] for column in columns])
            for i, alternative in enumerate(spec.alternatives, start=1):
                model = parse_model(alternative)
                values = self.engine.run(BatteryReplicate(model, n, spec.tests, self.budget),
                                         spec.replications, spec.seed, stream=(n, i))
                power = [float(np.mean(values[:, spec.tests.index(test)] > critical[(test, alpha)]))
                         for test, alpha in columns]
                rows.append(power)
                errors.append([np.sqrt(p * (1.0 - p) / spec.replications) for p in power])
                index.append((alternative, n))
                logger.info(f"{alternative} n={n}: " +
                            ', '.join(f'{t}@{a:g}={p:.3f}' for (t, a), p in zip(columns, power)))

        row_index = pd.MultiIndex.from_tuples(index, names=['alternative', 'n'])
        return PowerTable(
            power=pd.DataFrame(rows, index=row_index, columns=columns),
            standard_error=pd.DataFrame(errors, index=row_index, columns=columns),
            critical_values=pd.DataFrame(critical_rows, index=pd.Index(spec.sizes, name='n'), columns=columns),
            spec=spec,
        )


def run_power_study(spec: PowerStudySpec, workers: int = 1, force: bool = False,
                    budget: int = DEFAULT_EXACT_BUDGET) -> PowerTable:
    return PowerStudy(spec, MonteCarloEngine(workers), budget).run(force)
