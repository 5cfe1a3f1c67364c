"""
Test decisions and Monte Carlo null distributions
"""

from dataclasses import dataclass, field
from math import ceil, inf
from typing import Any, Dict, List

import numpy as np

from ..utils.helpers import convert_numpy_types
from ..utils.validators import DataError, RunValidator, ValidationError

TABLE_HEADER_PREFIX = '#'


@dataclass(frozen=True)
class TestResult:
    """Statistic, Monte Carlo critical value and p-value of one test, with its configuration."""
    __test__ = False

    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    config: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        critical_value = self.critical_value if np.isfinite(self.critical_value) else None
        return convert_numpy_types({
            'statistic': self.statistic,
            'critical_value': critical_value,
            'p_value': self.p_value,
            'reject': self.reject,
            'config': self.config,
        })


@dataclass(frozen=True, eq=False)
class NullQuantileTable:
    """
    Sorted replicate values of a statistic under a null hypothesis.

    The critical value at level alpha is the ceil((1 - alpha)(R + 1))-th order
    statistic (infinite when that exceeds R); the p-value of an observed
    statistic s is (#{values >= s} + 1) / (R + 1).
    """
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or len(values) < 1:
            raise ValidationError("A null quantile table needs at least one replicate value")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def reps(self) -> int:
        return len(self.values)

    def critical_value(self, alpha: float) -> float:
        alpha = RunValidator.validate_alpha(alpha)
        rank = ceil((1.0 - alpha) * (self.reps + 1) - 1e-9)
        if rank > self.reps:
            return inf
        return float(self.values[max(rank, 1) - 1])

    upper_quantile = critical_value

    def p_value(self, statistic: float) -> float:
        exceed = self.reps - int(np.searchsorted(self.values, statistic, side='left'))
        return (exceed + 1) / (self.reps + 1)

    def decide(self, statistic: float, alpha: float, config: Dict[str, Any]) -> TestResult:
        critical_value = self.critical_value(alpha)
        return TestResult(float(statistic), critical_value, self.p_value(statistic),
                          bool(statistic > critical_value), config)

    def to_lines(self) -> List[str]:
        header = ' '.join(f'{key}={value}' for key, value in self.metadata.items())
        return [f'{TABLE_HEADER_PREFIX} {header}'.rstrip()] + [f'{value:.17g}' for value in self.values]

    @classmethod
    def from_lines(cls, lines: List[str]) -> "NullQuantileTable":
        metadata: Dict[str, Any] = {}
        values = []
        for number, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(TABLE_HEADER_PREFIX):
                for item in line[1:].split():
                    key, _, value = item.partition('=')
                    metadata[key] = _parse_metadata_value(value)
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataError(f"Invalid table value {line!r}", line=number)
        if not values:
            raise DataError("Null quantile table contains no values")
        return cls(np.array(values), metadata)


def _parse_metadata_value(value: str):
    for convert in (int, float):
        try:
            return convert(value)
        except ValueError:
            pass
    return value
