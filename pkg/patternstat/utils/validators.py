"""
Error types and argument validation for patternstat runs
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

logger = logging.getLogger(__name__)


class PatternStatError(Exception):
    """Base class of every error raised by patternstat."""
    exit_code = 70


class ValidationError(PatternStatError, ValueError):
    """Exception raised when a run argument or a configuration value is invalid."""
    exit_code = 64


class ParameterError(PatternStatError, ValueError):
    """A model or test parameter lies outside its admissible range."""
    exit_code = 64


class ModelError(PatternStatError):
    """The pattern probabilities of a null model are unavailable."""
    exit_code = 64


class TiesError(PatternStatError, ValueError):
    """Duplicate values where a tie-free sequence is required.

    Attributes:
        coordinate: 'x', 'y' or 'values'
        indices: 0-based positions of the tied entries
    """
    exit_code = 65

    def __init__(self, coordinate: str, indices: Sequence[int], message: Optional[str] = None):
        self.coordinate = coordinate
        self.indices = tuple(int(i) for i in indices)
        if message is None:
            message = f"Tied values in {coordinate}-coordinate at indices {list(self.indices)}"
        super().__init__(message)


class DataError(PatternStatError, ValueError):
    """Malformed input data; carries the 1-based line number when known."""
    exit_code = 65

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SizeError(PatternStatError, ValueError):
    """A sample is too short for the requested operation."""
    exit_code = 65


class DegenerateError(PatternStatError, ArithmeticError):
    """An asymptotic slope is undefined for the given coefficients."""
    exit_code = 65


class ResourceError(PatternStatError):
    """A computation would exceed its configured work budget."""
    exit_code = 69


@dataclass(frozen=True)
class RunConfig:
    """Validated options of one CLI invocation."""
    command: str
    seed: Optional[int] = None
    k: Optional[int] = None
    alpha: Optional[float] = None
    reps: Optional[int] = None
    bootstrap: Optional[int] = None
    flavor: str = "cvm"
    models: Sequence[str] = ()
    sizes: Sequence[int] = ()
    output_format: str = "json"
    out_path: Optional[str] = None
    workers: int = 1
    extra: Dict[str, Any] = field(default_factory=dict)

    def echo(self) -> Dict[str, Any]:
        """Configuration echo included in every report (no paths, no timestamps)."""
        echo = {
            "command": self.command,
            "seed": self.seed,
            "k": self.k,
            "alpha": self.alpha,
            "reps": self.reps,
            "bootstrap": self.bootstrap,
            "flavor": self.flavor,
        }
        if self.models:
            echo["models"] = list(self.models)
        if self.sizes:
            echo["sizes"] = list(self.sizes)
        echo.update(self.extra)
        return {key: value for key, value in echo.items() if value is not None}


class RunValidator:
    """
    Validator for run parameters.
    """
    FLAVORS = ['cvm', 'ks']
    OUTPUT_FORMATS = ['json', 'tsv']
    RECOMMENDED_MIN_REPS = 100
    MAX_SEED = 2 ** 64 - 1

    @staticmethod
    def validate_alpha(alpha: float) -> float:
        """
        Validate a significance level.

        Args:
            alpha: level, strictly between 0 and 1

        Returns:
            The level as a float

        Raises:
            ValidationError: If the level is outside (0, 1)
        """
        try:
            alpha = float(alpha)
        except (TypeError, ValueError):
            raise ValidationError(f"Invalid significance level: {alpha!r}")
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"Significance level must lie in (0, 1), got {alpha}")
        return alpha

    @staticmethod
    def validate_k(k: int, upper: Optional[int] = None) -> int:
        """Validate a truncation level k >= 1 (and <= upper when given)."""
        if isinstance(k, bool) or int(k) != k or k < 1:
            raise ValidationError(f"Truncation level must be a positive integer, got {k!r}")
        if upper is not None and k > upper:
            raise ValidationError(f"Truncation level {k} exceeds the maximum {upper}")
        return int(k)

    @staticmethod
    def validate_reps(reps: int, name: str = "reps", minimum: int = 1) -> int:
        """
        Validate a replicate count.

        A count below the recommended minimum is accepted with a warning.
        """
        if isinstance(reps, bool) or int(reps) != reps or reps < minimum:
            raise ValidationError(f"{name} must be an integer >= {minimum}, got {reps!r}")
        if reps < RunValidator.RECOMMENDED_MIN_REPS:
            logger.warning(f"{name}={reps} is below the recommended minimum of "
                           f"{RunValidator.RECOMMENDED_MIN_REPS}; quantiles will be coarse")
        return int(reps)

    @staticmethod
    def validate_seed(seed: Optional[int], required: bool = True) -> Optional[int]:
        """
        Validate a 64-bit unsigned seed.

        Raises:
            ValidationError: If a required seed is missing or out of range
        """
        if seed is None:
            if required:
                raise ValidationError("A --seed is required for stochastic commands")
            return None
        if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= RunValidator.MAX_SEED:
            raise ValidationError(f"Seed must be an integer in [0, 2^64), got {seed!r}")
        return int(seed)

    @staticmethod
    def validate_sample_size(n: int, minimum: int = 1, name: str = "n") -> int:
        if isinstance(n, bool) or int(n) != n or n < minimum:
            raise ValidationError(f"{name} must be an integer >= {minimum}, got {n!r}")
        return int(n)

    @staticmethod
    def validate_flavor(flavor: str) -> str:
        if flavor not in RunValidator.FLAVORS:
            raise ValidationError(f"Unknown flavor {flavor!r}; expected one of {RunValidator.FLAVORS}")
        return flavor

    @staticmethod
    def validate_output_format(output_format: str) -> str:
        if output_format not in RunValidator.OUTPUT_FORMATS:
            raise ValidationError(f"Unknown output format {output_format!r}")
        return output_format


def validate_run_config(command: str, options: Dict[str, Any], stochastic: bool = True) -> RunConfig:
    """
    Validate a complete set of run options.

    Args:
        command: subcommand name
        options: raw option values (missing keys are treated as unset)
        stochastic: whether the command draws random numbers (seed required)

    Returns:
        Validated RunConfig
    """
    errors = []

    def check(func, *args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            errors.append(str(e))
            return None

    seed = check(RunValidator.validate_seed, options.get('seed'), required=stochastic)
    k = options.get('k')
    if k is not None:
        k = check(RunValidator.validate_k, k)
    alpha = options.get('alpha')
    if alpha is not None:
        alpha = check(RunValidator.validate_alpha, alpha)
    reps = options.get('reps')
    if reps is not None:
        reps = check(RunValidator.validate_reps, reps)
    bootstrap = options.get('bootstrap')
    if bootstrap is not None:
        bootstrap = check(RunValidator.validate_reps, bootstrap, name="bootstrap")
    flavor = check(RunValidator.validate_flavor, options.get('flavor') or 'cvm')
    output_format = check(RunValidator.validate_output_format, options.get('output_format') or 'json')
    workers = options.get('workers') or 1
    if int(workers) < 1:
        errors.append(f"workers must be >= 1, got {workers}")

    if errors:
        raise ValidationError("; ".join(errors))

    return RunConfig(
        command=command,
        seed=seed,
        k=k,
        alpha=alpha,
        reps=reps,
        bootstrap=bootstrap,
        flavor=flavor,
        models=tuple(options.get('models') or ()),
        sizes=tuple(options.get('sizes') or ()),
        output_format=output_format,
        out_path=options.get('out_path'),
        workers=int(workers),
        extra=dict(options.get('extra') or {}),
    )
