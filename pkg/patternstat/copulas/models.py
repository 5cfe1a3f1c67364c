"""
Model registry, the model mini-language and the sampling entry point
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .base import CopulaModel
from .clayton import Clayton
from .delay import Delay, DelayExp
from .fgm import FGM
from .independence import Independence
from .permuton import PermutonMixture
from ..permutations.counting import classify
from ..permutations.permutation import Permutation, rank_permutation
from ..utils.rng import SeedLike, as_generator
from ..utils.validators import ParameterError, SizeError

logger = logging.getLogger(__name__)

MODEL_MAP: Dict[str, type] = {
    'indep': Independence,
    'fgm': FGM,
    'clayton': Clayton,
    'delay-exp': DelayExp,
    'permuton': PermutonMixture,
}


def parse_model(text: str, permuton_loader: Optional[Callable[[str], PermutonMixture]] = None) -> CopulaModel:
    """
    Parse 'indep', 'fgm:0.5', 'clayton:-0.25', 'delay-exp:1.0' or 'permuton:FILE'.

    Args:
        text: model string
        permuton_loader: reads a permuton mixture file (DataManager.read_permuton)

    Raises:
        ParameterError: For unknown models or invalid parameters
    """
    name, _, argument = text.strip().partition(':')
    name = name.lower()
    if name not in MODEL_MAP:
        raise ParameterError(f"Unknown model {name!r}; expected one of {sorted(MODEL_MAP)}")
    if name == 'indep':
        if argument:
            raise ParameterError("The independence model takes no parameter")
        return Independence()
    if not argument:
        raise ParameterError(f"Model {name!r} needs a parameter, e.g. '{name}:0.5'")
    if name == 'permuton':
        if permuton_loader is None:
            raise ParameterError("Permuton models need a file loader")
        return permuton_loader(argument)
    try:
        value = float(argument)
    except ValueError:
        raise ParameterError(f"Invalid parameter {argument!r} for model {name!r}")
    return MODEL_MAP[name](value)


def format_model(model: CopulaModel) -> str:
    return model.spec()


@dataclass(frozen=True, eq=False)
class BivariateSample:
    """
    n points and their rank permutation.

    delays is set for delay models, labels (component index) for permuton mixtures.
    """
    points: np.ndarray
    permutation: Permutation
    delays: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.points)


def sample(model: CopulaModel, n: int, seed: SeedLike) -> BivariateSample:
    """
    Draw n i.i.d. points from a model and reduce them to ranks.

    Args:
        model: copula or delay model
        n: sample size (>= 1)
        seed: integer seed or numpy Generator
    """
    if n < 1:
        raise SizeError(f"Sample size must be >= 1, got {n}")
    rng = as_generator(seed)
    delays = labels = None
    if isinstance(model, (Delay, DelayExp)):
        x, y, delays = model.draw_with_delays(n, rng)
    elif isinstance(model, PermutonMixture):
        x, y, labels = model.draw_with_labels(n, rng)
    else:
        x, y = model.draw(n, rng)
    return BivariateSample(np.column_stack([x, y]), rank_permutation(x, y), delays, labels)


def sample_permutation(model: CopulaModel, n: int, seed: SeedLike) -> Permutation:
    return sample(model, n, seed).permutation


def draw_pattern_indices(model: CopulaModel, reps: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Lex index in S_m of the rank pattern of reps independent size-m samples."""
    x, y = model.draw((reps, m), rng)
    return classify(np.take_along_axis(y, np.argsort(x, axis=1), axis=1))
