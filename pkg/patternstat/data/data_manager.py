import io
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..copulas.permuton import PermutonMixture
from ..inference.results import NullQuantileTable
from ..permutations.permutation import Permutation, rank_permutation
from ..utils.helpers import save_json
from ..utils.rng import SeedLike
from ..utils.validators import DataError, ParameterError, TiesError, ValidationError

logger = logging.getLogger(__name__)

COMMENT_PREFIX = '#'


class DataManager:
    """
    Input and output files of patternstat runs.

    Relative paths are resolved against data_dir (the working directory by
    default); every parse failure raises a DataError carrying the 1-based
    line number.
    """

    def __init__(self, data_dir: Optional[str] = None):
        self.data_dir = data_dir or os.getcwd()

    def _path(self, filename: str) -> str:
        return filename if os.path.isabs(filename) else os.path.join(self.data_dir, filename)

    def _read_lines(self, filename: str) -> List[str]:
        path = self._path(filename)
        try:
            with open(path, 'r') as f:
                return f.read().splitlines()
        except OSError as e:
            raise DataError(f"Cannot read {path}: {e}")

    # -----------------------------------------------------------------------
    # readers

    def read_permutation(self, filename: str) -> Permutation:
        """
        Read a permutation: one line of whitespace-separated values (or the
        compact digit form for n <= 9). Blank and '#' lines are skipped.
        """
        lines = [(number, line.strip()) for number, line in enumerate(self._read_lines(filename), start=1)
                 if line.strip() and not line.strip().startswith(COMMENT_PREFIX)]
        if not lines:
            raise DataError(f"No permutation found in {filename}")
        if len(lines) > 1:
            raise DataError("A permutation file holds a single line", line=lines[1][0])
        number, text = lines[0]
        try:
            return Permutation.parse(text)
        except ValidationError as e:
            raise DataError(str(e), line=number)

    def read_bivariate_csv(self, filename: str, header: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """
        Read a two-column numeric CSV.

        Args:
            filename: CSV file
            header: the first line holds column names

        Returns:
            The x and y columns
        """
        path = self._path(filename)
        try:
            df = pd.read_csv(path, header=0 if header else None, comment=COMMENT_PREFIX,
                             skip_blank_lines=True, dtype=str)
        except (OSError, pd.errors.ParserError) as e:
            raise DataError(f"Cannot read {path}: {e}")
        except pd.errors.EmptyDataError:
            raise DataError(f"No data found in {path}")
        if df.shape[1] != 2:
            raise DataError(f"Expected two columns, found {df.shape[1]}", line=2 if header else 1)

        offset = 2 if header else 1
        values = np.empty(df.shape, dtype=float)
        for row, record in enumerate(df.itertuples(index=False)):
            try:
                values[row] = [float(record[0]), float(record[1])]
            except (TypeError, ValueError):
                raise DataError(f"Non-numeric value in {list(record)}", line=row + offset)
            if not np.all(np.isfinite(values[row])):
                raise DataError(f"Non-finite value in {list(record)}", line=row + offset)
        if len(values) == 0:
            raise DataError(f"No data rows in {path}")
        logger.debug(f"Read {len(values)} points from {path}")
        return values[:, 0], values[:, 1]

    def read_sample_permutation(self, filename: str, header: bool = False,
                                break_ties: bool = False, seed: Optional[SeedLike] = None) -> Permutation:
        """Rank permutation of a bivariate CSV; tied values are reported by data row."""
        xs, ys = self.read_bivariate_csv(filename, header)
        try:
            return rank_permutation(xs, ys, break_ties=break_ties, seed=seed)
        except TiesError as e:
            rows = [i + 1 for i in e.indices]
            raise TiesError(e.coordinate, e.indices,
                            f"Tied {e.coordinate} values in {filename} at data rows {rows}")

    def read_delays(self, filename: str) -> np.ndarray:
        """One positive delay per line."""
        delays = []
        for number, line in enumerate(self._read_lines(filename), start=1):
            line = line.strip()
            if not line or line.startswith(COMMENT_PREFIX):
                continue
            try:
                value = float(line)
            except ValueError:
                raise DataError(f"Invalid delay {line!r}", line=number)
            if not np.isfinite(value) or value <= 0:
                raise DataError(f"Delays must be positive, got {line}", line=number)
            delays.append(value)
        if not delays:
            raise DataError(f"No delays found in {filename}")
        return np.array(delays)

    def read_permuton(self, filename: str) -> PermutonMixture:
        """
        Read a permuton mixture: 'weight permutation...' per line, e.g.
        '0.5 2 1 3'. Weights must sum to 1.
        """
        permutations, weights = [], []
        for number, line in enumerate(self._read_lines(filename), start=1):
            line = line.split(COMMENT_PREFIX, 1)[0].strip()
            if not line:
                continue
            weight, _, rest = line.partition(' ')
            try:
                weights.append(float(weight))
                permutations.append(Permutation.parse(rest))
            except (ValueError, ValidationError) as e:
                raise DataError(f"Invalid mixture component {line!r}: {e}", line=number)
        if not permutations:
            raise DataError(f"No mixture components found in {filename}")
        try:
            return PermutonMixture.from_weights(permutations, weights, source=filename)
        except ParameterError as e:
            raise DataError(f"{filename}: {e}")

    # -----------------------------------------------------------------------
    # null quantile tables

    def save_null_table(self, table: NullQuantileTable, filename: str) -> str:
        path = self._path(filename)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write('\n'.join(table.to_lines()) + '\n')
        logger.info(f"Null table with {table.reps} values written to {path}")
        return path

    def load_null_table(self, filename: str) -> NullQuantileTable:
        return NullQuantileTable.from_lines(self._read_lines(filename))

    # -----------------------------------------------------------------------
    # writers

    def write_samples(self, points: np.ndarray, filename: Optional[str] = None,
                      delays: Optional[np.ndarray] = None) -> str:
        """Write sampled points as an x,y(,delay) CSV; returns the CSV text."""
        df = pd.DataFrame(points, columns=['x', 'y'])
        if delays is not None:
            df['delay'] = delays
        text = df.to_csv(index=False, float_format='%.17g')
        if filename is not None:
            self._write_text(filename, text)
        return text

    def write_table(self, df: pd.DataFrame, filename: Optional[str] = None, sep: str = ',') -> str:
        """Write a table as CSV (or TSV with sep='\\t'); returns the text."""
        buffer = io.StringIO()
        df.to_csv(buffer, index=False, sep=sep)
        text = buffer.getvalue()
        if filename is not None:
            self._write_text(filename, text)
        return text

    def write_json(self, data: Dict[str, Any], filename: str) -> str:
        path = self._path(filename)
        if not save_json(data, path):
            raise DataError(f"Cannot write {path}")
        return path

    def _write_text(self, filename: str, text: str):
        path = self._path(filename)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write(text)
        logger.info(f"Wrote {path}")
