"""
Utility functions shared by the patternstat modules
"""

import json
import logging
import os
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'config.json')

DEFAULT_CONFIG: Dict[str, Any] = {
    'schema_version': '1.0',
    'gof_k': 4,
    'two_sample_k': 3,
    'symmetry_k': 3,
    'exact_budget': 10_000_000,
    'mc_draws_factor': 10,
    'default_reps': 1000,
    'default_bootstrap': 200,
    'recommended_min_reps': 100,
    'workers': 1,
    'log_dir': None,
    'log_level': 'INFO',
    'power_study': {
        'alternatives': ['fgm:0.25', 'fgm:0.5', 'fgm:1',
                         'clayton:-0.25', 'clayton:0.25', 'clayton:0.5'],
        'sizes': [50, 100],
        'alphas': [0.1, 0.05, 0.025],
        'tests': ['cvm', 'ks', 'hbkr', 'cvm-star', 'ks-star', 'bdy'],
        'replications': 2000,
        'critical_replications': 20000,
        'max_work': 2.0e12,
    },
}

# environment variable -> (config key, converter)
ENV_OVERRIDES = {
    'PATTERNSTAT_WORKERS': ('workers', int),
    'PATTERNSTAT_EXACT_BUDGET': ('exact_budget', int),
    'PATTERNSTAT_LOG_DIR': ('log_dir', str),
    'PATTERNSTAT_LOG_LEVEL': ('log_level', str),
}


def save_json(data: Dict, filepath: str) -> bool:
    """Write JSON data, creating parent directories."""
    try:
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump(convert_numpy_types(data), f, indent=2)
        return True
    except (OSError, TypeError) as e:
        logger.error(f"Error saving JSON to {filepath}: {e}")
        return False


def load_json(filepath: str) -> Optional[Dict]:
    """Read JSON data, returning None when the file is missing or invalid."""
    try:
        with open(filepath, 'r') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading JSON from {filepath}: {e}")
        return None


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load the run configuration.

    Defaults are overlaid with config.json (or the given file) and then with
    PATTERNSTAT_* environment variables, which may also come from a .env file.

    Args:
        path: alternative JSON configuration file

    Returns:
        Configuration dictionary
    """
    config = json.loads(json.dumps(DEFAULT_CONFIG))
    config_path = path or CONFIG_PATH

    if os.path.exists(config_path):
        loaded = load_json(config_path)
        if loaded:
            power_study = {**config['power_study'], **loaded.get('power_study', {})}
            config.update(loaded)
            config['power_study'] = power_study
    elif path:
        logger.warning(f"Configuration file {path} not found, using defaults")

    load_dotenv()
    for variable, (key, convert) in ENV_OVERRIDES.items():
        value = os.getenv(variable)
        if value:
            try:
                config[key] = convert(value)
            except ValueError:
                logger.warning(f"Ignoring invalid {variable}={value!r}")

    return config


def convert_numpy_types(obj):
    """
    Convert numpy/pandas/Fraction values into native Python types for JSON.

    Args:
        obj: object to convert

    Returns:
        Object made of native Python types
    """
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return [convert_numpy_types(item) for item in obj.tolist()]
    elif isinstance(obj, pd.DataFrame):
        return [convert_numpy_types(row) for row in obj.to_dict('records')]
    elif isinstance(obj, pd.Series):
        return {str(key): convert_numpy_types(value) for key, value in obj.items()}
    elif isinstance(obj, dict):
        return {key: convert_numpy_types(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_numpy_types(item) for item in obj]
    else:
        return obj


def chunk_list(lst: List[Any], chunk_size: int) -> List[List[Any]]:
    """Split a list into consecutive chunks."""
    return [lst[i:i + chunk_size] for i in range(0, len(lst), chunk_size)]

