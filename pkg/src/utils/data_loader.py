"""
Data loading utilities for the GEMO toolkit
Lifetime datasets (bundled or user supplied) and published reference tables
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from config import BUNDLED_DATASETS, dataset_path, get_raw_data_path, get_reference_path
from utils.errors import DataError

logger = logging.getLogger(__name__)

_SEPARATORS = re.compile(r"[,\s;]+")

REFERENCE_COLUMNS = ["model", "dataset", "loglik", "k", "aic"]

# Typeset minus sign found in copied tables
UNICODE_MINUS = "\u2212"


@dataclass(frozen=True)
class Dataset:
    """
    A sample of positive lifetimes

    Args:
        values: Observations, all > 0 (at least two)
        label: Name used in reports
    """

    values: np.ndarray = field(repr=False)
    label: str = "data"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 2:
            raise DataError(f"{self.label}: need at least 2 observations, got {values.size}")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DataError(f"{self.label}: lifetimes must be finite and positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def sorted(self) -> np.ndarray:
        return np.sort(self.values)


def ingest_dataset(path: Union[str, Path], label: str = None) -> Dataset:
    """
    Read a plain-text or CSV lifetime file

    One or more observations per line, separated by commas, semicolons or
    whitespace. Blank lines and lines starting with '#' are skipped.

    Args:
        path: File to read, or the name of a bundled dataset
        label: Dataset label; defaults to the file stem

    Returns:
        Dataset with every parsed value

    Raises:
        DataError: missing, unreadable or empty file, non-numeric token or
            non-positive value (the latter two name the offending line)
    """
    file_path = dataset_path(str(path))
    if not file_path.exists():
        bundled = ", ".join(load_available_datasets()) or "none"
        raise DataError(f"data file not found: {file_path} (bundled datasets: {bundled})")

    try:
        values = _parse_lifetimes(file_path)
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {file_path}: {e}")

    if not values:
        raise DataError(f"no observations in {file_path}")

    dataset = Dataset(np.array(values), label or file_path.stem)
    logger.info("Loaded %d observations from %s", dataset.n, file_path)
    return dataset


def _parse_lifetimes(file_path: Path) -> List[float]:
    values: List[float] = []
    with open(file_path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith('#'):
                continue
            for token in _SEPARATORS.split(text):
                if not token:
                    continue
                try:
                    value = float(token.replace(UNICODE_MINUS, "-"))
                except ValueError:
                    raise DataError(f"not a number: {token!r}", line=line_no)
                if not np.isfinite(value) or value <= 0:
                    raise DataError(f"lifetimes must be positive, got {token}", line=line_no)
                values.append(value)
    return values


def summary_stats(dataset: Dataset) -> Dict[str, float]:
    """Descriptive statistics reported alongside fits"""
    x = dataset.values
    return {
        'n': dataset.n,
        'mean': float(x.mean()),
        'median': float(np.median(x)),
        'std': float(x.std(ddof=1)),
        'min': float(x.min()),
        'max': float(x.max()),
    }


def load_available_datasets() -> list:
    """
    Get list of bundled datasets present on disk
    """
    raw_dir = get_raw_data_path()
    return sorted(name for name, filename in BUNDLED_DATASETS.items() if (raw_dir / filename).exists())


def load_reference_table(path: Union[str, Path, None] = None) -> pd.DataFrame:
    """
    Load a published comparison table (model, dataset, loglik, k, aic)

    Args:
        path: CSV file; defaults to the bundled published_comparison.csv

    Returns:
        DataFrame with the reference columns
    """
    file_path = Path(path) if path else get_reference_path() / "published_comparison.csv"
    if not file_path.exists():
        raise DataError(f"reference table not found: {file_path}")
    df = pd.read_csv(file_path, comment='#')
    missing = [c for c in REFERENCE_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"{file_path}: missing column(s) {', '.join(missing)}")
    return df[REFERENCE_COLUMNS]
