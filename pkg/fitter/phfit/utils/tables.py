"""
Delimiter-separated tables.

Every table the package writes goes through write_table and can be read back with
read_table; both use comma delimiters, a header row and no index column.
"""

import logging
from pathlib import Path

import pandas as pd

from phfit.common.exceptions import DocumentError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_table(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote table with {len(frame)} rows to {path}")
    return path


def read_table(path: str | Path, required=None) -> pd.DataFrame:
    """
    Read a table written by write_table.

    Args:
        - path: table file
        - required (list, optional): column headers that must be present
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DocumentError(str(path), [f"cannot parse table: {e}"])

    missing = [header for header in (required or []) if header not in frame.columns]
    if missing:
        raise DocumentError(str(path), [f"missing required columns ({', '.join(missing)})"])
    return frame
