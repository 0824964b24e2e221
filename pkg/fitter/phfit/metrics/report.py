"""
Evaluation report: one row per (instance, grid cell), plus a per-cell summary of
success rates and mean wall time.
"""

import numpy as np
import pandas as pd

from phfit.common.exceptions import MetricsInputError

from .models import EvalRecord

ETA_LEVELS = (0.2, 0.5, 1.0)
CELL_COLUMNS = ["family", "structure", "n", "l"]


def success_column(eta: float) -> str:
    return f"success@{eta}"


def evaluation_table(records: list[EvalRecord], etas=ETA_LEVELS) -> pd.DataFrame:
    rows = []
    for record in records:
        row = {
            "instance": record.instance_id,
            "family": record.family,
            "structure": record.structure,
            "n": record.n,
            "l": record.l,
            "max_mape": record.max_mape,
        }
        for eta in etas:
            row[success_column(eta)] = int(record.max_mape <= eta)
        row["wall_time"] = record.wall_time
        row["error"] = record.error or ""
        rows.append(row)
    columns = ["instance", *CELL_COLUMNS, "max_mape"]
    columns += [success_column(eta) for eta in etas] + ["wall_time", "error"]
    return pd.DataFrame(rows, columns=columns)


def summarize(table: pd.DataFrame, etas=ETA_LEVELS) -> pd.DataFrame:
    """Success rate in percent at every eta and mean wall time, per grid cell."""
    if table.empty:
        raise MetricsInputError("cannot summarize an empty evaluation table")

    aggregations = {
        success_column(eta): (success_column(eta), lambda column: 100.0 * np.mean(column))
        for eta in etas
    }
    aggregations["mean_wall_time"] = ("wall_time", "mean")
    aggregations["instances"] = ("instance", "count")
    aggregations["failures"] = ("error", lambda column: int((column.fillna("") != "").sum()))
    return table.groupby(CELL_COLUMNS, sort=True).agg(**aggregations).reset_index()
