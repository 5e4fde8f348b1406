"""
Matrix CSV files: comma separated, no header unless requested, floats
written with 17 significant digits so that values read back bit-exact.
"""
import os
from typing import Optional, Sequence

import numpy as np

from config.settings import FLOAT_FORMAT
from src.core.exceptions import ValidationError


def write_matrix(path: str, matrix: np.ndarray, header: Optional[Sequence[str]] = None,
                 fmt: str = FLOAT_FORMAT) -> None:
    """Writes a 1-D (one value per row) or 2-D array."""
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.dtype == bool:
        matrix, fmt = matrix.astype(int), "%d"
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    head = ",".join(header) if header else ""
    np.savetxt(path, matrix, fmt=fmt, delimiter=",", header=head, comments="")


def _has_header(path: str) -> bool:
    with open(path, "r") as f:
        first = f.readline().strip()
    try:
        [float(v) for v in first.split(",")]
        return False
    except ValueError:
        return True


def read_matrix(path: str, columns: Optional[int] = None, rows: Optional[int] = None,
                dtype: type = float) -> np.ndarray:
    """
    Reads a 2-D array, skipping a header line when one is present.

    Args:
        path: CSV file
        columns: Expected column count (checked when given)
        rows: Expected row count (checked when given)
        dtype: float, int or bool

    Raises:
        ValidationError: Missing file, ragged or non-numeric rows, or a shape
            different from the expected one. The error carries the path.
    """
    if not os.path.exists(path):
        raise ValidationError("file not found", path=path)
    try:
        if os.path.getsize(path) == 0:
            raise ValidationError("file is empty", path=path)
        skip = 1 if _has_header(path) else 0
        data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"malformed CSV: {exc}", path=path) from exc
    if data.size == 0:
        raise ValidationError("file has no data rows", path=path)
    if columns is not None and data.shape[1] != columns:
        raise ValidationError(f"expected {columns} columns, got {data.shape[1]}", path=path)
    if rows is not None and data.shape[0] != rows:
        raise ValidationError(f"expected {rows} rows, got {data.shape[0]}", path=path)
    if dtype is float:
        return data
    if not np.all(data == np.round(data)):
        raise ValidationError("expected integer entries", path=path)
    return data.astype(np.int64).astype(dtype)
