"""Tabular data ingestion and the preprocessing the model stack assumes.

A :class:`Dataset` is immutable: ``preprocess`` returns a new instance and
the underlying value matrix is write-protected, so datasets can be shared
freely across threads.
"""

import csv
import io

import numpy as np

from .errors import (
    AlreadyPreprocessed,
    DimensionMismatch,
    InvalidParameter,
    NonNumericCell,
    RaggedRows,
    TooFewColumns,
    TooFewRows,
)

RAW = "raw"
CENTERED = "centered"
AUTOSCALED = "autoscaled"


class Dataset:
    """An I x J numeric matrix with sample ids, variable names and scaling state.

    Parameters
    ----------
    samples : list of str
        Row identifiers, length I.
    variables : list of str
        Column names, length J.
    values : ndarray of shape (I, J)
        Finite values; preprocessed in-place encoding is *not* used, the
        matrix always reflects the ``preprocessing`` state.
    preprocessing : {"raw", "centered", "autoscaled"}
    means, stds : ndarray of shape (J,), optional
        Column statistics captured when the data was centered/autoscaled,
        in original units. ``stds`` is present only for autoscaled data.
    zero_variance : tuple of int
        Indices of columns whose original variance was zero (autoscale
        keeps them, centered to zero, so variable indices stay aligned).
    """

    def __init__(self, samples, variables, values, preprocessing=RAW,
                 means=None, stds=None, zero_variance=()):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch("values must be a 2-D matrix")
        if len(samples) != values.shape[0] or len(variables) != values.shape[1]:
            raise DimensionMismatch("sample/variable names do not match matrix shape")
        self.samples = list(samples)
        self.variables = list(variables)
        self.values = values
        self.values.flags.writeable = False
        self.preprocessing = preprocessing
        self.means = None if means is None else np.asarray(means, dtype=np.float64)
        self.stds = None if stds is None else np.asarray(stds, dtype=np.float64)
        self.zero_variance = tuple(zero_variance)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_variables(self):
        return self.values.shape[1]

    def original_values(self):
        """Values mapped back to original units regardless of scaling state."""
        x = np.array(self.values)
        if self.preprocessing == AUTOSCALED:
            x = x * self.stds + self.means
        elif self.preprocessing == CENTERED:
            x = x + self.means
        return x

    def preprocess_vector(self, x):
        """Apply this dataset's centering/scaling to a J-vector in original units."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_variables,):
            raise DimensionMismatch(
                f"expected a vector of length {self.n_variables}, got shape {x.shape}")
        if self.preprocessing == CENTERED:
            return x - self.means
        if self.preprocessing == AUTOSCALED:
            return (x - self.means) / self.stds
        return x

    def meta(self):
        """JSON-friendly metadata (no values)."""
        return {
            "samples": self.samples,
            "variables": self.variables,
            "shape": [self.n_samples, self.n_variables],
            "preprocessing": self.preprocessing,
            "zero_variance": list(self.zero_variance),
        }


def load_csv(stream, delimiter=",", has_header=True, id_column=None):
    """Parse CSV bytes/text into a raw :class:`Dataset`.

    ``id_column`` selects the sample-id column either by name (requires a
    header) or by 0-based position; without it rows are numbered "0", "1", ...
    Raises RaggedRows, NonNumericCell (with 0-based data row / value column),
    TooFewRows or TooFewColumns.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    rows = [row for row in csv.reader(io.StringIO(text), delimiter=delimiter)
            if len(row) > 0]
    if not rows:
        raise TooFewRows("empty input")

    if has_header:
        header, data_rows = rows[0], rows[1:]
    else:
        header, data_rows = None, rows

    if not data_rows:
        raise TooFewRows("no data rows")

    width = len(data_rows[0])
    for r, row in enumerate(data_rows):
        if len(row) != width:
            raise RaggedRows(
                f"row {r} has {len(row)} cells, expected {width}",
                detail={"row": r, "got": len(row), "expected": width})

    id_index = None
    if id_column is not None:
        if isinstance(id_column, str) and not id_column.lstrip("-").isdigit():
            if header is None:
                raise InvalidParameter("id_column by name requires a header")
            if id_column not in header:
                raise InvalidParameter(f"id column {id_column!r} not found")
            id_index = header.index(id_column)
        else:
            id_index = int(id_column)
            if not 0 <= id_index < width:
                raise InvalidParameter(f"id column index {id_index} out of range")

    value_cols = [c for c in range(width) if c != id_index]
    if header is not None:
        variables = [header[c] for c in value_cols]
    else:
        variables = [f"v{c}" for c in range(len(value_cols))]

    if id_index is not None:
        samples = [row[id_index] for row in data_rows]
    else:
        samples = [str(r) for r in range(len(data_rows))]

    values = np.empty((len(data_rows), len(value_cols)), dtype=np.float64)
    for r, row in enumerate(data_rows):
        for out_c, c in enumerate(value_cols):
            cell = row[c].strip()
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(r, out_c, cell) from None
            if not np.isfinite(v):
                raise NonNumericCell(r, out_c, cell)
            values[r, out_c] = v

    if values.shape[0] < 3:
        raise TooFewRows(f"need at least 3 rows, got {values.shape[0]}")
    if values.shape[1] < 2:
        raise TooFewColumns(f"need at least 2 numeric columns, got {values.shape[1]}")

    return Dataset(samples, variables, values)


def to_csv(d, include_ids=False):
    """Serialize a dataset body back to CSV text (shortest round-trip floats)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if include_ids:
        writer.writerow(["id"] + d.variables)
        for sid, row in zip(d.samples, d.values):
            writer.writerow([sid] + [repr(float(v)) for v in row])
    else:
        writer.writerow(d.variables)
        for row in d.values:
            writer.writerow([repr(float(v)) for v in row])
    return out.getvalue()


def preprocess(d, mode):
    """Center or autoscale a raw dataset; returns a new Dataset.

    Autoscaling divides by the (I-1)-divisor sample standard deviation;
    zero-variance columns keep divisor 1 and are flagged.
    """
    if d.preprocessing != RAW:
        raise AlreadyPreprocessed(f"dataset is already {d.preprocessing}")
    if mode not in ("center", "autoscale"):
        raise ValueError(f"unknown preprocessing mode {mode!r}")

    means = d.values.mean(axis=0)
    centered = d.values - means
    if mode == "center":
        return Dataset(d.samples, d.variables, centered, CENTERED, means=means)

    stds = centered.std(axis=0, ddof=1)
    zero_var = np.flatnonzero(stds <= 0.0)
    divisors = np.where(stds > 0.0, stds, 1.0)
    return Dataset(d.samples, d.variables, centered / divisors, AUTOSCALED,
                   means=means, stds=divisors, zero_variance=zero_var)
