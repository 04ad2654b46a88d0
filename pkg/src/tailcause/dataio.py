"""CSV ingestion and output for the command-line tool.

Files may open with any number of ``#`` comment lines; the first other line
is the header. Floats are written with ``repr`` so a write/read round trip
reproduces every value bit for bit.
"""

from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

from tailcause.estimator import Series

MISSING_POLICIES = ("error", "drop-row", "interpolate-linear")
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    names: list
    columns: dict  # name -> float64 array
    source: str = None
    comments: list = field(default_factory=list)

    def __post_init__(self):
        lengths = {len(self.columns[n]) for n in self.names}
        if len(lengths) > 1:
            raise DataError(f"columns differ in length: {sorted(lengths)}")

    def __len__(self):
        return len(self.columns[self.names[0]]) if self.names else 0

    def __getitem__(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column {name!r}; available: {', '.join(self.names)}") from None

    def series(self, name):
        return Series(name, self[name])


def _data_lines(text):
    """Yield (line_number, line) for non-comment, non-blank lines."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line


def _fill_linear(v, name):
    ok = ~np.isnan(v)
    if not ok.any():
        raise DataError(f"column {name!r} has no values to interpolate from")
    idx = np.arange(v.size)
    # np.interp holds the nearest valid value beyond either end
    return np.interp(idx, idx[ok], v[ok])


def read_csv_text(text, columns=None, missing="error", source=None):
    if missing not in MISSING_POLICIES:
        raise DataError(f"unknown missing-value policy {missing!r}; choose from {', '.join(MISSING_POLICIES)}")
    lines = list(_data_lines(text))
    if not lines:
        raise DataError(f"{source or 'input'}: no header row")
    comments = [ln[1:].strip() for ln in text.splitlines() if ln.strip().startswith("#")]
    reader = csv.reader([ln for _, ln in lines])
    rows = list(reader)
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"duplicate column names in header: {header}")
    wanted = list(header) if columns is None else list(columns)
    for name in wanted:
        if name not in header:
            raise DataError(f"no column {name!r}; available: {', '.join(header)}")
    pos = [header.index(name) for name in wanted]
    data = np.empty((len(rows) - 1, len(wanted)), dtype=np.float64)
    for r, (row, (lineno, _)) in enumerate(zip(rows[1:], lines[1:]), start=1):
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, found {len(row)} (ragged row)")
        for c, j in enumerate(pos):
            cell = row[j].strip()
            if cell.lower() in MISSING_TOKENS:
                if missing == "error":
                    raise DataError(f"data row {r} (line {lineno}), column {wanted[c]!r}: missing value {cell!r}")
                data[r - 1, c] = math.nan
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"data row {r} (line {lineno}), column {wanted[c]!r}: cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise DataError(f"data row {r} (line {lineno}), column {wanted[c]!r}: non-finite value {cell!r}")
            data[r - 1, c] = value
    if missing == "drop-row":
        data = data[~np.isnan(data).any(axis=1)]
    elif missing == "interpolate-linear":
        for c, name in enumerate(wanted):
            data[:, c] = _fill_linear(data[:, c], name)
    return Dataset(wanted, {name: data[:, c].copy() for c, name in enumerate(wanted)}, source, comments)


def ingest_csv(path, columns=None, missing="error"):
    """Read selected numeric columns of a CSV file into a Dataset.

    Parameters
    ----------
    path : str
        File with a header row, optionally preceded by ``#`` comment lines.
    columns : list of str, optional
        Columns to parse; all columns when omitted. Unselected columns may
        hold anything (dates, labels).
    missing : {"error", "drop-row", "interpolate-linear"}
        What to do with empty or NaN-like cells.

    Raises
    ------
    DataError
        On unparsable or non-finite cells (naming the data row, file line and
        column), ragged rows, or unknown column names.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    return read_csv_text(text, columns, missing, source=str(path))


def format_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def csv_text(columns, rows, comments=()):
    """CSV with ``#`` comment lines, comma separator and LF endings."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(c) for c in columns]
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def series_csv_text(names, arrays, comments=()):
    return csv_text(list(names), zip(*[np.asarray(a).tolist() for a in arrays]), comments)
