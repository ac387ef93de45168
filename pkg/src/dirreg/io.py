"""CSV ingestion and the on-disk artifacts written by the command line.

Artifacts live in one output directory:

``fit.json``
    coefficients, diagnostics, configuration echo and seed (schema in
    ``docs/fit_json.md``)
``summary.csv``
    one row per reported quantity and panel
``draws.csv``
    post-warmup draws of the free parameters with chain ids
``expected_values.csv``
    mean simplex with interval per covariate setting

Floats are written with Python's shortest round-trip repr, so re-reading a
file gives back the exact doubles that produced it.
"""
import csv
import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .composition import transform_zeros, validate_and_normalize
from .errors import AllRowsDropped, MissingArtifacts, NoResponseColumns, ParseError, UnknownColumn
from .model import is_missing

FIT_JSON = "fit.json"
SUMMARY_CSV = "summary.csv"
DRAWS_CSV = "draws.csv"
EXPECTED_CSV = "expected_values.csv"
SCHEMA_VERSION = 1


@dataclass
class IngestReport:
    input_rows: int
    retained_rows: int
    dropped_rows: int
    normalized_rows: int
    zero_entries_replaced: int
    zero_rows: int
    response_columns: list = field(default_factory=list)

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class DataTable:
    """Named columns: floats for numeric columns, strings otherwise."""

    columns: dict
    numeric: set
    report: IngestReport = None

    @property
    def n(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def names(self):
        return list(self.columns)


def _read_rows(path):
    if not os.path.isfile(path):
        raise MissingArtifacts(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file; a header row is required", 1) from None
        except csv.Error as exc:
            raise ParseError(str(exc), reader.line_num) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise ParseError("duplicate column names in header", 1)
        rows = []
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise ParseError(str(exc), reader.line_num) from None
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", reader.line_num)
            rows.append((reader.line_num, row))
    # R's write.csv adds an unnamed row-name column
    if header and header[0] == "":
        header[0] = "(rownames)"
    return header, rows


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def resolve_response(header, response_cols=None, prefix=None):
    """Pick the response block.

    An explicit list wins. Otherwise columns named ``<prefix>...`` are
    used. Returns ``None`` when neither applies, leaving the caller to take
    every all-numeric column that is not a covariate.
    """
    if response_cols:
        missing = [c for c in response_cols if c not in header]
        if missing:
            raise UnknownColumn(f"response columns not in file: {missing}")
        cols = list(response_cols)
    elif prefix and any(h != prefix and h.startswith(prefix) for h in header):
        cols = [h for h in header if h != prefix and h.startswith(prefix)]
    else:
        cols = None
    if cols is not None and len(cols) < 2:
        raise NoResponseColumns(f"need at least 2 response columns, got {cols}")
    return cols


def ingest_csv(path, response_cols=None, covariates=(), prefix=None):
    """Read a CSV file into a :class:`DataTable` and the response
    :class:`CompositionMatrix`.

    Rows with a missing value in a used column (response or covariate) are
    dropped. The response block is then normalized row by row and rounded
    zeros are replaced; the counts end up in ``table.report``.
    """
    header, rows = _read_rows(path)
    if not rows:
        raise AllRowsDropped("file has a header but no data rows")
    covariates = list(dict.fromkeys(covariates))
    unknown = [c for c in covariates if c not in header]
    if unknown:
        raise UnknownColumn(f"covariates not in file: {unknown}")
    response = resolve_response(header, response_cols, prefix)
    if response is None:
        skip = set(covariates) | {"(rownames)"}
        response = [h for h in header if h not in skip and all(
            is_missing(r[header.index(h)]) or _parse_float(r[header.index(h)]) is not None
            for _, r in rows)]
        if len(response) < 2:
            raise NoResponseColumns(
                "could not identify at least 2 numeric response columns; pass them explicitly")
    overlap = set(response) & set(covariates)
    if overlap:
        raise ParseError(f"columns used as both response and covariate: {sorted(overlap)}", 1)

    idx = {h: i for i, h in enumerate(header)}
    used = response + covariates
    kept = []
    for line, row in rows:
        if any(is_missing(row[idx[c]]) for c in used):
            continue
        kept.append((line, row))
    if not kept:
        raise AllRowsDropped(f"no complete rows among {len(rows)} data rows")

    Y = np.empty((len(kept), len(response)))
    for i, (line, row) in enumerate(kept):
        for j, c in enumerate(response):
            v = _parse_float(row[idx[c]])
            if v is None or not math.isfinite(v):
                raise ParseError(f"non-numeric response value {row[idx[c]]!r} in column {c!r}", line)
            Y[i, j] = v

    columns, numeric = {}, set()
    for c in covariates:
        raw = [row[idx[c]].strip() for _, row in kept]
        vals = [_parse_float(v) for v in raw]
        if all(v is not None for v in vals):
            columns[c] = vals
            numeric.add(c)
        else:
            columns[c] = raw
    for j, c in enumerate(response):
        columns[c] = list(Y[:, j])
        numeric.add(c)

    sums = Y.sum(axis=1)
    normalized = validate_and_normalize(Y, response)
    comp = transform_zeros(normalized)
    report = IngestReport(
        input_rows=len(rows),
        retained_rows=len(kept),
        dropped_rows=len(rows) - len(kept),
        normalized_rows=int(np.sum(np.abs(sums - 1.0) > 1e-8)),
        zero_entries_replaced=comp.zeros_replaced,
        zero_rows=comp.rows_with_zeros,
        response_columns=list(response),
    )
    return DataTable(columns, numeric, report), comp


def covariate_settings(design, data):
    """Named covariate rows for expected-value reporting.

    Factors range over all their levels (cartesian product); numeric
    covariates are held at their sample mean.
    """
    grids = []
    for term in design.terms:
        if term in design.encoding:
            grids.append([(term, lv) for lv in design.encoding[term]])
        else:
            grids.append([(term, float(np.mean(data[term])))])
    settings = {}
    for combo in itertools.product(*grids):
        parts = []
        for term, v in combo:
            parts.append(f"{term}={v}" if term in design.encoding else f"{term}=mean")
        label = ",".join(parts) or "all"
        settings[label] = design.row_for(dict(combo))
    return settings


def _num(v):
    """JSON-safe float (non-finite values become null)."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(jsonable(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path):
    if not os.path.isfile(path):
        raise MissingArtifacts(f"missing artifact: {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


SUMMARY_HEADER = ["panel", "quantity", "lower", "estimate", "upper", "level"]


def summary_rows(table):
    return [(table.panel, r.name, r.q_low, r.mean, r.q_high, table.level) for r in table.rows]


def write_draws(path, draws):
    header = ["chain", "draw"] + list(draws.names)
    counters = {}
    rows = []
    for cid, row in zip(draws.chain_ids, draws.draws):
        k = counters.get(int(cid), 0)
        counters[int(cid)] = k + 1
        rows.append([int(cid), k] + [float(v) for v in row])
    write_csv(path, header, rows)


def read_draws(path):
    """``(names, chain_ids, draws)`` from a ``draws.csv`` file."""
    if not os.path.isfile(path):
        raise MissingArtifacts(f"missing artifact: {path}")
    header, rows = _read_rows(path)
    if header[:2] != ["chain", "draw"]:
        raise ParseError("draws file must start with chain,draw columns", 1)
    chain_ids = np.array([int(r[0]) for _, r in rows], dtype=int)
    values = np.array([[float(v) for v in r[2:]] for _, r in rows], dtype=float)
    return header[2:], chain_ids, values.reshape(len(rows), len(header) - 2)


def read_summary(path):
    if not os.path.isfile(path):
        raise MissingArtifacts(f"missing artifact: {path}")
    header, rows = _read_rows(path)
    return [dict(zip(header, r)) for _, r in rows]
