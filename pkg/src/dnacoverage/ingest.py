"""Per-strand read-count tables: parsing, serialisation and log-normal fitting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .channel import FitReport, mle_fit
from .errors import DomainError, DuplicateIdError, EmptyInputError, InsufficientDataError, ParseError

DELIMITERS = {"tsv": "\t", "csv": ","}


@dataclass(frozen=True)
class ReadCountTable:
    entries: tuple  # ((strand_id, count), ...)

    @property
    def total_reads(self) -> int:
        return sum(c for _, c in self.entries)

    @property
    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.int64)

    @property
    def ids(self) -> list:
        return [s for s, _ in self.entries]

    def __len__(self):
        return len(self.entries)


def _text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def parse_read_counts(source: Union[bytes, str, io.IOBase], format: str = "tsv") -> ReadCountTable:
    """Parse ``strand_id<sep>count`` rows.

    ``#`` lines and blank lines are skipped. A first data row whose second
    field is not an integer is taken as a header. Zero counts are kept.
    """
    if format not in DELIMITERS:
        raise DomainError(f"unknown table format {format!r}")
    text = _text(source)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=DELIMITERS[format])
    entries = []
    seen = set()
    first = True
    for lineno, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()) or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        sid, raw = row[0].strip(), row[1].strip()
        try:
            count = int(raw)
        except ValueError:
            if first:
                first = False
                continue
            raise ParseError(f"count {raw!r} is not an integer", lineno) from None
        first = False
        if not sid:
            raise ParseError("empty strand id", lineno)
        if count < 0:
            raise ParseError(f"negative count {count}", lineno)
        if sid in seen:
            raise DuplicateIdError(f"duplicate strand id {sid!r}", lineno)
        seen.add(sid)
        entries.append((sid, count))
    if not entries:
        raise EmptyInputError("no read-count rows in input")
    table = ReadCountTable(tuple(entries))
    if table.total_reads == 0:
        raise EmptyInputError("all counts are zero")
    return table


def serialize_read_counts(table: ReadCountTable, format: str = "tsv", header: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=DELIMITERS[format], lineterminator="\n")
    if header:
        w.writerow(["strand_id", "count"])
    w.writerows(table.entries)
    return buf.getvalue()


def _positive_proportions(table: ReadCountTable, drop_zeros: bool):
    counts = table.counts
    zeros = int(np.count_nonzero(counts == 0))
    if zeros and not drop_zeros:
        raise DomainError(f"{zeros} strands have zero reads; log transform undefined")
    pos = counts[counts > 0]
    if pos.size < 2:
        raise InsufficientDataError(f"need at least 2 strands with reads, got {pos.size}")
    return pos / counts.sum(), zeros


def fit_channel(table: ReadCountTable, drop_zeros: bool = True) -> FitReport:
    """Log-normal fit of read proportions; zero-count strands are dropped and counted."""
    props, zeros = _positive_proportions(table, drop_zeros)
    rep = mle_fit(props)
    return FitReport(rep.params, rep.n_samples, rep.ks_statistic, rep.log_domain_mean,
                     rep.log_domain_var, n_strands=len(table), n_dropped=zeros)


def qq_points(table: ReadCountTable, drop_zeros: bool = True) -> list:
    """(theoretical, empirical) log-proportion quantile pairs for a normal Q-Q plot."""
    props, _ = _positive_proportions(table, drop_zeros)
    if props.size < 10:
        raise InsufficientDataError(f"need at least 10 positive counts for a Q-Q plot, got {props.size}")
    rep = mle_fit(props)
    emp = np.sort(np.log(props))
    k = emp.size
    pp = (np.arange(1, k + 1) - 0.5) / k
    theo = rep.params.mu + rep.params.sigma * stats.norm.ppf(pp)
    return list(zip(theo.tolist(), emp.tolist()))
