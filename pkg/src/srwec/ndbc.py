"""NDBC spectral wave density ingestion and resource characterization.

Station history "swden" files carry one header line naming the frequency
grid and one row per observation: date fields, then one density value
per frequency with 999.00 marking missing data. From the good records a
scatter table of occurrence percentages over (Hs, Te) bins is built, and
representative sea states are picked per energy-period column.

Ingestion reads local files only. Station history downloads follow
``swden_url``; fetching them is left to the operator.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from srwec.errors import DataFormatError, ValidationError
from srwec.spectra import SeaState, SpectralDensity, energy_period, moments

MISSING_SENTINEL = 999.0

HS_CENTERS = 0.25 + 0.5 * np.arange(20)  # 0.25 .. 9.75 m
TE_CENTERS = 3.5 + 1.0 * np.arange(11)  # 3.5 .. 13.5 s
TP_OVER_TE = 1.16

_HS_EDGES = np.concatenate(([HS_CENTERS[0] - 0.25], HS_CENTERS + 0.25))
_TE_EDGES = np.concatenate(([TE_CENTERS[0] - 0.5], TE_CENTERS + 0.5))


def swden_url(station: str, year: int) -> str:
    """Station-history download URL for a spectral wave density file."""
    return (
        "https://www.ndbc.noaa.gov/view_text_file.php"
        f"?filename={station}w{year}.txt.gz&dir=data/historical/swden/"
    )


@dataclass(frozen=True)
class SpectralRecord:
    """One buoy observation: a sampled density and its UTC timestamp."""

    time: datetime
    freq: np.ndarray
    density: np.ndarray
    missing: bool

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpectralRecord):
            return NotImplemented
        return (
            self.time == other.time
            and self.missing == other.missing
            and np.array_equal(self.freq, other.freq)
            and np.array_equal(self.density, other.density)
        )

    def density_spectrum(self) -> SpectralDensity:
        if self.missing:
            raise ValidationError("record is flagged missing")
        return SpectralDensity(freq=self.freq, s=self.density)


@dataclass
class ParsedSwden:
    """Parse result: good records plus per-row diagnostics."""

    freq: np.ndarray
    records: list[SpectralRecord]
    row_errors: list[tuple[int, str]] = field(default_factory=list)


def _parse_year(token: str) -> int:
    y = int(token)
    if y < 100:
        return 1900 + y if y >= 70 else 2000 + y
    return y


def parse_swden(text: str) -> ParsedSwden:
    """Parse swden file content.

    The header line (with or without a leading ``#``) lists date column
    labels followed by the frequencies in hertz; both the modern
    five-field date (YY MM DD hh mm) and the older four-field form are
    accepted. Malformed data rows are collected as (line number,
    message) and do not abort the parse.
    """
    lines = text.splitlines()
    if not lines:
        raise DataFormatError("empty swden file")
    header = lines[0].lstrip("#").split()
    freqs: list[float] = []
    n_date = 0
    for tok in header:
        try:
            freqs.append(float(tok))
        except ValueError:
            if freqs:
                raise DataFormatError(f"non-numeric token {tok!r} after frequencies")
            n_date += 1
    if not freqs or n_date not in (4, 5):
        raise DataFormatError(
            f"swden header must have 4 or 5 date fields then frequencies, "
            f"got {n_date} date fields and {len(freqs)} frequencies"
        )
    freq = np.array(freqs)
    if not np.all(np.diff(freq) > 0) or freq[0] <= 0:
        raise DataFormatError("header frequencies must be positive and increasing")

    records: list[SpectralRecord] = []
    row_errors: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != n_date + freq.size:
            row_errors.append(
                (lineno, f"expected {n_date + freq.size} fields, got {len(tokens)}")
            )
            continue
        try:
            year = _parse_year(tokens[0])
            month, day, hour = (int(t) for t in tokens[1:4])
            minute = int(tokens[4]) if n_date == 5 else 0
            time = datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
            density = np.array([float(t) for t in tokens[n_date:]])
        except ValueError as exc:
            row_errors.append((lineno, str(exc)))
            continue
        missing = bool(np.any(density == MISSING_SENTINEL))
        if not missing and np.any(density < 0):
            row_errors.append((lineno, "negative density"))
            continue
        records.append(
            SpectralRecord(time=time, freq=freq, density=density, missing=missing)
        )
    return ParsedSwden(freq=freq, records=records, row_errors=row_errors)


def _fmt_value(v: float) -> str:
    s = f"{v:.2f}"
    return s if float(s) == v else np.format_float_positional(v, trim="0")


def format_swden(parsed: ParsedSwden) -> str:
    """Emit records back to swden text; parsing the result reproduces
    the records exactly (values are widened beyond two decimals only
    when rounding would change them)."""
    out = io.StringIO()
    out.write("#YY  MM DD hh mm " + " ".join(f"{f:.4f}" for f in parsed.freq) + "\n")
    for rec in parsed.records:
        t = rec.time
        stamp = f"{t.year:04d} {t.month:02d} {t.day:02d} {t.hour:02d} {t.minute:02d}"
        out.write(stamp + " " + " ".join(_fmt_value(v) for v in rec.density) + "\n")
    return out.getvalue()


@dataclass(frozen=True)
class ResourceBinTable:
    """Occurrence percentages over (Hs, Te) bins with a Tp footer row.

    ``pct[i, j]`` is the percentage of records in Hs bin i and Te bin j;
    ``out_of_range_pct`` absorbs records outside every bin so the total
    is always 100.
    """

    pct: np.ndarray
    n_records: int
    out_of_range_pct: float = 0.0
    hs_centers: np.ndarray = field(default_factory=lambda: HS_CENTERS.copy())
    te_centers: np.ndarray = field(default_factory=lambda: TE_CENTERS.copy())

    def __post_init__(self) -> None:
        pct = np.asarray(self.pct, dtype=float)
        object.__setattr__(self, "pct", pct)
        if pct.shape != (self.hs_centers.size, self.te_centers.size):
            raise ValidationError(
                f"pct shape {pct.shape} does not match "
                f"({self.hs_centers.size}, {self.te_centers.size}) bins"
            )
        if np.any(pct < 0) or self.out_of_range_pct < -1e-9:
            raise ValidationError("occurrence percentages must be >= 0")
        total = pct.sum() + self.out_of_range_pct
        if self.n_records > 0 and abs(total - 100.0) > 1e-6:
            raise ValidationError(f"percentages total {total}, expected 100")

    @property
    def tp_row(self) -> np.ndarray:
        return TP_OVER_TE * self.te_centers


def characterize(records: list[SpectralRecord]) -> ResourceBinTable:
    """Bin records by (Hs, Te) into occurrence percentages.

    Hs = 4 sqrt(m0) and Te = m_-1/m0 from the record's own grid. Bins
    are half-open on the right; records outside every bin land in the
    out-of-range bucket. Missing records are dropped from the total.
    """
    counts = np.zeros((HS_CENTERS.size, TE_CENTERS.size))
    out_of_range = 0
    n = 0
    for rec in records:
        if rec.missing:
            continue
        sd = rec.density_spectrum()
        m0 = moments(sd, 0)
        n += 1
        if m0 <= 0:
            out_of_range += 1
            continue
        hs = 4.0 * np.sqrt(m0)
        te = moments(sd, -1) / m0
        i = np.searchsorted(_HS_EDGES, hs, side="right") - 1
        j = np.searchsorted(_TE_EDGES, te, side="right") - 1
        if 0 <= i < HS_CENTERS.size and 0 <= j < TE_CENTERS.size:
            counts[i, j] += 1
        else:
            out_of_range += 1
    if n == 0:
        raise ValidationError("no usable records: all inputs missing or empty")
    return ResourceBinTable(
        pct=100.0 * counts / n,
        n_records=n,
        out_of_range_pct=100.0 * out_of_range / n,
    )


def select_representative(
    table: ResourceBinTable, policy: str = "weighted"
) -> list[SeaState]:
    """One sea state per energy-period column.

    tp comes from the table's Tp footer; hs is the occurrence-weighted
    mean of the column ("weighted", default) or the modal bin center
    ("modal"). Empty columns are skipped with a warning.
    """
    if policy not in ("weighted", "modal"):
        raise ValidationError(f"unknown hs policy {policy!r}")
    states = []
    for j, tp in enumerate(table.tp_row):
        col = table.pct[:, j]
        weight = col.sum()
        if weight <= 0:
            warnings.warn(f"no occurrences in the Te={table.te_centers[j]} s column")
            continue
        if policy == "weighted":
            hs = float(col @ table.hs_centers / weight)
        else:
            hs = float(table.hs_centers[np.argmax(col)])
        states.append(SeaState(hs=hs, tp=float(tp)))
    return states


def write_table(table: ResourceBinTable) -> str:
    """Resource table CSV: Te-center header, Hs-center rows with
    two-decimal percentages, and a final ``tp_s`` footer row."""
    out = io.StringIO()
    out.write(f"# n_records={table.n_records}\n")
    out.write("hs_m," + ",".join(f"te_{te:g}_s" for te in table.te_centers) + "\n")
    for i, hs in enumerate(table.hs_centers):
        out.write(f"{hs:g}," + ",".join(f"{p:.2f}" for p in table.pct[i]) + "\n")
    out.write("tp_s," + ",".join(f"{tp:.2f}" for tp in table.tp_row) + "\n")
    return out.getvalue()


def read_table(text: str) -> ResourceBinTable:
    """Parse the CSV produced by ``write_table`` (or the bundled
    occurrence reference, which uses the same layout)."""
    n_records = 0
    rows: list[list[float]] = []
    hs_centers: list[float] = []
    te_centers: list[float] | None = None
    tp_row: np.ndarray | None = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("#").strip().partition("=")
            if key.strip() == "n_records":
                n_records = int(value)
            continue
        cells = line.split(",")
        if cells[0] == "hs_m":
            te_centers = [float(c.removeprefix("te_").removesuffix("_s")) for c in cells[1:]]
            continue
        if cells[0] == "tp_s":
            tp_row = np.array([float(c) for c in cells[1:]])
            continue
        hs_centers.append(float(cells[0]))
        rows.append([float(c) for c in cells[1:]])
    if te_centers is None or not rows:
        raise DataFormatError("resource table must have an hs_m header and data rows")
    pct = np.array(rows)
    table = ResourceBinTable(
        pct=pct,
        n_records=n_records,
        out_of_range_pct=max(0.0, 100.0 - float(pct.sum())),
        hs_centers=np.array(hs_centers),
        te_centers=np.array(te_centers),
    )
    if tp_row is not None and not np.allclose(tp_row, table.tp_row, rtol=5e-3):
        raise DataFormatError("tp_s footer disagrees with 1.16x the Te centers")
    return table


def load_occurrence_reference() -> ResourceBinTable:
    """Bundled deployment-site occurrence table (mid-Atlantic buoy
    41002, 2008 through 2018)."""
    from importlib.resources import files

    text = files("srwec").joinpath("fixtures/occurrence_reference.csv").read_text()
    return read_table(text)
