"""Binary behavior matrices: bit-packed storage, CSV/label IO, synthetic data.

A dataset is an n x m matrix of 0/1 cells: one row per sample (process),
one column per behavior feature (event type, executable, address, ...).
Rows are stored bit-packed (64-bit words, LSB-first) so similarity scans
reduce to popcounts; see kernels.py.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from anorank import kernels
from anorank.errors import ConfigError, DimensionError, LabelRangeError, ParseError


class BinaryMatrix:
    """Immutable bit-packed n_rows x n_cols matrix of {0,1} cells.

    Attributes:
        n_rows: number of samples.
        n_cols: number of features.
        bits: (n_rows, n_words) uint64, row-major, LSB-first packing.
        feature_names: optional list of n_cols column names.
    """

    __slots__ = ("n_rows", "n_cols", "bits", "feature_names", "_row_ones")

    def __init__(self, bits: np.ndarray, n_cols: int, feature_names: list[str] | None = None):
        n_rows, n_words = bits.shape
        if n_rows < 1 or n_cols < 1:
            raise DimensionError(f"matrix must be at least 1x1, got {n_rows}x{n_cols}")
        if n_words != (n_cols + 63) // 64:
            raise DimensionError(f"{n_words} words cannot hold {n_cols} columns")
        if feature_names is not None and len(feature_names) != n_cols:
            raise DimensionError(
                f"{len(feature_names)} feature names for {n_cols} columns"
            )
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.bits = bits
        self.bits.flags.writeable = False
        self.feature_names = list(feature_names) if feature_names is not None else None
        self._row_ones: np.ndarray | None = None

    @classmethod
    def from_dense(cls, dense: np.ndarray, feature_names: list[str] | None = None) -> BinaryMatrix:
        """Build from a (n, m) array whose entries are 0 or 1."""
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise DimensionError(f"expected 2D array, got ndim={dense.ndim}")
        if not np.isin(dense, (0, 1)).all():
            raise ParseError("dense matrix contains values other than 0/1")
        return cls(kernels.pack_rows(dense), dense.shape[1], feature_names)

    def to_dense(self) -> np.ndarray:
        """Unpack to a (n_rows, n_cols) uint8 array."""
        return kernels.unpack_rows(self.bits, self.n_cols)

    def row_dense(self, i: int) -> np.ndarray:
        """Unpack row i to a (n_cols,) uint8 vector."""
        return kernels.unpack_rows(self.bits[i : i + 1], self.n_cols)[0]

    def row_ones(self) -> np.ndarray:
        """Per-row popcount, computed once and cached."""
        if self._row_ones is None:
            self._row_ones = kernels.popcount_rows(self.bits)
            self._row_ones.flags.writeable = False
        return self._row_ones

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return (
            self.n_cols == other.n_cols
            and np.array_equal(self.bits, other.bits)
            and self.feature_names == other.feature_names
        )

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.n_rows}x{self.n_cols})"


@dataclass(frozen=True)
class GroundTruth:
    """Which rows of a matrix are true anomalies."""

    anomaly_ids: frozenset[int]
    total: int

    def __post_init__(self):
        if self.total < 1:
            raise ConfigError(f"total must be >= 1, got {self.total}")
        bad = [i for i in self.anomaly_ids if not 0 <= i < self.total]
        if bad:
            raise LabelRangeError(f"anomaly ids out of range [0, {self.total}): {sorted(bad)}")


@dataclass(frozen=True)
class SynthConfig:
    """Planted-signature generator settings.

    Normal rows draw each bit at normal_density. Anomaly rows additionally
    force a fixed random set of anomaly_signature_size columns to 1, then
    every bit is flipped with noise_flip_prob. round(anomaly_fraction * n_rows)
    rows (at least 1) are anomalies.
    """

    n_rows: int
    n_cols: int
    anomaly_fraction: float
    normal_density: float = 0.15
    anomaly_signature_size: int = 12
    noise_flip_prob: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ConfigError("n_rows and n_cols must be >= 1")
        if not 0.0 < self.anomaly_fraction < 0.5:
            raise ConfigError(f"anomaly_fraction must be in (0, 0.5), got {self.anomaly_fraction}")
        if not 0.0 <= self.noise_flip_prob < 0.5:
            raise ConfigError(f"noise_flip_prob must be in [0, 0.5), got {self.noise_flip_prob}")
        if not 0.0 <= self.normal_density <= 1.0:
            raise ConfigError(f"normal_density must be in [0, 1], got {self.normal_density}")
        if self.anomaly_signature_size > self.n_cols:
            raise ConfigError("anomaly_signature_size exceeds n_cols")


def planted_signature(cfg: SynthConfig) -> np.ndarray:
    """Sorted column indices of the signature generate_synthetic plants."""
    rng = np.random.default_rng([cfg.seed, 1])
    return np.sort(rng.choice(cfg.n_cols, size=cfg.anomaly_signature_size, replace=False))


def anomaly_count(cfg: SynthConfig) -> int:
    return max(1, round(cfg.anomaly_fraction * cfg.n_rows))


def generate_synthetic(cfg: SynthConfig) -> tuple[BinaryMatrix, GroundTruth]:
    """Generate a planted-anomaly dataset; pure function of cfg (seed included).

    Independent child streams per purpose (signature / row choice / background
    / noise) keep each piece reproducible on its own; planted_signature()
    reuses the signature stream.
    """
    sig = planted_signature(cfg)
    rows_rng = np.random.default_rng([cfg.seed, 2])
    bg_rng = np.random.default_rng([cfg.seed, 3])
    noise_rng = np.random.default_rng([cfg.seed, 4])

    n_anoms = anomaly_count(cfg)
    anomaly_rows = np.sort(rows_rng.choice(cfg.n_rows, size=n_anoms, replace=False))

    dense = (bg_rng.random((cfg.n_rows, cfg.n_cols)) < cfg.normal_density).astype(np.uint8)
    dense[np.ix_(anomaly_rows, sig)] = 1
    flips = (noise_rng.random((n_anoms, cfg.n_cols)) < cfg.noise_flip_prob).astype(np.uint8)
    dense[anomaly_rows] ^= flips

    matrix = BinaryMatrix.from_dense(dense)
    truth = GroundTruth(frozenset(int(i) for i in anomaly_rows), cfg.n_rows)
    return matrix, truth


# ---------------------------------------------------------------------------
# IO


def load_csv(path: str, has_header: bool = False) -> BinaryMatrix:
    """Read a comma-separated 0/1 matrix (UTF-8, LF or CRLF).

    With has_header the first row supplies feature names. Any cell that is
    not 0 or 1 raises ParseError naming the offending 1-based line/column;
    ragged rows raise DimensionError.
    """
    import csv

    feature_names: list[str] | None = None
    rows: list[list[int]] = []
    n_cols = -1
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for line_no, cells in enumerate(reader, start=1):
            if not cells or (len(cells) == 1 and cells[0].strip() == ""):
                continue
            if line_no == 1 and has_header:
                feature_names = [c.strip() for c in cells]
                n_cols = len(feature_names)
                continue
            if n_cols == -1:
                n_cols = len(cells)
            elif len(cells) != n_cols:
                raise DimensionError(
                    f"{path}: line {line_no} has {len(cells)} cells, expected {n_cols}"
                )
            row = []
            for col_no, cell in enumerate(cells, start=1):
                text = cell.strip()
                if text == "0":
                    row.append(0)
                elif text == "1":
                    row.append(1)
                else:
                    raise ParseError(
                        f"{path}: line {line_no}, column {col_no}: "
                        f"expected 0 or 1, got {cell!r}"
                    )
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return BinaryMatrix.from_dense(np.array(rows, dtype=np.uint8), feature_names)


def save_csv(matrix: BinaryMatrix, path: str) -> None:
    """Write matrix as 0/1 CSV; emits a header row when feature names exist."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if matrix.feature_names is not None:
            writer.writerow(matrix.feature_names)
        for row in matrix.to_dense():
            writer.writerow(row.tolist())


def load_labels(path: str, n_rows: int) -> GroundTruth:
    """Read ground-truth labels in index-list or per-row-flag form.

    Flag form (exactly n_rows lines, all 0/1): line i flags row i.
    Anything else is an index list: one anomalous row id per line.
    Detection is by line count, so an index list must not have exactly
    n_rows lines of 0/1 (write flags in that case).
    """
    values: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise ParseError(f"{path}: line {line_no}: not an integer: {text!r}") from None

    if len(values) == n_rows and all(v in (0, 1) for v in values):
        ids = frozenset(i for i, v in enumerate(values) if v == 1)
    else:
        bad = [v for v in values if not 0 <= v < n_rows]
        if bad:
            raise LabelRangeError(f"{path}: row index out of range [0, {n_rows}): {bad[0]}")
        ids = frozenset(values)
    return GroundTruth(ids, n_rows)


def save_labels(truth: GroundTruth, path: str) -> None:
    """Write ground truth as an index list, one anomalous row id per line.

    Falls back to flag form in the degenerate case where an index list would
    be misread as flags (every row anomalous and total <= 2).
    """
    ids = sorted(truth.anomaly_ids)
    ambiguous = len(ids) == truth.total and all(i in (0, 1) for i in ids)
    with open(path, "w", encoding="utf-8") as fh:
        if ambiguous:
            for i in range(truth.total):
                fh.write("1\n" if i in truth.anomaly_ids else "0\n")
        else:
            for i in ids:
                fh.write(f"{i}\n")
