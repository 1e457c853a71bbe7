"""Integer CDF tables: the contract between entropy models and the range coder.

Tables quantize a probability vector to cumulative counts with total 2^16,
every symbol getting at least one count.  When an escape slot is requested it
sits at the last index and absorbs all leftover mass; out-of-alphabet symbols
are coded as escape + an Exp-Golomb bypass of the zigzagged value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

CDF_TOTAL = 1 << 16
MAX_ALPHABET = 4096
# Per-side tail mass outside a table's alphabet; total truncated mass < 2^-16.
TAIL_MASS = 2.0 ** -17


@dataclass(frozen=True)
class CdfTable:
    """Quantized cumulative counts over [offset, offset + n_data - 1] (+ escape)."""

    offset: int
    cum: tuple
    escape_index: int | None
    cum_array: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "cum_array", np.asarray(self.cum, dtype=np.int64))

    @property
    def num_symbols(self):
        return len(self.cum) - 1

    @property
    def num_data_symbols(self):
        n = self.num_symbols
        return n - 1 if self.escape_index is not None else n

    def count(self, index):
        return self.cum[index + 1] - self.cum[index]

    def index_for(self, value):
        """Table index for an integer symbol value, or the escape index."""
        idx = value - self.offset
        if 0 <= idx < self.num_data_symbols:
            return idx
        if self.escape_index is None:
            raise ValueError(f"symbol {value} outside alphabet and table has no escape")
        return self.escape_index

    def value_for(self, index):
        if self.escape_index is not None and index == self.escape_index:
            raise ValueError("escape index has no symbol value")
        return self.offset + index


def build_cdf_table(probabilities, offset=0, include_escape=True):
    """Quantize a probability vector to integer counts totalling 2^16.

    Largest-remainder rounding over a budget of 2^16 - n, then +1 per symbol,
    guarantees every count >= 1.  Ties in the remainders break toward lower
    indices.  With an escape slot, leftover mass (1 - sum p) goes to it; without
    one, the probabilities are normalized.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probabilities must be a non-empty 1-D vector")
    if (p < 0).any():
        raise ValueError("probabilities must be nonnegative")
    total_p = float(p.sum())
    if total_p > 1.0 + 1e-9:
        raise ValueError(f"probabilities sum to {total_p} > 1")
    if include_escape:
        q = np.append(p, max(0.0, 1.0 - total_p))
    else:
        if total_p <= 0:
            raise ValueError("all-zero probabilities need an escape slot")
        q = p / total_p
    n = q.size
    if n > MAX_ALPHABET:
        raise ValueError(f"alphabet size {n} exceeds {MAX_ALPHABET}")

    budget = CDF_TOTAL - n
    raw = q / q.sum() * budget
    counts = np.floor(raw).astype(np.int64)
    deficit = budget - int(counts.sum())
    if deficit:
        order = np.lexsort((np.arange(n), -(raw - counts)))
        counts[order[:deficit]] += 1
    counts += 1

    cum = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=cum[1:])
    return CdfTable(
        offset=int(offset),
        cum=tuple(int(v) for v in cum),
        escape_index=n - 1 if include_escape else None,
    )


# ---------------------------------------------------------------------------
# scale table for the conditional Gaussian
# ---------------------------------------------------------------------------

SCALE_MIN = 0.11
SCALE_MAX = 256.0
NUM_SCALE_LEVELS = 64


def scale_levels():
    levels = np.exp(np.linspace(np.log(SCALE_MIN), np.log(SCALE_MAX), NUM_SCALE_LEVELS))
    levels[0] = SCALE_MIN
    levels[-1] = SCALE_MAX
    return levels


def gaussian_symbol_probability(symbols, sigma):
    """Coding-time pmf of integer symbols s under N(0, sigma^2) integrated
    over (s - 1/2, s + 1/2].

    Evaluated through |s| so both CDF arguments stay on the accurate left
    tail of the normal CDF.
    """
    s = np.abs(np.asarray(symbols, dtype=np.float64))
    sd = np.asarray(sigma, dtype=np.float64)
    return ndtr((0.5 - s) / sd) - ndtr((-0.5 - s) / sd)


def _half_width(sigma):
    z = -ndtri(TAIL_MASS)
    m = int(np.ceil(sigma * z - 0.5))
    m = max(m, 0)
    # ndtri round-off guard: grow until the actual tail is under budget.
    while 2.0 * ndtr(-(m + 0.5) / sigma) >= 2.0 * TAIL_MASS:
        m += 1
    return m


class ScaleTable:
    """64 log-spaced sigma levels on [0.11, 256] with precomputed CdfTables.

    Runtime sigmas map to the smallest level >= clamp(sigma); tables are
    symmetric around symbol 0 with an escape slot for outliers.
    """

    def __init__(self):
        self.levels = scale_levels()
        self.tables = []
        for sigma in self.levels:
            m = _half_width(sigma)
            symbols = np.arange(-m, m + 1)
            pmf = gaussian_symbol_probability(symbols, sigma)
            self.tables.append(build_cdf_table(pmf, offset=-m, include_escape=True))

    def level_for(self, sigma):
        """Smallest level index whose sigma is >= clamp(sigma, 0.11, 256)."""
        s = np.clip(np.asarray(sigma, dtype=np.float64), self.levels[0], self.levels[-1])
        return np.searchsorted(self.levels, s, side="left")


def scale_to_level(sigma, table=None):
    if table is None:
        table = _default_scale_levels()
    s = np.clip(np.asarray(sigma, dtype=np.float64), table[0], table[-1])
    return np.searchsorted(table, s, side="left")


_LEVELS_CACHE = None


def _default_scale_levels():
    global _LEVELS_CACHE
    if _LEVELS_CACHE is None:
        _LEVELS_CACHE = scale_levels()
    return _LEVELS_CACHE
