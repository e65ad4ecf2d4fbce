"""Check-relation tables linking a pair of parity rows to a cluster map.

When two sources protect their words with codes sharing one sparsity
pattern, each check row imposes two simultaneous parity equations on the
symbol pairs at its nonzero positions.  Projecting the solution set of
those equations through a pair-to-cluster map yields a table that plays
the role a parity check plays for a single code:

* the *encoder* view lists, for every tuple of cluster values at all but
  the last position, the distribution of the cluster value forced at the
  last position (the generation probability);
* the *decoder* view reverse-indexes the same solution set: for every
  target position and target value it lists the consistent tuples over
  the remaining positions together with a weighted factor — the count of
  underlying pair assignments normalized by the remaining clusters'
  sizes — which is exactly the coefficient the message-passing check
  update needs.

Both views are thin projections of one shared enumeration (the *core*),
memoized by coefficient values and map so that a regular code with equal
coefficients on every row builds a single core for the whole matrix.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .gf import GfField
from .ldpc import ParityCheckMatrix
from .mapping import ClusterMap

__all__ = [
    "EncoderRow",
    "EncoderTab",
    "DecoderRow",
    "DecoderTab",
    "ComplexityReport",
    "McoResult",
    "build_encoder_tab",
    "build_decoder_tab",
    "build_tabs_for_code",
    "complexity_report",
    "mco",
    "tab_to_json",
]

# hard ceilings: dense tuple space and pair-assignment enumeration
_MAX_TUPLE_SPACE = 10_000_000
_MAX_ENUMERATION = 1 << 24
# keep explicit backing assignments only for small tables
_MAX_BACKING = 4096


# ----------------------------------------------------------------------------
# shared enumeration core


class _TabCore:
    """Solution-set enumeration for one (coefficients, map) combination.

    ``codes`` are the distinct cluster tuples encoded base ``q_prime``
    (first position = most significant digit) and ``counts`` the number
    of underlying symbol-pair assignments producing each tuple.
    """

    def __init__(self, coeffs_a, coeffs_b, mapping: ClusterMap):
        self.coeffs_a = tuple(int(v) for v in coeffs_a)
        self.coeffs_b = tuple(int(v) for v in coeffs_b)
        self.mapping = mapping
        self.r = len(self.coeffs_a)
        self.q = mapping.q
        self.q_prime = mapping.q_prime
        f = GfField(self.q)
        for v in self.coeffs_a + self.coeffs_b:
            if not (1 <= v < self.q):
                raise ValueError(f"row coefficient {v} invalid for GF({self.q})")
        if self.r < 2:
            raise ValueError("a check row needs at least two nonzero positions")
        if self.q_prime**self.r > _MAX_TUPLE_SPACE:
            raise ValueError(
                f"tuple space {self.q_prime}^{self.r} exceeds the size guard"
            )
        q2 = self.q * self.q
        n_assign = q2 ** (self.r - 1)
        if n_assign > _MAX_ENUMERATION:
            raise ValueError(
                f"pair-assignment enumeration {q2}^{self.r - 1} exceeds the size guard"
            )

        idx = np.arange(n_assign, dtype=np.int64)
        mul, inv = f.mul_table, f.inv_table
        # free symbol pairs at all positions but the last
        sym_a = np.empty((self.r, n_assign), dtype=np.int64)
        sym_b = np.empty((self.r, n_assign), dtype=np.int64)
        for j in range(self.r - 1):
            pair = (idx // q2**j) % q2
            sym_a[j] = pair // self.q
            sym_b[j] = pair % self.q
        # the last position solves both parity equations
        acc_a = np.zeros(n_assign, dtype=np.int64)
        acc_b = np.zeros(n_assign, dtype=np.int64)
        for j in range(self.r - 1):
            acc_a ^= mul[self.coeffs_a[j], sym_a[j]]
            acc_b ^= mul[self.coeffs_b[j], sym_b[j]]
        sym_a[-1] = mul[int(inv[self.coeffs_a[-1]]), acc_a]
        sym_b[-1] = mul[int(inv[self.coeffs_b[-1]]), acc_b]

        clusters = mapping.table[self.q * sym_a + sym_b]  # (r, n_assign)
        full = np.zeros(n_assign, dtype=np.int64)
        for j in range(self.r):
            full = full * self.q_prime + clusters[j]
        counts = np.bincount(full, minlength=self.q_prime**self.r)
        self.codes = np.flatnonzero(counts)
        self.counts = counts[self.codes]

        self.backings = None
        if n_assign <= _MAX_BACKING:
            backings = {}
            for i in range(n_assign):
                assign = tuple(
                    (int(sym_a[j, i]), int(sym_b[j, i])) for j in range(self.r)
                )
                backings.setdefault(int(full[i]), []).append(assign)
            self.backings = {c: tuple(v) for c, v in backings.items()}

    def digits(self) -> np.ndarray:
        """Cluster tuples as an array of digits, shape (rows, r)."""
        out = np.empty((self.codes.size, self.r), dtype=np.int64)
        rem = self.codes.copy()
        for j in range(self.r - 1, -1, -1):
            out[:, j] = rem % self.q_prime
            rem //= self.q_prime
        return out


_CORE_CACHE: dict = {}
_CORE_LOCK = threading.Lock()


def _core_for(coeffs_a, coeffs_b, mapping: ClusterMap) -> _TabCore:
    key = (tuple(int(v) for v in coeffs_a), tuple(int(v) for v in coeffs_b), mapping)
    with _CORE_LOCK:
        core = _CORE_CACHE.get(key)
    if core is None:
        core = _TabCore(coeffs_a, coeffs_b, mapping)
        with _CORE_LOCK:
            _CORE_CACHE.setdefault(key, core)
            core = _CORE_CACHE[key]
    return core


def _split_row(row):
    """Accept a dict {position: value} or an iterable of (position, value)."""
    items = sorted(row.items()) if hasattr(row, "items") else sorted(row)
    positions = tuple(int(p) for p, _ in items)
    values = tuple(int(v) for _, v in items)
    if len(set(positions)) != len(positions):
        raise ValueError("duplicate positions in a check row")
    return positions, values


# ----------------------------------------------------------------------------
# encoder view


@dataclass(frozen=True)
class EncoderRow:
    """One reachable cluster tuple with its generation probability."""

    values: tuple
    probability: float
    backing_count: int


class EncoderTab:
    """Forward table: known cluster tuple -> distribution of the last value."""

    def __init__(self, row_index: int, positions, core: _TabCore):
        self.row_index = int(row_index)
        self.positions = tuple(int(p) for p in positions)
        if len(self.positions) != core.r:
            raise ValueError("position count does not match the coefficient count")
        self._core = core
        sizes = core.mapping.cluster_sizes
        digits = core.digits()
        known_mass = sizes[digits[:, :-1]].prod(axis=1)
        rows = []
        for tup, cnt, mass in zip(digits, core.counts, known_mass):
            rows.append(
                EncoderRow(
                    values=tuple(int(v) for v in tup),
                    probability=float(cnt / mass),
                    backing_count=int(cnt),
                )
            )
        rows.sort(key=lambda e: e.values)
        self.rows = tuple(rows)

    @property
    def mapping(self) -> ClusterMap:
        return self._core.mapping

    @property
    def coeffs_a(self) -> tuple:
        return self._core.coeffs_a

    @property
    def coeffs_b(self) -> tuple:
        return self._core.coeffs_b

    @property
    def q_prime(self) -> int:
        return self._core.q_prime

    def known_tuples(self):
        """Distinct tuples over all positions but the last, sorted."""
        return sorted({row.values[:-1] for row in self.rows})

    def distribution(self, known) -> dict:
        """Generation distribution of the last position for a known tuple."""
        known = tuple(int(v) for v in known)
        out = {
            row.values[-1]: row.probability
            for row in self.rows
            if row.values[:-1] == known
        }
        if not out:
            raise KeyError(f"unknown tuple {known}")
        return out

    def backings(self, values):
        """Underlying symbol-pair assignments for one tuple (small tables only)."""
        if self._core.backings is None:
            return None
        code = 0
        for v in values:
            code = code * self.q_prime + int(v)
        return self._core.backings.get(code, ())

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"EncoderTab(row={self.row_index}, positions={self.positions}, "
            f"rows={len(self.rows)})"
        )


def build_encoder_tab(row_a, row_b, m: ClusterMap, row_index: int = 0) -> EncoderTab:
    """Build the forward table for one correlative row pair.

    ``row_a`` and ``row_b`` give the two codes' nonzero entries at the
    same positions, as mappings ``{position: coefficient}`` or iterables
    of ``(position, coefficient)`` pairs.
    """
    pos_a, val_a = _split_row(row_a)
    pos_b, val_b = _split_row(row_b)
    if pos_a != pos_b:
        raise ValueError(
            f"correlative rows have inconsistent position sets {pos_a} vs {pos_b}"
        )
    return EncoderTab(row_index, pos_a, _core_for(val_a, val_b, m))


# ----------------------------------------------------------------------------
# decoder view


@dataclass(frozen=True)
class DecoderRow:
    """Values over the remaining positions and their weighted factor."""

    values: tuple
    f_w: float


class DecoderTab:
    """Reverse index: (target position, target value) -> weighted rows."""

    def __init__(self, e: EncoderTab):
        core = e._core
        self.positions = e.positions
        self.q_prime = core.q_prime
        self.row_count = int(core.codes.size)
        sizes = core.mapping.cluster_sizes
        digits = core.digits()
        size_prod = sizes[digits].prod(axis=1)
        index: dict = {(p, k): [] for p in self.positions for k in range(self.q_prime)}
        for t, pos in enumerate(self.positions):
            rest = [j for j in range(len(self.positions)) if j != t]
            f_w = core.counts / (size_prod // sizes[digits[:, t]])
            for row in range(digits.shape[0]):
                key = (pos, int(digits[row, t]))
                index[key].append(
                    DecoderRow(
                        values=tuple(int(digits[row, j]) for j in rest),
                        f_w=float(f_w[row]),
                    )
                )
        self._index = {
            key: tuple(sorted(rows, key=lambda r: r.values))
            for key, rows in index.items()
        }

    def remaining_positions(self, target_pos: int) -> tuple:
        if target_pos not in self.positions:
            raise KeyError(f"position {target_pos} not in tab {self.positions}")
        return tuple(p for p in self.positions if p != target_pos)

    def rows(self, target_pos: int, k: int):
        key = (int(target_pos), int(k))
        if key not in self._index:
            raise KeyError(f"no target {key} in tab over {self.positions}")
        return self._index[key]

    def __repr__(self) -> str:  # pragma: no cover
        return f"DecoderTab(positions={self.positions}, rows={self.row_count})"


def build_decoder_tab(e: EncoderTab) -> DecoderTab:
    """Reverse-index an encoder table for the message-passing check update."""
    return DecoderTab(e)


def build_tabs_for_code(
    h_a: ParityCheckMatrix, h_b: ParityCheckMatrix, m: ClusterMap
) -> list:
    """Encoder tables for every check row of a correlative matrix pair.

    Rows whose coefficient values agree share one enumeration core, so a
    regular matrix pair with constant coefficients costs a single pass.
    """
    if h_a.field.q != h_b.field.q or h_a.field.q != m.q:
        raise ValueError("matrix pair and cluster map use different field orders")
    if (h_a.m, h_a.n) != (h_b.m, h_b.n):
        raise ValueError("correlative matrices have different shapes")
    tabs = []
    for i in range(h_a.m):
        if not np.array_equal(h_a.row_cols[i], h_b.row_cols[i]):
            raise ValueError(f"row {i} has inconsistent position sets")
        core = _core_for(h_a.row_vals[i], h_b.row_vals[i], m)
        tabs.append(EncoderTab(i, h_a.row_cols[i], core))
    return tabs


# ----------------------------------------------------------------------------
# complexity accounting


@dataclass(frozen=True)
class WeightClass:
    """Table-size accounting for one check-row weight."""

    weight: int
    rows: int
    s_e: int
    s_d_min: int
    s_d_max: int


@dataclass(frozen=True)
class ComplexityReport:
    n_t_bound: int
    per_weight: tuple

    @property
    def s_e(self) -> int:
        if len(self.per_weight) != 1:
            raise ValueError("s_e is scalar only for single-weight matrices")
        return self.per_weight[0].s_e

    @property
    def s_d_range(self) -> tuple:
        if len(self.per_weight) != 1:
            raise ValueError("s_d_range is scalar only for single-weight matrices")
        return (self.per_weight[0].s_d_min, self.per_weight[0].s_d_max)


def complexity_report(h_pair, m: ClusterMap) -> ComplexityReport:
    """Distinct-table bound and per-weight table sizes for a matrix pair.

    ``h_pair`` is a matrix or a pair of matrices sharing one pattern.  The
    number of distinct tables needed is at most, per row weight ``w``,
    ``min(rows_with_weight_w, q^(2(w-1))) * w``; the forward table has
    ``q'^(w-1)`` known tuples and the reverse view between ``q'^(w-1)``
    and ``q'^w`` rows.
    """
    if isinstance(h_pair, tuple):
        h_a, h_b = h_pair
        if (h_a.m, h_a.n) != (h_b.m, h_b.n) or any(
            not np.array_equal(a, b) for a, b in zip(h_a.row_cols, h_b.row_cols)
        ):
            raise ValueError("matrix pair does not share a sparsity pattern")
        h = h_a
    else:
        h = h_pair
    q = h.field.q
    qp = m.q_prime
    weights = h.row_weights
    classes = []
    total = 0
    for w in sorted(set(int(x) for x in weights)):
        rows = int((weights == w).sum())
        total += min(rows, q ** (2 * (w - 1))) * w
        classes.append(
            WeightClass(
                weight=w,
                rows=rows,
                s_e=qp ** (w - 1),
                s_d_min=qp ** (w - 1),
                s_d_max=qp**w,
            )
        )
    return ComplexityReport(n_t_bound=total, per_weight=tuple(classes))


# ----------------------------------------------------------------------------
# coefficient-assignment search


@dataclass(frozen=True)
class McoResult:
    """Outcome of the exhaustive coefficient-assignment sweep."""

    g_max: Fraction
    c_exp: tuple  # of (coeffs_a, coeffs_b) pairs


def _ambiguity(core: _TabCore) -> Fraction:
    """Average number of consistent decoder rows per target value.

    Each reachable tuple contributes one reverse-index row for every
    target position, so the per-position average over target values is
    the tuple count divided by the number of clusters — identical for
    every position; the maximum over positions equals that ratio.
    """
    return Fraction(int(core.codes.size), core.q_prime)


def mco(r_kappa: int, q: int, q_prime: int, mappings) -> McoResult:
    """Exhaustively sweep nonzero row coefficients minimizing tab ambiguity.

    The score of one assignment pair is the worst (largest) ambiguity over
    the map set; the running minimum starts at ``q_prime``.  Assignments
    scoring below the minimum replace the kept collection, equal scores
    append, so every returned assignment achieves the returned score.
    """
    mappings = list(mappings)
    if not mappings:
        raise ValueError("mco needs at least one cluster map")
    if r_kappa < 2:
        raise ValueError("check rows have weight at least 2")
    for m in mappings:
        if m.q != q:
            raise ValueError("all cluster maps must match the stated field order")
    nonzeros = range(1, q)
    sweep = (q - 1) ** (2 * r_kappa)
    if sweep * (q * q) ** (r_kappa - 1) > 100_000_000:
        raise ValueError("assignment sweep exceeds the size guard")
    g_max = Fraction(q_prime)
    kept = []
    for etas in product(nonzeros, repeat=r_kappa):
        for xis in product(nonzeros, repeat=r_kappa):
            score = max(_ambiguity(_core_for(etas, xis, m)) for m in mappings)
            if score < g_max:
                g_max = score
                kept = [(etas, xis)]
            elif score == g_max:
                kept.append((etas, xis))
    return McoResult(g_max=g_max, c_exp=tuple(kept))


# ----------------------------------------------------------------------------
# serialization


def tab_to_json(e: EncoderTab, d: DecoderTab | None = None) -> str:
    """Dump one table (both views) as JSON."""
    if d is None:
        d = build_decoder_tab(e)
    doc = {
        "positions": list(e.positions),
        "encoder_rows": [
            {
                "values": list(row.values),
                "probability": row.probability,
                "backing_count": row.backing_count,
            }
            for row in e.rows
        ],
        "decoder_index": {
            str(pos): {
                str(k): [
                    {"values": list(row.values), "f_w": row.f_w}
                    for row in d.rows(pos, k)
                ]
                for k in range(d.q_prime)
            }
            for pos in d.positions
        },
    }
    return json.dumps(doc, indent=2)
