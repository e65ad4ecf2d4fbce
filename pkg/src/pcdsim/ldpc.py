"""Sparse parity-check codes over GF(q): file I/O, encoding, decoding.

A :class:`ParityCheckMatrix` stores the sparse M x N check matrix over a
binary-extension field together with the derived row/column adjacency used
by all message-passing decoders.  Matrices are interchanged in the plain-text
``alist`` sparse format; a q-ary variant (field order as a third header
token, adjacency entries as index/value pairs) covers lifted codes.

Encoding is systematic via Gaussian elimination with leftmost-viable column
pivoting, so the pivot choice (and therefore the information positions) is
reproducible.  ``bp_decode`` is a flooding-schedule sum-product decoder in
the probability domain; the check-node update is a direct convolution over
GF(q) (q is small here, so no transform is needed).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .gf import GfField, gf_mul

__all__ = [
    "ParityCheckMatrix",
    "parse_alist",
    "serialize_alist",
    "lift_to_gfq",
    "encode",
    "syndrome",
    "bp_decode",
]


class ParityCheckMatrix:
    """An M x N sparse parity-check matrix over GF(q).

    Parameters
    ----------
    m, n : int
        Row (check) and column (symbol) counts.
    entries : iterable of (row, col, value)
        Nonzero entries; values in [1, q).
    field : GfField

    Attributes
    ----------
    row_cols, row_vals : list of ndarray
        Per-check nonzero column indices (sorted) and entry values.
    col_rows, col_vals : list of ndarray
        Per-symbol nonzero row indices (sorted) and entry values.
    """

    def __init__(self, m: int, n: int, entries, field: GfField):
        self.m = int(m)
        self.n = int(n)
        self.field = field
        seen = set()
        per_row = [[] for _ in range(self.m)]
        per_col = [[] for _ in range(self.n)]
        for r, c, v in entries:
            r, c, v = int(r), int(c), int(v)
            if not (0 <= r < self.m and 0 <= c < self.n):
                raise ValueError(f"entry index ({r},{c}) out of range")
            if not (1 <= v < field.q):
                raise ValueError(f"entry value {v} invalid for GF({field.q})")
            if (r, c) in seen:
                raise ValueError(f"duplicate entry at ({r},{c})")
            seen.add((r, c))
            per_row[r].append((c, v))
            per_col[c].append((r, v))
        self.row_cols, self.row_vals = [], []
        for lst in per_row:
            lst.sort()
            self.row_cols.append(np.array([c for c, _ in lst], dtype=np.int64))
            self.row_vals.append(np.array([v for _, v in lst], dtype=np.int64))
        self.col_rows, self.col_vals = [], []
        for lst in per_col:
            lst.sort()
            self.col_rows.append(np.array([r for r, _ in lst], dtype=np.int64))
            self.col_vals.append(np.array([v for _, v in lst], dtype=np.int64))
        self._encoder = None
        self._bp_graph = None

    # -- shape queries -------------------------------------------------------
    @property
    def row_weights(self) -> np.ndarray:
        return np.array([c.size for c in self.row_cols])

    @property
    def col_weights(self) -> np.ndarray:
        return np.array([r.size for r in self.col_rows])

    @property
    def rate(self) -> float:
        """Design rate (N - M) / N."""
        return (self.n - self.m) / self.n

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n), dtype=np.int64)
        for r in range(self.m):
            out[r, self.row_cols[r]] = self.row_vals[r]
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ParityCheckMatrix)
            and (self.m, self.n) == (other.m, other.n)
            and self.field == other.field
            and all(np.array_equal(a, b) for a, b in zip(self.row_cols, other.row_cols))
            and all(np.array_equal(a, b) for a, b in zip(self.row_vals, other.row_vals))
        )

    def __repr__(self) -> str:  # pragma: no cover
        return f"ParityCheckMatrix({self.m}x{self.n}, GF({self.field.q}))"


# ----------------------------------------------------------------------------
# alist interchange


def parse_alist(text) -> ParityCheckMatrix:
    """Parse an alist-format matrix (binary, or the q-ary index/value variant).

    The layout is: header line ``N M`` (q-ary: ``N M q``), a line with the
    maximum column/row weights, the per-column weights, the per-row weights,
    then one adjacency line per column and one per row with 1-indexed
    positions (q-ary: position/value pairs).  Zero padding up to the maximum
    weight is tolerated.

    Raises
    ------
    ValueError
        On malformed headers or inconsistent column/row adjacency.
    """
    if hasattr(text, "read"):
        text = text.read()
    lines = [ln for ln in str(text).splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty alist stream")

    def ints(line):
        try:
            return [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ValueError(f"malformed alist line: {line!r}") from exc

    header = ints(lines[0])
    if len(header) == 2:
        n, m, q = header[0], header[1], 2
    elif len(header) == 3:
        n, m, q = header
    else:
        raise ValueError(f"malformed alist header: {lines[0]!r}")
    if n <= 0 or m <= 0:
        raise ValueError(f"non-positive alist dimensions {n}x{m}")
    field = GfField(q)
    qary = q > 2
    if len(lines) < 4 + n + m:
        raise ValueError("alist stream truncated")
    col_w = ints(lines[2])
    row_w = ints(lines[3])
    if len(col_w) != n or len(row_w) != m:
        raise ValueError("alist weight lists do not match the header dimensions")

    def adjacency(line, weight, limit, what):
        toks = ints(line)
        step = 2 if qary else 1
        body, pad = toks[: weight * step], toks[weight * step:]
        if len(body) < weight * step or any(t != 0 for t in pad):
            raise ValueError(f"alist {what} adjacency does not match its weight")
        out = []
        for i in range(weight):
            pos = body[i * step]
            val = body[i * step + 1] if qary else 1
            if not (1 <= pos <= limit):
                raise ValueError(f"alist {what} index {pos} out of range")
            out.append((pos - 1, val))
        return out

    col_adj = [adjacency(lines[4 + j], col_w[j], m, "column") for j in range(n)]
    row_adj = [adjacency(lines[4 + n + i], row_w[i], n, "row") for i in range(m)]

    entries = {}
    for j, adj in enumerate(col_adj):
        for r, v in adj:
            entries[(r, j)] = v
    cross = {}
    for i, adj in enumerate(row_adj):
        for c, v in adj:
            cross[(i, c)] = v
    if entries != cross:
        raise ValueError("alist column and row adjacency lists are inconsistent")
    return ParityCheckMatrix(m, n, [(r, c, v) for (r, c), v in entries.items()], field)


def serialize_alist(h: ParityCheckMatrix) -> str:
    """Serialize to alist text (q-ary variant automatically for q > 2)."""
    qary = h.field.q > 2
    out = io.StringIO()
    if qary:
        out.write(f"{h.n} {h.m} {h.field.q}\n")
    else:
        out.write(f"{h.n} {h.m}\n")
    out.write(f"{int(h.col_weights.max())} {int(h.row_weights.max())}\n")
    out.write(" ".join(str(int(w)) for w in h.col_weights) + "\n")
    out.write(" ".join(str(int(w)) for w in h.row_weights) + "\n")

    def emit(idx, vals):
        toks = []
        for p, v in zip(idx, vals):
            toks.append(str(int(p) + 1))
            if qary:
                toks.append(str(int(v)))
        # zero-weight nodes keep their line present via a pad token
        out.write((" ".join(toks) or "0") + "\n")

    for j in range(h.n):
        emit(h.col_rows[j], h.col_vals[j])
    for i in range(h.m):
        emit(h.row_cols[i], h.row_vals[i])
    return out.getvalue()


def lift_to_gfq(h: ParityCheckMatrix, eta: int, f: GfField) -> ParityCheckMatrix:
    """Lift a binary matrix to GF(q) by replacing every 1 with ``eta``.

    The sparsity pattern is preserved exactly; ``eta`` must be nonzero.
    """
    if h.field.q != 2:
        raise ValueError("lifting starts from a binary matrix")
    if not (1 <= eta < f.q):
        raise ValueError(f"lift value {eta} invalid for GF({f.q})")
    entries = [
        (i, int(c), eta) for i in range(h.m) for c in h.row_cols[i]
    ]
    return ParityCheckMatrix(h.m, h.n, entries, f)


# ----------------------------------------------------------------------------
# systematic encoding


@dataclass
class _Encoder:
    rank: int
    pivot_cols: np.ndarray   # (rank,)
    info_cols: np.ndarray    # (n - rank,)
    solve: np.ndarray        # (rank, n - rank): pivot values from info values


def _build_encoder(h: ParityCheckMatrix) -> _Encoder:
    f = h.field
    a = h.to_dense().copy()
    m, n = a.shape
    pivot_cols, pivot_rows = [], []
    row = 0
    for col in range(n):
        if row >= m:
            break
        hit = -1
        for r in range(row, m):
            if a[r, col] != 0:
                hit = r
                break
        if hit < 0:
            continue
        a[[row, hit]] = a[[hit, row]]
        inv = f.inv_table[a[row, col]]
        a[row] = f.mul_table[inv, a[row]]
        for r in range(m):
            if r != row and a[r, col] != 0:
                a[r] ^= f.mul_table[a[r, col], a[row]]
        pivot_cols.append(col)
        pivot_rows.append(row)
        row += 1
    rank = row
    pivot_cols = np.array(pivot_cols, dtype=np.int64)
    info_cols = np.setdiff1d(np.arange(n), pivot_cols)
    solve = a[np.ix_(np.arange(rank), info_cols)]
    return _Encoder(rank=rank, pivot_cols=pivot_cols, info_cols=info_cols, solve=solve)


def encoder_info_length(h: ParityCheckMatrix) -> int:
    """Number of information symbols: N minus the effective rank."""
    if h._encoder is None:
        h._encoder = _build_encoder(h)
    return h.n - h._encoder.rank


def encode(h: ParityCheckMatrix, info) -> np.ndarray:
    """Systematically encode an information word.

    Information symbols occupy the non-pivot columns verbatim; pivot-column
    symbols are solved from the reduced checks.  The expected information
    length is ``N - rank``; for a full-row-rank matrix that is ``N - M``.

    Raises
    ------
    ValueError
        On a length mismatch.  The message reports the effective rank, which
        differs from M for rank-deficient matrices.
    """
    if h._encoder is None:
        h._encoder = _build_encoder(h)
    enc = h._encoder
    info = np.asarray(info, dtype=np.int64)
    k = h.n - enc.rank
    if info.shape != (k,):
        raise ValueError(
            f"information length must be N - rank = {h.n} - {enc.rank} = {k} "
            f"(effective rank {enc.rank} of {h.m} rows), got {info.shape}"
        )
    h.field.check_range(info)
    word = np.zeros(h.n, dtype=np.int64)
    word[enc.info_cols] = info
    if enc.rank:
        # pivot_i = sum_j solve[i, j] * info[j] over GF(q)
        prods = h.field.mul_table[enc.solve, info[None, :]]
        word[enc.pivot_cols] = np.bitwise_xor.reduce(prods, axis=1)
    return word


def syndrome(h: ParityCheckMatrix, c) -> np.ndarray:
    """Per-check GF(q) syndrome; all-zero iff ``c`` is a codeword."""
    c = np.asarray(c, dtype=np.int64)
    if c.shape != (h.n,):
        raise ValueError(f"codeword length {c.shape} does not match N={h.n}")
    h.field.check_range(c)
    out = np.zeros(h.m, dtype=np.int64)
    for i in range(h.m):
        prods = gf_mul(c[h.row_cols[i]], h.row_vals[i], h.field)
        out[i] = np.bitwise_xor.reduce(prods) if prods.size else 0
    return out


# ----------------------------------------------------------------------------
# belief-propagation decoding


def bp_decode(h: ParityCheckMatrix, priors, max_iter: int, backend: str = "auto"):
    """Flooding sum-product decoding from per-symbol prior probabilities.

    Parameters
    ----------
    h : ParityCheckMatrix
    priors : ndarray, shape (N, q)
        Normalized per-symbol probabilities.
    max_iter : int
        Iteration cap; the zero-syndrome stop check runs every iteration
        (including on the initial hard decision).
    backend : str
        ``auto`` picks the compiled kernel when available; ``numpy`` or
        ``cython`` force a choice.

    Returns
    -------
    (codeword, converged, iterations)
        Best hard decision, whether it satisfies all checks, and the number
        of iterations actually run.  Non-convergence is a flagged result,
        not an error.
    """
    from . import kernels

    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (h.n, h.field.q):
        raise ValueError(f"priors must have shape (N, q) = ({h.n}, {h.field.q})")
    if h._bp_graph is None:
        h._bp_graph = kernels.build_bp_graph(h)
    hard, converged, iters, _, _ = kernels.decode(
        h._bp_graph, priors, int(max_iter), backend=backend
    )
    return hard, converged, iters
