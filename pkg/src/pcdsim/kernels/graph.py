"""Prepared message-passing structure shared by all decoder backends.

Both decoders in this package — conventional symbol-wise sum-product and the
pair-domain relay decoder — are instances of one algorithm: messages are
probability vectors over K states per edge, the check-node update is a
convolution over a small group of D elements, and the variable-node update
is a componentwise product with a prior correction.  A :class:`DecoderGraph`
freezes everything structural about a (code, cluster-map) combination:

* CSR-style edge lists grouped by check and by symbol,
* the per-edge permutation taking a local state to the group element it
  contributes to the check sum (this carries the matrix entry values),
* the lift/projection tables between cluster states (K) and group states (D),
* prior-correction powers per symbol,
* allowed-state masks per iteration-map class for the stop test.

For the symbol-wise decoder D = K = q and the lift is the identity; for the
pair-domain decoder D = q^2 states cover all (c_a, c_b) symbol pairs and K
counts the clusters of the iteration map.  The stop test requires the
broadcast word to be the merge of the iteration-domain argmax word, and asks
per check whether any assignment of pairs consistent with that fine word sums
to the group identity — which for the identity lift reduces to the ordinary
zero-syndrome test.  Fine-level consistency is deliberate: coarse maps
without group structure admit single-symbol errors inside every check's
allowed set, so a coarse-only test stops too early.
"""

from __future__ import annotations

import numpy as np

__all__ = ["DecoderGraph", "build_bp_graph", "build_pcd_graph"]


class DecoderGraph:
    """Immutable decoder structure; build via the module-level helpers."""

    def __init__(
        self,
        n,
        m,
        edge_sym,
        chk_edges,
        chk_deg,
        d,
        k,
        k_hard,
        perm,
        map_tab,
        merge_tab,
        priors,
        col_weights,
    ):
        self.n, self.m = int(n), int(m)
        self.e = len(edge_sym)
        self.d, self.k, self.k_hard = int(d), int(k), int(k_hard)
        self.edge_sym = np.asarray(edge_sym, dtype=np.int32)
        self.perm = np.asarray(perm, dtype=np.int32)
        self.map_tab = np.asarray(map_tab, dtype=np.int32)
        self.merge_tab = np.asarray(merge_tab, dtype=np.int32)
        self.priors = np.asarray(priors, dtype=np.float64)

        sizes = np.bincount(self.map_tab, minlength=self.k).astype(np.float64)
        self.inv_csize = 1.0 / sizes
        self.allowed = np.zeros((self.k, self.d), dtype=np.uint8)
        for c in range(self.k):
            self.allowed[c] = self.map_tab == c

        o = np.asarray(col_weights, dtype=np.float64)
        with np.errstate(divide="ignore"):
            logp = np.log(self.priors)
        self.prior_pow1 = np.exp(-np.outer(o - 1.0, logp))
        self.prior_pow0 = np.exp(-np.outer(o, logp))

        # grouping by check, and degree groups for vectorized batch updates
        self.chk_deg = np.asarray(chk_deg, dtype=np.int32)
        self.chk_ptr = np.concatenate([[0], np.cumsum(self.chk_deg)]).astype(np.int32)
        self.chk_edges = np.asarray(chk_edges, dtype=np.int32)
        order = np.argsort(self.edge_sym, kind="stable")
        self.sym_edges = order.astype(np.int32)
        self.sym_deg = np.bincount(self.edge_sym, minlength=self.n).astype(np.int32)
        self.sym_ptr = np.concatenate([[0], np.cumsum(self.sym_deg)]).astype(np.int32)

        self.chk_groups = _degree_groups(self.chk_ptr, self.chk_edges, self.chk_deg)
        self.sym_groups = _degree_groups(self.sym_ptr, self.sym_edges, self.sym_deg)
        d_idx = np.arange(self.d)
        self.xor_idx = (d_idx[:, None] ^ d_idx[None, :]).astype(np.int32)
        for arr in (
            self.edge_sym, self.perm, self.map_tab, self.merge_tab, self.priors,
            self.inv_csize, self.allowed, self.prior_pow1, self.prior_pow0,
            self.chk_deg, self.chk_ptr, self.chk_edges, self.sym_edges,
            self.sym_deg, self.sym_ptr, self.xor_idx,
        ):
            arr.setflags(write=False)


def _degree_groups(ptr, edges, deg):
    """Group nodes by degree: list of (degree, node ids, edge-id matrix)."""
    groups = []
    for d in sorted(set(int(x) for x in deg)):
        if d == 0:
            continue
        nodes = np.flatnonzero(deg == d)
        mat = np.empty((nodes.size, d), dtype=np.int32)
        for i, node in enumerate(nodes):
            mat[i] = edges[ptr[node]: ptr[node] + d]
        groups.append((d, nodes.astype(np.int32), mat))
    return groups


def _edges_of(h):
    """Row-major edge enumeration of a ParityCheckMatrix-like object."""
    edge_sym, edge_val, chk_deg = [], [], []
    for i in range(h.m):
        cols, vals = h.row_cols[i], h.row_vals[i]
        chk_deg.append(len(cols))
        edge_sym.extend(int(c) for c in cols)
        edge_val.extend(int(v) for v in vals)
    return np.array(edge_sym), np.array(edge_val), np.array(chk_deg)


def build_bp_graph(h) -> DecoderGraph:
    """Graph for conventional GF(q) sum-product decoding of one code."""
    q = h.field.q
    edge_sym, edge_val, chk_deg = _edges_of(h)
    # state contributed to the check sum: entry-value times the symbol
    perm = h.field.mul_table[edge_val][:, np.arange(q)]
    return DecoderGraph(
        n=h.n,
        m=h.m,
        edge_sym=edge_sym,
        chk_edges=np.arange(edge_sym.size),
        chk_deg=chk_deg,
        d=q,
        k=q,
        k_hard=q,
        perm=perm,
        map_tab=np.arange(q),
        merge_tab=np.arange(q),
        priors=np.full(q, 1.0 / q),
        col_weights=np.ones(h.n),  # exponent zero: no prior correction
    )


def build_pcd_graph(h_a, h_b, ms, mh) -> DecoderGraph:
    """Graph for pair-domain relay decoding over two same-pattern codes.

    Parameters
    ----------
    h_a, h_b : ParityCheckMatrix
        The two source codes; they must share size and sparsity pattern.
    ms : ClusterMap
        Iteration (soft) map defining the K message states.
    mh : ClusterMap
        Hard-decision map; must be refined by ``ms``.  Defines the broadcast
        classes and the stop test.
    """
    if (h_a.m, h_a.n) != (h_b.m, h_b.n) or h_a.field != h_b.field:
        raise ValueError("source codes must share size and field")
    q = h_a.field.q
    if ms.q != q:
        raise ValueError(f"cluster map is over Z_{ms.q}, code symbols over Z_{q}")
    edge_sym, val_a, chk_deg = _edges_of(h_a)
    edge_sym_b, val_b, chk_deg_b = _edges_of(h_b)
    if not (np.array_equal(edge_sym, edge_sym_b) and np.array_equal(chk_deg, chk_deg_b)):
        raise ValueError("source codes must share the sparsity pattern")

    d = q * q
    pair_a, pair_b = np.divmod(np.arange(d), q)
    # pair (a, b) contributes group element (val_a * a, val_b * b)
    perm = (
        h_a.field.mul_table[val_a[:, None], pair_a[None, :]] * q
        + h_a.field.mul_table[val_b[:, None], pair_b[None, :]]
    )
    col_weights = np.bincount(edge_sym, minlength=h_a.n)
    return DecoderGraph(
        n=h_a.n,
        m=h_a.m,
        edge_sym=edge_sym,
        chk_edges=np.arange(edge_sym.size),
        chk_deg=chk_deg,
        d=d,
        k=ms.q_prime,
        k_hard=mh.q_prime,
        perm=perm,
        map_tab=ms.table,
        merge_tab=ms.merge_into(mh),
        priors=ms.priors,
        col_weights=col_weights,
    )
