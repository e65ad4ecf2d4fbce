"""Symbol-pair cluster maps for physical-layer network coding at the relay.

A :class:`ClusterMap` sends a pair of source symbols (c_a, c_b) in Z_q x Z_q
to one broadcast symbol in Z_{q'}, q <= q' <= q^2.  Every usable map must
satisfy the *exclusive law*: fixing either argument, the map is injective in
the other, so a source that knows its own symbol can invert the broadcast
symbol to the partner's symbol.

The relay adapts the map to the instantaneous uplink gains.  Two-stage
operation uses a fine first-stage map (many clusters, for soft iterative
decoding) paired with a coarse second-stage map (few clusters, for the hard
broadcast decision).  This module provides:

* the embedded catalog of 12 first-stage / 6 second-stage map pairs for
  q = 4 with the package's 4-ary constellation labeling,
* the max-splitting / min-merging construction that derives such a pair
  from a traditional one-stage cluster map and the channel geometry,
* minimum-squared-Euclidean-distance (MED) scoring and channel-adaptive
  selection from the catalog,
* JSON export/import of maps for golden-file tests and inspection.

Cluster ids are canonical where noted: clusters are numbered in order of
their smallest contained pair index (q*c_a + c_b), so two maps with the same
partition always compare equal.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, Constellation, pair_points

__all__ = [
    "ClusterMap",
    "DistanceProfile",
    "exclusive_law_check",
    "xor_map",
    "toy_nonlinear_map",
    "toy_decision_map",
    "symbol_med",
    "distance_profile",
    "msmm",
    "CncCatalog",
    "load_catalog",
    "select_mapping",
    "map_to_json",
    "map_from_json",
]


class ClusterMap:
    """A total map from symbol pairs (c_a, c_b) to broadcast symbols.

    Parameters
    ----------
    q : int
        Source alphabet order.
    table : array_like of int, shape (q*q,)
        Output symbol per pair index ``q*c_a + c_b``.  Outputs must cover
        0..q'-1 contiguously.
    kind : str
        One of ``traditional`` (one-stage), ``soft`` (first stage),
        ``hard`` (second stage), ``decision`` (hard-decision output map).
    name : str, optional
        Display label (e.g. a catalog index).
    """

    def __init__(self, q: int, table, kind: str = "traditional", name: str = ""):
        self.q = int(q)
        self.table = np.asarray(table, dtype=np.int64).copy()
        self.table.setflags(write=False)
        if self.table.shape != (self.q * self.q,):
            raise ValueError(
                f"table must have q^2={self.q**2} entries, got {self.table.shape}"
            )
        uniq = np.unique(self.table)
        self.q_prime = int(uniq.size)
        if not np.array_equal(uniq, np.arange(self.q_prime)):
            raise ValueError("cluster ids must be contiguous 0..q'-1")
        if not (self.q <= self.q_prime <= self.q * self.q):
            raise ValueError(
                f"output cardinality {self.q_prime} outside [q, q^2] = "
                f"[{self.q}, {self.q**2}]"
            )
        if kind not in ("traditional", "soft", "hard", "decision"):
            raise ValueError(f"unknown map kind {kind!r}")
        self.kind = kind
        self.name = name or kind

    # -- basic queries ------------------------------------------------------
    def __call__(self, c_a, c_b):
        """Map symbols (vectorized): returns table[q*c_a + c_b]."""
        idx = np.asarray(c_a, dtype=np.int64) * self.q + np.asarray(c_b, dtype=np.int64)
        out = self.table[idx]
        return int(out) if np.isscalar(c_a) and np.isscalar(c_b) else out

    def clusters(self) -> list[np.ndarray]:
        """Pair indices of each cluster, indexed by output symbol."""
        return [np.flatnonzero(self.table == k) for k in range(self.q_prime)]

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.table, minlength=self.q_prime)

    @property
    def priors(self) -> np.ndarray:
        """Generation probabilities p_k of each output under uniform pairs."""
        return self.cluster_sizes / float(self.q * self.q)

    def canonicalized(self) -> "ClusterMap":
        """Relabel clusters by smallest contained pair index."""
        relabel = {}
        out = np.empty_like(self.table)
        for p, v in enumerate(self.table):
            if v not in relabel:
                relabel[v] = len(relabel)
            out[p] = relabel[v]
        return ClusterMap(self.q, out, self.kind, self.name)

    def merge_into(self, coarse: "ClusterMap") -> np.ndarray:
        """Cluster-id map onto a coarser map that this map refines.

        Returns
        -------
        ndarray of shape (q_prime,)
            ``out[k]`` = the coarse cluster containing fine cluster k.

        Raises
        ------
        ValueError
            If some cluster of this map straddles two coarse clusters.
        """
        out = np.full(self.q_prime, -1, dtype=np.int64)
        for k, members in enumerate(self.clusters()):
            targets = np.unique(coarse.table[members])
            if targets.size != 1:
                raise ValueError(
                    f"cluster {k} of {self.name} is not contained in a single "
                    f"cluster of {coarse.name}"
                )
            out[k] = targets[0]
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ClusterMap)
            and self.q == other.q
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self) -> int:
        return hash((self.q, self.table.tobytes()))

    def __repr__(self) -> str:  # pragma: no cover
        return f"ClusterMap({self.name}, q={self.q}, q'={self.q_prime})"


def exclusive_law_check(m: ClusterMap):
    """Check injectivity of the map in each argument.

    Returns
    -------
    (bool, None) if the law holds, else (False, ((a, b), (a2, b2)))
        with the first violating pair of pairs in scan order.
    """
    t = m.table.reshape(m.q, m.q)
    for a in range(m.q):
        for b, b2 in itertools.combinations(range(m.q), 2):
            if t[a, b] == t[a, b2]:
                return False, ((a, b), (a, b2))
            if t[b, a] == t[b2, a]:
                return False, ((b, a), (b2, a))
    return True, None


def xor_map(q: int) -> ClusterMap:
    """The field-addition map: output = c_a + c_b in GF(q), q' = q."""
    a = np.arange(q)
    table = np.bitwise_xor(a[:, None], a[None, :]).ravel()
    return ClusterMap(q, table, kind="traditional", name=f"xor{q}")


def toy_nonlinear_map() -> ClusterMap:
    """The 3-cluster binary example map used throughout the small tests.

    Outputs (0, 1, 2) play the roles (a, b, c): (0,1) -> a, (1,0) -> c and
    the two aligned pairs (0,0), (1,1) -> b.  Matched to gains (1, -1) where
    the three clusters sit at +2, 0, -2.
    """
    return ClusterMap(2, [1, 0, 2, 1], kind="traditional", name="toy-nl")


def toy_decision_map() -> ClusterMap:
    """Hard-decision partner of the toy map: b -> 0 and {a, c} -> 1."""
    return ClusterMap(2, [0, 1, 1, 0], kind="decision", name="toy-nl-decision")


# ----------------------------------------------------------------------------
# Euclidean-distance machinery


@dataclass(frozen=True)
class DistanceProfile:
    """Superimposed pair points and their pairwise squared distances."""

    points: np.ndarray  # (q^2,) complex
    dist2: np.ndarray   # (q^2, q^2) symmetric, zero diagonal


def distance_profile(ch: ChannelState, k: Constellation) -> DistanceProfile:
    if ch.h_ac == 0 and ch.h_bc == 0:
        raise ValueError("degenerate channel: both gains are zero")
    pts = pair_points(ch, k)
    d = np.abs(pts[:, None] - pts[None, :]) ** 2
    return DistanceProfile(points=pts, dist2=d)


def symbol_med(m: ClusterMap, ch: ChannelState, k: Constellation) -> float:
    """Per-symbol minimum squared distance between differently-mapped pairs."""
    prof = distance_profile(ch, k)
    diff = m.table[:, None] != m.table[None, :]
    return float(prof.dist2[diff].min())


# ----------------------------------------------------------------------------
# Max-splitting / min-merging construction


def _min_linkage(prof: DistanceProfile, a, b) -> float:
    return float(np.sqrt(prof.dist2[np.ix_(a, b)].min()))


def msmm(mt: ClusterMap, ch: ChannelState, k: Constellation):
    """Derive a (soft, hard) two-stage pair from a one-stage cluster map.

    Splitting: within each cluster of ``mt``, pairs are regrouped into
    single-linkage connected components at threshold d_max, the largest
    min-linkage distance between any two ``mt`` clusters; members farther
    apart than every inter-cluster gap cannot share a soft cluster.
    Merging: split siblings re-merge, so the hard map is structurally
    ``mt`` with canonical labels.

    Returns
    -------
    (ClusterMap, ClusterMap)
        The soft (first-stage) and hard (second-stage) maps, canonical.
    """
    held, violation = exclusive_law_check(mt)
    if not held:
        raise ValueError(f"input map violates the exclusive law at {violation}")
    prof = distance_profile(ch, k)
    members = mt.clusters()
    gaps = [
        _min_linkage(prof, members[i], members[j])
        for i, j in itertools.combinations(range(mt.q_prime), 2)
    ]
    d_max = max(gaps)
    dist = np.sqrt(prof.dist2)

    soft_table = np.full(mt.q * mt.q, -1, dtype=np.int64)
    next_id = 0
    for group in members:
        # connected components within the cluster: edge iff dist <= d_max
        remaining = list(group)
        while remaining:
            comp = [remaining.pop(0)]
            frontier = [comp[0]]
            while frontier:
                u = frontier.pop()
                keep = []
                for v in remaining:
                    if dist[u, v] <= d_max:
                        comp.append(v)
                        frontier.append(v)
                    else:
                        keep.append(v)
                remaining = keep
            soft_table[comp] = next_id
            next_id += 1
    ms = ClusterMap(mt.q, soft_table, kind="soft", name=f"{mt.name}-split").canonicalized()
    mh = ClusterMap(mt.q, mt.table, kind="hard", name=f"{mt.name}-merged").canonicalized()
    return ms, mh


# ----------------------------------------------------------------------------
# Embedded two-stage catalog for q = 4
#
# Row-major letter strings over pair index 4*c_a + c_b; letters are local to
# each row and are canonicalized on load.  Soft row i pairs with hard row
# _CATALOG_PAIRING[i].

_CATALOG_SOFT_ROWS = {
    0: "fbcabgadcaheadei",
    1: "bafcgdbaaechdiae",
    2: "abcfdagcehabieda",
    3: "bfacacdghbeaeaid",
    4: "eafbghacbdijckdl",
    5: "abefgchadibjklcd",
    6: "aebfcbghijdakdlc",
    7: "efabbgchiajddckl",
    8: "abefgchdcidjklab",
    9: "aebfcdghijcdkalb",
    10: "efabcgdhicjdabkl",
    11: "eafbghcdcdijakbl",
}
_CATALOG_HARD_ROWS = {
    0: "abcdbadccdabdcba",
    1: "abcdcdabbadcdcba",
    2: "bcadadcedbeaeabc",
    3: "bcdaceabdaceabed",
    4: "bacdecbaaedbcdae",
    5: "abcddaececabbeda",
}
_CATALOG_PAIRING = {0: 0, 1: 1, 2: 0, 3: 1, 4: 2, 5: 3, 6: 4, 7: 5, 8: 2, 9: 3, 10: 4, 11: 5}


def _letters_to_map(raw: str, q: int, kind: str, name: str) -> ClusterMap:
    table = np.array([ord(c) - ord("a") for c in raw], dtype=np.int64)
    # letters may start anywhere; normalize to contiguous ids, then canonical
    _, table = np.unique(table, return_inverse=True)
    return ClusterMap(q, table, kind=kind, name=name).canonicalized()


@dataclass(frozen=True)
class CncCatalog:
    """The embedded channel-adaptive two-stage map catalog for q = 4."""

    soft: tuple      # 12 first-stage ClusterMaps
    hard: tuple      # 6 second-stage ClusterMaps
    pairing: dict    # soft index -> hard index

    @property
    def q(self) -> int:
        return self.soft[0].q

    def pair(self, soft_index: int):
        return self.soft[soft_index], self.hard[self.pairing[soft_index]]


def load_catalog() -> CncCatalog:
    """Load the embedded catalog (12 soft maps, 6 hard maps, canonical ids)."""
    soft = tuple(
        _letters_to_map(_CATALOG_SOFT_ROWS[i], 4, "soft", f"soft{i}")
        for i in range(12)
    )
    hard = tuple(
        _letters_to_map(_CATALOG_HARD_ROWS[j], 4, "hard", f"hard{j}")
        for j in range(6)
    )
    return CncCatalog(soft=soft, hard=hard, pairing=dict(_CATALOG_PAIRING))


def select_mapping(ch: ChannelState, catalog: CncCatalog, k: Constellation | None = None):
    """Pick the catalog pair whose hard map maximizes the per-symbol MED.

    Ties on the hard-map MED are broken by the larger soft-map MED (the two
    soft partners of one hard map suit opposite gain-ratio signs), then by
    the lower soft catalog index.

    Returns
    -------
    (ClusterMap, ClusterMap)
        The chosen (soft, hard) pair.
    """
    k = k or Constellation(catalog.q)
    best_key, best = None, None
    for s_idx in range(len(catalog.soft)):
        ms, mh = catalog.pair(s_idx)
        key = (symbol_med(mh, ch, k), symbol_med(ms, ch, k), -s_idx)
        if best_key is None or key > best_key:
            best_key, best = key, (ms, mh)
    return best


# ----------------------------------------------------------------------------
# JSON interchange


def map_to_json(m: ClusterMap) -> str:
    """Serialize a map as a JSON array of {output, pairs} clusters."""
    clusters = [
        {"output": k, "pairs": [[int(p) // m.q, int(p) % m.q] for p in members]}
        for k, members in enumerate(m.clusters())
    ]
    return json.dumps(
        {"q": m.q, "kind": m.kind, "name": m.name, "clusters": clusters}, indent=1
    )


def map_from_json(text: str) -> ClusterMap:
    """Inverse of :func:`map_to_json`."""
    obj = json.loads(text)
    q = int(obj["q"])
    table = np.full(q * q, -1, dtype=np.int64)
    for cl in obj["clusters"]:
        for a, b in cl["pairs"]:
            table[q * a + b] = cl["output"]
    if np.any(table < 0):
        raise ValueError("clusters do not cover all symbol pairs")
    return ClusterMap(q, table, kind=obj.get("kind", "traditional"), name=obj.get("name", ""))
