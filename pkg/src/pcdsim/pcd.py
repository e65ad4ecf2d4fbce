"""Relay-side pairwise check decoding over cluster messages.

The relay never decodes the two source words separately: it runs message
passing directly on the clustered pair word.  Messages are probability
vectors over the fine cluster map's outputs; check updates read the
reverse-indexed check-relation tables; the hard decision merges the fine
posterior down to the coarse map actually broadcast, and iteration stops
as soon as the fine argmax word is consistent with every check's table
(which guarantees the broadcast word is table-consistent too).

This module is the readable reference implementation (dictionaries of
per-edge vectors, explicit table lookups).  ``pcd_decode`` delegates to
the batched kernels for the ``numpy``/``cython`` backends — those
reproduce these semantics exactly (verified by equivalence tests) — and
runs this loop for ``backend="reference"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState, Constellation, pair_likelihoods
from .kernels import build_pcd_graph
from .kernels import decode as kernel_decode
from .kernels.py_backend import _normalize
from .ldpc import ParityCheckMatrix
from .mapping import ClusterMap, exclusive_law_check
from .tabs import build_decoder_tab, build_tabs_for_code

__all__ = [
    "PcdState",
    "PcdTabs",
    "build_pcd_tabs",
    "init_messages",
    "check_update",
    "symbol_update",
    "decide",
    "pcd_decode",
]


class PcdTabs:
    """Everything ``pcd_decode`` needs that depends only on the code pair.

    Holds the two parity matrices (shared pattern), the fine map used for
    iterations and the coarse map used for the broadcast decision, and
    builds on demand: the reverse-indexed tables driving the reference
    check update, the per-check sets of coarse tuples used by the stop
    test, and the batched decoder graph for the compiled kernels.
    """

    def __init__(
        self,
        h_a: ParityCheckMatrix,
        h_b: ParityCheckMatrix,
        ms: ClusterMap,
        mh: ClusterMap,
    ):
        for m in (ms, mh):
            ok, violation = exclusive_law_check(m)
            if not ok:
                raise ValueError(f"map {m.name} violates the exclusive law at {violation}")
        if ms.q != h_a.field.q:
            raise ValueError("cluster map and code field orders differ")
        self.h_a = h_a
        self.h_b = h_b
        self.ms = ms
        self.mh = mh
        self.merge = ms.merge_into(mh)  # raises unless ms refines mh
        self._encoder_tabs = None
        self._decoder_tabs = None
        self._hard_tuples = None
        self._fine_tuples = None
        self._graph = None

    @property
    def encoder_tabs(self):
        if self._encoder_tabs is None:
            self._encoder_tabs = tuple(build_tabs_for_code(self.h_a, self.h_b, self.ms))
        return self._encoder_tabs

    @property
    def decoder_tabs(self):
        if self._decoder_tabs is None:
            self._decoder_tabs = tuple(build_decoder_tab(e) for e in self.encoder_tabs)
        return self._decoder_tabs

    @property
    def hard_tuples(self):
        """Per check row: the reachable coarse-map tuples."""
        if self._hard_tuples is None:
            tabs = build_tabs_for_code(self.h_a, self.h_b, self.mh)
            self._hard_tuples = tuple(
                frozenset(row.values for row in t.rows) for t in tabs
            )
        return self._hard_tuples

    @property
    def fine_tuples(self):
        """Per check row: the reachable fine-map tuples (stop-test sets)."""
        if self._fine_tuples is None:
            self._fine_tuples = tuple(
                frozenset(row.values for row in t.rows) for t in self.encoder_tabs
            )
        return self._fine_tuples

    @property
    def graph(self):
        if self._graph is None:
            self._graph = build_pcd_graph(self.h_a, self.h_b, self.ms, self.mh)
        return self._graph


def build_pcd_tabs(
    h_a: ParityCheckMatrix, h_b: ParityCheckMatrix, ms: ClusterMap, mh: ClusterMap
) -> PcdTabs:
    """Bundle code pair + map pair for ``pcd_decode``."""
    return PcdTabs(h_a, h_b, ms, mh)


@dataclass
class PcdState:
    """Mutable message state for one frame (reference path).

    ``u_raw`` keeps the unnormalized per-symbol cluster likelihoods,
    ``u`` their normalized form; ``t``/``w`` hold per-edge vectors keyed
    ``(symbol, check)`` / ``(check, symbol)`` once iterations begin.
    """

    u_raw: np.ndarray
    u: np.ndarray
    priors: np.ndarray
    posterior: np.ndarray
    t: dict = field(default_factory=dict)
    w: dict = field(default_factory=dict)
    o_n: np.ndarray | None = None
    neighbors: list | None = None
    failed: bool = False

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def k(self) -> int:
        return self.u.shape[1]


def _norm(vec, state: PcdState) -> np.ndarray:
    fail = [False]
    out = _normalize(np.asarray(vec, dtype=np.float64), fail)
    state.failed = state.failed or fail[0]
    return out


def init_messages(
    y, ch: ChannelState, ms: ClusterMap, constellation: Constellation | None = None
) -> PcdState:
    """Per-symbol cluster likelihoods from the superimposed observation.

    Each cluster's likelihood is the sum of the Gaussian likelihoods of
    the superimposed points of its symbol pairs.  With zero noise the
    likelihoods are exact indicators (an observation off every point is
    an error, raised by the channel layer).
    """
    if constellation is None:
        constellation = Constellation(ms.q)
    like = pair_likelihoods(y, ch, constellation)  # (N, q^2)
    n = like.shape[0]
    u_raw = np.zeros((n, ms.q_prime))
    np.add.at(u_raw.T, ms.table, like.T)
    state = PcdState(
        u_raw=u_raw,
        u=np.empty((n, ms.q_prime)),
        priors=ms.priors.copy(),
        posterior=np.empty((n, ms.q_prime)),
    )
    state.u = _norm(u_raw, state)
    # before any iteration the soft output is the channel evidence alone
    state.posterior = state.u.copy()
    return state


def _bind(state: PcdState, decoder_tabs) -> None:
    """Derive symbol adjacency (and column weights) from the tables."""
    neighbors = [[] for _ in range(state.n)]
    for m, tab in enumerate(decoder_tabs):
        for pos in tab.positions:
            if pos >= state.n:
                raise ValueError("table positions exceed the frame length")
            neighbors[pos].append(m)
    state.neighbors = neighbors
    state.o_n = np.array([len(v) for v in neighbors])


def _t_msg(state: PcdState, n: int, m: int) -> np.ndarray:
    # before the first symbol pass, messages equal the normalized evidence
    return state.t.get((n, m), state.u[n])


def check_update(state: PcdState, decoder_tabs) -> dict:
    """Check-to-symbol messages via the reverse-indexed tables.

    For each check and each of its positions, the outgoing vector at a
    target value is the weighted-factor sum over consistent rows of the
    products of the incoming messages at the remaining positions.
    """
    if state.neighbors is None:
        _bind(state, decoder_tabs)
    for m, tab in enumerate(decoder_tabs):
        for pos in tab.positions:
            rest = tab.remaining_positions(pos)
            v = np.zeros(state.k)
            for k in range(state.k):
                for row in tab.rows(pos, k):
                    prod = row.f_w
                    for p, val in zip(rest, row.values):
                        prod *= _t_msg(state, p, m)[val]
                    v[k] += prod
            state.w[(m, pos)] = _norm(v, state)
    return state.w


def symbol_update(state: PcdState) -> dict:
    """Symbol-to-check messages and the per-symbol soft output.

    The prior correction divides out the cluster priors once per
    *additional* use of the channel evidence: exponent ``o_n - 1`` on
    the outgoing messages, ``o_n`` on the soft output.
    """
    if state.neighbors is None:
        raise ValueError("run check_update before symbol_update")
    log_p = np.log(state.priors)
    for n in range(state.n):
        checks = state.neighbors[n]
        o = len(checks)
        if o == 0:
            state.posterior[n] = state.u[n]
            continue
        pow1 = np.exp(-(o - 1) * log_p)
        pow0 = np.exp(-o * log_p)
        full = state.u[n].copy()
        for m in checks:
            full = full * state.w[(m, n)]
        for m in checks:
            loo = state.u[n].copy()
            for m2 in checks:
                if m2 != m:
                    loo = loo * state.w[(m2, n)]
            state.t[(n, m)] = _norm(pow1 * loo, state)
        state.posterior[n] = _norm(pow0 * full, state)
    return state.t


def decide(state: PcdState, tabs: PcdTabs):
    """Coarse hard decision and its table-consistency flag.

    The fine posterior is summed over each coarse class before the
    argmax (ties go to the lowest class id).  ``satisfied`` requires the
    coarse word to be the merge of the fine argmax word and that fine
    word, restricted to every check row, to be a reachable tuple of the
    row's table.  Consistency is deliberately tested at the fine level:
    coarse maps without group structure leave single-symbol errors
    inside every check's reachable set, so a coarse-only test would stop
    the iteration too early.
    """
    merged = np.zeros((state.n, tabs.mh.q_prime))
    np.add.at(merged.T, tabs.merge, state.posterior.T)
    hard = merged.argmax(axis=1).astype(np.int64)
    fine = state.posterior.argmax(axis=1)
    satisfied = bool(np.array_equal(tabs.merge[fine], hard))
    if satisfied:
        for i, allowed in enumerate(tabs.fine_tuples):
            if tuple(fine[tabs.h_a.row_cols[i]].tolist()) not in allowed:
                satisfied = False
                break
    return hard, satisfied


def _entropy_bits(posterior: np.ndarray) -> np.ndarray:
    p = np.clip(posterior, 1e-300, 1.0)
    return -(p * np.log2(p)).sum(axis=1)


def pcd_decode(
    y,
    ch: ChannelState,
    ms: ClusterMap,
    mh: ClusterMap,
    tabs: PcdTabs,
    max_iter: int,
    backend: str = "auto",
    constellation: Constellation | None = None,
    trace: list | None = None,
):
    """Full relay decode of one frame.

    Returns ``(hard word over the coarse alphabet, converged, iterations)``.
    The stop test runs every iteration, including on the raw channel
    evidence before the first message pass.  ``backend="reference"``
    runs the didactic loop in this module (and honors ``trace``: a list
    collecting ``(iteration, per-symbol soft-output entropy in bits)``);
    other values select the batched kernels.
    """
    if ms is not tabs.ms and ms != tabs.ms:
        raise ValueError("iteration map does not match the prepared tables")
    if mh is not tabs.mh and mh != tabs.mh:
        raise ValueError("decision map does not match the prepared tables")
    if backend != "reference":
        state0 = init_messages(y, ch, ms, constellation)
        hard, converged, iters, _, _ = kernel_decode(
            tabs.graph, state0.u_raw, int(max_iter), backend=backend
        )
        return hard, converged, iters

    state = init_messages(y, ch, ms, constellation)
    _bind(state, tabs.decoder_tabs)
    hard, satisfied = decide(state, tabs)
    if trace is not None:
        trace.append((0, _entropy_bits(state.posterior)))
    if satisfied:
        return hard, True, 0
    for it in range(1, int(max_iter) + 1):
        check_update(state, tabs.decoder_tabs)
        symbol_update(state)
        hard, satisfied = decide(state, tabs)
        if trace is not None:
            trace.append((it, _entropy_bits(state.posterior)))
        if satisfied:
            return hard, True, it
    return hard, False, int(max_iter)
