"""End-to-end experiment runner for the two-way relay link.

One frame walks the full exchange: encode at both sources, superimpose on
the uplink, decode the network-coded word at the relay, broadcast it, and
let each source recover its partner's word by conditioning the broadcast
likelihoods on its own transmission.  The runner sweeps an SNR grid,
aggregates symbol/frame error rates with Wilson confidence intervals, and
persists CSV curves.  Per-frame seeds are derived from (seed, point index,
frame index), so thread-parallel runs reproduce serial results exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import builtin_code
from .channel import (
    ChannelState,
    Constellation,
    bc_transmit,
    ma_superimpose,
    modulate,
    sample_rayleigh_pair,
    snr_to_sigma2,
)
from .gf import GfField
from .ldpc import (
    ParityCheckMatrix,
    bp_decode,
    encode,
    encoder_info_length,
    lift_to_gfq,
    parse_alist,
)
from .mapping import ClusterMap, load_catalog, select_mapping, xor_map
from .pcd import build_pcd_tabs, init_messages, pcd_decode

__all__ = [
    "SCHEMES",
    "CHANNEL_MODES",
    "ExperimentConfig",
    "FrameResult",
    "PointSummary",
    "end_to_end_frame",
    "run_deterministic",
    "run_fading",
    "run_experiment",
    "wilson_interval",
    "crossing_snr",
    "write_results_csv",
    "CSV_COLUMNS",
]

SCHEMES = (
    "uncoded-XOR",
    "uncoded-CNC",
    "XOR-BP",
    "TS-CNC-PCD",
    "one-stage-CNC-PCD",
)
_SCHEME_LOOKUP = {s.lower(): s for s in SCHEMES}
_CODED = {"XOR-BP", "TS-CNC-PCD", "one-stage-CNC-PCD"}

CHANNEL_MODES = ("deterministic", "rayleigh")

CSV_COLUMNS = (
    "snr_db",
    "scheme",
    "ser_relay",
    "fer_relay",
    "fer_src_a",
    "fer_src_b",
    "ci_low",
    "ci_high",
    "frames",
    "avg_iters",
)

# stop-rule bookkeeping is evaluated after every frame; parallel runs
# truncate at the exact frame where the error target was hit, so thread
# count cannot change the published numbers
_PARALLEL_BLOCK = 64


def _canon_scheme(name: str) -> str:
    norm = str(name).strip().lower().replace("_", "-").replace(" ", "-")
    try:
        return _SCHEME_LOOKUP[norm]
    except KeyError:
        raise ValueError(
            f"unknown scheme {name!r}; expected one of {', '.join(SCHEMES)}"
        ) from None


def _as_complex(value) -> complex:
    """Accept a JSON number, string, or [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex gain pair must have 2 entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a scheme swept over an SNR grid on one channel mode."""

    scheme: str
    channel_mode: str
    snr_grid_db: tuple
    frame_budget: int
    stop_errors: int | None
    max_iter: int
    code: str
    q: int
    lift_eta: int
    seed: int
    h_ac: complex = 1.0
    h_bc: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", _canon_scheme(self.scheme))
        if self.channel_mode not in CHANNEL_MODES:
            raise ValueError(
                f"unknown channel mode {self.channel_mode!r}; "
                f"expected one of {', '.join(CHANNEL_MODES)}"
            )
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ValueError("empty SNR grid")
        object.__setattr__(self, "snr_grid_db", grid)
        if int(self.frame_budget) < 1:
            raise ValueError("frame budget must be >= 1")
        object.__setattr__(self, "frame_budget", int(self.frame_budget))
        if self.stop_errors is not None:
            if int(self.stop_errors) < 1:
                raise ValueError("stop_errors must be >= 1 (or null to disable)")
            object.__setattr__(self, "stop_errors", int(self.stop_errors))
        if int(self.max_iter) < 0:
            raise ValueError("max_iter must be >= 0")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        if self.q not in (2, 4):
            raise ValueError(f"symbol alphabet must be 2 or 4, got {self.q}")
        if self.q == 4 and not 1 <= int(self.lift_eta) <= 3:
            raise ValueError("lift_eta must be a nonzero GF(4) element (1..3)")
        object.__setattr__(self, "lift_eta", int(self.lift_eta))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "h_ac", complex(self.h_ac))
        object.__setattr__(self, "h_bc", complex(self.h_bc))

    @property
    def coded(self) -> bool:
        return self.scheme in _CODED

    @classmethod
    def from_json(cls, source) -> "ExperimentConfig":
        """Build from a JSON string / mapping; unknown keys are rejected."""
        data = json.loads(source) if isinstance(source, str) else dict(source)
        if not isinstance(data, dict):
            raise ValueError("config JSON must be an object")
        fields = {
            "scheme",
            "channel_mode",
            "snr_grid_db",
            "frame_budget",
            "stop_errors",
            "max_iter",
            "code",
            "q",
            "lift_eta",
            "seed",
            "h_ac",
            "h_bc",
        }
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        missing = fields - {"h_ac", "h_bc", "stop_errors", "lift_eta"} - set(data)
        if missing:
            raise ValueError(f"missing config keys: {', '.join(sorted(missing))}")
        kwargs = dict(data)
        kwargs.setdefault("stop_errors", None)
        kwargs.setdefault("lift_eta", 1)
        for key in ("h_ac", "h_bc"):
            if key in kwargs:
                kwargs[key] = _as_complex(kwargs[key])
        return cls(**kwargs)

    def to_json(self) -> str:
        data = {
            "scheme": self.scheme,
            "channel_mode": self.channel_mode,
            "snr_grid_db": list(self.snr_grid_db),
            "frame_budget": self.frame_budget,
            "stop_errors": self.stop_errors,
            "max_iter": self.max_iter,
            "code": self.code,
            "q": self.q,
            "lift_eta": self.lift_eta,
            "seed": self.seed,
            "h_ac": [self.h_ac.real, self.h_ac.imag],
            "h_bc": [self.h_bc.real, self.h_bc.imag],
        }
        return json.dumps(data, sort_keys=True, indent=2)


@dataclass(frozen=True)
class FrameResult:
    """Error accounting for a single exchanged frame."""

    n_symbols: int
    relay_symbol_errors: int
    relay_frame_error: bool
    src_a_frame_error: bool
    src_b_frame_error: bool
    iterations: int
    mapping: str

    def __post_init__(self):
        if not 0 <= self.relay_symbol_errors <= self.n_symbols:
            raise ValueError("relay symbol errors exceed the frame length")


@dataclass(frozen=True)
class PointSummary:
    """Aggregated rates at one SNR grid point."""

    snr_db: float
    scheme: str
    ser_relay: float
    fer_relay: float
    fer_src_a: float
    fer_src_b: float
    ci_low: float
    ci_high: float
    frames: int
    avg_iters: float


# ---------------------------------------------------------------------------
# code / mapping plumbing (cached per process)


@lru_cache(maxsize=None)
def _load_code(code: str, q: int, lift_eta: int) -> ParityCheckMatrix:
    if code in ("toy", "regular504"):
        h = builtin_code(code)
    else:
        with open(code) as fh:
            h = parse_alist(fh.read())
    if q == 4:
        h = lift_to_gfq(h, lift_eta, GfField(4))
    return h


@lru_cache(maxsize=1)
def _catalog():
    return load_catalog()


@lru_cache(maxsize=1)
def _xor2() -> ClusterMap:
    return xor_map(2)


@lru_cache(maxsize=1)
def _xor4() -> ClusterMap:
    return xor_map(4)


_TABS_CACHE: dict = {}


def _get_tabs(code_key, h: ParityCheckMatrix, ms: ClusterMap, mh: ClusterMap):
    key = (code_key, ms, mh)
    tabs = _TABS_CACHE.get(key)
    if tabs is None:
        tabs = _TABS_CACHE[key] = build_pcd_tabs(h, h, ms, mh)
    return tabs


def _mapping_for(cfg: ExperimentConfig, ch: ChannelState):
    """The (iteration map, decision map, label) the scheme uses on ``ch``."""
    if cfg.scheme in ("uncoded-XOR", "XOR-BP"):
        m = _xor2() if cfg.q == 2 else _xor4()
        return m, m, m.name
    ms, mh = select_mapping(ch, _catalog(), Constellation(cfg.q))
    if cfg.scheme == "TS-CNC-PCD":
        return ms, mh, f"{ms.name}+{mh.name}"
    return mh, mh, mh.name  # uncoded-CNC and one-stage use the coarse map alone


def _bc_likelihoods(y, gain: complex, sigma2: float, k: Constellation) -> np.ndarray:
    """Per-symbol likelihood of each broadcast class at a source."""
    y = np.asarray(y, dtype=complex)
    d2 = np.abs(y[:, None] - gain * k.points[None, :]) ** 2
    if sigma2 == 0:
        return (d2 < 1e-24).astype(float)
    return np.exp(-d2 / (2.0 * sigma2))


def _partner_priors(
    like_bc: np.ndarray, own, mh: ClusterMap, q: int, own_first: bool
) -> np.ndarray:
    """Condition broadcast-class likelihoods on the own word.

    ``out[n, beta]`` is the likelihood that the partner sent ``beta`` given
    that this source sent ``own[n]``: the broadcast class the pair maps to,
    looked up in the received likelihood row.  ``own_first`` says whether
    the own symbol is the first coordinate of the pair (source A) or the
    second (source B).  The map's exclusive law makes lookups unambiguous.
    """
    own = np.asarray(own)
    n = own.shape[0]
    cand = np.arange(q)
    if own_first:
        cls = mh.table[q * own[:, None] + cand[None, :]]
    else:
        cls = mh.table[q * cand[None, :] + own[:, None]]
    return like_bc[np.arange(n)[:, None], cls]


# ---------------------------------------------------------------------------
# the frame pipeline


def end_to_end_frame(
    cfg: ExperimentConfig, ch: ChannelState, rng: np.random.Generator
) -> FrameResult:
    """Encode, exchange, and decode one frame; count every error source."""
    h = _load_code(cfg.code, cfg.q, cfg.lift_eta)
    q = cfg.q
    k = Constellation(q)
    n = h.n

    if cfg.coded:
        ca = encode(h, rng.integers(0, q, size=encoder_info_length(h)))
        cb = encode(h, rng.integers(0, q, size=encoder_info_length(h)))
    else:
        ca = rng.integers(0, q, size=n)
        cb = rng.integers(0, q, size=n)

    y = ma_superimpose(modulate(ca, k), modulate(cb, k), ch, rng)
    ms, mh, label = _mapping_for(cfg, ch)

    if cfg.scheme in ("uncoded-XOR", "uncoded-CNC"):
        u = init_messages(y, ch, mh, k).u
        hard = u.argmax(axis=1).astype(np.int32)
        iters = 0
    elif cfg.scheme == "XOR-BP":
        u = init_messages(y, ch, mh, k).u
        hard, _, iters = bp_decode(h, u, cfg.max_iter)
    else:
        tabs = _get_tabs((cfg.code, cfg.q, cfg.lift_eta), h, ms, mh)
        hard, _, iters = pcd_decode(y, ch, ms, mh, tabs, cfg.max_iter)

    truth = mh(ca, cb)
    sym_err = int(np.count_nonzero(hard != truth))

    bc_k = Constellation(mh.q_prime)
    xc = modulate(hard, bc_k)
    y_a = bc_transmit(xc, ch.h_ac, ch.sigma2, rng)
    y_b = bc_transmit(xc, ch.h_bc, ch.sigma2, rng)
    pri_a = _partner_priors(
        _bc_likelihoods(y_a, ch.h_ac, ch.sigma2, bc_k), ca, mh, q, own_first=True
    )
    pri_b = _partner_priors(
        _bc_likelihoods(y_b, ch.h_bc, ch.sigma2, bc_k), cb, mh, q, own_first=False
    )
    if cfg.coded:
        cb_hat, _, _ = bp_decode(h, pri_a, cfg.max_iter)
        ca_hat, _, _ = bp_decode(h, pri_b, cfg.max_iter)
    else:
        cb_hat = pri_a.argmax(axis=1)
        ca_hat = pri_b.argmax(axis=1)

    return FrameResult(
        n_symbols=n,
        relay_symbol_errors=sym_err,
        relay_frame_error=sym_err > 0,
        src_a_frame_error=bool(np.any(cb_hat != cb)),
        src_b_frame_error=bool(np.any(ca_hat != ca)),
        iterations=int(iters),
        mapping=label,
    )


def _frame_rng(cfg: ExperimentConfig, point_idx: int, frame_idx: int):
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(point_idx, frame_idx))
    return np.random.default_rng(ss)


def _channel_for_frame(
    cfg: ExperimentConfig, sigma2: float, rng: np.random.Generator
) -> ChannelState:
    if cfg.channel_mode == "deterministic":
        return ChannelState(cfg.h_ac, cfg.h_bc, sigma2)
    h_ac, h_bc = sample_rayleigh_pair(rng)
    return ChannelState(h_ac, h_bc, sigma2)


def _point_sigma2(cfg: ExperimentConfig, snr_db: float) -> float:
    r = _load_code(cfg.code, cfg.q, cfg.lift_eta).rate if cfg.coded else 1.0
    return snr_to_sigma2(snr_db, r)


def _run_one_frame(cfg: ExperimentConfig, point_idx: int, frame_idx: int, sigma2: float):
    rng = _frame_rng(cfg, point_idx, frame_idx)
    ch = _channel_for_frame(cfg, sigma2, rng)
    return end_to_end_frame(cfg, ch, rng)


def _collect_point_frames(cfg, point_idx, sigma2, executor) -> list:
    """Frames in index order, truncated exactly at the stop-rule frame.

    The stop rule fires after the frame where the cumulative relay frame
    error count reaches ``cfg.stop_errors``; truncating there makes the
    outcome independent of block size and thread count.
    """
    results: list[FrameResult] = []
    errors = 0
    target = cfg.stop_errors
    budget = cfg.frame_budget
    start = 0
    while start < budget:
        block = range(start, min(start + _PARALLEL_BLOCK, budget))
        if executor is None:
            batch = [_run_one_frame(cfg, point_idx, i, sigma2) for i in block]
        else:
            batch = list(
                executor.map(
                    _run_one_frame,
                    [cfg] * len(block),
                    [point_idx] * len(block),
                    block,
                    [sigma2] * len(block),
                )
            )
        for res in batch:
            results.append(res)
            errors += res.relay_frame_error
            if target is not None and errors >= target:
                return results
        start += _PARALLEL_BLOCK
    return results


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple:
    """Wilson 95% score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (
        z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


def _summarize(cfg, snr_db, results) -> PointSummary:
    frames = len(results)
    n = results[0].n_symbols
    sym = sum(r.relay_symbol_errors for r in results)
    fe = sum(r.relay_frame_error for r in results)
    fa = sum(r.src_a_frame_error for r in results)
    fb = sum(r.src_b_frame_error for r in results)
    iters = sum(r.iterations for r in results)
    if cfg.channel_mode == "deterministic":
        ci_low, ci_high = wilson_interval(sym, frames * n)
    else:
        ci_low, ci_high = wilson_interval(fe, frames)
    return PointSummary(
        snr_db=float(snr_db),
        scheme=cfg.scheme,
        ser_relay=sym / (frames * n),
        fer_relay=fe / frames,
        fer_src_a=fa / frames,
        fer_src_b=fb / frames,
        ci_low=ci_low,
        ci_high=ci_high,
        frames=frames,
        avg_iters=iters / frames,
    )


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Sweep the config's SNR grid; one summary row per grid point."""
    threads = max(1, int(threads))
    executor = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        rows = []
        for point_idx, snr_db in enumerate(cfg.snr_grid_db):
            sigma2 = _point_sigma2(cfg, snr_db)
            results = _collect_point_frames(cfg, point_idx, sigma2, executor)
            rows.append(_summarize(cfg, snr_db, results))
        return rows
    finally:
        if executor is not None:
            executor.shutdown()


def run_deterministic(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Fixed-gain sweep (relay symbol error rate is the headline metric)."""
    if cfg.channel_mode != "deterministic":
        raise ValueError("run_deterministic requires channel_mode='deterministic'")
    return run_experiment(cfg, threads)


def run_fading(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Per-frame Rayleigh sweep (frame error rate is the headline metric)."""
    if cfg.channel_mode != "rayleigh":
        raise ValueError("run_fading requires channel_mode='rayleigh'")
    return run_experiment(cfg, threads)


# ---------------------------------------------------------------------------
# persistence and curve utilities


def _fmt(v) -> str:
    return format(float(v), ".10g")


def write_results_csv(path, rows) -> None:
    """Write point summaries with the fixed column set, one row per point."""

    def emit(fh):
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    _fmt(r.snr_db),
                    r.scheme,
                    _fmt(r.ser_relay),
                    _fmt(r.fer_relay),
                    _fmt(r.fer_src_a),
                    _fmt(r.fer_src_b),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                    str(r.frames),
                    _fmt(r.avg_iters),
                ]
            )

    if isinstance(path, (str, os.PathLike)):
        with open(path, "w", newline="") as fh:
            emit(fh)
    else:
        emit(path)


def results_csv_text(rows) -> str:
    buf = io.StringIO()
    write_results_csv(buf, rows)
    return buf.getvalue()


def crossing_snr(snr_db, values, level: float) -> float:
    """SNR where a decreasing error curve crosses ``level``.

    Interpolates linearly in (SNR, log10 error) between the bracketing
    grid points.  Raises when the curve never reaches the level.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    values = np.asarray(values, dtype=float)
    if snr_db.shape != values.shape or snr_db.ndim != 1:
        raise ValueError("grid and curve must be 1-D and equally long")
    below = np.nonzero(values <= level)[0]
    if below.size == 0:
        raise ValueError(f"curve never reaches {level}")
    j = int(below[0])
    if j == 0:
        return float(snr_db[0])
    v0, v1 = values[j - 1], values[j]
    if v1 <= 0:
        v1 = np.finfo(float).tiny
    t = (np.log10(v0) - np.log10(level)) / (np.log10(v0) - np.log10(v1))
    return float(snr_db[j - 1] + t * (snr_db[j] - snr_db[j - 1]))
