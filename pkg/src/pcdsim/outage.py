"""Constrained-input link capacity and the fading outage lower bound.

For each Rayleigh fade draw the two uplink capacities are estimated by
Monte Carlo; the achievable sum-rate of any two-phase relaying scheme is
upper-bounded by the weaker link, so the fraction of draws whose
bottleneck capacity falls below the target sum-rate lower-bounds the
outage probability of every scheme at that rate.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .channel import Constellation, modulate, sample_rayleigh_pair, snr_to_sigma2

__all__ = [
    "RatePoint",
    "capacity_mc",
    "sum_rate_bound",
    "target_sum_rate",
    "outage_lower_bound",
    "write_outage_csv",
]

_LN2 = float(np.log(2.0))
_SAMPLE_CHUNK = 1 << 15  # noise draws per vectorized block (memory cap)


@dataclass(frozen=True)
class RatePoint:
    """Capacities of the two uplinks against a target sum-rate.

    ``s_u``, the sum-rate upper bound over the two-phase exchange, is
    derived from the link pair (the weaker link is the bottleneck in
    both directions) and stored on construction.
    """

    c_ac: float
    c_bc: float
    s_r: float
    s_u: float = field(init=False)

    def __post_init__(self):
        if self.c_ac < 0 or self.c_bc < 0:
            raise ValueError("link capacities must be non-negative")
        if self.s_r < 0:
            raise ValueError("target sum-rate must be non-negative")
        object.__setattr__(self, "s_u", sum_rate_bound(self.c_ac, self.c_bc))

    @property
    def in_outage(self) -> bool:
        return self.s_u < self.s_r


def capacity_mc(
    alpha: complex,
    q: int,
    sigma2: float,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo estimate of the q-ary constrained-input capacity.

    The channel is ``y = alpha * x + w`` with ``x`` uniform over the
    q-point constellation and ``w`` circular complex Gaussian of total
    variance ``sigma2``.  ``n_samples`` noise draws are spent per
    constellation point.  The estimate is bounded above by ``log2(q)``
    sample-by-sample and is unbiased downward only through MC noise.
    """
    if sigma2 <= 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("need at least one noise sample")
    pts = modulate(np.arange(q), Constellation(q))
    scaled = np.asarray(alpha, dtype=complex) * pts
    total = 0.0
    remaining = n_samples
    while remaining:
        s = min(_SAMPLE_CHUNK, remaining)
        remaining -= s
        w = (rng.normal(size=(q, s)) + 1j * rng.normal(size=(q, s))) * np.sqrt(
            sigma2 / 2.0
        )
        y = scaled[:, None] + w
        # log-likelihood exponents against every candidate point
        expo = -np.abs(y[:, :, None] - scaled[None, None, :]) ** 2 / (2.0 * sigma2)
        base = -np.abs(w) ** 2 / (2.0 * sigma2)  # the transmitted point's own term
        mx = expo.max(axis=-1)
        lse = mx + np.log(np.exp(expo - mx[..., None]).sum(axis=-1))
        total += float((lse - base).sum()) / _LN2
    return float(np.log2(q) - total / (q * n_samples))


def sum_rate_bound(c_ac: float, c_bc: float) -> float:
    """Maximum two-way sum-rate supported by the link pair: the weaker link."""
    return min(c_ac, c_bc)


def target_sum_rate(q: int, r: float) -> float:
    """Sum-rate delivered by rate-``r`` coding over a q-ary alphabet."""
    return r * float(np.log2(q))


def outage_lower_bound(
    snr_grid,
    q: int,
    r: float,
    n_fades: int,
    rng: np.random.Generator,
    n_noise: int = 200,
) -> np.ndarray:
    """Fraction of fade draws whose bottleneck capacity misses the target.

    Per SNR point, ``n_fades`` independent Rayleigh pairs are drawn; each
    link capacity is estimated with ``n_noise`` Monte-Carlo samples per
    constellation point.  Returns one probability per grid entry.

    The grid is per-channel-use SNR — the axis the uncoded curves live
    on.  The code rate shapes only the target sum-rate: the bound is a
    property of the channel and the demanded throughput, not of any
    particular code, so folding ``r`` into the noise variance as well
    would count the rate twice.
    """
    snr_grid = [float(s) for s in snr_grid]
    if not snr_grid:
        raise ValueError("empty SNR grid")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"code rate must be in (0, 1], got {r}")
    if int(n_fades) < 1:
        raise ValueError("need at least one fade draw")
    s_r = target_sum_rate(q, r)
    probs = np.empty(len(snr_grid))
    for i, snr_db in enumerate(snr_grid):
        sigma2 = snr_to_sigma2(snr_db, 1.0)
        misses = 0
        for _ in range(int(n_fades)):
            h_ac, h_bc = sample_rayleigh_pair(rng)
            # MC estimates may dip a hair below zero at very low SNR;
            # clipping at the physical floor cannot change the verdict.
            point = RatePoint(
                c_ac=max(0.0, capacity_mc(h_ac, q, sigma2, n_noise, rng)),
                c_bc=max(0.0, capacity_mc(h_bc, q, sigma2, n_noise, rng)),
                s_r=s_r,
            )
            misses += point.in_outage
        probs[i] = misses / int(n_fades)
    return probs


def write_outage_csv(path, snr_grid, probs) -> None:
    """Persist an outage curve as ``snr_db,p_out_lower`` rows.

    ``path`` may be a filesystem path or an open text stream.
    """
    snr_grid = list(snr_grid)
    probs = list(probs)
    if len(snr_grid) != len(probs):
        raise ValueError("grid and probability lengths differ")

    def emit(fh):
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "p_out_lower"])
        for snr_db, p in zip(snr_grid, probs):
            writer.writerow([format(float(snr_db), ".10g"), format(float(p), ".10g")])

    if isinstance(path, (str, os.PathLike)):
        with open(path, "w", newline="") as fh:
            emit(fh)
    else:
        emit(path)
