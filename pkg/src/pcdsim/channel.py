"""Modulation, the two-way-relay channel phases, fading and SNR bookkeeping.

The uplink (multiple-access) phase superimposes both source transmissions at
the relay:

    y(n) = h_ac * x_a(n) + h_bc * x_b(n) + w(n),

and the downlink (broadcast) phase is a single-arm version of the same
channel.  Noise w is circular complex Gaussian with *total* complex variance
``sigma2`` (sigma2/2 per real dimension).  The per-information-symbol SNR
convention is

    SNR = 1 / (2 * r * sigma2)

with r the code rate (r = 1 for uncoded transmission), so scalar likelihoods
are evaluated as exp(-|y - hypothesis|^2 / (2 sigma2)) throughout the
package.

Constellations are unit-energy PSK.  The 4-ary labeling places symbols at
[1, j, -j, -1] (reflected-binary order around the circle), so each symbol
differs from its angular neighbours in a single bit; the channel-adaptive
cluster catalog in :mod:`pcdsim.mapping` is indexed against this labeling
and validated by tests, so it must not be changed independently of the
catalog data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "ChannelState",
    "modulate",
    "ma_superimpose",
    "bc_transmit",
    "snr_to_sigma2",
    "sample_rayleigh_pair",
    "pair_points",
    "pair_likelihoods",
]


class Constellation:
    """A q-ary unit-energy PSK constellation with a fixed labeling.

    Parameters
    ----------
    q : int
        Alphabet size (>= 2).

    Attributes
    ----------
    points : ndarray of complex, shape (q,)
        ``points[k]`` is the transmit point for symbol k; |points[k]| = 1.
    """

    def __init__(self, q: int):
        if q < 2:
            raise ValueError(f"constellation order must be >= 2, got {q}")
        self.q = int(q)
        if q == 2:
            self.points = np.array([1.0 + 0j, -1.0 + 0j])
        elif q == 4:
            # reflected-binary (single-bit neighbour) labeling
            self.points = np.array([1.0 + 0j, 1j, -1j, -1.0 + 0j])
        else:
            self.points = np.exp(2j * np.pi * np.arange(q) / q)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Constellation(q={self.q})"


@dataclass(frozen=True)
class ChannelState:
    """Instantaneous channel: two uplink gains plus the noise variance.

    ``sigma2`` is the total complex noise variance (both real dimensions
    together); ``sigma2 = 0`` is allowed for noiseless oracle runs.  Gains
    are reciprocal: the downlink from the relay re-uses ``h_ac`` toward
    source A and ``h_bc`` toward source B.
    """

    h_ac: complex
    h_bc: complex
    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma2}")

    @property
    def ratio(self) -> complex:
        """The gain ratio h_bc / h_ac that drives cluster-map selection."""
        return self.h_bc / self.h_ac


def modulate(symbols, k: Constellation) -> np.ndarray:
    """Map a symbol sequence to constellation points.

    Parameters
    ----------
    symbols : array_like of int
        Values in [0, q).
    k : Constellation

    Returns
    -------
    ndarray of complex
    """
    s = np.asarray(symbols, dtype=np.int64)
    if s.size and (s.min() < 0 or s.max() >= k.q):
        raise ValueError(f"symbol out of range for order-{k.q} constellation")
    return k.points[s]


def _noise(n: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    if sigma2 == 0:
        return np.zeros(n, dtype=complex)
    scale = np.sqrt(sigma2 / 2.0)
    return rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)


def ma_superimpose(xa, xb, ch: ChannelState, rng: np.random.Generator) -> np.ndarray:
    """Uplink phase: superimpose both transmissions at the relay.

    Returns ``h_ac*xa + h_bc*xb + w`` with w circular complex Gaussian of
    total variance ``ch.sigma2``.
    """
    xa = np.asarray(xa, dtype=complex)
    xb = np.asarray(xb, dtype=complex)
    if xa.shape != xb.shape:
        raise ValueError(f"arm length mismatch: {xa.shape} vs {xb.shape}")
    return ch.h_ac * xa + ch.h_bc * xb + _noise(xa.size, ch.sigma2, rng)


def bc_transmit(xc, gain: complex, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Downlink phase: one-arm channel from the relay to a source."""
    xc = np.asarray(xc, dtype=complex)
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    return gain * xc + _noise(xc.size, sigma2, rng)


def snr_to_sigma2(snr_db: float, r: float) -> float:
    """Total complex noise variance for a per-information-symbol SNR.

    Parameters
    ----------
    snr_db : float
        SNR in decibels, defined as 1 / (2 r sigma2).
    r : float
        Code rate in (0, 1]; use r = 1 for uncoded transmission.
    """
    if r <= 0:
        raise ValueError(f"code rate must be positive, got {r}")
    return 1.0 / (2.0 * r * 10.0 ** (snr_db / 10.0))


def sample_rayleigh_pair(rng: np.random.Generator) -> tuple[complex, complex]:
    """Draw independent uplink gains with Rayleigh-distributed magnitude.

    Each gain is circular complex Gaussian with E[|H|^2] = 1 (variance 1/2
    per real dimension).  Gains stay constant over one frame (block fading).
    """
    g = rng.normal(0.0, np.sqrt(0.5), 4)
    return complex(g[0], g[1]), complex(g[2], g[3])


# ----------------------------------------------------------------------------
# Superimposed-pair geometry shared by the mapping and decoder modules.

def pair_points(ch: ChannelState, k: Constellation) -> np.ndarray:
    """All q^2 superimposed uplink points, indexed by pair id q*c_a + c_b.

    Returns
    -------
    ndarray of complex, shape (q*q,)
        ``out[q*a + b] = h_ac * x(a) + h_bc * x(b)``.
    """
    return (ch.h_ac * k.points[:, None] + ch.h_bc * k.points[None, :]).ravel()


def pair_likelihoods(y, ch: ChannelState, k: Constellation) -> np.ndarray:
    """Per-symbol Gaussian likelihood of every symbol pair.

    Parameters
    ----------
    y : array_like of complex, shape (N,)
        Received uplink samples.
    ch : ChannelState
    k : Constellation

    Returns
    -------
    ndarray, shape (N, q*q)
        ``exp(-|y(n) - point(p)|^2 / (2 sigma2))`` per sample and pair.  For
        ``sigma2 = 0`` this degenerates to exact-match indicators; a sample
        matching no pair point raises ``ValueError`` (zero total likelihood).
    """
    y = np.asarray(y, dtype=complex)
    pts = pair_points(ch, k)
    d2 = np.abs(y[:, None] - pts[None, :]) ** 2
    if ch.sigma2 == 0:
        lik = (d2 < 1e-24).astype(float)
        if np.any(lik.sum(axis=1) == 0):
            raise ValueError("noiseless sample off every superimposed point")
        return lik
    return np.exp(-d2 / (2.0 * ch.sigma2))
