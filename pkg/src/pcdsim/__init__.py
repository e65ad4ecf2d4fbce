"""Relay-side pairwise decoding for network-coded two-way relay channels.

A simulation library and CLI for LDPC-coded two-way relaying with
channel-adaptive physical-layer network coding: the relay clusters the
superimposed symbol pairs, decodes the clustered word directly with a
pair-domain message passer, and broadcasts it; the sources invert the
cluster map with their own data as side information.

Subpackages and modules
-----------------------
``gf``       Galois-field arithmetic (GF(2), GF(4), table-driven).
``channel``  Modulation, the two channel phases, fading, SNR conventions.
``mapping``  Cluster maps, the adaptive two-stage catalog, MED selection.
``ldpc``     alist I/O, lifting, systematic encoding, sum-product decoding.
``tabs``     Check-relation tables, complexity accounting, row-value search.
``pcd``      The relay's pair-domain iterative decoder (reference form).
``kernels``  Fast decode backends (compiled + NumPy) shared by ldpc and pcd.
``outage``   Constrained-input capacities and the outage lower bound.
``harness``  End-to-end experiments, CSV persistence, the CLI entry point.
"""

from importlib.resources import files as _files

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a packaged data file (e.g. the bundled alist codes)."""
    return _files("pcdsim.data").joinpath(name)


def builtin_code(name: str):
    """Load a bundled code by short name: ``toy`` or ``regular504``."""
    from .ldpc import parse_alist

    names = {"toy": "toy_6_4.alist", "regular504": "regular_504_252.alist"}
    if name not in names:
        raise ValueError(f"unknown bundled code {name!r}; options: {sorted(names)}")
    return parse_alist(data_path(names[name]).read_text())
