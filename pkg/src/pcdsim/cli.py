"""Command-line front end: experiment sweeps, bound curves, table dumps.

Subcommands
-----------
``deterministic``
    Run a fixed-gain SNR sweep from a JSON config; write the results CSV.
``fading``
    Run a per-frame Rayleigh sweep; optionally also write the outage
    lower-bound curve for the same grid so plots can overlay it.
``outage``
    Evaluate the outage lower bound alone on an explicit grid.
``tabs``
    Dump the check-relation tables (encoder and decoder form) for a code
    and cluster map as JSON; defaults to the didactic three-cluster map
    on the bundled toy code.
``catalog``
    Dump the embedded channel-adaptive cluster-map catalog as JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import builtin_code
from .gf import GfField
from .harness import (
    ExperimentConfig,
    run_deterministic,
    run_fading,
    write_results_csv,
)
from .ldpc import lift_to_gfq, parse_alist
from .mapping import (
    load_catalog,
    map_to_json,
    toy_decision_map,
    toy_nonlinear_map,
    xor_map,
)
from .outage import outage_lower_bound, write_outage_csv
from .tabs import build_decoder_tab, build_tabs_for_code, tab_to_json

__all__ = ["main"]


def _load_config(path: str, seed_override) -> ExperimentConfig:
    with open(path) as fh:
        cfg = ExperimentConfig.from_json(fh.read())
    if seed_override is not None:
        cfg = dataclasses.replace(cfg, seed=seed_override)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_rows(rows, out: str | None) -> None:
    if out:
        write_results_csv(out, rows)
    else:
        write_results_csv(sys.stdout, rows)


def _named_maps():
    cat = load_catalog()
    maps = {
        "toy-nl": toy_nonlinear_map(),
        "toy-dec": toy_decision_map(),
        "xor2": xor_map(2),
        "xor4": xor_map(4),
    }
    maps.update({m.name: m for m in cat.soft})
    maps.update({m.name: m for m in cat.hard})
    return maps


def _load_code_for_map(code: str, q: int, lift_eta: int):
    h = builtin_code(code) if code in ("toy", "regular504") else _parse_path(code)
    if q == 4:
        h = lift_to_gfq(h, lift_eta, GfField(4))
    return h


def _parse_path(path: str):
    with open(path) as fh:
        return parse_alist(fh.read())


def _cmd_deterministic(args) -> int:
    cfg = _load_config(args.config, args.seed)
    rows = run_deterministic(cfg, threads=args.threads)
    _write_rows(rows, args.out)
    return 0


def _cmd_fading(args) -> int:
    cfg = _load_config(args.config, args.seed)
    rows = run_fading(cfg, threads=args.threads)
    _write_rows(rows, args.out)
    if args.outage_out:
        from .harness import _load_code  # rate of the configured code

        r = _load_code(cfg.code, cfg.q, cfg.lift_eta).rate if cfg.coded else 1.0
        probs = outage_lower_bound(
            cfg.snr_grid_db,
            cfg.q,
            r,
            n_fades=args.outage_fades,
            rng=np.random.default_rng(cfg.seed),
        )
        write_outage_csv(args.outage_out, cfg.snr_grid_db, probs)
    return 0


def _cmd_outage(args) -> int:
    probs = outage_lower_bound(
        args.snr_db,
        args.q,
        args.rate,
        n_fades=args.fades,
        rng=np.random.default_rng(args.seed),
        n_noise=args.noise_samples,
    )
    if args.out:
        write_outage_csv(args.out, args.snr_db, probs)
    else:
        write_outage_csv(sys.stdout, args.snr_db, probs)
    return 0


def _cmd_tabs(args) -> int:
    maps = _named_maps()
    try:
        m = maps[args.map]
    except KeyError:
        raise ValueError(
            f"unknown map {args.map!r}; choose from {', '.join(sorted(maps))}"
        ) from None
    h = _load_code_for_map(args.code, m.q, args.lift_eta)
    tabs = build_tabs_for_code(h, h, m)
    rows = [
        json.loads(tab_to_json(e, build_decoder_tab(e)))
        for e in tabs
    ]
    doc = {"code": args.code, "map": m.name, "rows": rows}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def _cmd_catalog(args) -> int:
    cat = load_catalog()
    doc = {
        "q": cat.q,
        "soft": [json.loads(map_to_json(m)) for m in cat.soft],
        "hard": [json.loads(map_to_json(m)) for m in cat.hard],
        "pairing": {str(k): v for k, v in sorted(cat.pairing.items())},
    }
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcdsim",
        description="Two-way-relay link simulator with pairwise check decoding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("deterministic", "fixed-gain SNR sweep from a JSON config"),
        ("fading", "per-frame Rayleigh sweep from a JSON config"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="results CSV path (default stdout)")
        p.add_argument("--threads", type=int, default=1)
        if name == "fading":
            p.add_argument(
                "--outage-out",
                default=None,
                help="also write the outage lower bound for the config grid",
            )
            p.add_argument("--outage-fades", type=int, default=10_000)
        p.set_defaults(func=_cmd_deterministic if name == "deterministic" else _cmd_fading)

    p = sub.add_parser("outage", help="outage lower-bound curve")
    p.add_argument("--snr-db", type=float, nargs="+", required=True)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--fades", type=int, default=10_000)
    p.add_argument("--noise-samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_outage)

    p = sub.add_parser("tabs", help="dump check-relation tables as JSON")
    p.add_argument("--code", default="toy", help="toy | regular504 | alist path")
    p.add_argument("--map", default="toy-nl", help="cluster map name")
    p.add_argument("--lift-eta", type=int, default=1, help="GF(4) lift coefficient")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_tabs)

    p = sub.add_parser("catalog", help="dump the cluster-map catalog as JSON")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_catalog)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"pcdsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
