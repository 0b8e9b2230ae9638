"""Command-line entry point: ``twolayer <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import numpy as np

from . import simharness as sh
from .allocator import BuConstraint, _with_samples, broadcast_only, bu_allocate, optimize_mu0
from .errors import TwoLayerError
from .utility import LagrangeState, RateWeights, critical_points, utility_dump

SIM_COMMANDS = {"mu-sim": "mu", "bu-sim": "bu", "tradeoff": "tradeoff", "oracle": "oracle"}


def _config(args, use_case: str) -> sh.ExperimentConfig:
    over = dict(use_case=use_case, seed=args.seed, realizations=args.realizations,
                out=args.out, jobs=getattr(args, "jobs", None))
    if args.config:
        # the subcommand decides the study even if the file names another
        cfg = sh.ExperimentConfig.from_file(args.config)
        return sh.with_overrides(cfg, **over)
    return sh.ExperimentConfig(**{k: v for k, v in over.items() if v is not None})


def _instance(args, cfg: sh.ExperimentConfig):
    """Noise field and base rewards of realization ``args.realization``."""
    K = args.K if args.K is not None else cfg.k_values[0]
    if args.use_case == "bu":
        noise = sh.bu_instance(cfg, sh.BuSetup.build(cfg), K, args.realization)
        return noise, RateWeights.uniform(noise.K, 1.0, 1.0)
    noise = sh.mu_instance(cfg, cfg.scenario(), K, args.realization)
    return noise, RateWeights.uniform(K, float(K), 1.0)


def _solve(args, cfg, noise, w):
    if args.use_case == "bu":
        modes = sh._om_modes(args.scheme, noise)
        ref = broadcast_only(cfg.power, noise, w)
        cb = ref[2].r0
        bc = ref if modes is None else broadcast_only(cfg.power, noise, w, modes=modes)
        r0 = min(args.fraction * cb, cb)
        alloc, rep, _ = bu_allocate(cfg.power, noise, BuConstraint(r0, cb), w, modes=modes,
                                    broadcast=bc if r0 > 0 else None)
        return alloc, rep
    return sh.mu_scheme_report(args.scheme, cfg.power, noise, w)


def cmd_alloc(args) -> str:
    cfg = _config(args, args.use_case)
    noise, w = _instance(args, cfg)
    alloc, rep = _solve(args, cfg, noise, w)
    alloc.check(noise, two_layer=args.scheme == "two-layer-opt")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "channel", "user", "value"])
    for i in range(alloc.M):
        writer.writerow(["power_common", i, "", repr(float(alloc.common[i]))])
        for k in range(alloc.K):
            writer.writerow(["power_unicast", i, k, repr(float(alloc.unicast[k, i]))])
    for key in ("r0", "unicast_sum", "sum_rate", "weighted_sum"):
        writer.writerow([key, "", "", repr(float(rep.metrics()[key]))])
    for k, r in enumerate(rep.rk):
        writer.writerow(["rate_unicast", "", k, repr(float(r))])
    return buf.getvalue()


def cmd_utility_dump(args) -> str:
    cfg = _config(args, args.use_case)
    noise, w = _instance(args, cfg)
    noise = _with_samples(noise)
    # defaults come from the unconstrained optimum of this instance
    weights, _, rep = optimize_mu0(cfg.power, noise, w)
    if args.split is not None:
        weights = weights.with_split(np.asarray(args.split, dtype=float))
    lam = args.lam if args.lam is not None else rep.lam
    if lam is None:
        raise TwoLayerError("no power price at this instance; pass --lam")
    w, s = weights, LagrangeState(lam)
    alpha_max = args.alpha_max
    if alpha_max is None:
        cp = critical_points(noise, w, s)
        finite = [v for v in (cp.alpha_bar[args.channel], cp.alpha0[args.channel],
                              cp.alpha1[args.channel]) if np.isfinite(v)]
        alpha_max = 2.0 * max(finite + [float(noise.z[:, args.channel].max())])
    return utility_dump(args.channel, noise, w, s, np.linspace(0.0, alpha_max, args.points))


def cmd_sim(args) -> str:
    return sh.run(_config(args, SIM_COMMANDS[args.command]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twolayer",
                                     description="Two-layer superposition power allocation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--realizations", type=int)

    for name in SIM_COMMANDS:
        p = sub.add_parser(name, help=f"{name} simulation")
        common(p)
        p.add_argument("--jobs", type=int, help="worker threads (output does not depend on it)")

    for name, helptext in (("alloc", "allocate one instance and dump powers and rates"),
                           ("utility-dump", "utility curves of one channel")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--use-case", choices=("mu", "bu"), default="mu")
        p.add_argument("-K", type=int, help="users (unicast users for bu)")
        p.add_argument("--realization", type=int, default=0)
        if name == "alloc":
            p.add_argument("--scheme", default="two-layer-opt")
            p.add_argument("--fraction", type=float, default=0.9,
                           help="bu: common-rate floor as a fraction of C_B")
        else:
            p.add_argument("--channel", type=int, default=0)
            p.add_argument("--lam", type=float, help="power price (default: optimal)")
            p.add_argument("--split", type=float, nargs="+",
                           help="worst-user weights (default: optimal)")
            p.add_argument("--alpha-max", type=float)
            p.add_argument("--points", type=int, default=201)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"alloc": cmd_alloc, "utility-dump": cmd_utility_dump}.get(args.command, cmd_sim)
    try:
        text = handler(args)
    except (TwoLayerError, OSError) as exc:
        print(f"twolayer: error: {exc}", file=sys.stderr)
        return 2
    out = args.out
    if args.command in SIM_COMMANDS and out is None and args.config:
        out = _config(args, SIM_COMMANDS[args.command]).out
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
