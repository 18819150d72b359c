# **************************************************************************
# *
# * Authors:     Grigory Sharov (gsharov@mrc-lmb.cam.ac.uk) [1]
# *
# * [1] MRC Laboratory of Molecular Biology (MRC-LMB)
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# *  All comments concerning this program package may be sent to the
# *  e-mail address 'gsharov@mrc-lmb.cam.ac.uk'
# *
# **************************************************************************

import os
import sys
import argparse
import itertools
from dotenv import load_dotenv
from capstate import __version__

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAP = 4
EXIT_RUNTIME = 5

MODEL_CHOICES = ["single", "bc", "relay", "mac"]


def _load(args, allowed):
    from capstate.utils.spec_file import read_raw
    from capstate.utils.errors import ModelMismatchError

    raw = read_raw(args.channel)
    if args.model and args.model != raw.model:
        raise ModelMismatchError(f"--model {args.model} given, but {args.channel} holds a '{raw.model}' channel")
    if raw.model not in allowed:
        raise ModelMismatchError(f"'{args.command}' needs a {' or '.join(allowed)} channel, "
                                 f"{args.channel} holds a '{raw.model}' channel")
    return raw.model, raw.build()


def _seed(args) -> int:
    from capstate.utils.tools import logger
    if args.seed is None:
        logger.warning("No --seed given, using seed 0")
        return 0
    return args.seed


def validate_cmd(args):
    from capstate.channels import check_bc_degraded, check_relay_degraded, check_stochastic
    from capstate.utils.errors import ModelMismatchError
    from capstate.utils.spec_file import read_raw, write_channel

    raw = read_raw(args.channel)
    if args.model and args.model != raw.model:
        raise ModelMismatchError(f"--model {args.model} given, but {args.channel} holds a '{raw.model}' channel")
    print(f"{args.channel}: {raw.model} channel '{raw.name}', kernel shape {raw.kernel.shape}")
    verdicts = [check_stochastic(raw.state_pmf.reshape(1, -1), ("pmf",), "state pmf"),
                check_stochastic(raw.kernel, raw.condition_axes, "kernel rows")]
    channel = None
    if all(verdicts):
        channel = raw.build()
        if raw.model == "bc":
            verdicts.append(check_bc_degraded(channel))
        elif raw.model == "relay":
            verdicts.append(check_relay_degraded(channel))

    for verdict in verdicts:
        print(verdict.describe())

    if args.dump and channel is not None:
        write_channel(channel, args.dump, raw.comment)
    return EXIT_OK if all(verdicts) else EXIT_FAIL


def capacity_cmd(args):
    from capstate.channels import StrategyMap
    from capstate import solvers

    model, channel = _load(args, ("single", "relay"))
    if model == "single":
        report = solvers.single_user_capacity(channel, tol=args.tol, oracle=args.oracle)
        print(f"C = {report.value:.6f} ({report.label})")
        print(f"bracket [{report.terms['lower']:.9f}, {report.terms['upper']:.9f}], "
              f"{report.iterations} iterations, {report.status.value}")
        pmf, tables = report.argmax["strategy_pmf"], report.argmax["strategies"]
        for t in range(pmf.size):
            if pmf[t] > 1e-6:
                print(f"  p(t={StrategyMap(tuple(int(x) for x in tables[t]), channel.x_size)}) = {pmf[t]:.6f}")
    else:
        report = solvers.relay_capacity(channel, restarts=args.restarts, seed=_seed(args),
                                        tol=args.tol, oracle=args.oracle)
        print(f"C >= {report.value:.6f} ({report.label})")
        for name in solvers.RELAY_TERMS:
            print(f"  {name} = {report.terms[name]:.6f}")
        print(f"  binding: {solvers.binding_term(report)}, {report.iterations} iterations, "
              f"{report.restarts} restarts, {report.status.value}")
        q = report.argmax["q"]
        for t, t1 in zip(*(q > 1e-6).nonzero()):
            print(f"  q(t={t}, t1={t1}) = {q[t, t1]:.6f}")

    if report.oracle_gap is not None:
        print(f"oracle gap = {report.oracle_gap:.3e}")
    return EXIT_OK


def _bc_region(args, channel, seed):
    from capstate import solvers
    return solvers.bc_region(channel, lambda_grid_size=args.lambda_points, restarts=args.restarts,
                             seed=seed, workers=args.workers, oracle=args.oracle)


def region_cmd(args):
    from capstate import solvers
    from capstate.utils.output import RunManifest, write_table

    model, channel = _load(args, ("bc", "mac"))
    seed = _seed(args)
    config = {"channel": args.channel, "model": model, "restarts": args.restarts,
              "lambda_points": args.lambda_points, "samples": args.samples,
              "expansion": args.expansion, "oracle": args.oracle}
    manifest = RunManifest("region", config, seed)

    regions = []
    if model == "bc":
        region, reports = _bc_region(args, channel, seed)
        regions.append(("bc", region))
        for report in reports:
            if report.oracle_gap is not None:
                print(f"lambda={report.terms['lambda']:.4f}: oracle gap {report.oracle_gap:.3e}")
    else:
        regions.append(("inner", solvers.mac_inner_region(channel, args.samples, seed, args.expansion)))
        regions.append(("outer", solvers.mac_outer_region(channel, args.samples, seed, args.expansion)))

    rows = []
    for tag, region in regions:
        for vertex, provenance in zip(region.vertices, region.provenance):
            rows.append({"region": tag, "r1_bits": vertex.r1, "r2_bits": vertex.r2,
                         "provenance": provenance})
        print(f"{tag}: {len(region.vertices)} vertices, max sum rate {region.max_sum_rate():.6f} "
              f"({region.label})")
    write_table(rows, manifest, args.out)
    return EXIT_OK


def simulate_cmd(args):
    from capstate import codingsim, solvers
    from capstate.probcore import JointPmf
    from capstate.utils.output import RunManifest, write_table
    from capstate.utils.tools import logger

    model, channel = _load(args, ("single", "bc", "relay", "mac"))
    seed = _seed(args)
    config = {k: v for k, v in vars(args).items() if k not in ("command", "dump")}
    config["seed"] = seed
    manifest = RunManifest("simulate", config, seed)

    # input laws come from the solvers at the same seed
    if model == "single":
        law = solvers.single_user_capacity(channel).argmax["strategy_pmf"]
    elif model == "relay":
        q = solvers.relay_capacity(channel, restarts=args.restarts, seed=seed).argmax["q"]
        law = JointPmf(("T", "T1"), q / q.sum())
    elif model == "bc":
        region, _ = _bc_region(args, channel, seed)
    else:
        region = solvers.mac_inner_region(channel, args.samples, seed, args.expansion)

    rows = []
    sweep = itertools.product(args.rate, args.rate1, args.rate2, args.rate0, args.blocklength)
    for rate, rate1, rate2, rate0, n in sweep:
        cfg = codingsim.SimConfig(blocklength=n, rate=rate, rate1=rate1, rate2=rate2, rate0=rate0,
                                  trials=args.trials, seed=seed, decoder=args.decoder,
                                  epsilon=args.epsilon, blocks=args.blocks, workers=args.workers)
        if model == "single":
            report = codingsim.simulate_single_user(channel, law, cfg)
        elif model == "relay":
            report = codingsim.simulate_relay(channel, law, cfg)
        elif model == "bc":
            witness = region.supporting_witness((rate1, rate2))
            report = codingsim.simulate_bc(channel, witness["p_u2"], witness["p_t_given_u2"], cfg)
        else:
            witness = region.supporting_witness((rate1, rate2))
            report = codingsim.simulate_mac(channel, witness["p_t1"], witness["p_t2"], cfg)
        rows.append(report.row())
        logger.debug("Union bound %.4f, conditions %s", report.union_bound, report.conditions,
                     extra={"prefix": model})

    write_table(rows, manifest, args.out)
    return EXIT_OK


def test_cmd(args):
    import unittest
    names = [f"capstate.tests.test_{m}" for m in
             ("probcore", "channels", "solvers", "codingsim", "cli")]
    suite = unittest.TestLoader().loadTestsFromNames(names)
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return EXIT_OK if result.wasSuccessful() else EXIT_FAIL


COMMAND_DISPATCH = {
    "validate": validate_cmd,
    "capacity": capacity_cmd,
    "region": region_cmd,
    "simulate": simulate_cmd,
    "test": test_cmd
}


def build_parser() -> argparse.ArgumentParser:
    workers = int(os.getenv("CAPSTATE_WORKERS", "1") or 1)

    parser = argparse.ArgumentParser(
        prog="capstate",
        description=f"Capacity and coding tools for channels with causal state information (v{__version__})",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_channel_args(p):
        p.add_argument("--channel", required=True, help="Path to the channel file (.json)")
        p.add_argument("--model", choices=MODEL_CHOICES,
                       help="Expected model tag; must match the file")
        return p

    def add_solver_args(p):
        p.add_argument("--seed", type=int, default=None, help="Random seed (0 with a warning if omitted)")
        p.add_argument("--restarts", type=int, default=32, help="Random restarts for non-concave searches")
        p.add_argument("--workers", type=int, default=workers, help="Worker threads")
        return p

    # --- Validate command ---
    validate_parser = add_channel_args(subparsers.add_parser(
        "validate", help="Check stochasticity and degradedness of a channel file",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    validate_parser.add_argument("--dump-canonical", dest="dump", metavar="PATH",
                                 help="Write the channel in canonical form to PATH")

    # --- Capacity command ---
    capacity_parser = add_solver_args(add_channel_args(subparsers.add_parser(
        "capacity", help="Capacity of a single-user or relay channel",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)))
    capacity_parser.add_argument("--tol", type=float, default=1e-10, help="Solver tolerance in bits")
    capacity_parser.add_argument("--oracle", action="store_true",
                                 help="Cross-check against the exhaustive lattice oracle")

    # --- Region command ---
    region_parser = add_solver_args(add_channel_args(subparsers.add_parser(
        "region", help="Rate region of a broadcast or multiple access channel (CSV)",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)))
    region_parser.add_argument("--lambda-points", type=int, default=33, help="Weights on the lambda grid")
    region_parser.add_argument("--samples", type=int, default=4096, help="Input laws sampled per MAC bound")
    region_parser.add_argument("--expansion", type=int, default=1, help="MAC auxiliary alphabet expansion")
    region_parser.add_argument("--oracle", action="store_true",
                               help="Cross-check every lambda point against the lattice oracle")
    region_parser.add_argument("--out", help="Output CSV path (stdout if omitted)")

    # --- Simulate command ---
    simulate_parser = add_solver_args(add_channel_args(subparsers.add_parser(
        "simulate", help="Monte Carlo block error rates of the random-coding scheme (CSV)",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)))
    simulate_parser.add_argument("--rate", type=float, nargs="+", default=[0.0],
                                 help="Message rate(s) for single-user and relay schemes")
    simulate_parser.add_argument("--rate1", type=float, nargs="+", default=[0.0], help="Rate(s) of user 1")
    simulate_parser.add_argument("--rate2", type=float, nargs="+", default=[0.0], help="Rate(s) of user 2")
    simulate_parser.add_argument("--rate0", type=float, nargs="+", default=[0.0], help="Relay bin rate(s)")
    simulate_parser.add_argument("--blocklength", type=int, nargs="+", default=[16], help="Blocklength(s) n")
    simulate_parser.add_argument("--blocks", type=int, default=2, help="Relay blocks B")
    simulate_parser.add_argument("--trials", type=int, default=500, help="Trials per sweep point")
    simulate_parser.add_argument("--decoder", choices=["ml", "typicality"], default="ml", help="Decoder")
    simulate_parser.add_argument("--epsilon", type=float, default=0.1, help="Typicality slack")
    simulate_parser.add_argument("--lambda-points", type=int, default=33,
                                 help="Weights on the lambda grid when a broadcast input law is needed")
    simulate_parser.add_argument("--samples", type=int, default=4096,
                                 help="Input laws sampled when a MAC input law is needed")
    simulate_parser.add_argument("--expansion", type=int, default=1, help="MAC auxiliary alphabet expansion")
    simulate_parser.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    simulate_parser.add_argument("--out", help="Output CSV path (stdout if omitted)")

    subparsers.add_parser("test", help="Run unit tests")
    return parser


def main(argv=None) -> int:
    load_dotenv()
    DEBUG = os.getenv("CAPSTATE_DEBUG", "false").lower() in ("true", "1", "yes")

    from capstate.utils.errors import (CapExceededError, ChannelSpecError,
                                       ChannelValidationError, ModelMismatchError)
    from capstate.utils.tools import logger, profile

    if DEBUG:
        logger.setLevel("DEBUG")

    args = build_parser().parse_args(argv)
    func = COMMAND_DISPATCH[args.command]
    if DEBUG:
        func = profile(func)

    try:
        return func(args)
    except (ChannelSpecError, FileNotFoundError) as e:
        logger.error("Cannot read channel file: %s", e)
        return EXIT_PARSE
    except ModelMismatchError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except CapExceededError as e:
        logger.error("%s", e)
        return EXIT_CAP
    except ChannelValidationError as e:
        logger.error("Invalid channel: %s", e)
        return EXIT_FAIL
    except Exception as e:
        logger.error("%s: %s", type(e).__name__, e)
        if DEBUG:
            raise
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
