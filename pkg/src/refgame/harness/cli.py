"""Command-line entry point: ``refgame <subcommand> ...``.

Every subcommand prints a short summary and, with ``--out DIR``, writes a
``result.json`` document (and CSV logs where relevant). Exit status is 0 on
success, 2 on bad input and 3 when a numerical routine gives up.
"""

from __future__ import annotations

import argparse
import csv
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from ..channels import ChannelImage
from ..decider import decide_dqip
from ..distinguish import classify_promise, image_distance, set_povm
from ..errors import NumericalFailure, PreconditionError
from ..games import DqipVerifier, QipVerifier, qip_value, qrg_value_given_yes, yes_value_given_no
from ..linalg import TOL_CONSISTENCY, TOL_HERM, TOL_PSD, TOL_TRACE, TOL_UNITARY
from . import gamefile
from .constructions import parallel_repeat
from .search import SEED_ENV, RunConfig, saddle_value, search_prover, simulate

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3
LOG_FIELDS = ("iter", "case", "objective", "logvol")


def _version() -> str:
    try:
        return version("refgame")
    except PackageNotFoundError:
        return "unknown"


def _tolerances() -> dict:
    return {"hermitian": TOL_HERM, "psd": TOL_PSD, "trace": TOL_TRACE, "unitary": TOL_UNITARY,
            "consistency": TOL_CONSISTENCY}


def _load_game(name, kind=None):
    game = gamefile.game_from_doc(gamefile.read_doc(name))
    if kind is not None and not isinstance(game, kind):
        want = "one-prover" if kind is QipVerifier else "two-prover"
        raise PreconditionError(f"{name} is not a {want} game")
    return game


def _load_channel(name):
    return gamefile.channel_from_doc(gamefile.read_doc(name))


def _load_prover(name, role=None):
    prover, file_role = gamefile.prover_from_doc(gamefile.read_doc(name))
    if role is not None and file_role != role:
        raise PreconditionError(f"{name} holds a {file_role!r} prover, expected {role!r}")
    return prover


def _povm_doc(povm) -> dict:
    return {"e0": gamefile.encode_matrix(povm.e0), "e1": gamefile.encode_matrix(povm.e1)}


def _write_log(path: Path, log) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_FIELDS)
        for entry in log:
            writer.writerow([entry.get("iter"), entry.get("case", ""), repr(float(entry.get("objective", np.nan))),
                             repr(float(entry["logvol"]))])


# --------------------------------------------------------------------------
# subcommands: each returns (summary lines, values dict, extra files)


def cmd_qip_value(args, config):
    game = _load_game(args.game, QipVerifier)
    sol = qip_value(game, args.epsilon)
    lines = [f"value {sol.value:.6f} +- {args.epsilon:g}", f"upper bound {sol.upper_bound:.6f}"]
    return lines, {"value": sol.value, "upper_bound": sol.upper_bound, "epsilon": args.epsilon}, {}


def cmd_close_images(args, config):
    q0, q1 = _load_channel(args.q0), _load_channel(args.q1)
    s0, s1 = ChannelImage(q0), ChannelImage(q1)
    dist = image_distance(s0, s1, args.epsilon)
    promise = classify_promise(dist.distance, args.epsilon)
    report = set_povm(s0, s1, args.epsilon)
    lines = [f"d = {dist.distance:.6f}", f"class {promise!r}",
             f"uniform success >= {report.uniform_guarantee:.6f}"]
    values = {"distance": dist.distance, "lower_bound": dist.lower_bound, "class": promise,
              "margin": report.margin, "uniform_guarantee": report.uniform_guarantee,
              "one_sided_guarantee": report.one_sided_guarantee, "povm": _povm_doc(report.povm),
              "epsilon": args.epsilon}
    return lines, values, {}


def cmd_sqg_decide(args, config):
    game = _load_game(args.game, DqipVerifier)
    decision = decide_dqip(game, args.c, args.s, deep_cut=args.deep_cut, precision_bits=args.precision_bits,
                           max_iter=args.max_iter)
    verdict = "accept" if decision.accept else "reject"
    lines = [f"{verdict} after {decision.iterations} of {decision.cap} iterations"]
    values = {"accept": decision.accept, "iterations": decision.iterations, "cap": decision.cap,
              "parameters": decision.parameters}
    extra = {"iterations.csv": decision.log}
    if decision.witness is not None:
        extra["witness.json"] = gamefile.prover_to_doc(decision.witness, "yes")
    return lines, values, extra


def cmd_distinguish(args, config):
    s0, s1 = gamefile.sets_from_doc(gamefile.read_doc(args.sets))
    report = set_povm(s0, s1, args.epsilon)
    lines = [f"d = {report.distance:.6f}", f"margin {report.margin:.6f}",
             f"uniform success >= {report.uniform_guarantee:.6f}",
             f"one-sided success >= {report.one_sided_guarantee:.6f}"]
    values = {"distance": report.distance, "margin": report.margin, "uniform_guarantee": report.uniform_guarantee,
              "one_sided_guarantee": report.one_sided_guarantee, "povm": _povm_doc(report.povm),
              "separator": gamefile.encode_matrix(report.separator)}
    return lines, values, {}


def cmd_repeat(args, config):
    game = _load_game(args.game)
    repeated = parallel_repeat(game, args.k, args.vote)
    lines = [f"{args.k}-fold repetition ({args.vote}): total dimension {repeated.layout.total_dim}"]
    values = {"k": args.k, "vote": args.vote, "total_dim": repeated.layout.total_dim}
    return lines, values, {"game.json": gamefile.game_to_doc(repeated)}


def cmd_simulate(args, config):
    game = _load_game(args.game)
    if isinstance(game, QipVerifier):
        p = simulate(game, _load_prover(args.yes, "prover"))
    else:
        if args.no is None:
            raise PreconditionError("a two-prover game needs --no")
        p = simulate(game, _load_prover(args.yes, "yes"), _load_prover(args.no, "no"))
    return [f"acceptance probability {p:.6f}"], {"acceptance": p}, {}


def cmd_search(args, config):
    game = _load_game(args.game)
    if args.role == "saddle":
        if not isinstance(game, DqipVerifier):
            raise PreconditionError("saddle search needs a two-prover game")
        res = saddle_value(game, config)
        lines = [f"saddle estimate (best no-prover rejection) {res.value:.6f}"]
        values = {"value": res.value, "history": res.history}
        extra = {"yes.json": gamefile.prover_to_doc(res.yes_prover, "yes"),
                 "no.json": gamefile.prover_to_doc(res.no_prover, "no")}
        return lines, values, extra
    opponent = None
    if isinstance(game, DqipVerifier):
        if args.opponent is None:
            raise PreconditionError("searching in a two-prover game needs --opponent")
        opponent = _load_prover(args.opponent, "no" if args.role == "yes" else "yes")
    res = search_prover(game, args.role, config, opponent)
    values = {"value": res.value, "restart_values": res.restart_values}
    if opponent is not None:
        exact = (yes_value_given_no(game, opponent, config.epsilon) if args.role == "yes"
                 else qrg_value_given_yes(game, opponent, config.epsilon))
        values["exact_best_response"] = exact.value
    lines = [f"best value found {res.value:.6f} over {config.restarts} restarts"]
    return lines, values, {"prover.json": gamefile.prover_to_doc(res.prover, args.role)}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refgame", description="Solve and decide small quantum proof systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="directory for result.json and logs")
    common.add_argument("--seed", type=int, help=f"random seed (overrides ${SEED_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qip-value", parents=[common], help="optimal acceptance of a one-prover game")
    p.add_argument("--game", required=True)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.set_defaults(func=cmd_qip_value)

    p = sub.add_parser("close-images", parents=[common], help="distance between two channel images")
    p.add_argument("--q0", required=True)
    p.add_argument("--q1", required=True)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.set_defaults(func=cmd_close_images)

    p = sub.add_parser("sqg-decide", parents=[common], help="decide a two-prover game with the ellipsoid method")
    p.add_argument("--game", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--deep-cut", action="store_true")
    p.add_argument("--precision-bits", type=int)
    p.add_argument("--max-iter", type=int)
    p.set_defaults(func=cmd_sqg_decide)

    p = sub.add_parser("distinguish", parents=[common], help="measurement separating two convex sets of states")
    p.add_argument("--sets", required=True)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("repeat", parents=[common], help="parallel repetition with a unanimous vote")
    p.add_argument("--game", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--vote", choices=["unanimous_accept", "unanimous_reject"], default="unanimous_accept")
    p.set_defaults(func=cmd_repeat)

    p = sub.add_parser("simulate", parents=[common], help="acceptance probability of explicit provers")
    p.add_argument("--game", required=True)
    p.add_argument("--yes", required=True, help="prover file (the only prover for one-prover games)")
    p.add_argument("--no")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("search", parents=[common], help="random-restart local search for a prover")
    p.add_argument("--game", required=True)
    p.add_argument("--role", choices=["prover", "yes", "no", "saddle"], required=True)
    p.add_argument("--opponent", help="fixed opposing prover for two-prover games")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-sweeps", type=int)
    p.add_argument("--private-dim", type=int)
    p.set_defaults(func=cmd_search)
    return parser


def _config(args) -> RunConfig:
    return RunConfig.resolve(args.seed, restarts=getattr(args, "restarts", None),
                             max_sweeps=getattr(args, "max_sweeps", None),
                             private_dim=getattr(args, "private_dim", None))


def _arguments_doc(args) -> dict:
    skip = {"func", "out", "seed"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


def _emit(args, config, lines, values, extra) -> None:
    for line in lines:
        print(line)
    if args.out is None:
        return
    args.out.mkdir(parents=True, exist_ok=True)
    doc = {"command": args.command, "arguments": _arguments_doc(args), "config": config.to_dict(),
           "tolerances": _tolerances(), "values": values, "refgame_version": _version()}
    (args.out / "result.json").write_text(gamefile.dumps(_plain(doc)))
    for name, content in extra.items():
        if name.endswith(".csv"):
            _write_log(args.out / name, content)
        else:
            gamefile.write_doc(content, args.out / name)
    print(f"wrote {args.out / 'result.json'}")


def _plain(obj):
    """Convert numpy scalars and containers into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PRECONDITION
    try:
        config = _config(args)
        lines, values, extra = args.func(args, config)
        _emit(args, config, lines, values, extra)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
