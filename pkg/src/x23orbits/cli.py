"""Command line entry point: x23orbits <subcommand> [options]."""
import argparse
import json
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3

ENUM_BUDGET = 5e7


class CLIError(ValueError):
    pass


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write(out, name, text):
    if out is None:
        return None
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _matrix(s):
    if s in ("I", "e", "id"):
        return np.eye(3)
    try:
        g = np.array(json.loads(s), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise CLIError(f"cannot parse matrix {s!r}; give a JSON 3x3 list or I") from None
    if g.shape != (3, 3):
        raise CLIError(f"matrix {s!r} is not 3x3")
    if abs(np.linalg.det(g) - 1) > 1e-8:
        raise CLIError(f"matrix {s!r} does not have determinant 1")
    return g


def _load_config(args):
    from .harness import RunConfig
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    return cfg


# ----------------------------------------------------------------------

def cmd_enumerate(args):
    from . import zenum
    if args.T <= 0:
        raise CLIError("T must be positive")
    approx = 3.0 * args.T ** 2 if args.group == 2 else 17.0 * args.T ** 6
    if approx > ENUM_BUDGET:
        raise BudgetError(f"about {approx:.3g} matrices; budget is {ENUM_BUDGET:.0e}")
    en = zenum.enumerate_sl2z(args.T) if args.group == 2 else zenum.enumerate_sl3z(args.T)
    flat = en.items.reshape(en.count, -1)
    n = args.group
    head = ",".join(f"g{i}{j}" for i in range(n) for j in range(n))
    text = head + "\n" + "".join(",".join(map(str, r)) + "\n" for r in flat.tolist())
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write(args.out, f"enumerate_G{n}_T{args.T:g}.csv", text)
        if args.binary:
            zenum.write_cache(os.path.join(args.out, f"enumerate_G{n}_T{args.T:g}.bin"), en)
        print(en.count)
    return EXIT_OK


def cmd_count(args):
    from . import zenum
    if args.T <= 0:
        raise CLIError("T must be positive")
    if args.group == 2:
        c = zenum.count_n_tau(args.T)
    else:
        if 17.0 * args.T ** 6 > 50 * ENUM_BUDGET:
            raise BudgetError(f"T={args.T:g} is beyond the counting budget")
        c = zenum.count_sl3z(args.T, args.workers or 1)
    print(c)
    _write(args.out, "count.json", _dump({"group": args.group, "T": args.T, "count": c}))
    return EXIT_OK


def cmd_volume(args):
    from . import skewvol
    g1, g2 = _matrix(args.g1), _matrix(args.g2)
    if not args.T >= 3 ** 0.5:
        raise CLIError("T must be at least sqrt(3)")
    spec = skewvol.SkewedBallSpec(g1, g2, args.T)
    res = skewvol.ball_volume(spec, K=args.K)
    d = res.as_dict()
    d.update({"T": args.T, "g1": g1.tolist(), "g2": g2.tolist(),
              "leading": [res.lead_lo, res.lead_hi]})
    text = _dump(d)
    sys.stdout.write(text)
    _write(args.out, "volume.json", text)
    return EXIT_OK


def _orbit(args, compare):
    from .harness import orbit_experiment, ratio_experiment, BudgetExceeded
    cfg = _load_config(args)
    try:
        _, report = orbit_experiment(cfg, compare=compare)
    except BudgetExceeded as e:
        report = e.partial or {}
        _write(cfg.out, "report.json", _dump({"config": cfg.to_dict(), "orbit": report}))
        raise BudgetError(str(e)) from None
    out = {"config": cfg.to_dict(), "orbit": report}
    if compare:
        out["ratio"] = ratio_experiment(cfg)
    _write(cfg.out, "report.json", _dump(out))
    print(os.path.join(cfg.out, "report.json"))
    return EXIT_OK


def cmd_orbit(args):
    return _orbit(args, compare=False)


def cmd_compare(args):
    return _orbit(args, compare=True)


def cmd_dual(args):
    from .harness import dual_experiment
    cfg = _load_config(args)
    rep = dual_experiment(cfg)
    _write(cfg.out, "report.json", _dump({"config": cfg.to_dict(), "dual": rep}))
    print(os.path.join(cfg.out, "report.json"))
    return EXIT_OK


def cmd_appendix_b(args):
    from . import haarcal
    seed = 20240601 if args.seed is None else args.seed
    rep = haarcal.constants_report(seed=seed, mc_samples=args.samples)
    text = _dump(rep)
    sys.stdout.write(text)
    _write(args.out, "constants.json", text)
    return EXIT_OK


class BudgetError(RuntimeError):
    pass


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)

    p = argparse.ArgumentParser(prog="x23orbits", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", parents=[common], help="list SL(n,Z) norm ball")
    s.add_argument("--group", type=int, choices=(2, 3), required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--binary", action="store_true", help="also write the binary cache")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("count", parents=[common], help="count SL(n,Z) norm ball")
    s.add_argument("--group", type=int, choices=(2, 3), default=2)
    s.add_argument("--T", type=float, required=True)
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("volume", parents=[common], help="Haar volume of H_T[g1,g2]")
    s.add_argument("--g1", default="I")
    s.add_argument("--g2", default="I")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--K", type=float, default=None, help="head cutoff for large T")
    s.set_defaults(func=cmd_volume)

    for name, fn, hlp in (("orbit", cmd_orbit, "empirical orbit measures"),
                          ("compare", cmd_compare, "orbit measures vs the limit law"),
                          ("dual", cmd_dual, "lattice counts over skewed balls")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--config", required=True)
        s.set_defaults(func=fn)

    s = sub.add_parser("appendix-b", parents=[common], help="calibration constants")
    s.add_argument("--samples", type=int, default=10_000_000)
    s.set_defaults(func=cmd_appendix_b)
    return p


def main(argv=None):
    from .harness import ConfigError
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, CLIError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
