"""Command-line front end.

Exit codes: 0 success, 2 configuration or argument error, 3 numerical failure.
The thread count for BLAS and the compiled kernels is read from
``SIGSTOP_NUM_THREADS`` when the package is imported.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path as FsPath

from . import experiments as ex
from .ckme import EmbeddedEnsemble, rank_r_gram, mmd_from_grams
from .errors import ConfigError, NumericalError
from .goursat import DEFAULT_REFINE, DEFAULT_SCHEME, first_order_gram
from .oracles import crr_american_put, geometric_reduction, longstaff_schwartz
from .paths import build_grid, prepare, read_csv, write_csv
from .regression import krr_fit, krr_predict, load_model, save_model
from .simulate import FbmParams, GbmParams, geometric_put, sample_fbm, sample_gbm

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--refine", type=int, default=DEFAULT_REFINE)
    p.add_argument("--scheme", default=DEFAULT_SCHEME, choices=["explicit", "averaged", "taylor"])
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiply path values by this factor before any kernel evaluation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigstop", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a GBM or fBm ensemble into a paths CSV")
    p.add_argument("model", choices=["gbm", "fbm"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--maturity", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--rate", type=float, default=0.02)
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gram", help="first-order Gram tensor between two paths CSVs")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--full", action="store_true", help="keep every prefix pair")
    p.add_argument("--out", required=True, help="binary tensor file")
    p.add_argument("--csv", help="also write the terminal slice as i,j,k rows")
    _solver_args(p)

    p = sub.add_parser("mmd", help="squared signature MMD between two paths CSVs")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--rank", type=int, default=2, choices=[1, 2, 3])
    p.add_argument("--lam", type=float, default=1e-3)
    p.add_argument("--mode", default="unbiased", choices=["unbiased", "biased"])
    _solver_args(p)

    p = sub.add_parser("fit", help="fit kernel ridge regression over ensembles")
    p.add_argument("--train", nargs="+", required=True, help="paths CSV per model")
    p.add_argument("--labels", nargs="+", type=float, required=True)
    p.add_argument("--rank", type=int, default=2, choices=[1, 2])
    p.add_argument("--sigma", type=float, default=None, help="bandwidth (median heuristic if unset)")
    p.add_argument("--lambda-ckme", type=float, default=1e-3)
    p.add_argument("--lambda-ridge", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="model JSON file")
    _solver_args(p)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("model")
    p.add_argument("query", nargs="+")

    p = sub.add_parser("oracle", help="reference pricers")
    osub = p.add_subparsers(dest="oracle", required=True)
    q = osub.add_parser("crr", help="American put on a CRR lattice")
    q.add_argument("--s0", type=float, default=100.0)
    q.add_argument("--strike", type=float, default=100.0)
    q.add_argument("--rate", type=float, default=0.02)
    q.add_argument("--div", type=float, default=0.0, help="dividend yield")
    q.add_argument("--sigma", type=float, default=0.2)
    q.add_argument("--maturity", type=float, default=1.0)
    q.add_argument("--depth", type=int, default=10_000)
    q.add_argument("--basket-dim", type=int, default=None,
                   help="price the geometric basket put of this many iid GBMs")
    q = osub.add_parser("ls", help="Longstaff-Schwartz geometric put on a paths CSV")
    q.add_argument("paths")
    q.add_argument("--strike", type=float, default=100.0)
    q.add_argument("--rate", type=float, default=0.02)
    q.add_argument("--degree", type=int, default=2, choices=[1, 2])
    q.add_argument("--split", action="store_true", help="out-of-sample pricing")

    p = sub.add_parser("experiment", help="run a packaged experiment")
    p.add_argument("name", choices=list(ex.EXPERIMENTS))
    p.add_argument("--config", help="JSON or YAML config file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    return ap


def _load(path, scale):
    return prepare(read_csv(path), scale)


def cmd_simulate(a) -> None:
    grid = build_grid(0.0, a.maturity, a.steps)
    if a.model == "gbm":
        ens = sample_gbm(GbmParams(a.dim, a.s0, a.rate, a.sigma), grid, a.n, a.seed)
    else:
        ens = sample_fbm(FbmParams(a.hurst, grid), a.n, a.seed, augment=False)
    write_csv(ens, a.out)


def cmd_gram(a) -> None:
    G = first_order_gram(_load(a.x, a.scale), _load(a.y, a.scale), a.full, a.refine, a.scheme)
    G.save(a.out)
    if a.csv:
        G.write_terminal_csv(a.csv)


def cmd_mmd(a) -> None:
    X, Y = _load(a.x, a.scale), _load(a.y, a.scale)
    if a.rank == 3:
        K = [rank_r_gram(P, Q, 3, a.lam, a.refine, a.scheme) for P, Q in ((X, X), (X, Y), (Y, Y))]
        d2 = mmd_from_grams(K[0], K[1], K[2], a.mode)
    else:
        ex_ = EmbeddedEnsemble(X, a.lam, a.refine, a.scheme, a.rank)
        ey = EmbeddedEnsemble(Y, a.lam, a.refine, a.scheme, a.rank)
        d2 = ex_.mmd(ey, a.mode)[a.rank]
    print(ex.fmt(float(d2)))


def cmd_fit(a) -> None:
    if len(a.train) != len(a.labels):
        raise ConfigError("labels: need one label per training file")
    ens = [_load(f, a.scale) for f in a.train]
    model = krr_fit(ens, a.labels, a.rank, a.sigma, a.lambda_ckme, a.lambda_ridge,
                    a.refine, a.scheme)
    model.meta["scale"] = a.scale
    save_model(model, a.out, [FsPath(f).resolve() for f in a.train])


def cmd_predict(a) -> None:
    model = load_model(a.model)
    scale = model.meta.get("scale", 1.0)
    for f in a.query:
        print(f"{f},{ex.fmt(krr_predict(model, _load(f, scale)))}")


def cmd_oracle(a) -> None:
    if a.oracle == "crr":
        sigma, q = a.sigma, a.div
        if a.basket_dim:
            red = geometric_reduction(a.basket_dim, a.sigma, a.rate)
            sigma, q = red.sigma_eff, q + red.div_yield
        price = crr_american_put(a.s0, a.strike, a.rate, q, sigma, a.maturity, a.depth)
        print(ex.fmt(price))
    else:
        ens = read_csv(a.paths)
        res = longstaff_schwartz(ens.values, ens.grid.points,
                                 lambda s, k: geometric_put(s, a.strike), a.rate, a.degree,
                                 split=a.split)
        print(f"price,{ex.fmt(res.price)}")
        print(f"std_error,{ex.fmt(res.std_error)}")
        print(f"exercise_share,{ex.fmt(res.exercise_share)}")
        print(f"fallback_dates,{' '.join(map(str, res.fallback_dates))}")


def cmd_experiment(a) -> None:
    path = a.config if a.config else ex.packaged_config(a.name)
    cfg = ex.load_config(path, out=a.out, seed=a.seed)
    if cfg.experiment != a.name:
        raise ConfigError(f"experiment: config names {cfg.experiment!r}, command asked for {a.name!r}")
    ex.run_experiment(cfg)


COMMANDS = {"simulate": cmd_simulate, "gram": cmd_gram, "mmd": cmd_mmd, "fit": cmd_fit,
            "predict": cmd_predict, "oracle": cmd_oracle, "experiment": cmd_experiment}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
