"""Command-line interface: ``mmca {fit,mca,select,cv,simulate,biplot}``.

Exit codes: 0 success, 1 input or usage error, 2 numerical failure
(including degenerate categories), 3 fit stopped at ``--max-iter`` without
converging (results are still written).

``--lambda`` is the weight of the sum of singular values in the penalized
deviance; the majorization update thresholds singular values at twice
that value.
"""

import argparse
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import serialize
from ._blocks import block_reduce
from .dataset import (
    CategoricalDataset,
    build_indicator,
    decode_indicator,
    planted_interaction,
    read_csv,
    simulate_multinomial,
    write_csv,
)
from .exceptions import DegenerateCategoryError, MMCAError, NumericalError
from .mca import fit_mca, reconstruct
from .model import INIT_METHODS, SCALINGS, FitConfig, biplot_coords, fit
from .plot import biplot_svg
from .selection import QutConfig, cross_validate, qut_lambda

logger = logging.getLogger("mmca")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class CliError(Exception):
    """Usage problem detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _resolve_seed(args):
    env = os.environ.get("MMCA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"MMCA_SEED must be an integer, got {env!r}") from None
    return args.seed


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load(args):
    data = read_csv(args.input, na_token=args.na_token)
    return data, build_indicator(data)


def _grid(args):
    if args.grid is not None:
        return np.array(args.grid, dtype=float)
    hi = args.grid_max
    if hi is None:
        raise CliError("a lambda grid is required: use --grid or --grid-min/--grid-max")
    lo = args.grid_min
    count = args.grid_count
    if count < 1:
        raise CliError("--grid-count must be >= 1")
    if count == 1:
        return np.array([hi])
    if args.grid_log:
        if lo <= 0:
            raise CliError("--grid-log needs --grid-min > 0")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def cmd_fit(args):
    data, G = _load(args)
    config = FitConfig(p=args.rank, lam=args.lam, epsilon=args.epsilon,
                       max_iter=args.max_iter, init=args.init)
    result = fit(G, config)
    variables = serialize.variables_to_list(data.names, data.categories)
    serialize.atomic_write(args.output, serialize.dumps(serialize.fit_result_to_dict(result, variables)))
    if args.biplot:
        _write_biplot(result.params, variables, args.biplot, args.scaling, (0, 1))
    print(f"penalized deviance {result.penalized_deviance:.6f} after {result.iterations} "
          f"iterations; effective rank {result.effective_rank}")
    if not result.converged:
        logger.warning("stopped at max_iter=%d without converging", args.max_iter)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_mca(args):
    data, G = _load(args)
    result = fit_mca(G, args.rank)
    labels = serialize.category_labels(serialize.variables_to_list(data.names, data.categories), G.blocks)
    text = serialize.coordinates_csv(result.X, [str(i + 1) for i in range(G.n)], result.A, labels)
    serialize.atomic_write(args.output, text)
    G_hat = reconstruct(result)
    block_err = float(np.max(np.abs(block_reduce(np.add, G_hat, G.blocks) - 1.0)))
    print(f"max |block row sum of G_hat - 1| = {block_err:.3e}")
    print(f"grand row sums of G_hat = {G.J} (one per variable); min fitted value {G_hat.min():.4f}")
    return EXIT_OK


def cmd_select(args):
    _, G = _load(args)
    seed = _resolve_seed(args)
    qut = qut_lambda(G, QutConfig(replicates=args.replicates, seed=seed, alpha_override=args.alpha,
                                  threads=args.threads, epsilon=args.epsilon, max_iter=args.max_iter))
    if args.grid is None and args.grid_max is None:
        grid = np.linspace(0.0, qut.lambda_qut, max(args.grid_count, 1))
    else:
        grid = _grid(args)
    cv = cross_validate(G, qut.estimated_rank, grid, k=args.folds, seed=seed, threads=args.threads,
                        epsilon=args.epsilon, max_iter=args.max_iter)
    doc = {
        "format_version": serialize.FORMAT_VERSION,
        "qut": serialize.qut_result_to_dict(qut),
        "cv": serialize.cv_result_to_dict(cv),
    }
    serialize.atomic_write(args.output, serialize.dumps(doc))
    print(f"lambda_qut {qut.lambda_qut:.6g}  rank {qut.estimated_rank}  lambda* {cv.lambda_star:.6g}")
    return EXIT_OK


def cmd_cv(args):
    _, G = _load(args)
    cv = cross_validate(G, args.rank, _grid(args), k=args.folds, seed=_resolve_seed(args),
                        threads=args.threads, epsilon=args.epsilon, max_iter=args.max_iter)
    serialize.atomic_write(args.output, serialize.dumps(serialize.cv_result_to_dict(cv)))
    print(f"lambda* {cv.lambda_star:.6g}")
    return EXIT_OK


def cmd_simulate(args):
    blocks = args.categories
    if not blocks or min(blocks) < 2 or args.n < 2:
        raise CliError("--categories needs every entry >= 2 and --n >= 2")
    seed = _resolve_seed(args)
    K = sum(blocks)
    d = np.asarray(args.singular_values or [], dtype=float)
    if np.any(d < 0):
        raise CliError("singular values must be nonnegative")
    rng = np.random.default_rng([seed, 1])
    mu = args.mu_scale * rng.standard_normal(K)
    offsets = np.cumsum([0] + blocks[:-1])
    for o, b in zip(offsets, blocks):
        mu[o:o + b] -= mu[o:o + b].mean()
    try:
        U, d, V = planted_interaction(args.n, blocks, d, seed=[seed, 2])
    except MMCAError as exc:
        raise CliError(str(exc)) from None
    interaction = math.sqrt(args.n) * (U * d) @ V.T
    G = simulate_multinomial(mu, interaction, blocks, seed)
    names = [f"V{j + 1}" for j in range(len(blocks))]
    categories = [[f"c{k + 1}" for k in range(b)] for b in blocks]
    data = CategoricalDataset(names, categories, decode_indicator(G))
    buf = io.StringIO()
    write_csv(data, buf)
    truth = {
        "format_version": serialize.FORMAT_VERSION,
        "seed": seed,
        "n": args.n,
        "blocks": blocks,
        "rank": int(d.size),
        "mu": mu.tolist(),
        "column_norms": d.tolist(),
        "d": (math.sqrt(args.n) * d).tolist(),
        "U": U.tolist(),
        "V": V.tolist(),
    }
    serialize.atomic_write(args.output, buf.getvalue())
    serialize.atomic_write(args.output + ".truth.json", serialize.dumps(truth))
    return EXIT_OK


def _write_biplot(params, variables, prefix, scaling, dims):
    coords = biplot_coords(params, scaling)
    labels = serialize.category_labels(variables, params.blocks)
    text = serialize.coordinates_csv(coords.X, [str(i + 1) for i in range(params.n)], coords.A, labels)
    serialize.atomic_write(prefix + ".csv", text)
    if params.n_components < 2 or max(dims) >= params.n_components:
        logger.warning("rank %d is too small for dimensions %s; SVG not written",
                       params.n_components, tuple(x + 1 for x in dims))
        return False
    svg = biplot_svg(coords.X, coords.A, labels, params.d, dims=dims, title=f"biplot ({scaling} scaling)")
    serialize.atomic_write(prefix + ".svg", svg)
    return True


def cmd_biplot(args):
    with open(args.input, encoding="utf-8") as fh:
        doc = json.load(fh)
    result = serialize.fit_result_from_dict(doc)
    dims = tuple(x - 1 for x in args.dims)
    if len(dims) != 2 or min(dims) < 0:
        raise CliError("--dims takes two 1-based dimension indices")
    _write_biplot(result.params, doc.get("variables"), args.output_prefix, args.scaling, dims)
    return EXIT_OK


def _add_fit_options(p):
    p.add_argument("--epsilon", type=float, default=1e-8, help="relative convergence tolerance")
    p.add_argument("--max-iter", type=int, default=5000)


def _add_grid_options(p):
    p.add_argument("--grid", type=_float_list, help="explicit comma-separated lambda values")
    p.add_argument("--grid-min", type=float, default=0.0)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--grid-count", type=int, default=8)
    p.add_argument("--grid-log", action="store_true", help="log-spaced grid")


def build_parser():
    parser = _Parser(prog="mmca", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_command(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", help="categorical CSV with a header row")
        p.add_argument("-o", "--output", required=True)
        p.add_argument("--na-token", default="NA")
        p.set_defaults(func=func)
        return p

    p = data_command("fit", cmd_fit, "fit the multinomial model; writes FitResult JSON")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--init", choices=INIT_METHODS, default="margins")
    p.add_argument("--biplot", metavar="PREFIX", help="also write PREFIX.csv and PREFIX.svg")
    p.add_argument("--scaling", choices=SCALINGS, default="interaction")
    _add_fit_options(p)

    p = data_command("mca", cmd_mca, "classical MCA; writes coordinate CSV")
    p.add_argument("--rank", type=int, default=2)

    p = data_command("select", cmd_select, "rank by null-calibrated threshold, then CV for lambda")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--alpha", type=float, help="override the default quantile level")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    _add_grid_options(p)
    _add_fit_options(p)

    p = data_command("cv", cmd_cv, "cell-wise cross-validation over a lambda grid at fixed rank")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    _add_grid_options(p)
    _add_fit_options(p)

    p = sub.add_parser("simulate", help="draw a categorical CSV from a planted model")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--categories", type=_int_list, required=True, help="e.g. 3,3,2")
    p.add_argument("--singular-values", type=_float_list,
                   help="column norms of A with X'X = nI; the interaction is sqrt(n) U diag(d) V'")
    p.add_argument("--mu-scale", type=float, default=0.0, help="sd of random main effects (0: uniform)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("biplot", help="coordinate CSV and SVG from a FitResult JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output-prefix", required=True)
    p.add_argument("--scaling", choices=SCALINGS, default="interaction")
    p.add_argument("--dims", type=_int_list, default=[1, 2])
    p.set_defaults(func=cmd_biplot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (NumericalError, DegenerateCategoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MMCAError, CliError, serialize.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
