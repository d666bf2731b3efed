"""Command-line interface.

Subcommands
-----------
select
    Select a subset and write it as a result JSON file.
sweep
    Select once per alpha and write the quality/diversity tradeoff as
    CSV.
score
    Print the diversity and mean quality of a subset as JSON.
embed
    Compute embeddings of the texts of a dataset file through the
    embedding service and write them as a QDITEMB1 file.

Exit status is 0 on success, 2 for invalid flags or a missing
environment variable and 1 for invalid data or a failing service.
Progress and summaries go to standard error.
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import List, Optional, Sequence

from .config import (ALGORITHMS, DEFAULT_EPSILON, DEFAULT_N_CLUSTERS,
                     DEFAULT_TAU, SelectionConfig)
from .io import (EmbedClientConfig, EmbeddingServiceError,
                 MissingEnvironmentError, embed_texts, load_jsonl,
                 read_records, read_result, write_embeddings_bin,
                 write_result, write_sweep_csv)
from .metrics import random_baseline, subset_metrics, sweep_alpha
from .presets import Preset, alpha_grid
from .selectors import select
from .similarity import DEFAULT_DENSE_CAP, build_backend

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)

STOCHASTIC_ALGORITHMS = ("stochastic", "lazy_stochastic")


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid integer: {0!r}".format(value))
    if number < 1:
        raise argparse.ArgumentTypeError("must be at least 1: {0}".format(value))
    return number


def _non_negative_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid integer: {0!r}".format(value))
    if number < 0:
        raise argparse.ArgumentTypeError("must not be negative: {0}".format(value))
    return number


def _unit_interval(value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid number: {0!r}".format(value))
    if not 0 <= number <= 1:
        raise argparse.ArgumentTypeError("must be in [0, 1]: {0}".format(value))
    return number


def _open_unit_interval(value: str) -> float:
    number = _unit_interval(value)
    if number in (0, 1):
        raise argparse.ArgumentTypeError("must be in (0, 1): {0}".format(value))
    return number


def _alpha_list(value: str) -> List[float]:
    alphas = [_unit_interval(item.strip()) for item in value.split(",")
              if item.strip()]
    if not alphas:
        raise argparse.ArgumentTypeError("no alpha values given")
    return alphas


def _add_dataset_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True,
                        help="JSON lines dataset file")
    parser.add_argument("--embeddings",
                        help="QDITEMB1 embedding file, if the dataset has no "
                             "inline embeddings")
    parser.add_argument("--dense-cap", type=_non_negative_int,
                        default=DEFAULT_DENSE_CAP,
                        help="largest dataset for which the full similarity "
                             "matrix is kept in memory (default: %(default)s)")


def _add_selection_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=_positive_int,
                        help="number of records to select")
    parser.add_argument("--algorithm", choices=ALGORITHMS, default="lazy",
                        help="selection algorithm (default: %(default)s)")
    parser.add_argument("--epsilon", type=_open_unit_interval,
                        help="sampling accuracy of the stochastic algorithms "
                             "(default: {0})".format(DEFAULT_EPSILON))
    parser.add_argument("--tau", type=_unit_interval,
                        help="similarity threshold of the threshold algorithm "
                             "(default: {0})".format(DEFAULT_TAU))
    parser.add_argument("--clusters", type=_positive_int,
                        help="number of clusters of the cluster algorithm "
                             "(default: {0})".format(DEFAULT_N_CLUSTERS))
    parser.add_argument("--seed", type=_non_negative_int, default=0,
                        help="random seed (default: %(default)s)")
    parser.add_argument("--threads", type=_positive_int,
                        help="threads for gain evaluation (default: all "
                             "cores); never changes the result")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of the ``qdselect`` command."""
    parser = argparse.ArgumentParser(
        prog="qdselect",
        description="Select instruction tuning subsets that trade off "
                    "quality against diversity.")
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="count", default=0,
                           help="log progress (-vv for every selection step)")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    select_parser = subparsers.add_parser(
        "select", parents=[verbosity], help="select a subset")
    _add_dataset_arguments(select_parser)
    _add_selection_arguments(select_parser)
    tradeoff = select_parser.add_mutually_exclusive_group(required=True)
    tradeoff.add_argument("--alpha", type=_unit_interval,
                          help="quality/diversity tradeoff in [0, 1]")
    tradeoff.add_argument("--preset", choices=Preset.names(),
                          help="published alpha and K for a dataset")
    select_parser.add_argument("--output", required=True,
                               help="result JSON file")

    sweep_parser = subparsers.add_parser(
        "sweep", parents=[verbosity], help="sweep alpha")
    _add_dataset_arguments(sweep_parser)
    _add_selection_arguments(sweep_parser)
    sweep_parser.add_argument("--alphas", type=_alpha_list,
                              help="comma separated alpha values (default: "
                                   "{0})".format(",".join(
                                       "{0:g}".format(alpha)
                                       for alpha in alpha_grid())))
    sweep_parser.add_argument("--with-random-baseline", action="store_true",
                              help="add a row for a random subset")
    sweep_parser.add_argument("--output", required=True, help="CSV file")

    score_parser = subparsers.add_parser(
        "score", parents=[verbosity], help="score a subset")
    _add_dataset_arguments(score_parser)
    score_parser.add_argument("--subset", required=True,
                              help="result JSON file or comma separated "
                                   "indices")

    embed_parser = subparsers.add_parser(
        "embed", parents=[verbosity],
        help="embed the texts of a dataset file; reads the endpoint and key "
             "from QDIT_EMBED_URL and QDIT_EMBED_KEY")
    embed_parser.add_argument("--input", required=True,
                              help="JSON lines dataset file with texts")
    embed_parser.add_argument("--output", required=True,
                              help="QDITEMB1 embedding file")
    embed_parser.add_argument("--model", help="embedding model identifier")
    embed_parser.add_argument("--batch-size", type=_positive_int,
                              help="texts per request")
    return parser


def _check_selection_arguments(parser: argparse.ArgumentParser,
                               args: argparse.Namespace) -> None:
    """Reject flags that do not apply to the chosen algorithm."""
    if args.epsilon is not None and args.algorithm not in STOCHASTIC_ALGORITHMS:
        parser.error("--epsilon only applies to the stochastic algorithms")
    if args.tau is not None and args.algorithm != "threshold":
        parser.error("--tau only applies to the threshold algorithm")
    if args.clusters is not None and args.algorithm != "cluster":
        parser.error("--clusters only applies to the cluster algorithm")
    if args.k is None and getattr(args, "preset", None) is None:
        parser.error("the following arguments are required: --k")


def _selection_config(args: argparse.Namespace,
                      alpha: float,
                      k_select: int) -> SelectionConfig:
    params = {"alpha": alpha, "k_select": k_select,
              "algorithm": args.algorithm, "seed": args.seed}
    for flag, name in [("epsilon", "epsilon"), ("tau", "tau"),
                       ("clusters", "n_clusters")]:
        if getattr(args, flag) is not None:
            params[name] = getattr(args, flag)
    return SelectionConfig(**params)


def cmd_select(args: argparse.Namespace) -> int:
    """Select a subset and write the result file."""
    alpha, k_select = args.alpha, args.k
    if args.preset is not None:
        preset = Preset(args.preset)
        alpha = preset.alpha
        k_select = preset.k_select if k_select is None else k_select
    config = _selection_config(args, alpha, k_select)
    dataset = load_jsonl(args.input, args.embeddings)
    start = time.perf_counter()
    result = select(dataset, config, threads=args.threads,
                    dense_cap=args.dense_cap)
    elapsed = time.perf_counter() - start
    write_result(result, dataset, args.output)
    print("selected k={0} alpha={1:g} diversity={2:.6f} mean_quality={3:.6f} "
          "time={4:.2f}s{5}".format(len(result), config.alpha,
                                    result.diversity, result.mean_quality,
                                    elapsed,
                                    " (truncated)" if result.truncated else ""),
          file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run the alpha sweep and write the CSV."""
    alphas = alpha_grid() if args.alphas is None else args.alphas
    base_config = _selection_config(args, alphas[0], args.k)
    dataset = load_jsonl(args.input, args.embeddings)
    start = time.perf_counter()
    backend = build_backend(dataset.unit_embeddings, args.dense_cap)
    points = sweep_alpha(dataset, alphas, base_config, backend, args.threads)
    if args.with_random_baseline:
        points.append(random_baseline(dataset, args.k, args.seed, backend))
    write_sweep_csv(points, args.output)
    print("swept {0} alpha values with k={1} in {2:.2f}s".format(
        len(alphas), args.k, time.perf_counter() - start), file=sys.stderr)
    return 0


def _parse_subset(value: str) -> List[int]:
    try:
        subset = [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise ValueError("Invalid subset: {0!r} is neither a result file nor "
                         "a list of indices".format(value))
    return subset


def cmd_score(args: argparse.Namespace) -> int:
    """Print the metrics of a subset as JSON."""
    dataset = load_jsonl(args.input, args.embeddings)
    if os.path.isfile(args.subset):
        result, _ = read_result(args.subset, dataset)
        subset = list(result.selected)
    else:
        subset = _parse_subset(args.subset)
    if not subset:
        raise ValueError("Empty subset")
    backend = build_backend(dataset.unit_embeddings, args.dense_cap)
    diversity, mean_quality = subset_metrics(dataset, subset, backend)
    print(json.dumps({"diversity": diversity, "mean_quality": mean_quality,
                      "n_subset": len(subset), "n_total": dataset.n}))
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    """Embed the texts of a dataset file and write the embedding file."""
    settings = {}
    if args.model is not None:
        settings["model"] = args.model
    if args.batch_size is not None:
        settings["batch_size"] = args.batch_size
    config = EmbedClientConfig.from_env(**settings)
    records = read_records(args.input)
    embeddings = embed_texts([record["text"] for record in records], config)
    write_embeddings_bin(args.output, embeddings)
    print("embedded {0} texts, dim {1}".format(*embeddings.shape),
          file=sys.stderr)
    return 0


COMMANDS = {"select": cmd_select, "sweep": cmd_sweep, "score": cmd_score,
            "embed": cmd_embed}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the ``qdselect`` command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("select", "sweep"):
            _check_selection_arguments(parser, args)
    except SystemExit as exit_:
        return exit_.code

    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except MissingEnvironmentError as error:
        print("qdselect: error: {0}".format(error), file=sys.stderr)
        return 2
    except (ValueError, IndexError, OSError, EmbeddingServiceError) as error:
        print("qdselect: error: {0}".format(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
