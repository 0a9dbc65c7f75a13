"""Command-line entry points.

Subcommands:
    gen-synth   write a synthetic planted-anomaly matrix + label file
    run         one active-learning loop against a ground-truth oracle
    grid        the full metric x strategy sweep (three output files)
    serve       start the analyst oracle HTTP service
    eval        nDCG of a stored ranking against a label file

Every flag has a config-file equivalent (--config, JSON); CLI flags override
the file, and the effective config is echoed into the output artifacts.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from anorank import binvec
from anorank.active_loop import (
    GroundTruthOracle,
    config_from_dict,
    config_to_dict,
    export_history,
    run_loop,
)
from anorank.errors import AnorankError
from anorank.evalkit import (
    GridSpec,
    ndcg,
    run_grid,
    write_boxplot_json,
    write_heatmap_csv,
    write_trajectories_csv,
)

logger = logging.getLogger("anorank")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _loop_config(args) -> "LoopConfig":  # noqa: F821
    """Config file first, then CLI overrides, then validation."""
    raw = _read_json(args.config) if args.config else {}
    overrides = {
        "T": args.T,
        "k_query": args.k_query,
        "strategy": args.strategy,
        "metric": args.metric,
        "rho": args.rho,
        "xi": args.xi,
        "lambda_priority": args.lambda_priority,
        "n0": args.n0,
        "sigma": args.sigma,
        "seed": args.seed,
        "early_stop_overlap": args.early_stop_overlap,
        "latent_dim": args.latent_dim,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    train = dict(raw.get("train") or {})
    train_overrides = {
        "learning_rate": args.learning_rate,
        "epochs_initial": args.epochs_initial,
        "epochs_retrain": args.epochs_retrain,
        "batch_size": args.batch_size,
    }
    train.update({k: v for k, v in train_overrides.items() if v is not None})
    if train:
        raw["train"] = train
    return config_from_dict(raw)


def _add_loop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--t", dest="T", type=int, help="iteration count T")
    p.add_argument("--k-query", type=int, dest="k_query", help="queries per iteration")
    p.add_argument("--strategy", choices=["s1", "s2", "hybrid"])
    p.add_argument("--metric",
                   choices=["hamming", "jaccard", "cosine", "dice", "euclidean", "nm1"])
    p.add_argument("--rho", type=float, help="strategy-1 similarity threshold")
    p.add_argument("--xi", type=float, help="strategy-2 similarity threshold")
    p.add_argument("--lambda-priority", type=float, dest="lambda_priority")
    p.add_argument("--n0", type=int, help="initial labeled sample size")
    p.add_argument("--sigma", type=float, help="Gaussian width for the euclidean kernel")
    p.add_argument("--seed", type=int)
    p.add_argument("--early-stop-overlap", type=float, dest="early_stop_overlap")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--epochs-initial", type=int, dest="epochs_initial")
    p.add_argument("--epochs-retrain", type=int, dest="epochs_retrain")
    p.add_argument("--batch-size", type=int, dest="batch_size")


def _load_dataset(data_path: str, labels_path: str | None):
    from anorank.service import _csv_has_header

    matrix = binvec.load_csv(data_path, has_header=_csv_has_header(data_path))
    truth = binvec.load_labels(labels_path, matrix.n_rows) if labels_path else None
    return matrix, truth


def cmd_gen_synth(args) -> int:
    raw = _read_json(args.config) if args.config else {}
    overrides = {
        "n_rows": args.rows,
        "n_cols": args.cols,
        "anomaly_fraction": args.anomaly_frac,
        "normal_density": args.normal_density,
        "anomaly_signature_size": args.signature_size,
        "noise_flip_prob": args.noise,
        "seed": args.seed,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = binvec.SynthConfig(**raw)
    matrix, truth = binvec.generate_synthetic(cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "data.csv"
    labels_path = out / "labels.txt"
    binvec.save_csv(matrix, str(data_path))
    binvec.save_labels(truth, str(labels_path))
    with open(out / "synth_config.json", "w", encoding="utf-8") as fh:
        json.dump(vars(cfg) | {"anomaly_count": len(truth.anomaly_ids)}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    logger.info("wrote %s and %s (%d anomalies)", data_path, labels_path,
                len(truth.anomaly_ids))
    return 0


def cmd_run(args) -> int:
    cfg = _loop_config(args)
    matrix, truth = _load_dataset(args.data, args.labels)
    if truth is None:
        raise AnorankError("run needs --labels for the ground-truth oracle")
    result = run_loop(matrix, GroundTruthOracle(truth), cfg, truth)
    payload = {
        "config": config_to_dict(cfg),
        "dataset": {"path": args.data, "n_rows": matrix.n_rows, "n_cols": matrix.n_cols,
                    "n_anomalies": len(truth.anomaly_ids)},
        "total_queries": result.total_queries,
        "final_ndcg": result.final_ndcg,
        "history": export_history(result),
        "final_ranking": [[int(i), float(s)] for i, s in
                          zip(result.final_ranking.ids, result.final_ranking.scores)],
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
        logger.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_grid(args) -> int:
    cfg = _loop_config(args)
    matrix, truth = _load_dataset(args.data, args.labels)
    if truth is None:
        raise AnorankError("grid needs --labels for the ground-truth oracle")
    name = args.dataset_name or Path(args.data).stem
    spec = GridSpec(datasets=((name, matrix, truth),), base_config=cfg, repeats=args.repeats)
    result = run_grid(spec, jobs=args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories_csv(result, str(out / "trajectories.csv"))
    write_heatmap_csv(result, str(out / "heatmap.csv"))
    write_boxplot_json(result, str(out / "boxplot.json"))
    with open(out / "effective_config.json", "w", encoding="utf-8") as fh:
        json.dump({"base_config": config_to_dict(cfg), "repeats": args.repeats,
                   "dataset": name}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info("wrote trajectories.csv, heatmap.csv, boxplot.json to %s", out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from anorank.service import create_app

    matrix, truth = _load_dataset(args.data, args.labels)
    base = _read_json(args.config) if args.config else {}
    app = create_app(matrix=matrix, truth=truth, base_config=base)
    logger.info("serving %s (%dx%d) on %s:%d", args.data, matrix.n_rows, matrix.n_cols,
                args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_eval(args) -> int:
    raw = _read_json(args.config) if args.config else {}
    k = args.k if args.k is not None else raw.get("k")
    n_rows = args.n_rows if args.n_rows is not None else raw.get("n_rows")
    with open(args.ranking, encoding="utf-8") as fh:
        ranking = [int(line.strip()) for line in fh if line.strip()]
    if n_rows is None:
        n_rows = max(len(ranking), max(ranking, default=0) + 1)
    truth = binvec.load_labels(args.labels, int(n_rows))
    value = ndcg(ranking, truth, k=None if k is None else int(k))
    sys.stdout.write(f"{value!r}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anorank", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic planted-anomaly dataset")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--anomaly-frac", type=float, dest="anomaly_frac")
    p.add_argument("--normal-density", type=float, dest="normal_density")
    p.add_argument("--signature-size", type=int, dest="signature_size")
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON file with SynthConfig fields")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("run", help="run one loop with the ground-truth oracle")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("-o", "--out", help="history JSON path (default: stdout)")
    _add_loop_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="run the metric x strategy experiment grid")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--dataset-name", dest="dataset_name")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", required=True, help="output directory")
    _add_loop_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("serve", help="serve the analyst oracle API")
    p.add_argument("--data", required=True)
    p.add_argument("--labels")
    p.add_argument("--config", help="JSON base config applied to new sessions")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="score a ranking file against labels")
    p.add_argument("--ranking", required=True, help="one sample id per line, best first")
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, help="nDCG cutoff (default: anomaly count)")
    p.add_argument("--n-rows", type=int, dest="n_rows",
                   help="dataset size (default: inferred from the ranking)")
    p.add_argument("--config", help="JSON file with k / n_rows")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AnorankError as exc:
        logger.error("error: %s", exc)
        return 1
    except OSError as exc:
        logger.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
