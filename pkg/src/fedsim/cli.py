"""Command line front end.

Subcommands: ``run`` (one federated experiment), ``sweep`` (every schedule
preset plus both baselines), ``baseline local|global``, ``gen-data`` (write a
synthetic federation to disk), ``eval-detections`` (score detection files).

Exit codes: 0 success, 2 configuration or input validation problems, 3
numerical divergence during training, 4 filesystem trouble. Result files are
written atomically (temp file then rename). The FEDSIM_LOG_LEVEL environment
variable sets the log level (default INFO).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
from pathlib import Path

from .aggregation import STRATEGIES
from .config import ExperimentConfig
from .data import generate_federation, load_federation, save_federation
from .detection import evaluate_detections, load_detections, load_ground_truths
from .errors import (DivergenceError, FedsimError, NumericError)
from .orchestration import (FederatedResult, run_federated, run_global_baseline,
                            run_local_baseline, schedule_presets)
from .params import save_checkpoint

log = logging.getLogger("fedsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json_file(args.config)
    else:
        cfg = ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "strategy", None):
        cfg = dataclasses.replace(cfg, strategy=args.strategy)
    if getattr(args, "preset", None):
        cfg = cfg.with_schedule(schedule_presets()[args.preset])
    return cfg


def _build_data(cfg: ExperimentConfig, data_dir=None):
    if data_dir:
        log.info("loading federation from %s", data_dir)
        return load_federation(data_dir)
    log.info("generating %d-client federation (seed %d)",
             cfg.num_clients, cfg.seed)
    return generate_federation(
        cfg.num_clients, cfg.split, cfg.heterogeneity(), cfg.seed,
        input_dim=cfg.input_dim, num_classes=cfg.num_classes,
        class_separation=cfg.class_separation)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rounds_csv(path: Path, result: FederatedResult):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["round", "strategy", "seed", "val_metric",
                     *[f"val_client_{cid}" for cid in result.client_ids],
                     "cumulative_epochs", "duration_s"])
    for rec in result.rounds:
        writer.writerow([rec.round_number, result.strategy, result.seed,
                         f"{rec.val_accuracy:.6f}",
                         *[f"{a:.6f}" for a in rec.client_val_accuracies],
                         rec.cumulative_epochs, f"{rec.duration_s:.3f}"])
    _atomic_write(path, buf.getvalue())


def _run_summary(cfg: ExperimentConfig, result: FederatedResult) -> dict:
    # Wall-clock noise is quarantined under "timing" so the rest of the
    # document is reproducible for a given config.
    return {
        "command": "run",
        "config": cfg.to_dict(),
        "strategy": result.strategy,
        "seed": result.seed,
        "rounds": [
            {"round": r.round_number,
             "val_accuracy": r.val_accuracy,
             "client_val_accuracies": list(r.client_val_accuracies),
             "cumulative_epochs": r.cumulative_epochs}
            for r in result.rounds
        ],
        "test_accuracy": result.test_accuracy,
        "client_test_accuracies": {
            str(cid): acc for cid, acc in
            zip(result.client_ids, result.client_test_accuracies)},
        "client_epoch_counts": {
            str(cid): n for cid, n in
            zip(result.client_ids, result.client_epoch_counts)},
        "timing": {
            "total_duration_s": result.total_duration_s,
            "round_durations_s": [r.duration_s for r in result.rounds],
        },
    }


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    clients, group_all = _build_data(cfg, args.data)
    result = run_federated(
        cfg.model(), clients, group_all, cfg.schedule(), cfg.strategy,
        seed=cfg.seed, batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate, prox_mu=cfg.prox_mu,
        fedopt=cfg.fedopt(), uniform_weighting=cfg.uniform_weighting,
        parallel=args.parallel or cfg.parallel, patience=cfg.patience)
    out = _out_dir(args)
    _write_rounds_csv(out / "rounds.csv", result)
    _write_json(out / "summary.json", _run_summary(cfg, result))
    save_checkpoint(result.final_weights, out / "model.ckpt")
    print(f"strategy={result.strategy} seed={result.seed} "
          f"test_accuracy={result.test_accuracy:.4f}")
    print(f"results in {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    clients, group_all = _build_data(cfg, None)
    model = cfg.model()
    presets = schedule_presets()
    columns = list(presets)
    budget = presets[columns[0]].total_epochs

    log.info("baselines (%d local epochs)", budget)
    local = run_local_baseline(model, clients, group_all, budget,
                               seed=cfg.seed, batch_size=cfg.batch_size,
                               learning_rate=cfg.learning_rate)
    pooled = run_global_baseline(model, clients, group_all, budget,
                                 seed=cfg.seed, batch_size=cfg.batch_size,
                                 learning_rate=cfg.learning_rate)

    fed = {}
    for name, sched in presets.items():
        log.info("preset %s: %d rounds x %d epochs (%s)",
                 name, sched.rounds, sched.epochs_per_round, cfg.strategy)
        fed[name] = run_federated(
            model, clients, group_all, sched, cfg.strategy,
            seed=cfg.seed, batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate, prox_mu=cfg.prox_mu,
            fedopt=cfg.fedopt(), uniform_weighting=cfg.uniform_weighting,
            parallel=args.parallel or cfg.parallel)

    client_ids = fed[columns[0]].client_ids
    rows: dict[str, list[float]] = {}
    for idx, cid in enumerate(client_ids):
        rows[f"client_{cid}"] = [fed[c].client_test_accuracies[idx] for c in columns]
    rows["client_average"] = [
        sum(fed[c].client_test_accuracies) / len(client_ids) for c in columns]
    rows["pooled_test"] = [fed[c].test_accuracy for c in columns]
    rows["local_average"] = [local.mean_test_accuracy] * len(columns)
    rows["global"] = [pooled.test_accuracy] * len(columns)

    out = _out_dir(args)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["metric", *columns])
    for label, values in rows.items():
        writer.writerow([label, *[f"{v:.6f}" for v in values]])
    writer.writerow(["duration_s",
                     *[f"{fed[c].total_duration_s:.3f}" for c in columns]])
    _atomic_write(out / "sweep.csv", buf.getvalue())

    _write_json(out / "summary.json", {
        "command": "sweep",
        "config": cfg.to_dict(),
        "columns": columns,
        "rows": rows,
        "timing": {
            "federated_duration_s": {c: fed[c].total_duration_s for c in columns},
            "local_duration_s": local.total_duration_s,
            "global_duration_s": pooled.total_duration_s,
        },
    })
    for label in ("client_average", "pooled_test", "local_average", "global"):
        cells = " ".join(f"{v:.4f}" for v in rows[label])
        print(f"{label:16s} {cells}")
    print(f"results in {out}")
    return EXIT_OK


def _cmd_baseline(args) -> int:
    cfg = _load_config(args)
    clients, group_all = _build_data(cfg, None)
    model = cfg.model()
    budget = cfg.budget()
    out = _out_dir(args)
    if args.mode == "local":
        res = run_local_baseline(model, clients, group_all, budget,
                                 seed=cfg.seed, batch_size=cfg.batch_size,
                                 learning_rate=cfg.learning_rate)
        payload = {
            "command": "baseline-local",
            "config": cfg.to_dict(),
            "client_test_accuracies": {
                str(cid): acc for cid, acc in
                zip(res.client_ids, res.client_test_accuracies)},
            "mean_test_accuracy": res.mean_test_accuracy,
            "timing": {"total_duration_s": res.total_duration_s},
        }
        print(f"local baseline mean test_accuracy={res.mean_test_accuracy:.4f}")
    else:
        res = run_global_baseline(model, clients, group_all, budget,
                                  seed=cfg.seed, batch_size=cfg.batch_size,
                                  learning_rate=cfg.learning_rate)
        payload = {
            "command": "baseline-global",
            "config": cfg.to_dict(),
            "test_accuracy": res.test_accuracy,
            "client_test_accuracies": {
                str(cid): acc for cid, acc in
                zip([c.client_id for c in sorted(clients, key=lambda c: c.client_id)],
                    res.client_test_accuracies)},
            "timing": {"total_duration_s": res.total_duration_s},
        }
        print(f"global baseline test_accuracy={res.test_accuracy:.4f}")
    _write_json(out / "summary.json", payload)
    print(f"results in {out}")
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    clients, _ = _build_data(cfg)
    manifest = save_federation(clients, args.out, metadata={
        "seed": cfg.seed,
        "num_clients": cfg.num_clients,
        "split": list(cfg.split),
        "label_skew_alpha": cfg.label_skew_alpha,
        "feature_shift_scale": cfg.feature_shift_scale,
        "class_separation": cfg.class_separation,
        "input_dim": cfg.input_dim,
        "num_classes": cfg.num_classes,
    })
    print(f"wrote {manifest}")
    return EXIT_OK


def _cmd_eval_detections(args) -> int:
    ground_truths = load_ground_truths(args.ground_truth)
    detections = load_detections(args.detections)
    report = evaluate_detections(detections, ground_truths, args.iou_threshold,
                                 eleven_point=args.eleven_point)
    payload = {
        "iou_threshold": report.iou_threshold,
        "eleven_point": args.eleven_point,
        "per_class_ap": {str(k): v for k, v in report.per_class_ap.items()},
        "mean_ap": report.mean_ap,
        "precision": report.precision,
        "recall": report.recall,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "num_ground_truths": report.num_ground_truths,
    }
    if args.out:
        _write_json(Path(args.out), payload)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsim",
        description="Simulate federated training on a synthetic non-IID "
                    "federation and score detection outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p, preset=True):
        p.add_argument("--config", help="JSON experiment config "
                                        "(defaults used when omitted)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--strategy", choices=STRATEGIES,
                       help="override the aggregation strategy")
        if preset:
            p.add_argument("--preset", choices=sorted(schedule_presets()),
                           help="use a named rounds/epochs schedule")

    p_run = sub.add_parser("run", help="run one federated experiment")
    experiment_flags(p_run)
    p_run.add_argument("--data", help="read a saved federation instead of "
                                      "generating one")
    p_run.add_argument("--parallel", action="store_true",
                       help="train clients in a thread pool")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser(
        "sweep", help="run every schedule preset plus both baselines")
    experiment_flags(p_sweep, preset=False)
    p_sweep.add_argument("--parallel", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_base = sub.add_parser("baseline", help="non-federated reference runs")
    p_base.add_argument("mode", choices=("local", "global"))
    experiment_flags(p_base)
    p_base.set_defaults(func=_cmd_baseline)

    p_gen = sub.add_parser("gen-data", help="write a synthetic federation")
    p_gen.add_argument("--config")
    p_gen.add_argument("--out", required=True, help="target directory")
    p_gen.add_argument("--seed", type=int)
    p_gen.set_defaults(func=_cmd_gen_data)

    p_eval = sub.add_parser("eval-detections",
                            help="score a detection file against ground truth")
    p_eval.add_argument("--ground-truth", required=True)
    p_eval.add_argument("--detections", required=True)
    p_eval.add_argument("--iou-threshold", type=float, default=0.5)
    p_eval.add_argument("--eleven-point", action="store_true",
                        help="use the 11-point interpolated AP")
    p_eval.add_argument("--out", help="also write the report to this file")
    p_eval.set_defaults(func=_cmd_eval_detections)
    return parser


def main(argv=None) -> int:
    level = getattr(logging,
                    os.environ.get("FEDSIM_LOG_LEVEL", "INFO").upper(), None)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGENCE
    except NumericError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_DIVERGENCE
    except FedsimError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        log.error("malformed JSON input: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
