"""Command-line entry point for reproducible batch runs.

Stages are file-based (manifest -> folds -> pmaps -> masks -> reports) so
each one can be rerun and inspected on its own. Exit codes: 0 success,
1 validation/scorer failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig, load_config
from .ensemble import hard_vote, prob_average
from .errors import IdSetMismatch, PipelineError
from .manifest import load_manifest, make_folds, save_fold_plan
from .metrics import MetricReport, aggregate_folds, mean_report, pooled_report, report_for
from .raster import load_image, load_mask, load_prob_map, save_mask, save_prob_map
from .sampling import build_epoch_plan, build_index, write_epoch_plan
from .scorer import constant_scorer, external_scorer, mask_file_oracle
from .tiling import build_grid, run_inference, threshold


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tileseg",
        description="Tiled segmentation pipeline: fold planning, sliding-window "
                    "inference, ensembling, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="write a leave-one-domain-out fold plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("plan-epoch", help="write a seeded weighted sampling plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fold", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan_epoch)

    p = sub.add_parser("infer", help="sliding-window inference over manifest images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fold", type=int, default=None,
                   help="restrict to this fold's validation images (default: all)")
    scorer = p.add_mutually_exclusive_group(required=True)
    scorer.add_argument("--scorer", help="builtin scorer spec: constant:P | oracle[:AMPLITUDE]")
    scorer.add_argument("--scorer-cmd", help="external scorer command (PSRQ/PSRS on stdio)")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ensemble", help="combine per-model outputs into final masks")
    p.add_argument("--method", required=True, choices=["hard-vote", "prob-average"])
    p.add_argument("--inputs", nargs="+", required=True,
                   help="mask dirs (hard-vote) or pmap dirs (prob-average)")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", help="score predictions or aggregate fold reports")
    p.add_argument("--pred", help="directory of predicted masks")
    p.add_argument("--truth", help="directory of ground-truth masks")
    p.add_argument("--reports", nargs="+", help="fold report JSONs to aggregate")
    p.add_argument("--pooled", action="store_true",
                   help="pool pixels over all images instead of per-image means")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def _load_pipeline_config(args) -> PipelineConfig:
    config = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    return dataclasses.replace(config, **overrides) if overrides else config


def _atomic_write_json(doc, path) -> None:
    payload = json.dumps(doc, indent=2) + "\n"
    tmp = f"{os.fspath(path)}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(payload)
    os.replace(tmp, path)


# ---- commands ----------------------------------------------------------------

def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    plan = make_folds(manifest)
    save_fold_plan(plan, args.out)
    print(f"wrote {len(plan.folds)} folds to {args.out}")
    return 0


def _fold_entries(manifest, fold_id: int, train: bool):
    plan = make_folds(manifest)
    if not 0 <= fold_id < len(plan.folds):
        raise ValueError(f"fold {fold_id} outside [0, {len(plan.folds)})")
    fold = plan.folds[fold_id]
    wanted = set(fold.train_ids if train else fold.valid_ids)
    return [e for e in manifest.entries if e.image_id in wanted]


def cmd_plan_epoch(args) -> int:
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    entries = _fold_entries(manifest, args.fold, train=True)
    index = build_index(entries, config.patch_size, config.stride, config.weight_floor)
    plan = build_epoch_plan(index, config.samples_per_epoch, config.seed)
    write_epoch_plan(plan, index, args.out)
    print(f"wrote {len(plan.draws)} draws over {len(index.entries)} patches to {args.out}")
    return 0


def _make_scorer_factory(args, config: PipelineConfig, manifest):
    if args.scorer_cmd:
        return lambda: external_scorer(args.scorer_cmd, timeout=config.scorer_timeout)
    spec = args.scorer
    kind, _, param = spec.partition(":")
    if kind == "constant":
        p = float(param) if param else 0.5
        return lambda: constant_scorer(p)
    if kind == "oracle":
        amplitude = float(param) if param else 0.0
        return lambda: mask_file_oracle(manifest, noise_amplitude=amplitude,
                                        seed=config.seed, patch_size=config.patch_size)
    raise ValueError(f"unknown scorer spec {spec!r}")


def cmd_infer(args) -> int:
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    if args.fold is not None:
        entries = _fold_entries(manifest, args.fold, train=False)
    else:
        entries = list(manifest.entries)
    scorer_factory = _make_scorer_factory(args, config, manifest)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    local = threading.local()
    scorers, scorers_lock = [], threading.Lock()

    def get_scorer():
        s = getattr(local, "scorer", None)
        if s is None:
            s = scorer_factory()
            local.scorer = s
            with scorers_lock:
                scorers.append(s)
        return s

    def infer_one(entry):
        started = time.perf_counter()
        image = load_image(entry.image_path)
        grid = build_grid(image.height, image.width, config.patch_size, config.stride)
        pmap = run_inference(image, get_scorer(), config.patch_size, config.stride,
                             config.kernel_sigma, image_id=entry.image_id)
        save_prob_map(pmap, out_dir / f"{entry.image_id}.pmap")
        save_mask(threshold(pmap, config.threshold), out_dir / f"{entry.image_id}.png")
        return {
            "image_id": entry.image_id,
            "status": "ok",
            "height": image.height,
            "width": image.width,
            "n_patches": len(grid.origins),
            "origins": [list(o) for o in grid.origins],
            "seconds": round(time.perf_counter() - started, 4),
        }

    results = []
    try:
        if config.workers == 1:
            for entry in entries:
                results.append(_run_guarded(infer_one, entry))
        else:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(lambda e: _run_guarded(infer_one, e), entries))
    finally:
        for s in scorers:
            s.close()

    results.sort(key=lambda r: r["image_id"])
    failed = [r for r in results if r["status"] != "ok"]
    log = {
        "patch_size": config.patch_size,
        "stride": config.stride,
        "sigma": config.kernel_sigma,
        "threshold": config.threshold,
        "seed": config.seed,
        "workers": config.workers,
        "images": results,
        "n_images": len(results),
        "n_failed": len(failed),
    }
    _atomic_write_json(log, out_dir / "inference_log.json")
    for r in failed:
        print(f"failed: {r['image_id']}: {r['error']}", file=sys.stderr)
    print(f"inferred {len(results) - len(failed)}/{len(results)} images into {out_dir}")
    return 1 if failed else 0


def _run_guarded(fn, entry):
    try:
        return fn(entry)
    except (PipelineError, OSError, ValueError) as err:
        return {"image_id": entry.image_id, "status": "failed", "error": str(err)}


def _collect(directory, suffix: str) -> dict[str, Path]:
    return {p.stem: p for p in sorted(Path(directory).glob(f"*{suffix}"))}


def _matched_ids(per_dir: list[dict[str, Path]], dirs) -> list[str]:
    id_sets = [set(d) for d in per_dir]
    if not all(s == id_sets[0] for s in id_sets[1:]) or not id_sets[0]:
        detail = {os.fspath(d): sorted(s)[:5] for d, s in zip(dirs, id_sets)}
        raise IdSetMismatch(f"input directories disagree on image ids (or are empty): {detail}")
    return sorted(id_sets[0])


def cmd_ensemble(args) -> int:
    config = _load_pipeline_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.method == "hard-vote":
        if len(args.inputs) != 3:
            raise ValueError(f"hard-vote needs exactly 3 input dirs, got {len(args.inputs)}")
        per_dir = [_collect(d, ".png") for d in args.inputs]
        ids = _matched_ids(per_dir, args.inputs)
        for image_id in ids:
            masks = [load_mask(d[image_id]) for d in per_dir]
            save_mask(hard_vote(masks), out_dir / f"{image_id}.png")
    else:
        per_dir = [_collect(d, ".pmap") for d in args.inputs]
        ids = _matched_ids(per_dir, args.inputs)
        for image_id in ids:
            maps = [load_prob_map(d[image_id]) for d in per_dir]
            save_mask(threshold(prob_average(maps), config.threshold),
                      out_dir / f"{image_id}.png")

    _atomic_write_json(
        {"method": args.method, "inputs": [os.fspath(d) for d in args.inputs],
         "image_ids": ids, "n_images": len(ids)},
        out_dir / "run_manifest.json",
    )
    print(f"ensembled {len(ids)} images ({args.method}) into {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    if args.reports:
        if args.pred or args.truth:
            raise ValueError("--reports cannot be combined with --pred/--truth")
        return _evaluate_reports(args)
    if not (args.pred and args.truth):
        raise ValueError("evaluate needs --pred and --truth (or --reports)")

    preds = _collect(args.pred, ".png")
    truths = _collect(args.truth, ".png")
    if set(preds) != set(truths) or not preds:
        missing = sorted(set(truths) - set(preds))[:5]
        extra = sorted(set(preds) - set(truths))[:5]
        raise IdSetMismatch(
            f"prediction/truth ids differ (or are empty): missing={missing}, extra={extra}"
        )
    ids = sorted(preds)
    pairs = {i: (load_mask(preds[i]), load_mask(truths[i])) for i in ids}
    per_image = {i: report_for(p, t).to_dict() for i, (p, t) in pairs.items()}
    if args.pooled:
        summary = pooled_report(list(pairs.values()))
    else:
        summary = mean_report([MetricReport.from_dict(per_image[i]) for i in ids])
    doc = {
        "n_images": len(ids),
        "pooled": bool(args.pooled),
        "per_image": per_image,
        "mean": summary.to_dict(),
    }
    _atomic_write_json(doc, args.out)
    print(f"challenge_score {summary.challenge_score:.4f} over {len(ids)} images -> {args.out}")
    return 0


def _evaluate_reports(args) -> int:
    fold_means = []
    for path in args.reports:
        with open(path) as fh:
            fold_means.append(json.load(fh)["mean"])
    keys = ["dsc", "jsc", "challenge_score", "mean_class_dice"]
    aggregate = {}
    for key in keys:
        mean, std = aggregate_folds([m[key] for m in fold_means])
        aggregate[key] = {"mean": mean, "std": std}
    doc = {"n_folds": len(fold_means), "folds": fold_means, "aggregate": aggregate}
    _atomic_write_json(doc, args.out)
    print(f"aggregated {len(fold_means)} folds -> {args.out} "
          f"(DSC {aggregate['dsc']['mean']:.4f} +/- {aggregate['dsc']['std']:.4f})")
    return 0
