"""Command-line front end for seeded, file-based, reproducible runs.

Every artifact embeds the producing command, a config hash, the seed and a
format version. Exit codes: 0 success, 1 usage/config error, 2 runtime
error, 3 acceptance-threshold failure.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import subprocess
import sys
import zlib
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np

from shapegate import (
    datagen,
    encoding,
    learners,
    pipeline,
    registry as reg,
    stats,
)
from shapegate.datagen import GenerationConfig

ARTIFACT_FORMAT_VERSION = 1
LOW_SUPPORT_POSITIVES = 52

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_THRESHOLD = 3


def child_seed(seed: int, op_name: str, rep: int) -> int:
    return (seed ^ zlib.crc32(f"{op_name}:{rep}".encode())) & 0x7FFFFFFF


def config_hash(params: Dict) -> str:
    payload = json.dumps(params, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def artifact_header(command: str, params: Dict, seed: int) -> Dict:
    return {
        "command": command,
        "config_hash": config_hash(params),
        "seed": seed,
        "artifact_format_version": ARTIFACT_FORMAT_VERSION,
    }


def write_json(path: Path, obj: Dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def resolve_ops(names: str) -> List[reg.OperatorSpec]:
    registry = reg.default_registry()
    if names == "all":
        return registry.list_operators()
    out = []
    for nm in names.split(","):
        nm = nm.strip()
        if nm not in registry:
            raise click.UsageError(f"unknown operator {nm!r}")
        out.append(registry.get(nm))
    if not out:
        raise click.UsageError("no operators selected")
    return out


def load_config_defaults(path: Optional[str]) -> Dict:
    """INI-style config: a section per command, key=value entries; flags
    override file values."""
    if not path:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise click.UsageError(f"config file {path!r} not readable")
    return {section: dict(parser[section]) for section in parser.sections()}


@click.group()
@click.option("--config", "config_path", default=None, help="INI config file.")
@click.option(
    "--out",
    default=None,
    help="Output directory (env SHAPEGATE_OUT, default ./runs).",
)
@click.pass_context
def cli(ctx, config_path, out):
    """Learned input-validity pre-filtering for operator fuzzing."""
    ctx.ensure_object(dict)
    defaults = load_config_defaults(config_path)
    ctx.default_map = defaults
    out = out or defaults.get("shapegate", {}).get("out")
    out = out or os.environ.get("SHAPEGATE_OUT", "runs")
    ctx.obj["out"] = Path(out)


@cli.command()
@click.option("--export", "export_path", default=None, help="Write catalog to file.")
@click.pass_context
def ops(ctx, export_path):
    """Print the operator catalog."""
    text = reg.default_registry().catalog_text()
    if export_path:
        Path(export_path).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


def _dataset_path(out: Path, op: str, strategy: str, seed: int) -> Path:
    return out / "datasets" / f"{op}-{strategy}-seed{seed}.jsonl"


@cli.command()
@click.option("--op", "op_names", default="all", help="Operator name(s) or 'all'.")
@click.option("--strategy", type=click.Choice(["random", "pairwise", "weak"]), default="random")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--csv/--no-csv", "write_csv", default=False, help="Also write encoded CSV.")
@click.pass_context
def gen(ctx, op_names, strategy, relaxation, n, seed, write_csv):
    """Generate labeled datasets."""
    out: Path = ctx.obj["out"]
    params = {"op": op_names, "strategy": strategy, "relaxation": relaxation, "n": n, "seed": seed}
    for op in resolve_ops(op_names):
        cfg = GenerationConfig(n_samples=n, seed=child_seed(seed, op.name, 0))
        ds = datagen.generate_dataset(op, cfg, strategy, relaxation)
        path = _dataset_path(out, op.name, strategy, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(datagen.dataset_to_jsonl(ds), encoding="utf-8")
        if write_csv:
            schema = encoding.build_schema(op.space)
            X = encoding.encode_batch(ds.tuples(), op.space, schema)
            path.with_suffix(".csv").write_text(
                encoding.dataset_to_csv(X, ds.labels(), schema), encoding="utf-8"
            )
        pos, neg, ratio = datagen.class_stats(ds)
        meta = artifact_header("gen", params, seed)
        meta.update({"operator": op.name, "positives": pos, "negatives": neg,
                     "positive_ratio": ratio, "file": str(path)})
        write_json(path.with_suffix(".meta.json"), meta)
        click.echo(f"{op.name}: {len(ds)} samples, {pos} positive -> {path}")


@cli.command()
@click.option("--op", "op_names", default="all")
@click.option("--strategy", type=click.Choice(["random", "pairwise", "weak"]), default="pairwise")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=10_000, show_default=True)
@click.option("--repetitions", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--split-ratio", default=0.8, show_default=True)
@click.pass_context
def train(ctx, op_names, strategy, relaxation, n, repetitions, seed, split_ratio):
    """Train leaderboards; write best models and per-repetition reports."""
    out: Path = ctx.obj["out"]
    params = {"op": op_names, "strategy": strategy, "relaxation": relaxation,
              "n": n, "repetitions": repetitions, "seed": seed, "split_ratio": split_ratio}
    for op in resolve_ops(op_names):
        schema = encoding.build_schema(op.space)
        reps = []
        best_model = None
        for rep in range(repetitions):
            rseed = child_seed(seed, op.name, rep)
            cfg = GenerationConfig(n_samples=n, seed=rseed)
            ds = datagen.generate_dataset(op, cfg, strategy, relaxation)
            tr, te = datagen.split_dataset(ds, split_ratio, rseed)
            Xtr = encoding.encode_batch(tr.tuples(), op.space, schema)
            lb = learners.fit_leaderboard(Xtr, tr.labels(), seed=rseed)
            model = lb.best()
            model.schema_hash = schema.hash()
            Xte = encoding.encode_batch(te.tuples(), op.space, schema)
            pred, _ = learners.predict_batch(model, Xte)
            rep_eval = stats.precision_recall(stats.confusion(pred, te.labels()))
            pos = int(tr.labels().sum())
            reps.append({
                "repetition": rep,
                "seed": rseed,
                "best_family": lb.entries[0].family,
                "leaderboard": lb.to_rows(),
                "train_positives": pos,
                "low_support": pos < LOW_SUPPORT_POSITIVES,
                "heldout": rep_eval.to_dict(),
            })
            if rep == 0:
                best_model = model
        model_path = out / "models" / f"{op.name}-{strategy}-seed{seed}.model.json"
        model_path.parent.mkdir(parents=True, exist_ok=True)
        learners.save_model(best_model, model_path)

        def _mean(key):
            vals = [r["heldout"][key] for r in reps if r["heldout"][key] is not None]
            return float(np.mean(vals)) if vals else None

        report = artifact_header("train", params, seed)
        report.update({
            "operator": op.name,
            "repetitions": reps,
            "mean_precision": _mean("precision"),
            "mean_recall": _mean("recall"),
            "mean_f1": _mean("f1"),
            "low_support": any(r["low_support"] for r in reps),
            "model_file": str(model_path),
        })
        write_json(out / "reports" / f"train-{op.name}-{strategy}-seed{seed}.json", report)
        flag = " LOW_SUPPORT" if report["low_support"] else ""
        click.echo(
            f"{op.name}: best={reps[0]['best_family']} "
            f"meanP={report['mean_precision']} meanR={report['mean_recall']}{flag}"
        )


@cli.command("eval")
@click.option("--op", "op_name", required=True)
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--strategy", type=click.Choice(["random", "pairwise", "weak"]), default="random")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=2_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def eval_cmd(ctx, op_name, model_path, strategy, relaxation, n, seed):
    """Evaluate a saved model on a fresh labeled dataset."""
    out: Path = ctx.obj["out"]
    params = {"op": op_name, "model": model_path, "strategy": strategy,
              "relaxation": relaxation, "n": n, "seed": seed}
    op = resolve_ops(op_name)[0]
    model = learners.load_model(model_path)
    ds = datagen.generate_dataset(op, GenerationConfig(n_samples=n, seed=seed), strategy, relaxation)
    schema = encoding.build_schema(op.space)
    X = encoding.encode_batch(ds.tuples(), op.space, schema)
    pred, _ = learners.predict_batch(model, X)
    rep = stats.precision_recall(stats.confusion(pred, ds.labels()))
    report = artifact_header("eval", params, seed)
    report.update({"operator": op.name, "eval": rep.to_dict()})
    write_json(out / "reports" / f"eval-{op.name}-seed{seed}.json", report)
    click.echo(json.dumps(rep.to_dict()))


@cli.command()
@click.option("--op", "op_name", required=True)
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--strategy", type=click.Choice(["random", "pairwise", "weak"]), default="random")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=50_000, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.pass_context
def generalize(ctx, op_name, model_path, strategy, relaxation, n, seed):
    """Evaluate a model on a large fresh sample."""
    out: Path = ctx.obj["out"]
    params = {"op": op_name, "model": model_path, "strategy": strategy,
              "relaxation": relaxation, "n": n, "seed": seed}
    op = resolve_ops(op_name)[0]
    model = learners.load_model(model_path)
    rep = pipeline.generalize(op, model, n=n, seed=seed, strategy=strategy, relax=relaxation)
    report = artifact_header("generalize", params, seed)
    report.update(rep.to_dict())
    write_json(out / "reports" / f"generalize-{op.name}-seed{seed}.json", report)
    click.echo(json.dumps(rep.to_dict()))


@cli.command()
@click.option("--op", "op_name", required=True)
@click.option("--mode", type=click.Choice(["unfiltered", "filtered"]), default="unfiltered")
@click.option("--model", "model_path", default=None, type=click.Path(exists=True))
@click.option("--generator", "gen_kind", type=click.Choice(["random", "weak"]), default="weak")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=5_000, show_default=True)
@click.option("--batch-size", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--sleep/--no-sleep", default=True, help="Simulate per-call latency.")
@click.pass_context
def fuzz(ctx, op_name, mode, model_path, gen_kind, relaxation, n, batch_size, seed, sleep):
    """Run one fuzzing campaign."""
    out: Path = ctx.obj["out"]
    params = {"op": op_name, "mode": mode, "model": model_path, "generator": gen_kind,
              "relaxation": relaxation, "n": n, "batch_size": batch_size, "seed": seed}
    op = resolve_ops(op_name)[0]
    generator = (
        pipeline.random_generator(op)
        if gen_kind == "random"
        else pipeline.weak_generator(op, relaxation)
    )
    if mode == "unfiltered":
        rep = pipeline.run_unfiltered(op, generator, n, seed, sleep=sleep)
    else:
        if not model_path:
            raise click.UsageError("filtered mode requires --model")
        filt = pipeline.ModelFilter(learners.load_model(model_path))
        rep = pipeline.run_filtered(op, generator, filt, n, seed, batch_size=batch_size, sleep=sleep)
    report = artifact_header("fuzz", params, seed)
    report.update(rep.to_dict())
    write_json(out / "reports" / f"fuzz-{op.name}-{mode}-seed{seed}.json", report)
    click.echo(json.dumps(rep.to_dict()))


@cli.command()
@click.option("--ops", "op_names", default="all")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--n", default=5_000, show_default=True)
@click.option("--train-n", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--batch-size", default=None, type=int)
@click.option("--sleep/--no-sleep", default=True)
@click.pass_context
def compare(ctx, op_names, relaxation, n, train_n, seed, batch_size, sleep):
    """Paired unfiltered vs filtered campaigns across operators, with
    pass-rate statistics."""
    out: Path = ctx.obj["out"]
    params = {"ops": op_names, "relaxation": relaxation, "n": n,
              "train_n": train_n, "seed": seed, "batch_size": batch_size}
    ops_ = resolve_ops(op_names)
    if len(ops_) < 2:
        raise click.UsageError("compare needs at least 2 operators")
    filters: Dict[str, object] = {}
    for op in ops_:
        rseed = child_seed(seed, op.name, 0)
        ds = datagen.generate_dataset(
            op, GenerationConfig(n_samples=train_n, seed=rseed), "weak", relaxation
        )
        schema = encoding.build_schema(op.space)
        X = encoding.encode_batch(ds.tuples(), op.space, schema)
        model = learners.train(
            X, ds.labels(), learners.default_config("hist_gbdt", seed=rseed)
        )
        filters[op.name] = pipeline.ModelFilter(model)
    result = pipeline.compare(
        ops_, filters, n=n, seed=seed, relax=relaxation, batch_size=batch_size, sleep=sleep
    )
    report = artifact_header("compare", params, seed)
    report.update({
        "mean_pass_rate_unfiltered": result.mean_pass_rate_unfiltered,
        "mean_pass_rate_filtered": result.mean_pass_rate_filtered,
        "wilcoxon_p": result.wilcoxon.p_value,
        "cohens_d": result.cohens_d,
        "incomplete": list(result.incomplete),
        "reports": [
            {"unfiltered": u.to_dict(), "filtered": f.to_dict()}
            for u, f in result.pairs
        ],
    })
    write_json(out / "reports" / f"compare-seed{seed}.json", report)
    (out / "reports" / f"compare-seed{seed}.csv").write_text(
        result.summary_csv(), encoding="utf-8"
    )
    click.echo(
        f"pass rate {result.mean_pass_rate_unfiltered:.3f} -> "
        f"{result.mean_pass_rate_filtered:.3f} (wilcoxon p={result.wilcoxon.p_value:.4g})"
    )


@cli.command()
@click.option("--ops", "op_names", default="all")
@click.option("--relaxation", type=click.Choice(list(datagen.RELAXATION_LEVELS)), default="partial")
@click.option("--train-n", default=10_000, show_default=True)
@click.option("--n", default=20_000, show_default=True, help="Valid samples to draw per operator.")
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def bugs(ctx, op_names, relaxation, train_n, n, seed):
    """Injected-bug retention campaigns."""
    out: Path = ctx.obj["out"]
    params = {"ops": op_names, "relaxation": relaxation, "train_n": train_n, "n": n, "seed": seed}
    reports = []
    for op in resolve_ops(op_names):
        if op.bug is None:
            continue
        rseed = child_seed(seed, op.name, 0)
        ds = datagen.generate_dataset(
            op, GenerationConfig(n_samples=train_n, seed=rseed), "weak", relaxation
        )
        schema = encoding.build_schema(op.space)
        X = encoding.encode_batch(ds.tuples(), op.space, schema)
        model = learners.train(
            X, ds.labels(), learners.default_config("hist_gbdt", seed=rseed)
        )
        rep = pipeline.bug_campaign(op, pipeline.ModelFilter(model), n, rseed)
        reports.append(rep.to_dict())
        click.echo(
            f"{op.name}: {rep.triggers_predicted_valid}/{rep.triggers_found} "
            f"triggers retained ({rep.success_ratio:.0%})"
        )
    report = artifact_header("bugs", params, seed)
    report["campaigns"] = reports
    write_json(out / "reports" / f"bugs-seed{seed}.json", report)


# Default cross-check set: operators whose real-framework semantics match
# the stub oracle closely enough to be useful as a fidelity check. The
# bridge also maps max_pool2d and pairwise_distance, but the real framework
# skips most parameter validation for pooling and broadcasts distance
# inputs freely, so measured agreement on random tuples stays well under
# 95% for reasons unrelated to stub correctness; pass --ops explicitly to
# include them.
BRIDGE_OPS = (
    "bmm",
    "dot",
    "broadcast_to",
    "cartesian_prod",
    "top_k",
    "split",
    "index_select",
    "addr",
)


def run_xcheck(
    ops_: Sequence[reg.OperatorSpec],
    bridge_cmd: Sequence[str],
    n: int,
    seed: int,
) -> Dict:
    """Stream seeded tuples to the real-framework bridge and compare its
    valid/invalid labels against the stub oracles."""
    proc = subprocess.Popen(
        list(bridge_cmd),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
        bufsize=1,
    )
    results = []
    try:
        req_id = 0
        for op in ops_:
            cfg = GenerationConfig(n_samples=n, seed=child_seed(seed, op.name, 0))
            tuples = datagen.gen_random(op.space, cfg)
            agree = 0
            disagreements = []
            for t in tuples:
                req_id += 1
                req = {
                    "id": req_id,
                    "op": op.name,
                    "args": [datagen.value_to_obj(v) for v in t],
                }
                proc.stdin.write(json.dumps(req) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
                if not line:
                    raise RuntimeError("bridge closed the stream")
                resp = json.loads(line)
                if resp.get("id") != req_id:
                    raise RuntimeError("bridge response id mismatch")
                if resp.get("error") == "UNSUPPORTED":
                    raise RuntimeError(f"bridge does not support {op.name}")
                stub_valid = op.oracle(t).ok
                real_valid = bool(resp["valid"])
                if stub_valid == real_valid:
                    agree += 1
                else:
                    disagreements.append(
                        {
                            "args": req["args"],
                            "stub": stub_valid,
                            "real": real_valid,
                            "real_error": resp.get("error"),
                        }
                    )
            results.append(
                {
                    "operator": op.name,
                    "n": len(tuples),
                    "agreement": agree / len(tuples),
                    "disagreements": disagreements,
                }
            )
    finally:
        if proc.stdin:
            proc.stdin.close()
        proc.wait(timeout=30)
    return {"operators": results}


@cli.command()
@click.option("--ops", "op_names", default=",".join(BRIDGE_OPS))
@click.option("--n", default=1_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--bridge-cmd",
    default="node frontend/dist/bridge.js",
    show_default=True,
    help="Command that launches the real-framework bridge.",
)
@click.option("--threshold", default=0.95, show_default=True)
@click.pass_context
def xcheck(ctx, op_names, n, seed, bridge_cmd, threshold):
    """Cross-check stub oracles against the real-framework bridge."""
    out: Path = ctx.obj["out"]
    params = {"ops": op_names, "n": n, "seed": seed, "bridge_cmd": bridge_cmd}
    ops_ = resolve_ops(op_names)
    result = run_xcheck(ops_, bridge_cmd.split(), n, seed)
    report = artifact_header("xcheck", params, seed)
    report.update(result)
    write_json(out / "reports" / f"xcheck-seed{seed}.json", report)
    failed = False
    for r in result["operators"]:
        mark = "ok " if r["agreement"] >= threshold else "LOW"
        if r["agreement"] < threshold:
            failed = True
        click.echo(f"{mark} {r['operator']:18s} agreement {r['agreement']:.3f}")
    if failed:
        sys.exit(EXIT_THRESHOLD)


def main():
    try:
        cli(standalone_mode=False)
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    except SystemExit:
        raise
    except Exception as e:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)


if __name__ == "__main__":
    main()
