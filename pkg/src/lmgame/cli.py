"""Operator entry point: corpus prep, model training, experiments, serving.

Reports are emitted as data (JSON plus CSV series), never rendered images.
Identical config + seed reproduce byte-identical payloads. Exit codes:
0 success, 2 config error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import click

import lmgame
from lmgame.config import (
    ConfigError,
    build_platform,
    experiment_config,
    experiment_target,
    load_config,
    parse_allowed,
)
from lmgame.elicitation import PRESETS
from lmgame.estimator import bootstrap_over_users, estimate_from_records
from lmgame.predictors.ngram import ngram_train
from lmgame.records import read_jsonl, write_jsonl
from lmgame.simulation import (
    ExperimentConfig,
    bias_curve,
    rounding_sweep,
    run_estimation_experiment,
    sample_prompts,
    split_comparison,
    top1_accuracy,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


class DataError(ValueError):
    pass


@dataclass
class ReportBundle:
    kind: str
    payload: dict
    csv_rows: list[list] | None = None
    provenance: dict | None = None


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(bundle: ReportBundle, out_dir: Path) -> list[Path]:
    doc = {
        "kind": bundle.kind,
        "payload": bundle.payload,
        "provenance": bundle.provenance or {},
    }
    json_path = out_dir / f"{bundle.kind}.json"
    _atomic_write(json_path, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    written = [json_path]
    if bundle.csv_rows is not None:
        csv_path = out_dir / f"{bundle.kind}.csv"
        lines = [",".join(str(cell) for cell in row) for row in bundle.csv_rows]
        _atomic_write(csv_path, "\n".join(lines) + "\n")
        written.append(csv_path)
    return written


def _provenance(cfg: dict, seed: int | None) -> dict:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return {"config": clean, "seed": seed, "version": lmgame.__version__}


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as err:
            click.echo(f"config error: {err}", err=True)
            sys.exit(EXIT_CONFIG)
        except (DataError, FileNotFoundError, ValueError) as err:
            click.echo(f"data error: {err}", err=True)
            sys.exit(EXIT_DATA)
        except click.ClickException:
            raise
        except Exception as err:  # noqa: BLE001 - the CLI boundary
            click.echo(f"runtime error: {err}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


@click.group()
@click.option("--config", "config_path", default="lmgame.json", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out-dir", default="reports", show_default=True)
@click.pass_context
def main(ctx, config_path, seed, out_dir):
    """Next-token prediction games and perplexity estimation."""
    ctx.ensure_object(dict)
    ctx.obj.update(config_path=config_path, seed=seed, out_dir=Path(out_dir))


def _load(ctx, need_generator=False):
    cfg = load_config(ctx.obj["config_path"])
    platform = build_platform(cfg, need_generator=need_generator)
    if ctx.obj["seed"] is not None:
        platform.seed = ctx.obj["seed"]
    return cfg, platform


@main.command()
@click.pass_context
@handles_errors
def prepare(ctx):
    """Validate and freeze corpus + vocab into an artifact directory."""
    cfg, platform = _load(ctx)
    out_dir = ctx.obj["out_dir"] / "corpus_artifacts"
    docs = {
        name: [list(doc) for doc in split.documents]
        for name, split in platform.splits.items()
    }
    corpus_payload = json.dumps(
        {
            "splits": {
                name: {
                    "documents": docs[name],
                    "source_digest": platform.splits[name].source_digest,
                }
                for name in sorted(docs)
            },
            "vocab_size": len(platform.vocab),
        },
        sort_keys=True,
    )
    _atomic_write(out_dir / "corpus.json", corpus_payload + "\n")
    checksums = {
        "corpus.json": hashlib.sha256(corpus_payload.encode()).hexdigest(),
        "vocab_size": len(platform.vocab),
        "splits": {
            name: platform.splits[name].source_digest for name in sorted(platform.splits)
        },
    }
    _atomic_write(
        out_dir / "checksums.json", json.dumps(checksums, sort_keys=True, indent=2) + "\n"
    )
    click.echo(f"prepared {len(platform.splits)} split(s) into {out_dir}")


@main.command("train-ngram")
@click.option("--order", type=int, required=True)
@click.option("--smoothing-k", type=float, default=1.0, show_default=True)
@click.option("--split", "split_name", default="train", show_default=True)
@click.option("--out", "out_path", required=True)
@click.pass_context
@handles_errors
def train_ngram(ctx, order, smoothing_k, split_name, out_path):
    """Train an add-k n-gram model and save it as JSON."""
    _, platform = _load(ctx)
    model = ngram_train(
        platform.split(split_name), order, smoothing_k, vocab_size=len(platform.vocab)
    )
    model.save(out_path)
    click.echo(f"saved {model.display_name} to {out_path}")


@main.command("eval-top1")
@click.option("--split", "split_name", default="validation", show_default=True)
@click.option("--prompts", "n_prompts", type=int, default=200, show_default=True)
@click.option(
    "--filter",
    "which_filter",
    type=click.Choice(["none", "exclude_visually_empty", "word_tokens_only"]),
    default="none",
    show_default=True,
)
@click.option("--export-file", default=None, help="Per-participant guesses (JSON lines).")
@click.pass_context
@handles_errors
def eval_top1(ctx, split_name, n_prompts, which_filter, export_file):
    """Top-1 accuracy of the configured generator, plus per-participant points."""
    cfg, platform = _load(ctx, need_generator=True)
    prompts = sample_prompts(
        platform.split(split_name), n_prompts, platform.max_context, platform.seed
    )
    report = top1_accuracy(platform.generator, prompts, platform.vocab, which_filter)
    payload = {
        "model": {platform.generator.display_name: report.to_dict()},
        "participants": {},
        "filter": which_filter,
    }
    if export_file:
        by_participant: dict[str, list[dict]] = {}
        for lineno, line in enumerate(Path(export_file).read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                by_participant.setdefault(rec["participant_id"], []).append(rec)
            except (json.JSONDecodeError, KeyError) as err:
                raise DataError(f"{export_file}:{lineno}: bad guess record: {err}") from None
        for pid, recs in sorted(by_participant.items()):
            scored = [r for r in recs if not r["excluded"]]
            correct = sum(1 for r in scored if r["correct"])
            payload["participants"][pid] = {
                "guesses": len(recs),
                "excluded": len(recs) - len(scored),
                "accuracy": correct / len(scored) if scored else None,
            }
    csv_rows = [["who", "accuracy", "n"]]
    csv_rows.append(
        [platform.generator.display_name, repr(report.accuracy), report.n_used]
    )
    for pid, row in payload["participants"].items():
        if row["accuracy"] is not None:
            csv_rows.append([pid, repr(row["accuracy"]), row["guesses"]])
    bundle = ReportBundle(
        "accuracy_histogram", payload, csv_rows, _provenance(cfg, platform.seed)
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command()
@click.option("--records", "records_path", default=None, help="Ratio records (JSON lines).")
@click.option("--simulate", "do_simulate", is_flag=True, help="Simulate records instead.")
@click.option("--bootstrap", "do_bootstrap", is_flag=True, help="Add bootstrap quantiles.")
@click.option("--bootstrap-iterations", type=int, default=100, show_default=True)
@click.pass_context
@handles_errors
def estimate(ctx, records_path, do_simulate, do_bootstrap, bootstrap_iterations):
    """Estimate loss and perplexity from ratio records (a file or a simulation)."""
    cfg, platform = _load(ctx, need_generator=do_simulate)
    if bool(records_path) == do_simulate:
        raise ConfigError("pass exactly one of --records or --simulate")
    truth = None
    if do_simulate:
        target = experiment_target(cfg, platform)
        exp_cfg = experiment_config(cfg, platform, seed=ctx.obj["seed"])
        result = run_estimation_experiment(
            exp_cfg, platform.split(cfg.get("experiment", {}).get("split", "validation")),
            platform.generator, target,
        )
        records, report, truth = result.records, result.estimated, result.truth
    else:
        try:
            records = read_jsonl(records_path)
        except ValueError as err:
            raise DataError(str(err)) from None
        if not records:
            raise DataError(f"{records_path} contains no ratio records")
        report = estimate_from_records(records, display_name=records_path)
    payload = {"estimate": report.to_dict(), "estimate_bits": report.to_bits_dict()}
    if truth is not None:
        payload["truth"] = truth.to_dict()
    if do_bootstrap:
        payload["bootstrap"] = bootstrap_over_users(
            records, iterations=bootstrap_iterations, seed=platform.seed
        ).to_dict()
    csv_rows = [["name", "perplexity", "lower", "upper"]]
    csv_rows.append(
        [
            report.display_name or "estimate",
            repr(report.perplexity),
            repr(report.lower),
            repr(report.upper),
        ]
    )
    bundle = ReportBundle(
        "perplexity_bars", payload, csv_rows, _provenance(cfg, platform.seed)
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command()
@click.option("--out", "out_path", default=None, help="Also write records (JSON lines).")
@click.pass_context
@handles_errors
def simulate(ctx, out_path):
    """Run one end-to-end estimation experiment and report estimate vs truth."""
    cfg, platform = _load(ctx, need_generator=True)
    target = experiment_target(cfg, platform)
    exp_cfg = experiment_config(cfg, platform, seed=ctx.obj["seed"])
    split = platform.split(cfg.get("experiment", {}).get("split", "validation"))
    result = run_estimation_experiment(exp_cfg, split, platform.generator, target)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            write_jsonl(result.records, fh)
    payload = {
        "estimate": result.estimated.to_dict(),
        "truth": result.truth.to_dict(),
        "generator": result.generator_report.to_dict(),
        "bias_nats": result.bias,
    }
    csv_rows = [["prompt_id", "log_term"]]
    from lmgame.estimator import estimate_h_over_g, group_by_prompt

    groups = group_by_prompt(result.records)
    for pid in sorted(groups):
        csv_rows.append([pid, repr(estimate_h_over_g(groups[pid]).log_term)])
    bundle = ReportBundle(
        "perplexity_bars", payload, csv_rows, _provenance(cfg, exp_cfg.seed)
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command("bias-curve")
@click.option("--n-values", default="5,10,20,40", show_default=True)
@click.option("--seeds", "n_seeds", type=int, default=10, show_default=True)
@click.pass_context
@handles_errors
def cmd_bias_curve(ctx, n_values, n_seeds):
    """Estimation bias (estimate minus truth) for varying candidates per prompt."""
    cfg, platform = _load(ctx, need_generator=True)
    target = experiment_target(cfg, platform)
    exp_cfg = experiment_config(cfg, platform, seed=ctx.obj["seed"])
    split = platform.split(cfg.get("experiment", {}).get("split", "validation"))
    ns = [int(x) for x in n_values.split(",") if x.strip()]
    rows = bias_curve(exp_cfg, split, platform.generator, target, ns, seeds=range(n_seeds))
    csv_rows = [["n", "mean_bias_nats", "sd_bias_nats"]]
    for row in rows:
        csv_rows.append([row["n"], repr(row["mean_bias_nats"]), repr(row["sd_bias_nats"])])
    bundle = ReportBundle(
        "bias_curve", {"rows": rows}, csv_rows, _provenance(cfg, exp_cfg.seed)
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command("rounding-sweep")
@click.option("--presets", default="eleven,five,three", show_default=True)
@click.pass_context
@handles_errors
def cmd_rounding_sweep(ctx, presets):
    """Estimated perplexity under increasingly coarse answer rounding."""
    cfg, platform = _load(ctx, need_generator=True)
    target = experiment_target(cfg, platform)
    exp_cfg = experiment_config(cfg, platform, seed=ctx.obj["seed"])
    split = platform.split(cfg.get("experiment", {}).get("split", "validation"))
    chosen = {}
    for name in presets.split(","):
        name = name.strip()
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r} (have {sorted(PRESETS)})")
        chosen[name] = PRESETS[name]
    reports = rounding_sweep(exp_cfg, split, platform.generator, target, chosen)
    payload = {name: rep.to_dict() for name, rep in reports.items()}
    csv_rows = [["preset", "perplexity", "loss_nats"]]
    for name in chosen:
        csv_rows.append([name, repr(reports[name].perplexity), repr(reports[name].loss)])
    bundle = ReportBundle(
        "rounding_table", payload, csv_rows, _provenance(cfg, exp_cfg.seed)
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command("split-table")
@click.option("--prompts", "n_prompts", type=int, default=400, show_default=True)
@click.option("--train-split", default="train", show_default=True)
@click.option("--val-split", default="validation", show_default=True)
@click.pass_context
@handles_errors
def cmd_split_table(ctx, n_prompts, train_split, val_split):
    """Train/validation accuracy and perplexity table for the experiment target."""
    cfg, platform = _load(ctx)
    target = experiment_target(cfg, platform)
    seed = platform.seed
    train_prompts = sample_prompts(
        platform.split(train_split), n_prompts, platform.max_context, seed
    )
    val_prompts = sample_prompts(
        platform.split(val_split), n_prompts, platform.max_context, seed + 1
    )
    table = split_comparison(target, train_prompts, val_prompts, platform.vocab)
    csv_rows = [["split", "perplexity", "loss_2se_nats", "accuracy", "accuracy_2se"]]
    for name, row in table.items():
        csv_rows.append(
            [
                name,
                repr(row["perplexity"]),
                repr(row["loss_2se_nats"]),
                repr(row["accuracy"]),
                repr(row["accuracy_2se"]),
            ]
        )
    bundle = ReportBundle(
        "split_table",
        {"model": target.display_name, "splits": table},
        csv_rows,
        _provenance(cfg, seed),
    )
    for path in write_bundle(bundle, ctx.obj["out_dir"]):
        click.echo(str(path))


@main.command()
@click.option("--game", type=click.Choice(["top1", "compare"]), default="compare")
@click.option("--set", "set_id", default="")
@click.option("--participant", default="")
@click.option("--out", "out_path", required=True)
@click.pass_context
@handles_errors
def export(ctx, game, set_id, participant, out_path):
    """Export game records from the service data directory (offline)."""
    cfg, platform = _load(ctx, need_generator=True)
    store = _open_store(cfg, platform)
    lines = []
    if game == "top1":
        for rec in store.export_guesses(set_id or None, participant or None):
            lines.append(json.dumps(rec, sort_keys=True))
    else:
        from lmgame.records import to_export_dicts

        for sample in store.export_ratio_samples(set_id or None, participant or None):
            lines.extend(json.dumps(o, sort_keys=True) for o in to_export_dicts(sample))
    Path(out_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    click.echo(f"wrote {len(lines)} record(s) to {out_path}")


def _open_store(cfg: dict, platform):
    from lmgame.service.sets import build_question_set, load_question_sets, save_question_sets
    from lmgame.service.store import EventLog, Store

    service_cfg = cfg.get("service")
    if not service_cfg:
        raise ConfigError("config needs a service section")
    data_dir = platform.base_dir / service_cfg.get("data_dir", "data")
    data_dir.mkdir(parents=True, exist_ok=True)
    sets_path = data_dir / "question_sets.json"
    if sets_path.exists():
        sets = load_question_sets(sets_path)
    else:
        sets = {}
        for i, spec in enumerate(service_cfg.get("sets", [])):
            sets[spec["id"]] = build_question_set(
                set_id=spec["id"],
                game=spec["game"],
                split=platform.split(spec.get("split", "validation")),
                tokenizer=platform.tokenizer,
                n_prompts=int(spec.get("prompts", 40)),
                seed=int(spec.get("seed", platform.seed * 1000 + i)),
                generator=platform.generator,
                candidates_per_prompt=int(spec.get("candidates_per_prompt", 10)),
                max_context=platform.max_context,
            )
        save_question_sets(sets, sets_path)
    log = EventLog(data_dir / "events.jsonl")
    allowed = platform.allowed
    if allowed is None:
        raise ConfigError("the service needs a discrete allowed set")
    return Store(log, sets, platform.vocab, platform.tokenizer, allowed)


@main.command()
@click.option("--port", type=int, default=None, help="Override the configured port.")
@click.pass_context
@handles_errors
def serve(ctx, port):
    """Run the live game service until interrupted."""
    import signal

    import uvicorn

    from lmgame.service.app import create_app

    cfg, platform = _load(ctx, need_generator=True)
    store = _open_store(cfg, platform)
    app = create_app(store)
    chosen_port = port or int(cfg.get("service", {}).get("port", 8625))
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=chosen_port, log_level="warning")
    )

    # Graceful exit 0 on SIGTERM/SIGINT: uvicorn re-raises the signal with
    # handlers restored after shutdown, and this handler absorbs it.
    def _request_stop(signum, frame):
        server.should_exit = True

    signal.signal(signal.SIGTERM, _request_stop)
    signal.signal(signal.SIGINT, _request_stop)
    try:
        server.run()
    finally:
        store.log.close()


if __name__ == "__main__":
    main()
