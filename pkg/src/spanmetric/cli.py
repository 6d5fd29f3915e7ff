"""Command-line harness: scoring, training, evaluation, perturbation, stress.

Exit codes are part of the contract so shell pipelines can branch:
0 success, 2 malformed input record, 3 unsatisfiable evaluation mode,
4 supervision mismatch, 5 id alignment failure. Every command is
deterministic given its inputs and seed; output files are written atomically
and JSONL outputs get a `<name>.run.json` sidecar recording the resolved
configuration and toolkit version. Report files embed both inline.
"""

from __future__ import annotations

import dataclasses
import json
import random
import sys
from collections import Counter
from pathlib import Path

import click
import numpy as np

from . import __version__, io, perturb, stats, synthdata
from .annotations import Segment, Severity, mqm_score
from .metricnet import (
    EncoderConfig,
    ModeUnsatisfiableError,
    PassOutputs,
    PhaseSpec,
    SupervisionError,
    Vocab,
    examples_from_segments,
    load_checkpoint,
    predict_segments,
    run_curriculum,
    save_checkpoint,
    tokenize,
)
from .scoring import (
    MODES,
    AggregationWeights,
    WordDistribution,
    compose_inference,
)

EXIT_PARSE = 2
EXIT_MODE = 3
EXIT_SUPERVISION = 4
EXIT_ALIGNMENT = 5


def _abort(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


class ConfigCommand(click.Command):
    """Lets an optional JSON config file supply defaults; flags win."""

    def invoke(self, ctx: click.Context):
        config_path = ctx.params.get("config")
        if config_path:
            with open(config_path, encoding="utf-8") as f:
                file_config = json.load(f)
            for key, value in file_config.items():
                name = key.replace("-", "_")
                if name in ctx.params and ctx.get_parameter_source(
                    name
                ) == click.core.ParameterSource.DEFAULT:
                    ctx.params[name] = value
        return super().invoke(ctx)


def _config_option(fn):
    return click.option(
        "--config", type=click.Path(exists=True, dir_okay=False),
        help="JSON file of flag defaults; explicit flags take precedence.",
    )(fn)


def _resolved_config(ctx: click.Context) -> dict:
    params = {}
    for key, value in sorted(ctx.params.items()):
        if isinstance(value, tuple):
            value = list(value)
        params[key] = value
    return {"command": ctx.command.name, "version": __version__,
            "parameters": params}


def _write_run_sidecar(out_path: str, ctx: click.Context, **extra) -> None:
    payload = _resolved_config(ctx)
    payload.update(extra)
    io.write_json(str(out_path) + ".run.json", payload)


def _read_segment_records(path: str) -> list[tuple[Segment, dict]]:
    try:
        return io.read_segment_records(path)
    except io.ParseError as exc:
        _abort(EXIT_PARSE, str(exc))


def _read_records(path: str) -> list[dict]:
    try:
        return io.read_records(path)
    except io.ParseError as exc:
        _abort(EXIT_PARSE, str(exc))


def _parse_weights(text: str | None) -> AggregationWeights:
    if text is None:
        return AggregationWeights()
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise click.BadParameter("need 4 comma-separated weights (src,ref,src+ref,mqm)")
    return AggregationWeights(*parts)


@click.group()
@click.version_option(version=__version__, prog_name="spanmetric")
def main() -> None:
    """Span-level MT quality metric toolkit."""


# ---------------------------------------------------------------- score


def _score_record(seg_id: str, mode: str, result) -> dict:
    bundle = result.bundle
    return {
        "id": seg_id,
        "mode": mode,
        "score": result.score,
        "bundle": {"src": bundle.src, "ref": bundle.ref,
                   "src_ref": bundle.src_ref, "mqm": bundle.mqm},
        "spans": [io.span_to_record(s) for s in result.spans],
        "tags": [t.label for t in result.tags.tags],
    }


def _outputs_from_predictions(
    segments: list[Segment], records: list[dict], mode: str, vocab: Vocab
) -> list[PassOutputs]:
    """Adapt an external predictions file to per-pass model outputs."""
    by_id = {r["id"]: r for r in records}
    missing = [s.id for s in segments if s.id not in by_id]
    if missing:
        _abort(EXIT_ALIGNMENT, f"predictions missing for ids: {missing[:10]}")
    passes = MODES if mode == "unified" else (mode,)
    outputs = []
    for seg in segments:
        record = by_id[seg.id]
        if "offsets" in record:
            offsets = tuple((int(s), int(e)) for s, e in record["offsets"])
        else:
            offsets = tokenize(seg.translation, vocab).offsets
        scores = {}
        dists = {}
        for pass_mode in passes:
            key = pass_mode.replace("+", "_")
            raw_scores = record.get("scores", {})
            if key not in raw_scores:
                _abort(EXIT_MODE, f"{seg.id}: predictions lack a {pass_mode!r} score")
            scores[pass_mode] = float(raw_scores[key])
            probs = record.get("word_probs", {}).get(key)
            if probs is None:
                tags = record.get("tags", {}).get(key)
                if tags is None:
                    _abort(EXIT_MODE,
                           f"{seg.id}: predictions lack word probabilities or "
                           f"tags for {pass_mode!r}")
                rows = np.zeros((len(tags), 4))
                for i, label in enumerate(tags):
                    rows[i, int(Severity.from_label(label))] = 1.0
            else:
                rows = np.asarray(probs, dtype=float)
            if rows.shape[0] != len(offsets):
                _abort(EXIT_PARSE,
                       f"{seg.id}: {rows.shape[0]} probability rows for "
                       f"{len(offsets)} tokens")
            dists[pass_mode] = WordDistribution(rows)
        outputs.append(PassOutputs(sentence_scores=scores, word_dists=dists,
                                   offsets=offsets))
    return outputs


@main.command("score", cls=ConfigCommand)
@click.option("--segments", "segments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Trained model checkpoint.")
@click.option("--predictions", "predictions_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Precomputed per-pass predictions (external metric).")
@click.option("--mode", type=click.Choice(["src", "ref", "src+ref", "unified"]),
              default="unified", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--weights", default=None,
              help="Aggregation weights src,ref,src+ref,mqm (default 1/9,1/3,1/3,2/9).")
@click.option("--batch-size", default=64, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_config_option
@click.pass_context
def cmd_score(ctx, segments_path, checkpoint_path, predictions_path, mode,
              out_path, weights, batch_size, seed, config) -> None:
    """Score segments with a checkpoint or an external predictions file."""
    if (checkpoint_path is None) == (predictions_path is None):
        raise click.UsageError("provide exactly one of --checkpoint / --predictions")
    segments = [seg for seg, _ in _read_segment_records(segments_path)]
    agg = _parse_weights(weights)

    if checkpoint_path is not None:
        model = load_checkpoint(checkpoint_path)
        vocab = Vocab(model.config.vocab_buckets)
        try:
            outputs = predict_segments(model, vocab, segments, mode,
                                       batch_size=batch_size)
        except ModeUnsatisfiableError as exc:
            _abort(EXIT_MODE, str(exc))
    else:
        records = _read_records(predictions_path)
        vocab = Vocab()
        if mode in ("ref", "src+ref", "unified"):
            missing = [s.id for s in segments if s.reference is None]
            if missing:
                _abort(EXIT_MODE,
                       f"mode {mode!r} requires a reference; missing for {missing[:10]}")
        outputs = _outputs_from_predictions(segments, records, mode, vocab)

    records_out = []
    for seg, out in zip(segments, outputs):
        result = compose_inference(out.sentence_scores, out.word_dists,
                                   out.offsets, mode, agg)
        records_out.append(_score_record(seg.id, mode, result))
    io.write_jsonl(out_path, records_out)
    _write_run_sidecar(out_path, ctx, segments=len(segments))
    click.echo(f"scored {len(records_out)} segments -> {out_path}")


# ---------------------------------------------------------------- train


@main.command("train", cls=ConfigCommand)
@click.option("--phase1", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--phase2", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--phase3", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--epochs", default="4,6,4", show_default=True,
              help="Comma-separated epochs per phase.")
@click.option("--lambdas", default="0.983,0.055", show_default=True,
              help="Loss mixing weights for phases II and III.")
@click.option("--class-weights", default="0.08,0.486,0.505,0.533",
              show_default=True, help="Cross-entropy weights (ok,min,maj,crit).")
@click.option("--learning-rate", default=2e-3, show_default=True)
@click.option("--encoder-learning-rate", default=1e-3, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--model-dim", default=32, show_default=True)
@click.option("--layers", default=2, show_default=True)
@click.option("--heads", default=2, show_default=True)
@click.option("--ffn-dim", default=64, show_default=True)
@click.option("--max-len", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_config_option
@click.pass_context
def cmd_train(ctx, phase1, phase2, phase3, out_dir, epochs, lambdas,
              class_weights, learning_rate, encoder_learning_rate, batch_size,
              model_dim, layers, heads, ffn_dim, max_len, seed, config) -> None:
    """Run the three-phase curriculum and write checkpoints plus a report."""
    epoch_list = [int(e) for e in str(epochs).split(",")]
    lambda_list = [float(v) for v in str(lambdas).split(",")]
    alpha = tuple(float(v) for v in str(class_weights).split(","))
    if len(epoch_list) != 3 or len(lambda_list) != 2 or len(alpha) != 4:
        raise click.UsageError("need 3 epoch counts, 2 lambdas, 4 class weights")

    encoder_config = EncoderConfig(model_dim=model_dim, layers=layers,
                                   heads=heads, ffn_dim=ffn_dim, max_len=max_len)
    vocab = Vocab(encoder_config.vocab_buckets)
    corpora = []
    for path in (phase1, phase2, phase3):
        segments = [seg for seg, _ in _read_segment_records(path)]
        try:
            corpora.append(examples_from_segments(segments, vocab))
        except SupervisionError as exc:
            _abort(EXIT_SUPERVISION, f"{path}: {exc}")

    common = dict(class_weights=alpha, learning_rate=learning_rate,
                  encoder_learning_rate=encoder_learning_rate,
                  batch_size=batch_size)
    specs = (
        PhaseSpec(name="phase1", loss_lambda=0.0, word_level_training=False,
                  epochs=epoch_list[0], **common),
        PhaseSpec(name="phase2", loss_lambda=lambda_list[0],
                  epochs=epoch_list[1], **common),
        PhaseSpec(name="phase3", loss_lambda=lambda_list[1],
                  epochs=epoch_list[2], **common),
    )
    out = Path(out_dir)
    try:
        model, reports = run_curriculum(corpora, specs, encoder_config,
                                        seed=seed, checkpoint_dir=out)
    except SupervisionError as exc:
        _abort(EXIT_SUPERVISION, str(exc))
    save_checkpoint(out / "final.ckpt", model)
    report = _resolved_config(ctx)
    report["phases"] = [r.as_dict() for r in reports]
    io.write_json(out / "training_report.json", report)
    for phase_report in reports:
        start, end = phase_report.loss_curve[0], phase_report.loss_curve[-1]
        click.echo(f"{phase_report.phase}: loss {start:.4f} -> {end:.4f} "
                   f"({phase_report.steps} steps)")
    click.echo(f"checkpoints and report -> {out_dir}")


# ---------------------------------------------------------------- evaluate


def _align_ids(gold_ids: list[str], metric_tables: dict[str, dict[str, dict]]) -> None:
    gold_set = set(gold_ids)
    for name, table in metric_tables.items():
        missing = sorted(gold_set - set(table))
        extra = sorted(set(table) - gold_set)
        if missing or extra:
            detail = []
            if missing:
                detail.append(f"missing from {name}: {missing[:10]}")
            if extra:
                detail.append(f"unknown in {name}: {extra[:10]}")
            _abort(EXIT_ALIGNMENT, "; ".join(detail))


def _dedup_gold(records: list[tuple[Segment, dict]], how: str
                ) -> tuple[list[Segment], list[dict]]:
    """Collapse duplicate segment ids (multi-annotator gold) to one row each."""
    grouped: dict[str, list[tuple[Segment, dict]]] = {}
    order: list[str] = []
    for seg, extras in records:
        if seg.id not in grouped:
            order.append(seg.id)
        grouped.setdefault(seg.id, []).append((seg, extras))
    segments, extras_list = [], []
    for seg_id in order:
        rows = grouped[seg_id]
        seg, extras = rows[0]
        if how == "mean" and len(rows) > 1:
            scores = [s.gold_score for s, _ in rows if s.gold_score is not None]
            if scores:
                seg = dataclasses.replace(seg, gold_score=sum(scores) / len(scores))
        segments.append(seg)
        extras_list.append(extras)
    return segments, extras_list


def _system_statistic(sys_idx: np.ndarray, n_systems: int):
    counts = np.bincount(sys_idx, minlength=n_systems)

    def statistic(metric: np.ndarray, human: np.ndarray) -> float:
        m = np.bincount(sys_idx, weights=metric, minlength=n_systems) / counts
        h = np.bincount(sys_idx, weights=human, minlength=n_systems) / counts
        return stats.pairwise_accuracy(
            {i: m[i] for i in range(n_systems)},
            {i: h[i] for i in range(n_systems)},
        )

    return statistic


def _significance_block(result: stats.SignificanceResult) -> dict:
    return {"statistic": result.statistic, "p_value": result.p_value,
            "resamples": result.resamples, "level": result.level}


def _segment_table(human, metric_scores, resamples, level, seed) -> dict:
    table: dict = {"n": len(human), "metrics": {}, "significance": {}}
    for corr_name, corr_fn in (("pearson", stats.pearson), ("kendall", stats.kendall)):
        values = {m: corr_fn(v, human) for m, v in metric_scores.items()}
        for m, value in values.items():
            table["metrics"].setdefault(m, {})[corr_name] = value
        if len(metric_scores) >= 2:
            cluster, tests = stats.top_cluster(
                metric_scores, human, corr_fn, level=level,
                resamples=resamples, seed=seed, with_tests=True,
            )
            for m in metric_scores:
                table["metrics"][m][f"top_cluster_{corr_name}"] = m in cluster
            table["significance"][corr_name] = {
                pair: _significance_block(res) for pair, res in tests.items()
            }
    return table


def _system_table(human, metric_scores, systems, resamples, level, seed) -> dict:
    names = sorted(set(systems))
    sys_idx = np.array([names.index(s) for s in systems])
    statistic = _system_statistic(sys_idx, len(names))
    human = np.asarray(human, dtype=float)
    table: dict = {"systems": names, "metrics": {}, "significance": {}}
    values = {m: statistic(np.asarray(v, dtype=float), human)
              for m, v in metric_scores.items()}
    for m, value in values.items():
        table["metrics"][m] = {"pairwise_accuracy": value}
    if len(metric_scores) >= 2:
        cluster, tests = stats.top_cluster(
            metric_scores, human, statistic, level=level,
            resamples=resamples, seed=seed, with_tests=True,
        )
        for m in metric_scores:
            table["metrics"][m]["top_cluster"] = m in cluster
        table["significance"]["pairwise_accuracy"] = {
            pair: _significance_block(res) for pair, res in tests.items()
        }
    return table


def _spans_table(segments: list[Segment], span_tables: dict[str, dict[str, list]]) -> dict:
    table: dict = {"metrics": {}}
    for name, by_id in span_tables.items():
        items = [(by_id[s.id], s.gold_spans, s.translation) for s in segments]
        result = stats.char_f1_pooled(items)
        table["metrics"][name] = {
            "f1_minor": result.f1_minor,
            "f1_major": result.f1_major,
            "f1_overall": result.f1_overall,
            "precision": result.precision,
            "recall": result.recall,
        }
    return table


def _render_eval_text(report: dict) -> str:
    lines = [f"granularity: {report['granularity']}    (spanmetric {report['version']})"]
    for group, table in report["groups"].items():
        lines.append("")
        lines.append(f"[{group}]")
        metrics = table["metrics"]
        columns = sorted({k for row in metrics.values() for k in row
                          if not k.startswith("top_cluster")
                          and not isinstance(row[k], dict)})
        header = ["metric"] + columns
        rows = []
        for name in sorted(metrics):
            row = [name]
            for col in columns:
                value = metrics[name].get(col)
                mark = "*" if metrics[name].get(f"top_cluster_{col}") or (
                    col == "pairwise_accuracy" and metrics[name].get("top_cluster")
                ) else ""
                row.append(f"{value:.4f}{mark}" if value is not None else "-")
            rows.append(row)
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        for r in [header] + rows:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)))
    lines.append("")
    lines.append("* = in the top cluster at the configured significance level")
    return "\n".join(lines) + "\n"


@main.command("evaluate", cls=ConfigCommand)
@click.option("--gold", "gold_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_specs", required=True, multiple=True,
              help="NAME=PATH of a metric's score file (repeatable).")
@click.option("--granularity", type=click.Choice(["segment", "system", "spans"]),
              default="segment", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--resamples", default=200, show_default=True)
@click.option("--level", default=0.05, show_default=True)
@click.option("--gold-dedup", type=click.Choice(["mean", "first"]),
              default="mean", show_default=True,
              help="How to collapse duplicate gold annotations per id.")
@click.option("--seed", default=0, show_default=True)
@_config_option
@click.pass_context
def cmd_evaluate(ctx, gold_path, scores_specs, granularity, out_path,
                 resamples, level, gold_dedup, seed, config) -> None:
    """Meta-evaluate one or more metrics' score files against gold segments."""
    gold_records = _read_segment_records(gold_path)
    segments, extras = _dedup_gold(gold_records, gold_dedup)

    metric_records: dict[str, dict[str, dict]] = {}
    for spec in scores_specs:
        name, _, path = spec.partition("=")
        if not path:
            name, path = Path(spec).stem, spec
        records = _read_records(path)
        metric_records[name] = {r["id"]: r for r in records}
    _align_ids([s.id for s in segments], metric_records)

    no_score = [s.id for s in segments if s.gold_score is None]
    if granularity in ("segment", "system") and no_score:
        _abort(EXIT_ALIGNMENT, f"gold segments without gold_score: {no_score[:10]}")
    if granularity == "system":
        no_system = [s.id for s in segments if s.system is None]
        if no_system:
            _abort(EXIT_ALIGNMENT, f"gold segments without system: {no_system[:10]}")
    if granularity == "spans":
        no_spans = [s.id for s in segments if s.gold_spans is None]
        if no_spans:
            _abort(EXIT_ALIGNMENT, f"gold segments without gold_spans: {no_spans[:10]}")

    groups: dict[str, list[int]] = {}
    for i, extra in enumerate(extras):
        groups.setdefault(str(extra.get("lang_pair", "all")), []).append(i)

    report = _resolved_config(ctx)
    report["granularity"] = granularity
    report["groups"] = {}
    for group in sorted(groups):
        idx = groups[group]
        subset = [segments[i] for i in idx]
        if granularity == "spans":
            span_tables = {
                name: {s.id: [io.record_to_span(r)
                              for r in table[s.id].get("spans", [])]
                       for s in subset}
                for name, table in metric_records.items()
            }
            report["groups"][group] = _spans_table(subset, span_tables)
            continue
        human = [s.gold_score for s in subset]
        metric_scores = {
            name: [float(table[s.id]["score"]) for s in subset]
            for name, table in metric_records.items()
        }
        if granularity == "segment":
            report["groups"][group] = _segment_table(
                human, metric_scores, resamples, level, seed)
        else:
            systems = [s.system for s in subset]
            report["groups"][group] = _system_table(
                human, metric_scores, systems, resamples, level, seed)

    io.write_json(out_path, report)
    text = _render_eval_text(report)
    io.atomic_write_text(Path(out_path).with_suffix(".txt"), text)
    click.echo(text, nl=False)


# ---------------------------------------------------------------- perturb


_PERTURB_POOL_KINDS = {"detached_random", "detached_similar", "add_text"}


@main.command("perturb", cls=ConfigCommand)
@click.option("--segments", "segments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--kinds", default=",".join(perturb.KINDS), show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True, dir_okay=False),
              help="Sentence pool (one per line); defaults to the input translations.")
@click.option("--entities", "entities_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Entity pool (one per line); defaults to a built-in list.")
@click.option("--lexicon", "lexicon_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Negation rules (lhs => rhs per line); defaults to built-in.")
@click.option("--seed", default=0, show_default=True)
@_config_option
@click.pass_context
def cmd_perturb(ctx, segments_path, out_path, kinds, pool_path, entities_path,
                lexicon_path, seed, config) -> None:
    """Corrupt segments with the requested perturbation kinds."""
    kind_list = [k.strip() for k in kinds.split(",") if k.strip()]
    unknown = [k for k in kind_list if k not in perturb.KINDS]
    if unknown:
        raise click.UsageError(f"unknown kinds {unknown}; choose from {list(perturb.KINDS)}")
    segments = [seg for seg, _ in _read_segment_records(segments_path)]

    if pool_path:
        pool = [line.rstrip("\n") for line in
                open(pool_path, encoding="utf-8") if line.strip()]
    else:
        pool = [s.translation for s in segments]
    if entities_path:
        entities = [line.strip() for line in
                    open(entities_path, encoding="utf-8") if line.strip()]
    else:
        entities = list(synthdata.ENTITIES)
    lexicon = perturb.load_negation_lexicon(lexicon_path)
    unigrams = Counter()
    for sentence in pool:
        unigrams.update(sentence.split())

    records = []
    skips: Counter = Counter()
    for seg in segments:
        for kind in kind_list:
            rng = random.Random(f"{seed}:{seg.id}:{kind}")
            try:
                if kind == "detached_random":
                    result = perturb.hallucinate_random(seg, pool, rng)
                elif kind == "detached_similar":
                    result = perturb.hallucinate_similar(seg, pool)
                elif kind == "oscillatory":
                    result = perturb.hallucinate_oscillatory(seg, rng)
                elif kind == "add_text":
                    result = perturb.add_text(seg, pool, rng)
                elif kind == "negation":
                    result = perturb.negate(seg, lexicon, rng)
                elif kind == "mask_infill":
                    result = perturb.mask_infill(seg, dict(unigrams), rng)
                elif kind == "swap_num":
                    result = perturb.swap_number(seg, rng)
                else:
                    result = perturb.swap_entity(seg, rng, entities)
            except perturb.PerturbationNotApplicable:
                skips[kind] += 1
                continue
            out_seg = Segment(
                id=f"{seg.id}__{kind}",
                source=seg.source,
                translation=result.perturbed_translation,
                reference=seg.reference,
                gold_spans=result.injected_spans,
                gold_score=mqm_score(result.injected_spans),
                system=seg.system,
            )
            records.append(io.segment_to_record(
                out_seg, extras={"kind": kind, "base_id": seg.id}))
    io.write_jsonl(out_path, records)
    _write_run_sidecar(out_path, ctx, produced=len(records), skipped=dict(skips))
    skipped = f", skipped {sum(skips.values())} ({dict(skips)})" if skips else ""
    click.echo(f"perturbed -> {len(records)} records{skipped}")


# ---------------------------------------------------------------- stress


def _prediction_from_record(record: dict) -> perturb.ScoredPrediction:
    spans = tuple(io.record_to_span(r) for r in record.get("spans", []))
    return perturb.ScoredPrediction(score=float(record["score"]), spans=spans)


def _render_stress_text(report: dict) -> str:
    lines = [f"stress report    (spanmetric {report['version']})"]
    header = ["kind", "n", "no-error%", "min%", "maj%", "crit%",
              "delta-med", "delta-q1", "delta-q3", "delta<1pt"]
    rows = []
    for kind in sorted(report["kinds"]):
        entry = report["kinds"][kind]
        sev = entry["severity_rates"]
        rows.append([
            kind, str(entry["count"]),
            f"{entry['no_error_rate']:.1f}",
            f"{sev['minor']:.1f}", f"{sev['major']:.1f}", f"{sev['critical']:.1f}",
            f"{entry['delta_median']:.2f}", f"{entry['delta_q1']:.2f}",
            f"{entry['delta_q3']:.2f}", f"{entry['frac_delta_below_1pt']:.2f}",
        ])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


@main.command("stress", cls=ConfigCommand)
@click.option("--original", "original_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--perturbed", "perturbed_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_config_option
@click.pass_context
def cmd_stress(ctx, original_path, perturbed_path, out_path, config) -> None:
    """Compare score files for original and perturbed variants of segments."""
    originals = {r["id"]: r for r in _read_records(original_path)}
    perturbed_records = _read_records(perturbed_path)

    pairs = []
    unmatched = []
    for record in perturbed_records:
        base_id, sep, kind = record["id"].rpartition("__")
        if not sep or base_id not in originals:
            unmatched.append(record["id"])
            continue
        pairs.append((kind, originals[base_id], record))
    if unmatched:
        _abort(EXIT_ALIGNMENT,
               f"perturbed ids with no matching original: {unmatched[:10]}")
    if not pairs:
        _abort(EXIT_ALIGNMENT, "no original/perturbed pairs to compare")

    report = _resolved_config(ctx)
    report["kinds"] = perturb.stress_report(
        [_prediction_from_record(orig) for _, orig, _ in pairs],
        [_prediction_from_record(pert) for _, _, pert in pairs],
        [kind for kind, _, _ in pairs],
    )
    io.write_json(out_path, report)
    text = _render_stress_text(report)
    io.atomic_write_text(Path(out_path).with_suffix(".txt"), text)
    click.echo(text, nl=False)


# ---------------------------------------------------------------- synth-corpus


@main.command("synth-corpus", cls=ConfigCommand)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--size", default=2000, show_default=True,
              help="Segments in each of the phase-1/phase-2 corpora.")
@click.option("--seed", default=0, show_default=True)
@_config_option
@click.pass_context
def cmd_synth_corpus(ctx, out_dir, size, seed, config) -> None:
    """Generate deterministic synthetic training corpora and a held-out split."""
    out = Path(out_dir)
    splits = {
        "phase1.jsonl": synthdata.build_corpus(size, seed=seed * 4 + 1,
                                               include_spans=False, id_prefix="p1"),
        "phase2.jsonl": synthdata.build_corpus(size, seed=seed * 4 + 2, id_prefix="p2"),
        "phase3.jsonl": synthdata.build_corpus(max(size // 4, 1), seed=seed * 4 + 3,
                                               id_prefix="p3"),
        "heldout.jsonl": synthdata.build_corpus(max(size // 5, 1), seed=seed * 4 + 4,
                                                id_prefix="ho"),
    }
    for name, segments in splits.items():
        io.write_segments(out / name, segments)
    _write_run_sidecar(out / "corpus", ctx,
                       sizes={k: len(v) for k, v in splits.items()})
    click.echo(f"wrote {', '.join(splits)} -> {out_dir}")


if __name__ == "__main__":
    main()
