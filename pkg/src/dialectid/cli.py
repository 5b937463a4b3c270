"""Command-line surface.

Batch commands (extract-features, train, build-cohorts, evaluate) run the
library in-process. `classify` can either run locally or act as a thin
client against a running `serve` instance. Exit codes: 0 success, 1
runtime failure, 2 usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .adif import write_feature_file
from .audio import load_waveform
from .config import CONFIG_ENV_VAR, load_run_config
from .errors import ConfigurationError, DialectIdError
from .evaluation import evaluate
from .features import compute_mfcc, instance_normalize
from .infer import System, build_cohorts, classify, load_cohorts, save_cohorts
from .service import create_app, load_service_state
from .synth import make_demo_corpus
from .train import (
    directory_feature_source,
    load_checkpoint,
    load_manifest,
    model_from_checkpoint,
    save_checkpoint,
    train,
)

_CONFIG_OPTION = click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help=f"JSON run config; defaults to ${CONFIG_ENV_VAR} or built-ins.",
)


def _load_config(config_path):
    try:
        return load_run_config(config_path)
    except ConfigurationError as exc:
        raise click.UsageError(str(exc)) from exc


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


def _parse_weights(text, n_systems: int):
    if text is None:
        return None
    try:
        weights = [float(w) for w in text.split(",") if w.strip()]
    except ValueError as exc:
        raise click.UsageError(f"--fusion-weights must be comma-separated numbers: {exc}")
    if len(weights) != n_systems:
        raise click.UsageError(
            f"--fusion-weights has {len(weights)} entries for {n_systems} systems"
        )
    if abs(sum(weights) - 1.0) > 1e-9:
        raise click.UsageError(f"fusion weights must sum to 1, got {sum(weights)!r}")
    return weights


def _load_systems(checkpoint_paths, cohort_paths):
    if len(cohort_paths) != len(checkpoint_paths):
        raise click.UsageError(
            f"{len(checkpoint_paths)} checkpoints but {len(cohort_paths)} cohort stores"
        )
    systems = []
    for cp, co in zip(checkpoint_paths, cohort_paths):
        model = model_from_checkpoint(load_checkpoint(cp))
        systems.append(System(model=model, cohorts=load_cohorts(co)))
    return systems


def _sources_for(systems, features_dirs):
    if len(features_dirs) == 1:
        features_dirs = features_dirs * len(systems)
    if len(features_dirs) != len(systems):
        raise click.UsageError(
            f"{len(systems)} systems but {len(features_dirs)} feature directories "
            "(give one shared directory or one per system)"
        )
    return [directory_feature_source(d) for d in features_dirs]


@click.group()
def main():
    """Arabic dialect identification pipeline."""


@main.command("make-demo-corpus")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--n-per-class", default=80, show_default=True)
@click.option("--train-per-class", default=60, show_default=True)
@click.option("--duration-s", default=2.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def cmd_make_demo_corpus(out_dir, n_per_class, train_per_class, duration_s, seed):
    """Generate the synthetic formant-noise corpus with train/test manifests."""
    train_man, test_man = make_demo_corpus(
        out_dir,
        n_per_class=n_per_class,
        train_per_class=train_per_class,
        duration_s=duration_s,
        seed=seed,
    )
    click.echo(f"wrote {len(train_man)} train / {len(test_man)} test utterances to {out_dir}")


@main.command("extract-features")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--type",
    "feature_type",
    type=click.Choice(["mfcc"]),
    default="mfcc",
    show_default=True,
    help="Pretrained features come from the separate exporter tool.",
)
@click.option("--force", is_flag=True, help="Rewrite files that already exist.")
@_CONFIG_OPTION
def cmd_extract_features(manifest_path, out_dir, feature_type, force, config_path):
    """Write one ADIF feature file per manifest utterance (skip existing)."""
    cfg = _load_config(config_path)
    mfcc_cfg = cfg.features.to_mfcc_config()
    try:
        manifest = load_manifest(manifest_path)
    except DialectIdError as exc:
        raise _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = skipped = failed = 0
    for u in manifest:
        target = out / f"{u.utt_id}.adif"
        if target.exists() and not force:
            skipped += 1
            continue
        try:
            feat = instance_normalize(compute_mfcc(load_waveform(u.path), mfcc_cfg))
            write_feature_file(target, feat)
            written += 1
        except (DialectIdError, OSError) as exc:
            click.echo(f"error: {u.utt_id}: {exc}", err=True)
            failed += 1
    click.echo(f"wrote {written}, skipped {skipped}, failed {failed}")
    if failed:
        raise SystemExit(1)


@main.command("train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--features-dir", required=True, type=click.Path(file_okay=False))
@click.option("--arch", type=click.Choice(["resnet34", "ecapa"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_CONFIG_OPTION
def cmd_train(manifest_path, features_dir, arch, out_path, config_path):
    """Train one architecture and write the final checkpoint."""
    cfg = _load_config(config_path)
    train_cfg = cfg.training.to_train_config()
    try:
        manifest = load_manifest(manifest_path)
        source = directory_feature_source(features_dir)
        first = source(manifest.utterances[0].utt_id)
        model_cfg = cfg.model_config_for(arch, manifest.n_classes, first.dim)
        ckpt = train(manifest, source, arch, train_cfg, model_cfg, log=sys.stdout)
        save_checkpoint(out_path, ckpt)
    except DialectIdError as exc:
        raise _fail(str(exc))
    except FileNotFoundError as exc:
        raise _fail(f"missing feature file: {exc}")
    click.echo(f"wrote checkpoint {out_path}")


@main.command("build-cohorts")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--features-dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--n-per-class", default=None, type=int, help="Defaults to the config's cohort_size.")
@click.option("--seed", default=None, type=int, help="Defaults to the config's inference seed.")
@_CONFIG_OPTION
def cmd_build_cohorts(checkpoint_path, manifest_path, features_dir, out_path, n_per_class, seed, config_path):
    """Sample per-class cohorts from training data and store their embeddings."""
    cfg = _load_config(config_path)
    if n_per_class is None:
        n_per_class = cfg.inference.cohort_size
    if seed is None:
        seed = cfg.inference.seed
    try:
        model = model_from_checkpoint(load_checkpoint(checkpoint_path))
        manifest = load_manifest(manifest_path)
        cohorts = build_cohorts(
            model, manifest, directory_feature_source(features_dir), n_per_class, rng=seed
        )
        save_cohorts(out_path, cohorts)
    except DialectIdError as exc:
        raise _fail(str(exc))
    except FileNotFoundError as exc:
        raise _fail(f"missing feature file: {exc}")
    click.echo(f"wrote cohort store {out_path} with counts {cohorts.counts()}")


@main.command("evaluate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoints", "checkpoint_paths", required=True, multiple=True)
@click.option("--cohorts", "cohort_paths", required=True, multiple=True)
@click.option("--features-dir", "features_dirs", required=True, multiple=True)
@click.option("--fusion-weights", default=None, help="Comma-separated, must sum to 1.")
@click.option("--scores-out", default=None, type=click.Path(dir_okay=False))
@_CONFIG_OPTION
def cmd_evaluate(manifest_path, checkpoint_paths, cohort_paths, features_dirs, fusion_weights, scores_out, config_path):
    """Score a labeled manifest and print the metrics report."""
    cfg = _load_config(config_path)
    systems = _load_systems_or_fail(checkpoint_paths, cohort_paths)
    weights = _parse_weights(fusion_weights, len(systems)) or cfg.inference.fusion_weights
    try:
        manifest = load_manifest(manifest_path)
        sources = _sources_for(systems, list(features_dirs))

        def classifier(utt_id):
            feats = [src(utt_id) for src in sources]
            return classify(
                feats,
                systems,
                weights,
                combine_weight=cfg.inference.combine_weight,
                cohort_norm=cfg.inference.cohort_norm,
                softmax_only=cfg.inference.softmax_only,
            )

        report = evaluate(manifest, classifier)
    except DialectIdError as exc:
        raise _fail(str(exc))
    except FileNotFoundError as exc:
        raise _fail(f"missing feature file: {exc}")
    click.echo(report.text(), nl=False)
    if scores_out:
        Path(scores_out).write_text("\n".join(report.score_lines()) + "\n", encoding="utf-8")
        click.echo(f"wrote per-utterance scores to {scores_out}")


@main.command("classify")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoints", "checkpoint_paths", multiple=True)
@click.option("--cohorts", "cohort_paths", multiple=True)
@click.option("--features-dir", "features_dirs", multiple=True)
@click.option("--fusion-weights", default=None)
@click.option("--labels", default=None, help="Comma-separated label set for rendering decisions.")
@click.option("--server", default=None, help="Base URL of a running serve instance (thin-client mode).")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@_CONFIG_OPTION
def cmd_classify(manifest_path, checkpoint_paths, cohort_paths, features_dirs, fusion_weights, labels, server, out_path, config_path):
    """Emit one `utt_id<TAB>scores...<TAB>decision` line per utterance."""
    cfg = _load_config(config_path)
    try:
        manifest = load_manifest(manifest_path)
    except DialectIdError as exc:
        raise _fail(str(exc))
    if not features_dirs:
        raise click.UsageError("--features-dir is required")

    if server is not None:
        lines = _classify_via_server(server, manifest, list(features_dirs))
    else:
        if not checkpoint_paths:
            raise click.UsageError("--checkpoints is required without --server")
        systems = _load_systems_or_fail(checkpoint_paths, cohort_paths)
        weights = _parse_weights(fusion_weights, len(systems)) or cfg.inference.fusion_weights
        label_set = sorted(l.strip() for l in labels.split(",")) if labels else None
        try:
            sources = _sources_for(systems, list(features_dirs))
            lines = []
            for u in manifest:
                feats = [src(u.utt_id) for src in sources]
                idx, fused = classify(
                    feats,
                    systems,
                    weights,
                    combine_weight=cfg.inference.combine_weight,
                    cohort_norm=cfg.inference.cohort_norm,
                    softmax_only=cfg.inference.softmax_only,
                )
                decision = label_set[idx] if label_set else str(idx)
                cols = "\t".join(f"{v:.6f}" for v in fused)
                lines.append(f"{u.utt_id}\t{cols}\t{decision}")
        except DialectIdError as exc:
            raise _fail(str(exc))
        except FileNotFoundError as exc:
            raise _fail(f"missing feature file: {exc}")

    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(lines)} decisions to {out_path}")
    else:
        click.echo(text, nl=False)


def _classify_via_server(server, manifest, features_dirs):
    import httpx

    sources = [directory_feature_source(d) for d in features_dirs]
    lines = []
    base = server.rstrip("/")
    with httpx.Client(base_url=base, timeout=60.0) as client:
        for u in manifest:
            payloads = []
            try:
                for src in sources:
                    feat = src(u.utt_id)
                    payloads.append(
                        {
                            "data": feat.data.tolist(),
                            "frame_shift_ms": feat.frame_shift_ms,
                            "source": feat.source,
                        }
                    )
            except (DialectIdError, FileNotFoundError) as exc:
                raise _fail(f"{u.utt_id}: {exc}")
            response = client.post("/classify", json={"utt_id": u.utt_id, "features": payloads})
            if response.status_code != 200:
                raise _fail(f"{u.utt_id}: server returned {response.status_code}: {response.text}")
            body = response.json()
            cols = "\t".join(f"{v:.6f}" for v in body["scores"])
            lines.append(f"{body['utt_id']}\t{cols}\t{body['decision']}")
    return lines


def _load_systems_or_fail(checkpoint_paths, cohort_paths):
    try:
        return _load_systems(list(checkpoint_paths), list(cohort_paths))
    except click.UsageError:
        raise
    except (DialectIdError, FileNotFoundError, OSError) as exc:
        raise _fail(str(exc))


@main.command("serve")
@click.option("--checkpoints", "checkpoint_paths", required=True, multiple=True)
@click.option("--cohorts", "cohort_paths", required=True, multiple=True)
@click.option("--labels", default=None, help="Comma-separated label set for rendering decisions.")
@click.option("--fusion-weights", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8017, show_default=True)
@_CONFIG_OPTION
def cmd_serve(checkpoint_paths, cohort_paths, labels, fusion_weights, host, port, config_path):
    """Run the classification HTTP service."""
    import uvicorn

    cfg = _load_config(config_path)
    weights = _parse_weights(fusion_weights, len(checkpoint_paths)) or cfg.inference.fusion_weights
    label_set = sorted(l.strip() for l in labels.split(",")) if labels else None
    try:
        state = load_service_state(
            list(checkpoint_paths),
            list(cohort_paths),
            labels=label_set,
            fusion_weights=weights,
            combine_weight=cfg.inference.combine_weight,
            cohort_norm=cfg.inference.cohort_norm,
            softmax_only=cfg.inference.softmax_only,
        )
    except (DialectIdError, FileNotFoundError, OSError) as exc:
        raise _fail(str(exc))
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    main()
