"""adif-export: manifest in, one ADIF file per utterance out.

Mirrors the core toolkit's extract-features command, but runs the frozen
pretrained encoder instead of the MFCC front end.
"""

from __future__ import annotations

import sys

import click

from .export import DEFAULT_CHECKPOINT, ExporterConfig, export
from .manifest import ManifestError


@click.command("adif-export")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--type",
    "feature_type",
    type=click.Choice(["pretrained"]),
    default="pretrained",
    show_default=True,
)
@click.option("--checkpoint", default=DEFAULT_CHECKPOINT, show_default=True,
              help="Encoder checkpoint identifier or local path.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--batch-size", default=1, show_default=True,
              help="Forward equal-length utterances together in groups this big.")
@click.option("--force", is_flag=True, help="Rewrite files that already exist.")
def main(manifest_path, out_dir, feature_type, checkpoint, device, batch_size, force):
    """Write one ADIF feature file per manifest utterance (skip existing)."""
    try:
        cfg = ExporterConfig(checkpoint=checkpoint, device=device, batch_size=batch_size)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        summary = export(manifest_path, out_dir, cfg, force=force, log=sys.stderr)
    except (ManifestError, RuntimeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    click.echo(f"wrote {summary.written}, skipped {summary.skipped}, failed {summary.failed}")
    if summary.failed:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
