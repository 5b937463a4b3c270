"""Minimal reader for the toolkit's manifest format.

One utterance per line: utt_id, wav path, label, duration in seconds,
tab-separated. The exporter only consumes the first two fields but still
validates the shape so a malformed corpus fails here rather than halfway
through a long export.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    utt_id: str
    path: str


def parse_manifest(path) -> list[Entry]:
    path = Path(path)
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ManifestError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            utt_id, wav_path = fields[0], fields[1]
            if not utt_id:
                raise ManifestError(f"{path}:{lineno}: empty utterance id")
            if utt_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate utterance id {utt_id!r}")
            seen.add(utt_id)
            entries.append(Entry(utt_id, wav_path))
    if not entries:
        raise ManifestError(f"{path}: manifest is empty")
    return entries
