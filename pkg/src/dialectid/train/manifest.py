"""Manifest: the tab-separated utterance list driving every pipeline stage.

One record per line: `id<TAB>path<TAB>label<TAB>duration_s`. Labels are
interned into a contiguous 0..K-1 index by sorting the distinct label
strings, so any two manifests over the same label set agree on indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import ManifestError


@dataclass(frozen=True)
class Utterance:
    utt_id: str
    path: str
    label: str
    duration_s: float


class Manifest:
    def __init__(self, utterances: Iterable[Utterance]):
        entries = tuple(utterances)
        seen = set()
        for u in entries:
            if not u.utt_id or not u.label:
                raise ManifestError(f"empty id or label in entry {u!r}")
            if u.duration_s <= 0:
                raise ManifestError(f"non-positive duration for {u.utt_id!r}")
            if u.utt_id in seen:
                raise ManifestError(f"duplicate utterance id {u.utt_id!r}")
            seen.add(u.utt_id)
        self.utterances = entries
        self.labels = tuple(sorted({u.label for u in entries}))
        self._index = {label: i for i, label in enumerate(self.labels)}

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def label_index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ManifestError(f"label {label!r} not in manifest label set") from None

    def by_class(self) -> dict[int, list[Utterance]]:
        out: dict[int, list[Utterance]] = {i: [] for i in range(self.n_classes)}
        for u in self.utterances:
            out[self._index[u.label]].append(u)
        return out

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)


def load_manifest(path, check_paths: bool = False) -> Manifest:
    path = Path(path)
    entries = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ManifestError(
                f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
            )
        utt_id, upath, label, dur = (p.strip() for p in parts)
        try:
            duration = float(dur)
        except ValueError:
            raise ManifestError(f"{path}:{lineno}: bad duration {dur!r}") from None
        if check_paths and not Path(upath).exists():
            raise ManifestError(f"{path}:{lineno}: path does not exist: {upath}")
        entries.append(Utterance(utt_id, upath, label, duration))
    try:
        return Manifest(entries)
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from None


def save_manifest(path, manifest: Manifest | Iterable[Utterance]) -> None:
    utterances = manifest.utterances if isinstance(manifest, Manifest) else tuple(manifest)
    lines = [
        f"{u.utt_id}\t{u.path}\t{u.label}\t{u.duration_s!r}" for u in utterances
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
