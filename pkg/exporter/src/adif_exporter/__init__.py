"""Frozen pretrained-encoder features, exported as ADIF files."""

from .adif import EXPECTED_DIM, VerifyResult, read_adif, verify_adif, write_adif
from .export import ExporterConfig, ExportSummary, export, frame_shift_ms, load_model
from .manifest import Entry, ManifestError, parse_manifest

__all__ = [
    "EXPECTED_DIM",
    "Entry",
    "ExportSummary",
    "ExporterConfig",
    "ManifestError",
    "VerifyResult",
    "export",
    "frame_shift_ms",
    "load_model",
    "parse_manifest",
    "read_adif",
    "verify_adif",
    "write_adif",
]
