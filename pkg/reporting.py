"""
CSV and manifest writers for experiment output.
Every CSV starts with a comment header embedding the run manifest.
"""

import hashlib
import json
import logging
import os
from typing import Dict

import pandas as pd

from data_models import RunManifest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def manifest_header(manifest: RunManifest) -> str:
    record = manifest.model_dump(mode="json", exclude={"checksums"})
    return f"# manifest: {json.dumps(record, sort_keys=True, ensure_ascii=False)}\n"


def write_table(table: pd.DataFrame, path: str, manifest: RunManifest) -> str:
    """Write one table with the manifest header; returns the file's sha256."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(manifest_header(manifest))
        table.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return file_checksum(path)


def file_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_outputs(tables: Dict[str, pd.DataFrame], manifest: RunManifest, output_dir: str) -> RunManifest:
    """Write every table as <subcommand>_<name>.csv plus <subcommand>_manifest.json."""
    os.makedirs(output_dir, exist_ok=True)
    checksums = {}
    for name, table in tables.items():
        filename = f"{manifest.subcommand}_{name}.csv"
        checksums[filename] = write_table(table, os.path.join(output_dir, filename), manifest)
        logger.info(f"Wrote {filename} ({len(table)} rows)")

    final = manifest.model_copy(update={"checksums": checksums})
    manifest_path = os.path.join(output_dir, f"{manifest.subcommand}_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(final.model_dump(mode="json"), f, indent=2, ensure_ascii=False)
    return final
