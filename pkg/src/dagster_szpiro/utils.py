import json
import os
from typing import Any, Iterator, Mapping, Sequence

from dagster import AssetKey, AssetMaterialization, MetadataValue

from dagster_szpiro.types import ScanOutput


def write_json_atomic(path: str, data: Mapping[str, Any]) -> None:
    """Write ``data`` as JSON so that readers see either the old file or the new one.

    The text goes to a sibling temporary file which is flushed, fsynced and renamed over ``path``.
    """
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, sort_keys=True, indent=2)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp_path, path)


def scan_name(scan_output: ScanOutput) -> str:
    """Short readable name of a scan, e.g. ``gpf_1-100``."""
    config = scan_output.config
    return f"{config.kind}_{config.lo}-{config.hi}"


def summary_metadata(scan_output: ScanOutput) -> Mapping[str, MetadataValue]:
    metadata = {
        "rows": MetadataValue.int(scan_output.rows),
        "config_digest": MetadataValue.text(scan_output.config.digest()),
        "summary": MetadataValue.json(dict(scan_output.summary)),
    }
    if scan_output.records_path:
        metadata["records_path"] = MetadataValue.path(scan_output.records_path)
    return metadata


def generate_materializations(
    scan_output: ScanOutput, asset_key_prefix: Sequence[str]
) -> Iterator[AssetMaterialization]:
    """Generate a Dagster materialization for the record file written by a scan.

    Scans kept in memory have no file and yield nothing.

    Args:
        scan_output (ScanOutput): The finished scan.
        asset_key_prefix (Sequence[str]): Prefix of the asset key of the materialization.

    Yields:
        Iterator[AssetMaterialization]: The materialization of the scan's record file.
    """
    if not scan_output.records_path:
        return
    name = scan_name(scan_output)
    yield AssetMaterialization(
        asset_key=AssetKey([*asset_key_prefix, name]),
        description=f"Records of {scan_output.config.kind} scan over [{scan_output.config.lo}, "
        f"{scan_output.config.hi}]",
        metadata=summary_metadata(scan_output),
    )
