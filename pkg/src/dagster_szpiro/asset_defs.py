import os
from typing import Mapping, Optional, Sequence

from dagster import AssetKey, AssetOut, AssetsDefinition, Output, multi_asset
from dagster import _check as check
from dagster._core.definitions.resource_definition import ResourceDefinition

from dagster_szpiro.utils import summary_metadata


def build_scan_assets(
    families: Mapping[str, Mapping[str, str]],
    lo: int,
    hi: int,
    output_dir: str,
    fmt: str = "csv",
    io_manager_key: Optional[str] = None,
    asset_key_prefix: Optional[Sequence[str]] = None,
    resource_defs: Optional[Mapping[str, ResourceDefinition]] = None,
    group_name: Optional[str] = None,
) -> Sequence[AssetsDefinition]:
    """Build assets holding family scans over a common range, one asset per family.

    Each asset's value is the scan summary; the rows go to ``<output_dir>/<name>.<fmt>``, whose
    path is attached as metadata.

    Args:
        families (Mapping[str, Mapping[str, str]]): Family configurations by asset name, each with
            ``A_poly`` and ``B_poly`` texts, or a ``quadratic`` or ``cubic`` triple.
        lo (int): First n of every scan.
        hi (int): Last n of every scan.
        output_dir (str): Directory receiving the record files.
        fmt (str, optional): Record file format, ``csv`` or ``json``. Defaults to ``csv``.
        io_manager_key (Optional[str], optional): The key of the io_manager storing the summaries.
            Defaults to None.
        asset_key_prefix (Optional[Sequence[str]], optional): The prefix to use for the asset
            keys. Defaults to None.
        resource_defs (Optional[Mapping[str, ResourceDefinition]], optional): A mapping from
            resource key to resource definition to use for the assets. Defaults to None.
        group_name (Optional[str], optional): The group name to use for the assets. Defaults to
            None.

    Returns:
        Sequence[AssetsDefinition]: A sequence holding the multi-asset of the family scans.
    """
    asset_key_prefix = check.opt_sequence_param(asset_key_prefix, "asset_key_prefix", of_type=str)
    check.mapping_param(families, "families", key_type=str)
    asset_keys = {name: AssetKey([*asset_key_prefix, name]) for name in families}

    @multi_asset(
        name=f"szpiro_family_scans_{lo}_{hi}".replace("-", "m"),
        outs={
            name: AssetOut(io_manager_key=io_manager_key, key=key)
            for name, key in asset_keys.items()
        },
        required_resource_keys={"szpiro"},
        compute_kind="szpiro",
        resource_defs=resource_defs,
        group_name=group_name,
    )
    def _assets(context):
        os.makedirs(output_dir, exist_ok=True)
        for name, family in families.items():
            scan_output = context.resources.szpiro.scan_family(
                family, lo, hi, out_path=os.path.join(output_dir, f"{name}.{fmt}"), fmt=fmt
            )
            yield Output(
                value=dict(scan_output.summary),
                output_name=name,
                metadata=summary_metadata(scan_output),
            )

    return [_assets]
