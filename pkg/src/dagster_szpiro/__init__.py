from .asset_defs import build_scan_assets as build_scan_assets
from .ops import condition_check_op, family_scan_op, gpf_scan_op, luca_table_op
from .resources import (
    SzpiroResource as SzpiroResource,
    szpiro_resource as szpiro_resource,
)
from .types import Checkpoint, ScanConfig, ScanOutput, ScanRecord, ScanSettings
from .version import __version__
