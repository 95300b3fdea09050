from dagster import Failure, Field, In, Noneable, Nothing, Out, Output, op

from dagster_szpiro.scan import LUCA_TABLE
from dagster_szpiro.types import ScanOutput
from dagster_szpiro.utils import generate_materializations

_RUN_CONFIG = {
    "lo": Field(int, is_required=True, description="First n of the scan, inclusive."),
    "hi": Field(int, is_required=True, description="Last n of the scan, inclusive."),
    "out_path": Field(
        Noneable(str),
        default_value=None,
        description="Record file to write. Without one the rows stay in the op output.",
    ),
    "format": Field(str, default_value="csv", description="Record file format, csv or json."),
    "checkpoint_path": Field(
        Noneable(str),
        default_value=None,
        description="Checkpoint written after every chunk. Requires out_path.",
    ),
    "resume": Field(
        bool,
        default_value=False,
        description="Continue from checkpoint_path when it exists.",
    ),
    "yield_materializations": Field(
        config=bool,
        default_value=True,
        description="Whether or not to yield a materialization for the written record file.",
    ),
    "asset_key_prefix": Field(
        Noneable(str),
        default_value="szpiro",
        description="Prefix of the asset key of the materialization yielded by this op.",
    ),
}


def _run_options(op_config) -> dict:
    return {
        "out_path": op_config["out_path"],
        "fmt": op_config["format"],
        "checkpoint_path": op_config["checkpoint_path"],
        "resume": op_config["resume"],
    }


def _outputs(op_config, scan_output: ScanOutput):
    if op_config["yield_materializations"]:
        prefix = [op_config["asset_key_prefix"]] if op_config["asset_key_prefix"] else []
        yield from generate_materializations(scan_output, prefix)
    yield Output(scan_output, metadata={"rows": scan_output.rows})


@op(
    required_resource_keys={"szpiro"},
    ins={"start_after": In(Nothing)},
    out=Out(ScanOutput, description="Summary and records of the greatest prime factor scan."),
    config_schema={
        "poly": Field(
            str,
            is_required=True,
            description="Polynomial as an expression such as 'x^2+1' or coefficients '1,0,1'.",
        ),
        **_RUN_CONFIG,
    },
    tags={"kind": "szpiro"},
)
def gpf_scan_op(context):
    scan_output = context.resources.szpiro.scan_gpf(
        context.op_config["poly"],
        context.op_config["lo"],
        context.op_config["hi"],
        **_run_options(context.op_config),
    )
    yield from _outputs(context.op_config, scan_output)


@op(
    required_resource_keys={"szpiro"},
    ins={"start_after": In(Nothing)},
    out=Out(ScanOutput, description="Summary and records of the family scan."),
    config_schema={
        "family": Field(
            {
                "A_poly": Field(Noneable(str), default_value=None),
                "B_poly": Field(Noneable(str), default_value=None),
                "quadratic": Field(Noneable(str), default_value=None),
                "cubic": Field(Noneable(str), default_value=None),
            },
            is_required=True,
            description=(
                "Either A_poly and B_poly of y^2 = x^3 + A(t)x + B(t), or a quadratic or cubic"
                " 'a,b,c' triple."
            ),
        ),
        **_RUN_CONFIG,
    },
    tags={"kind": "szpiro"},
)
def family_scan_op(context):
    scan_output = context.resources.szpiro.scan_family(
        context.op_config["family"],
        context.op_config["lo"],
        context.op_config["hi"],
        **_run_options(context.op_config),
    )
    yield from _outputs(context.op_config, scan_output)


@op(
    required_resource_keys={"szpiro"},
    ins={"start_after": In(Nothing)},
    out=Out(ScanOutput, description="Summary and records of the valuation-product check."),
    config_schema={
        "poly": Field(
            str,
            is_required=True,
            description="Polynomial F with at least two distinct complex roots.",
        ),
        **_RUN_CONFIG,
    },
    tags={"kind": "szpiro"},
)
def condition_check_op(context):
    scan_output = context.resources.szpiro.check_condition(
        context.op_config["poly"],
        context.op_config["lo"],
        context.op_config["hi"],
        **_run_options(context.op_config),
    )
    yield from _outputs(context.op_config, scan_output)


@op(
    required_resource_keys={"szpiro"},
    ins={"start_after": In(Nothing)},
    out=Out(list, description="Pairs (n, P(n^2+1)) of the Luca table."),
    tags={"kind": "szpiro"},
)
def luca_table_op(context):
    table = context.resources.szpiro.luca_table()
    if tuple(table) != LUCA_TABLE:
        raise Failure(
            description="Recomputed Luca table differs from the reference values",
            metadata={"computed": str(table)},
        )
    yield Output(table, metadata={"rows": len(table)})
