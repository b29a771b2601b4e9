"""Tabulation of embedding nets and of tanh."""

from .rmse import RmseReport, rmse, rmse_compare
from .table import (
    CompressionTable,
    TableBuildError,
    TableDomainError,
    build_table,
    read_tables,
    write_tables,
)
from .tanh import TanhTable, build_tanh_table, eval_tanh


def eval_table(table, x):
    return table.evaluate(x)


def compress_model(model, h: float = 0.01, *, x0: float = 0.0, x_end: float | None = None,
                   r_min: float = 0.5, block: int = 16) -> tuple:
    """One table per neighbor species, covering ``[x0, 1/r_min]`` by default."""
    if x_end is None:
        x_end = 1.0 / r_min
    return tuple(build_table(net, x0, x_end, h, block=block) for net in model.embedding_nets)


__all__ = [
    "CompressionTable", "RmseReport", "TableBuildError", "TableDomainError", "TanhTable",
    "build_table", "build_tanh_table", "compress_model", "eval_table", "eval_tanh",
    "read_tables", "rmse", "rmse_compare", "write_tables",
]
