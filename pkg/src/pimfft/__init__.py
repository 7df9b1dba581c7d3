"""Cycle-accurate memristive crossbar simulator for in-memory FFT and polynomial multiplication."""

from .crossbar import (
    CLOCK_HZ,
    GATE_ENERGY_FJ,
    ColumnOp,
    ColumnSegment,
    ConfigurationError,
    Crossbar,
    CrossbarDims,
    CrossbarError,
    PartitionConfig,
    RowSegment,
    Trace,
    new_crossbar,
)
