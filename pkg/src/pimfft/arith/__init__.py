"""Element-parallel bit-serial arithmetic over crossbar columns."""

from .formats import HALF, PRESETS, SINGLE, ComplexSlot, NumberFormat, RealSlot, ScratchLayout, bits_to_codes, codes_to_bits
from .ops import (
    add_fixed,
    add_float,
    complex_add,
    complex_mul,
    complex_sub,
    conjugate_in_place,
    copy_slot,
    default_scratch,
    halve,
    mul_by_i,
    mul_fixed,
    mul_float,
    schedule_table,
    sub_fixed,
    sub_float,
    swap_slots,
)
