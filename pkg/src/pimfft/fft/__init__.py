"""In-memory radix-2 FFT in the R, TwoR and TwoRBeta configurations."""

from .engine import (
    apply_steps,
    bit_reversal_permute,
    butterfly_rows,
    load_sequence,
    move_sequence,
    read_codes,
    read_sequence,
    run_fft,
    run_inverse_fft,
    scale_by_n,
    stage_align_r,
    stage_restore_r,
    swap_pairs_2r,
)
from .layout import Layout
from .plan import ColumnMap, FFTConfig, FFTPlan, Stage, TwiddleTable, default_layout, plan_fft
