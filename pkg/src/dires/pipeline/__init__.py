"""The four-stage Hamilton cycle construction on a resilience survivor."""

from .census import (BadCensus, CensusContext, Type1Verdict, Type2Verdict, classify_atypical,
                     classify_bad_type1, classify_bad_type2, pair_clause_witness)
from .config import DEFAULT, DESK, PROFILES, Derived, PipelineConfig
from .stages import (AbsorptionIndices, AssertionLog, PipelineResult, StageFailure, absorbing_arc_census,
                     find_absorption_indices, run_pipeline, stage1_build, stage2_extend, stage3_close,
                     stage4_absorb, write_trace)
from .steps import (PipelineState, StepFailure, big_step, closing_step, nice_mask, niceness,
                    random_forward_step, refresh_reserve, standard_backward_step, standard_forward_step)

__all__ = [
    "BadCensus", "CensusContext", "Type1Verdict", "Type2Verdict", "classify_atypical",
    "classify_bad_type1", "classify_bad_type2", "pair_clause_witness",
    "DEFAULT", "DESK", "PROFILES", "Derived", "PipelineConfig",
    "AbsorptionIndices", "AssertionLog", "PipelineResult", "StageFailure", "absorbing_arc_census",
    "find_absorption_indices", "run_pipeline", "stage1_build", "stage2_extend", "stage3_close",
    "stage4_absorb", "write_trace",
    "PipelineState", "StepFailure", "big_step", "closing_step", "nice_mask", "niceness",
    "random_forward_step", "refresh_reserve", "standard_backward_step", "standard_forward_step",
]
