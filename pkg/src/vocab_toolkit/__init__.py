"""Toolkit for predicting compute-optimal vocabulary sizes of language
models from non-vocabulary parameters, compute budgets and data volume."""

from .bpe import MergeTable, decode, encode, measure_ratio, train_bpe
from .derivative import (
    GammaFit,
    derivative_ladder_pairs,
    dflops_dv,
    fit_gamma,
    predict_nv,
    solve_v_root,
)
from .errors import (
    OutOfRangeError,
    SolverError,
    UnderdeterminedError,
    ValidationError,
    VocabToolkitError,
)
from .fertility import FertilityFit, FertilityPoint, eval_fertility, fit_fertility
from .isoflops import (
    AllocationLaws,
    BudgetOptimum,
    PowerLawFit,
    densify,
    fit_power_laws,
    loss_curve_at_budget,
    predict_allocation,
    select_optima,
)
from .lossmetrics import TokenEvent, UnigramTable, bpc, build_unigram_table, lm_loss, unigram_loss
from .parametric import ParametricLoss, eval_loss, fit_params, optimal_v_chars, optimal_v_flops
from .presets import PRESETS, PresetBundle, get_preset
from .records import (
    DEFAULT_SHAPE_TABLE,
    RunRecord,
    ShapeTable,
    embed_dim_for,
    flops_cost,
    read_records_csv,
    tokens_from_chars,
    validate_record,
    write_records_csv,
)
from .synth import SynthPlan, generate, optima_from_laws

__version__ = "0.1.0"
