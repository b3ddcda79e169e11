"""Character sums, theta sums, and L-values for power-full moduli."""

from .character import (
    CharacterSpec,
    CharValue,
    DlogTables,
    char_parity,
    eval_char,
    eval_char_numeric,
    factorize,
    find_primitive_root,
    precompute_tables,
)
from .dualsum import DualPlan, dual_char_sum, dual_plan, real_char_at_real
from .lfunction import (
    LQuery,
    LResult,
    functional_equation_check,
    l_value,
    truncation_length,
)
from .numerics import PhaseMod1, choose_precision, e_of, working_precision
from .postnikov import PostnikovData, postnikov_data, progression_phase
from .theta import theta_brute, theta_fast, theta_poly
from .twisted import (
    block_decomposition,
    char_sum,
    gauss_sum,
    progression_modulus,
    twisted_theta,
    twisted_theta_poly,
)

__all__ = [
    "CharacterSpec",
    "CharValue",
    "DlogTables",
    "DualPlan",
    "LQuery",
    "LResult",
    "PhaseMod1",
    "PostnikovData",
    "block_decomposition",
    "char_parity",
    "char_sum",
    "choose_precision",
    "dual_char_sum",
    "dual_plan",
    "e_of",
    "eval_char",
    "eval_char_numeric",
    "factorize",
    "find_primitive_root",
    "functional_equation_check",
    "gauss_sum",
    "l_value",
    "postnikov_data",
    "precompute_tables",
    "progression_modulus",
    "progression_phase",
    "real_char_at_real",
    "theta_brute",
    "theta_fast",
    "theta_poly",
    "truncation_length",
    "twisted_theta",
    "twisted_theta_poly",
    "working_precision",
]

__version__ = "0.1.0"
