"""Symmetry-compressed evaluation and recovery from randomly corrupted truth tables."""
from .noise import NoiseOperator, TruthTable, build_table, corrupt, make_mask
from .perm import Permutation, aut_group, list_coset_reps, schreier_sims
from .problems import make_problem
from .recover import RecoveryConfig, RecoveryReduction, recover_all, recover_one
from .sicsaf import Semigroup, eval_bruteforce, eval_compressed, eval_compressed_regular

__version__ = "0.1.0"

__all__ = [
    "NoiseOperator", "Permutation", "RecoveryConfig", "RecoveryReduction", "Semigroup",
    "TruthTable", "aut_group", "build_table", "corrupt", "eval_bruteforce", "eval_compressed",
    "eval_compressed_regular", "list_coset_reps", "make_mask", "make_problem", "recover_all",
    "recover_one", "schreier_sims",
]
