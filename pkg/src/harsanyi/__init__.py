"""Exact Harsanyi interaction toolkit.

Extracts Harsanyi dividends from value functions over maskable inputs, checks
the classical attribution identities, and computes concept-sparsity
diagnostics (order sums, cancellation ratios, valid-concept counts, strength
curves, assumption checks and the order-sum / count bounds).
"""
from .subset_algebra import (
    binomial,
    mobius_transform,
    popcount,
    subsets_of_size,
    zeta_transform,
)
from .game_oracle import (
    ExternalOracle,
    FunctionOracle,
    Oracle,
    OracleDescriptor,
    TableOracle,
    ValueTable,
    load_value_table,
    open_oracle,
    save_value_table,
    tabulate,
)
from .interaction_core import (
    InteractionTable,
    conditional_interaction,
    harsanyi_dividends,
    harsanyi_single_naive,
    marginal_benefit,
    reconstruct_output,
    verify_universal_matching,
)
from .attribution import (
    shapley_interaction_from_harsanyi,
    shapley_interaction_index,
    shapley_taylor_from_harsanyi,
    shapley_taylor_index,
    shapley_values_definitional,
    shapley_values_from_harsanyi,
)
from .sparsity import full_report
from .synthetic import (
    noisy_game,
    or_game,
    parity_game,
    planted_game,
    polynomial_game,
)

__version__ = "0.1.0"
