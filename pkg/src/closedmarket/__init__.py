"""Closed-economy equilibrium engine.

Couples a linear production sector (labor classes, technology matrix,
revenue maximization) with a linear-utility Fisher consumption market, and
studies how posted utilities move prices, wages and allocations.
"""

from .model import (CombinatorialData, DimensionMismatch, Economy,
                    EmptyTechnologyColumn, EquilibriumPoint, NonPositiveSupply,
                    ParameterBinding, ParametricFamily, ValidationError,
                    ZeroUtilityRowOrColumn, economy, normalize_point,
                    validate_economy)
from .lp import IterationLimit, LpProblem, LpSolution, solve_lp
from .production import (GoodListMismatch, aggregate_by_good,
                         check_production_space, joint_frontier, solve_production)
from .fisher import (FisherInstance, FisherSolution, NonConvergence,
                     NoUsefulGoods, UndefinedBB, bang_per_buck, check_fisher,
                     log_welfare, price_unproduced, solve_fisher)
from .equilibrium import (ADReport, Infeasible, NumericFailure,
                          check_ad_conditions, enumerate_structures,
                          extract_combinatorics, is_generic,
                          reconstruct_from_forest, verify_sm)
from .tatonnement import (SolveResult, TatonnementStatus, TatonnementTrace,
                          UnsolvedMarket, run_tatonnement, solve_equilibrium,
                          u_t_levels)
from .ccg import (Classification, DeltaReport, FormulaUndefined, GameTable,
                  IncompleteTable, ProbeReport, ZoneMap, boundary_probe,
                  classify_2x2, payoff, pure_nash, scenario_delta, sweep,
                  zone_map)

__version__ = "0.1.0"
