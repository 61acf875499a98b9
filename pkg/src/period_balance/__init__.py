"""Exact period functions of planar potential centers and their harmonic balance approximations."""

__version__ = "0.1.0"

from .asymptotics import TailFit, beta, exact_tail, tail_fit
from .compare import ComparisonReport, compare, error_curve, hbm_periods, hbm_taylor, local_match_order
from .duffing import order3_curve, order3_series, solve_order2_duffing, solve_order3_duffing
from .errors import (AnnulusError, ConsistencyError, ConvergenceError, DomainError, EnergyRangeError,
                     IllConditionedError, NoRealSolutionError, ParseError, PeriodBalanceError, UnsupportedError)
from .hbm import HbmSolution, build_system, hbm_series, project, solve_numeric, solve_order1
from .period import (cherkas_series, critical_periods, duffing_period, elliptic_K, lindstedt_series, period,
                     period_quadrature)
from .polyalg import MPoly, resultant
from .potentials import (AsymptoticTerm, GeneralPoly, Monotonicity, PolyFamily, Potential, Quintic,
                         RationalFamily, eval_potential, is_global_center, lf_length, monotonicity_criterion,
                         parse_potential)
from .series import Series
from .trig import TrigPoly, trig_reduce
