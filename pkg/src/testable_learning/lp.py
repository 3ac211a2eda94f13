"""Linear-program backend (HiGHS through ``scipy.optimize.linprog``)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleError, SolverError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    # equality / inequality multipliers as reported by HiGHS (sign convention of linprog)
    eq_marginals: np.ndarray | None
    ub_marginals: np.ndarray | None


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None),
             tol: float = DEFAULT_TOL, method: str = "highs") -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and ``bounds``."""
    options = {
        "primal_feasibility_tolerance": tol,
        "dual_feasibility_tolerance": tol,
        "presolve": True,
    }
    if method in ("highs", "highs-ipm"):
        options["ipm_optimality_tolerance"] = max(tol, 1e-12)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method=method, options=options)
    if res.status == 2:
        raise InfeasibleError(res.message)
    if res.status != 0:
        raise SolverError(f"LP solver failed (status {res.status}): {res.message}")
    eq = getattr(res, "eqlin", None)
    ub = getattr(res, "ineqlin", None)
    return LPResult(
        np.asarray(res.x), float(res.fun),
        None if eq is None else np.asarray(eq.marginals),
        None if ub is None else np.asarray(ub.marginals),
    )
