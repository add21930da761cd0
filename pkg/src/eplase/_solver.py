"""Damped-Newton root finder with per-field residual scaling.

Shared by the bare and filter-augmented cumulant systems.  The residual of a
candidate fixed point is measured field-wise: for each (possibly complex)
state field the modulus of its time derivative is divided by
max(|field|, floor), and the worst ratio is the scalar residual.  This keeps
one large component (photon numbers can reach 1e3 while correlators sit at
1e-9) from hiding an unconverged small one, and is insensitive to components
that vanish identically by symmetry.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError

RESIDUAL_FLOOR = 1e-12


def scaled_residual(x: np.ndarray, dx: np.ndarray, groups, floor: float = RESIDUAL_FLOOR) -> float:
    worst = 0.0
    for grp in groups:
        xm = math.sqrt(sum(x[i] * x[i] for i in grp))
        fm = math.sqrt(sum(dx[i] * dx[i] for i in grp))
        r = fm / max(xm, floor)
        if r > worst:
            worst = r
    return worst


#: a line-search stall below this residual is the rounding floor of the root,
#: not a failure (strongly separated rate scales leave an irreducible
#: cancellation noise well above eps on some rows)
FLOOR_ACCEPT_MAX = 1e-3


def newton_steady(fun, jac, x0, groups, tol, max_iter=80, max_backtracks=40):
    """Solve fun(x) = 0 by damped Newton iteration with row equilibration.

    Returns (x, residual).  A point where the line search can no longer
    reduce an already-small residual is accepted as the fixed point even
    above `tol`: the residual of an exactly known root cannot beat the
    rounding of its largest cancelling terms.  Raises ConvergenceError when
    the iteration stalls away from any root or the budget runs out; the
    caller falls back to relaxation.
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    if not np.all(np.isfinite(f)):
        raise ConvergenceError("non-finite right-hand side at the seed", residual=math.inf)
    res = scaled_residual(x, f, groups)
    for _ in range(max_iter):
        if res < tol:
            return x, res
        J = jac(x)
        # equilibrate rows: the raw Jacobian mixes rates spanning ~10 decades
        rn = np.abs(J).max(axis=1)
        rn[rn == 0.0] = 1.0
        try:
            step = np.linalg.solve(J / rn[:, None], -f / rn)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J / rn[:, None], -f / rn, rcond=None)[0]
        alpha = 1.0
        for _ in range(max_backtracks):
            x_new = x + alpha * step
            f_new = fun(x_new)
            if np.all(np.isfinite(f_new)):
                res_new = scaled_residual(x_new, f_new, groups)
                if res_new < res:
                    x, f, res = x_new, f_new, res_new
                    break
            alpha *= 0.5
        else:
            # no direction of descent left: either the residual is pure
            # rounding noise around the root (accept) or a real failure
            if res < FLOOR_ACCEPT_MAX:
                return x, res
            raise ConvergenceError(
                f"Newton line search stalled at scaled residual {res:.3e}", residual=res)
    raise ConvergenceError(
        f"Newton did not reach tol={tol:.1e} within {max_iter} iterations "
        f"(residual {res:.3e})", residual=res)
