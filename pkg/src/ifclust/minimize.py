"""Cluster relaxation by nonlinear conjugate gradients.

The descent directions follow the Polak-Ribiere rule with the beta
coefficient clamped at zero, restarted to steepest descent periodically and
whenever a direction fails to point downhill. Step lengths satisfy the strong
Wolfe conditions, found by bracketing plus cubic-interpolation zoom. Energies
are monotone non-increasing across accepted steps; convergence is declared on
the gradient norm alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericBreakdownError, ZeroEnergyError
from .geometry import Cluster
from .potentials import PairPotential, _raw_energy_gradient, cluster_energy, cluster_gradient

# A configuration counts as stationary only below this absolute gradient norm;
# the relative test against the energy is configured via delta0.
STATIONARY_GRAD_BOUND = 1e-4

_TraceFn = Callable[[int, float, float, float], None]


@dataclass(frozen=True)
class RelaxOptions:
    """Knobs for :func:`relax`.

    max_iters and restart_period default to 200*n and 3*n for an n-particle
    cluster when left as None.
    """

    grad_tol: float = 1e-8
    max_iters: int | None = None
    restart_period: int | None = None
    line_search_c1: float = 1e-4
    line_search_c2: float = 0.4
    delta0: float = 1e-6

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.restart_period is not None and self.restart_period < 1:
            raise ValueError("restart_period must be positive")
        if not (0.0 < self.line_search_c1 < self.line_search_c2 < 1.0):
            raise ValueError("line search constants must satisfy 0 < c1 < c2 < 1")
        if not (0.0 < self.delta0 < 1.0):
            raise ValueError("delta0 must lie in (0, 1)")


@dataclass(frozen=True)
class RelaxResult:
    cluster: Cluster
    energy: float
    grad_norm: float
    iterations: int
    converged: bool


_LS_MAX_EVALS = 40


def _cubic_step(a0, f0, g0, a1, f1, g1):
    """Minimizer of the cubic through (a0, f0, g0) and (a1, f1, g1), or None."""
    if not all(map(math.isfinite, (f0, g0, f1, g1))):
        return None
    d1 = g0 + g1 - 3.0 * (f0 - f1) / (a0 - a1)
    rad = d1 * d1 - g0 * g1
    if rad < 0.0:
        return None
    d2 = math.copysign(math.sqrt(rad), a1 - a0)
    denom = g1 - g0 + 2.0 * d2
    if denom == 0.0:
        return None
    a = a1 - (a1 - a0) * (g1 + d2 - d1) / denom
    return a if math.isfinite(a) else None


class _LineSearch:
    """One strong-Wolfe search along a fixed direction, with an eval budget."""

    def __init__(self, model, coords, d, e0, de0, c1, c2):
        self._model = model
        self._x0 = coords
        self._dmat = d.reshape(coords.shape)
        self._e0 = e0
        self._de0 = de0
        self._c1 = c1
        self._c2 = c2
        self._evals = 0
        self.best = None  # (alpha, e, g) with e < e0, in case Wolfe fails

    def _phi(self, a):
        self._evals += 1
        e, g = _raw_energy_gradient(self._model, self._x0 + a * self._dmat)
        de = float(g.reshape(-1) @ self._dmat.reshape(-1)) if np.isfinite(g).all() else math.nan
        if math.isfinite(e) and np.isfinite(g).all() and e < self._e0:
            if self.best is None or e < self.best[1]:
                self.best = (a, e, g)
        return e, g, de

    def _wolfe_ok(self, de):
        return abs(de) <= -self._c2 * self._de0

    def _armijo_ok(self, a, e):
        return math.isfinite(e) and e <= self._e0 + self._c1 * a * self._de0

    def run(self, a_init):
        """Return (alpha, e, g, wolfe) or None when no decrease was found."""
        a_prev, e_prev, de_prev = 0.0, self._e0, self._de0
        a = a_init
        while self._evals < _LS_MAX_EVALS:
            e, g, de = self._phi(a)
            if not self._armijo_ok(a, e) or (a_prev > 0.0 and e >= e_prev):
                return self._zoom(a_prev, e_prev, de_prev, a, e, de)
            if self._wolfe_ok(de):
                return a, e, g, True
            if de >= 0.0:
                return self._zoom(a, e, de, a_prev, e_prev, de_prev)
            a_prev, e_prev, de_prev = a, e, de
            a *= 2.0
        return self._fallback()

    def _zoom(self, a_lo, e_lo, de_lo, a_hi, e_hi, de_hi):
        while self._evals < _LS_MAX_EVALS:
            width = a_hi - a_lo
            if abs(width) <= 1e-14 * max(1.0, abs(a_lo)):
                break
            a = _cubic_step(a_lo, e_lo, de_lo, a_hi, e_hi, de_hi)
            lo, hi = (a_lo, a_hi) if a_lo < a_hi else (a_hi, a_lo)
            margin = 0.1 * (hi - lo)
            if a is None or not (lo + margin <= a <= hi - margin):
                a = 0.5 * (a_lo + a_hi)
            e, g, de = self._phi(a)
            if not self._armijo_ok(a, e) or e >= e_lo:
                a_hi, e_hi, de_hi = a, e, de
            else:
                if self._wolfe_ok(de):
                    return a, e, g, True
                if de * (a_hi - a_lo) >= 0.0:
                    a_hi, e_hi, de_hi = a_lo, e_lo, de_lo
                a_lo, e_lo, de_lo = a, e, de
        return self._fallback()

    def _fallback(self):
        if self.best is None:
            return None
        a, e, g = self.best
        return a, e, g, False


# The line search accepts steps on energy comparisons, which lose meaning
# once energy differences fall under float resolution; gradients stay
# computable to full precision much longer. A finishing phase of steepest
# descent steps accepted on gradient-norm decrease closes that gap. It only
# runs when the stall is already near-stationary, so it polishes a minimum
# rather than wandering toward an arbitrary stationary point.
_POLISH_GRAD_BOUND = 1e-2
_POLISH_MAX_EVALS = 400


def _polish(model, x, e, g, gnorm, grad_tol, trace, iterations, budget):
    alpha = 1e-3
    prev_s = prev_y = None
    evals = 0
    while gnorm > grad_tol and evals < budget:
        if prev_s is not None:
            sy = float(prev_s @ prev_y)
            yy = float(prev_y @ prev_y)
            if sy > 0.0 and yy > 0.0:
                alpha = min(max(sy / yy, 1e-8), 1.0)
        x_new = x - alpha * g.reshape(x.shape)
        e_new, g_new = _raw_energy_gradient(model, x_new)
        evals += 1
        gn_new = float(np.linalg.norm(g_new))
        ok = math.isfinite(e_new) and math.isfinite(gn_new) and gn_new < gnorm
        if ok and e_new <= e + 1e-12 * (1.0 + abs(e)):
            prev_s = -alpha * g
            prev_y = g_new - g
            x, e, g, gnorm = x_new, e_new, g_new, gn_new
            iterations += 1
            if trace is not None:
                trace(iterations, e, gnorm, alpha)
        else:
            alpha *= 0.5
            prev_s = prev_y = None
            if alpha < 1e-12:
                break
    return x, e, gnorm, iterations


def relax(
    model: PairPotential,
    cluster: Cluster,
    opts: RelaxOptions | None = None,
    trace: _TraceFn | None = None,
) -> RelaxResult:
    """Drive a cluster to a nearby energy minimum.

    Args:
        model: pair potential to minimize under.
        cluster: starting configuration, at least two particles.
        opts: solver options; defaults applied when None.
        trace: optional callback invoked as trace(iteration, energy,
            grad_norm, step_length) once before the first step and after
            every accepted step.

    Returns:
        RelaxResult whose cluster carries the input labels. ``converged`` is
        True only when the gradient norm reached opts.grad_tol. A failed line
        search returns the best iterate reached so far with converged False.

    Raises:
        NumericBreakdownError: NaN or Inf at the starting point or an
            accepted iterate.
        ValueError: fewer than two particles.
    """
    if opts is None:
        opts = RelaxOptions()
    n = len(cluster)
    if n < 2:
        raise ValueError("relaxation needs at least two particles")
    max_iters = opts.max_iters if opts.max_iters is not None else 200 * n
    restart_period = opts.restart_period if opts.restart_period is not None else 3 * n

    x = np.array(cluster.coords, dtype=float)
    e, g = _raw_energy_gradient(model, x)
    if not (math.isfinite(e) and np.isfinite(g).all()):
        raise NumericBreakdownError("energy or gradient not finite at the starting point")

    gnorm = float(np.linalg.norm(g))
    d = -g
    since_restart = 0
    iterations = 0
    a_prev = de0_prev = None
    if trace is not None:
        trace(0, e, gnorm, 0.0)

    while gnorm > opts.grad_tol and iterations < max_iters:
        if since_restart >= restart_period or float(d @ g) >= 0.0:
            d = -g
            since_restart = 0
        dnorm = float(np.linalg.norm(d))
        if dnorm == 0.0:
            break
        de0 = float(d @ g)
        # trial step from first-order scaling of the previous accepted step;
        # the first iteration has no history and starts at a unit-length move
        a_init = 1.0 / dnorm
        if a_prev is not None:
            scaled = a_prev * de0_prev / de0
            if math.isfinite(scaled) and scaled > 0.0:
                a_init = scaled
        search = _LineSearch(
            model, x, d, e, de0, opts.line_search_c1, opts.line_search_c2
        )
        step = search.run(a_init)
        if step is None:
            if since_restart == 0:
                break  # even steepest descent found no decrease
            d = -g
            since_restart = 0
            continue
        a, e_new, g_new, wolfe = step
        if not (math.isfinite(e_new) and np.isfinite(g_new).all()):
            raise NumericBreakdownError(
                "energy or gradient not finite at an accepted step", last_coords=x.copy()
            )
        x = x + a * d.reshape(x.shape)
        a_prev, de0_prev = a, de0

        beta = 0.0 if not wolfe else max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        stalled = wolfe is False and (e - e_new) <= 1e-15 * (1.0 + abs(e))
        d = -g_new + beta * d
        if not wolfe:
            since_restart = restart_period  # force a fresh steepest-descent start
        else:
            since_restart += 1
        e, g = e_new, g_new
        gnorm = float(np.linalg.norm(g))
        iterations += 1
        if trace is not None:
            trace(iterations, e, gnorm, a)
        if stalled:
            break

    if opts.grad_tol < gnorm <= _POLISH_GRAD_BOUND and iterations < max_iters:
        budget = min(_POLISH_MAX_EVALS, max_iters - iterations)
        x, e, gnorm, iterations = _polish(
            model, x, e, g, gnorm, opts.grad_tol, trace, iterations, budget
        )

    converged = gnorm <= opts.grad_tol
    try:
        out = Cluster(x, cluster.labels)
    except ValueError as exc:
        # a potential without a repulsive core can pull particles together
        raise NumericBreakdownError(
            f"particles collapsed during relaxation: {exc}", last_coords=x.copy()
        ) from None
    return RelaxResult(out, e, gnorm, iterations, converged)


def is_stationary(model: PairPotential, cluster: Cluster, delta0: float = 1e-6) -> bool:
    """Whether the gradient is negligible both absolutely and against the energy.

    True iff the gradient norm is at most 1e-4 and its ratio to |energy| is
    below delta0. Raises ZeroEnergyError when the energy is exactly zero,
    where the ratio is undefined.
    """
    if not (0.0 < delta0 < 1.0):
        raise ValueError("delta0 must lie in (0, 1)")
    e = cluster_energy(model, cluster)
    if e == 0.0:
        raise ZeroEnergyError("stationarity ratio undefined at zero energy")
    gnorm = float(np.linalg.norm(cluster_gradient(model, cluster)))
    return gnorm <= STATIONARY_GRAD_BOUND and gnorm / abs(e) < delta0
