"""Fixed points of the reverse drift and their bifurcations across noise.

The drift residual is ``g(x) = c * x - d/dx log p_t(x)`` with ``c = 0.5`` by
default; its roots are the attractors/repellers organizing the generative
dynamics, and the noise levels where the root count changes are the
bifurcations that split one branch of generation into several.

Roots are located by a hybrid iteration: a full Newton step is accepted
whenever it reduces ``|g|``, otherwise the step is halved (backtracking along
the descent direction of ``g^2``).  Starts come from a uniform grid over the
search box plus bisection-refined sign-change brackets found on that grid;
the brackets matter at low noise, where repelling roots live in posterior
switch layers of width ``~ var / separation`` that no reasonable grid hits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import MixtureModel, NoiseSchedule, ParameterError, TimeGrid
from .mixture import diffused_params, score, score_derivative

__all__ = [
    "DEFAULT_DRIFT_COEFF",
    "RESIDUAL_TOL",
    "FixedPoint",
    "CountChange",
    "BifurcationDiagram",
    "drift_residual",
    "drift_residual_derivative",
    "find_fixed_points",
    "trace_bifurcations",
    "sibling_split_time",
]

DEFAULT_DRIFT_COEFF = 0.5
RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-6
STEP_TOL = 1e-12
MAX_ITER = 200
_MAX_HALVINGS = 60
_BISECT_ITER = 80


def drift_residual(mixture: MixtureModel, alpha_bar: float, x,
                   drift_coeff: float = DEFAULT_DRIFT_COEFF):
    """``drift_coeff * x - score(x)`` at the given noise level."""
    return drift_coeff * np.asarray(x, dtype=np.float64) - score(mixture, alpha_bar, x)


def drift_residual_derivative(mixture: MixtureModel, alpha_bar: float, x,
                              drift_coeff: float = DEFAULT_DRIFT_COEFF):
    return drift_coeff - score_derivative(mixture, alpha_bar, x)


@dataclass(frozen=True)
class FixedPoint:
    """A converged root of the drift residual at one noise level.

    ``stable`` is the sign of the residual slope: positive slope means the
    descent dynamics ``x' = -g(x)`` contracts onto the root.
    """

    x: float
    alpha_bar: float
    residual: float
    stable: bool

    def __post_init__(self):
        if not abs(self.residual) < RESIDUAL_TOL:
            raise ParameterError(
                f"fixed point at x={self.x!r} has residual {self.residual!r} >= {RESIDUAL_TOL}"
            )


@dataclass(frozen=True)
class CountChange:
    """A bracket of adjacent steps across which the root count changes."""

    t_before: int
    t_after: int
    s: float
    alpha_bar_before: float
    alpha_bar_after: float
    count_before: int
    count_after: int


@dataclass(frozen=True)
class BifurcationDiagram:
    """Fixed points per swept noise level plus the detected count changes."""

    steps: np.ndarray
    s: np.ndarray
    alpha_bars: np.ndarray
    points: tuple[tuple[FixedPoint, ...], ...]
    critical: tuple[CountChange, ...]

    @property
    def counts(self) -> np.ndarray:
        return np.asarray([len(p) for p in self.points])


def _default_box(mixture: MixtureModel, alpha_bar: float) -> tuple[float, float]:
    # Roots live in the convex hull of the origin and the diffused means; a
    # 4-sigma margin keeps the hull comfortably interior.
    mu, var = diffused_params(mixture, alpha_bar)
    sd = np.sqrt(var)
    lo = min(0.0, float(np.min(mu - 4.0 * sd)))
    hi = max(0.0, float(np.max(mu + 4.0 * sd)))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def _bracket_starts(g_vals: np.ndarray, grid: np.ndarray, g) -> np.ndarray:
    """Bisection-refined sign-change cells of ``g``, one start per cell.

    Returns whichever bracket endpoint ends up with the smaller ``|g|``; near
    razor-thin roots the residual is a step function of ``x`` at float
    resolution, and the midpoint routinely sits on the wrong step.
    """
    signs = np.sign(g_vals)
    idx = np.flatnonzero(signs[1:] * signs[:-1] < 0)
    if idx.size == 0:
        return np.empty(0)
    lo = grid[idx].copy()
    hi = grid[idx + 1].copy()
    g_lo = g_vals[idx].copy()
    g_hi = g_vals[idx + 1].copy()
    for _ in range(_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        left = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(left, mid, lo)
        g_lo = np.where(left, g_mid, g_lo)
        hi = np.where(left, hi, mid)
        g_hi = np.where(left, g_hi, g_mid)
    return np.where(np.abs(g_lo) <= np.abs(g_hi), lo, hi)


def find_fixed_points(mixture: MixtureModel, alpha_bar: float,
                      search_box: tuple[float, float] | None = None,
                      n_starts: int = 256,
                      drift_coeff: float = DEFAULT_DRIFT_COEFF,
                      residual_tol: float = RESIDUAL_TOL,
                      dedup_tol: float = DEDUP_TOL) -> tuple[FixedPoint, ...]:
    """Locate every root of the drift residual inside the search box.

    Runs the hybrid Newton iteration from grid-seeded starts (plus refined
    sign-change brackets), keeps starts that converge below ``residual_tol``,
    deduplicates within ``dedup_tol`` and classifies stability from the
    residual slope.  Iterates are confined to the box; an empty result
    triggers a warning, not an error.

    Very close to the clean end (variance below ~1e-3 for unit-scale
    mixtures), repelling roots that do not fall on an exactly representable
    point live on residual steps larger than ``residual_tol`` in float64 and
    are dropped; attracting roots are unaffected.
    """
    if search_box is None:
        search_box = _default_box(mixture, alpha_bar)
    lo_box, hi_box = float(search_box[0]), float(search_box[1])
    if not lo_box < hi_box:
        raise ParameterError(f"search box must satisfy lo < hi, got {search_box!r}")
    if n_starts < 2:
        raise ParameterError(f"n_starts must be >= 2, got {n_starts}")

    def g(x):
        return drift_residual(mixture, alpha_bar, x, drift_coeff)

    def gp(x):
        return drift_residual_derivative(mixture, alpha_bar, x, drift_coeff)

    # The FixedPoint contract caps the acceptance threshold.
    residual_tol = min(residual_tol, RESIDUAL_TOL)

    grid = np.linspace(lo_box, hi_box, n_starts)
    g_grid = np.asarray(g(grid))
    x = np.concatenate([grid, _bracket_starts(g_grid, grid, g)])

    fx = np.asarray(g(x))
    done = ~np.isfinite(fx)
    for _ in range(MAX_ITER):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        xa, fa = x[active], fx[active]
        da = np.asarray(gp(xa))
        bad = (da == 0.0) | ~np.isfinite(da)
        step = np.where(bad, 0.0, -fa / np.where(bad, 1.0, da))
        cand = np.clip(xa + step, lo_box, hi_box)
        improved = np.zeros(active.size, dtype=bool)
        fc = fa.copy()
        for _ in range(_MAX_HALVINGS):
            pending = ~improved & (cand != xa)
            if not pending.any():
                break
            trial = np.asarray(g(cand[pending]))
            better = np.abs(trial) < np.abs(fa[pending])
            hit = np.flatnonzero(pending)[better]
            improved[hit] = True
            fc[hit] = trial[better]
            miss = np.flatnonzero(pending)[~better]
            cand[miss] = np.clip(xa[miss] + 0.5 * (cand[miss] - xa[miss]), lo_box, hi_box)
        moved = np.abs(cand - xa)
        x[active] = np.where(improved, cand, xa)
        fx[active] = np.where(improved, fc, fa)
        finished = ~improved | (moved < STEP_TOL * np.maximum(1.0, np.abs(cand)))
        done[active[finished]] = True

    keep = np.abs(fx) < residual_tol
    roots = x[keep]
    residuals = fx[keep]
    if roots.size == 0:
        warnings.warn(
            f"no drift fixed points converged at alpha_bar={alpha_bar!r} in {search_box!r}",
            RuntimeWarning,
        )
        return ()

    order = np.argsort(roots)
    roots, residuals = roots[order], residuals[order]
    clusters: list[tuple[float, float]] = []
    for r, res in zip(roots, residuals):
        if clusters and abs(r - clusters[-1][0]) <= dedup_tol:
            if abs(res) < abs(clusters[-1][1]):
                clusters[-1] = (r, res)
        else:
            clusters.append((r, res))

    out = []
    for r, res in clusters:
        slope = float(gp(np.asarray(r)))
        out.append(FixedPoint(x=float(r) + 0.0, alpha_bar=float(alpha_bar),
                              residual=float(res), stable=slope > 0.0))
    return tuple(out)


def _count_at(mixture, schedule, t, stable_only, window, **solver):
    pts = find_fixed_points(mixture, schedule.alpha_bar(t), **solver)
    if stable_only:
        pts = [p for p in pts if p.stable]
    if window is not None:
        lo, hi = window(schedule.alpha_bar(t))
        pts = [p for p in pts if lo <= p.x <= hi]
    return len(pts)


def _refine_change(mixture, schedule, t_lo, t_hi, count_fn) -> tuple[int, int]:
    """Shrink a count-change bracket to adjacent integer steps."""
    c_lo = count_fn(t_lo)
    while t_hi - t_lo > 1:
        mid = (t_lo + t_hi) // 2
        if count_fn(mid) == c_lo:
            t_lo = mid
        else:
            t_hi = mid
    return t_lo, t_hi


def trace_bifurcations(mixture: MixtureModel, schedule: NoiseSchedule, stride: int = 10,
                       drift_coeff: float = DEFAULT_DRIFT_COEFF,
                       n_starts: int = 256) -> BifurcationDiagram:
    """Sweep the schedule, collect fixed points per level, locate count changes.

    Count changes between strided levels are refined by bisection on the step
    index down to adjacent steps, i.e. to a normalized-time resolution of
    ``1/T``; the reported critical ``s`` is the bracket midpoint.  One change
    is recorded per strided interval, so shrink the stride to resolve events
    that cluster closer than it.
    """
    times = TimeGrid.strided(schedule, stride)
    solver = dict(drift_coeff=drift_coeff, n_starts=n_starts)
    levels = []
    for t in times.steps:
        try:
            levels.append(find_fixed_points(mixture, schedule.alpha_bar(int(t)), **solver))
        except Exception as err:
            raise type(err)(f"level t={int(t)}: {err}") from err

    def count_fn(t):
        return _count_at(mixture, schedule, int(t), stable_only=False, window=None, **solver)

    critical = []
    for i in range(1, len(levels)):
        if len(levels[i]) != len(levels[i - 1]):
            t_lo, t_hi = _refine_change(mixture, schedule, int(times.steps[i - 1]),
                                        int(times.steps[i]), count_fn)
            critical.append(CountChange(
                t_before=t_lo,
                t_after=t_hi,
                s=(t_lo + t_hi) / (2.0 * schedule.num_steps),
                alpha_bar_before=schedule.alpha_bar(t_lo),
                alpha_bar_after=schedule.alpha_bar(t_hi),
                count_before=count_fn(t_lo),
                count_after=count_fn(t_hi),
            ))

    alpha_bars = np.asarray([schedule.alpha_bar(int(t)) for t in times.steps])
    return BifurcationDiagram(
        steps=times.steps,
        s=times.s,
        alpha_bars=alpha_bars,
        points=tuple(levels),
        critical=tuple(critical),
    )


def sibling_split_time(mixture: MixtureModel, schedule: NoiseSchedule, i: int, j: int,
                       margin: float = 0.3, coarse_stride: int = 20,
                       drift_coeff: float = DEFAULT_DRIFT_COEFF,
                       n_starts: int = 256) -> float | None:
    """Normalized time where components ``i`` and ``j`` lose separate branches.

    Counts stable fixed points inside the pair's (noise-scaled) bracket and
    returns the midpoint of the adjacent-step interval over which the count
    first drops below two in forward time, or ``None`` if the pair never has
    two branches on this schedule.
    """
    if not (0 <= i < mixture.num_components and 0 <= j < mixture.num_components) or i == j:
        raise ParameterError(f"need two distinct component indices, got ({i}, {j})")
    mu_i, mu_j = sorted((mixture.means[i], mixture.means[j]))
    pad = margin * (mu_j - mu_i)

    def window(alpha_bar):
        root = np.sqrt(alpha_bar)
        return root * (mu_i - pad), root * (mu_j + pad)

    solver = dict(drift_coeff=drift_coeff, n_starts=n_starts)

    def count_fn(t):
        return _count_at(mixture, schedule, int(t), stable_only=True, window=window, **solver)

    probes = list(range(1, schedule.num_steps + 1, coarse_stride))
    if probes[-1] != schedule.num_steps:
        probes.append(schedule.num_steps)
    prev_t = probes[0]
    prev_count = count_fn(prev_t)
    if prev_count < 2:
        return None
    for t in probes[1:]:
        count = count_fn(t)
        if count < 2:
            t_lo, t_hi = _refine_change(mixture, schedule, prev_t, t, count_fn)
            return (t_lo + t_hi) / (2.0 * schedule.num_steps)
        prev_t, prev_count = t, count
    return None
