"""Stochastic Dual Simplex Algorithm (SDSA).

Two Nelder-Mead style simplexes move with reflection, expansion and
contraction. The operator coefficients are redrawn every iteration from
``(0, cap]`` (expansion from ``(1, cap]``) and shared by both simplexes. After the deterministic moves, the
worst vertex of each simplex is offered a Gaussian replacement along the
global centroid direction and keeps it only if it improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ObjectiveFailure

Objective = Callable[[NDArray[np.float64]], float]


@dataclass(frozen=True)
class SdsaConfig:
    a_max: float = 10.5907
    alpha_max: float = 9.7323
    gamma_max: float = 9.9185
    beta_max: float = 0.4679
    i_max: int = 979
    n_simplexes: int = 2
    seed: int = 0
    stochastic: bool = True
    tol: float = 1e-9
    cov_floor: float = 1e-9

    def __post_init__(self):
        if not self.a_max > 0:
            raise ValueError("a_max must be positive")
        if not self.alpha_max > 0:
            raise ValueError("alpha_max must be positive")
        if not self.gamma_max > 1:
            raise ValueError("gamma_max must exceed 1")
        if not 0 <= self.beta_max <= 1:
            raise ValueError("beta_max must lie in [0, 1]")
        if self.i_max < 1 or self.n_simplexes < 1:
            raise ValueError("i_max and n_simplexes must be at least 1")


@dataclass
class Simplex:
    vertices: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self):
        self.vertices = np.array(self.vertices, dtype=float)
        self.values = np.array(self.values, dtype=float)
        n1, n = self.vertices.shape
        if n1 != n + 1 or self.values.shape != (n1,):
            raise ValueError("a simplex in R^n needs n+1 vertices and n+1 values")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def worst(self) -> int:
        return int(np.argmax(self.values))

    @property
    def best(self) -> int:
        return int(np.argmin(self.values))

    @property
    def centroid(self) -> NDArray[np.float64]:
        """Mean of all vertices except the worst."""
        h = self.worst
        return (self.vertices.sum(axis=0) - self.vertices[h]) / self.dim

    def diameter(self) -> float:
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diff**2).sum(axis=-1)).max())

    def copy(self) -> "Simplex":
        return Simplex(self.vertices.copy(), self.values.copy())


@dataclass
class SdsaResult:
    x: NDArray[np.float64]
    fun: float
    history: list[tuple[int, float]] = field(default_factory=list)
    nfev: int = 0
    nit: int = 0
    simplexes: list[Simplex] = field(default_factory=list)


def reflect(simplex: Simplex, alpha: float) -> NDArray[np.float64]:
    if not alpha > 0:
        raise ValueError("reflection coefficient must be positive")
    return reflect_point(simplex.vertices[simplex.worst], simplex.centroid, alpha)


def reflect_point(x_h: ArrayLike, centroid: ArrayLike, alpha: float) -> NDArray[np.float64]:
    return (1.0 + alpha) * np.asarray(centroid, dtype=float) - alpha * np.asarray(x_h, dtype=float)


def expand(x_r: ArrayLike, centroid: ArrayLike, gamma: float) -> NDArray[np.float64]:
    if not gamma > 1:
        raise ValueError("expansion coefficient must exceed 1")
    return gamma * np.asarray(x_r, dtype=float) + (1.0 - gamma) * np.asarray(centroid, dtype=float)


def contract(x_h: ArrayLike, centroid: ArrayLike, beta: float) -> NDArray[np.float64]:
    if not 0 <= beta <= 1:
        raise ValueError("contraction coefficient must lie in [0, 1]")
    return beta * np.asarray(x_h, dtype=float) + (1.0 - beta) * np.asarray(centroid, dtype=float)


def regular_simplex(center: ArrayLike, edge: float | ArrayLike) -> NDArray[np.float64]:
    """Vertices of a regular simplex with unit edge, scaled per axis and centered."""
    center = np.asarray(center, dtype=float)
    n = center.size
    p = (math.sqrt(n + 1) + n - 1) / (n * math.sqrt(2))
    q = (math.sqrt(n + 1) - 1) / (n * math.sqrt(2))
    verts = np.zeros((n + 1, n))
    verts[1:] = q
    verts[1:][np.diag_indices(n)] = p
    verts -= verts.mean(axis=0)
    return center + verts * np.asarray(edge, dtype=float)


def global_centroid(simplexes: Sequence[Simplex]) -> NDArray[np.float64]:
    """Sum (not mean) of the per-simplex centroids."""
    return np.sum([s.centroid for s in simplexes], axis=0)


def vertex_covariance(simplexes: Sequence[Simplex], floor: float = 1e-9) -> NDArray[np.float64]:
    pts = np.vstack([s.vertices for s in simplexes])
    cov = np.atleast_2d(np.cov(pts, rowvar=False))
    return cov + floor * np.eye(pts.shape[1])


def sample_direction(
    rng: np.random.Generator, centroid: ArrayLike, cov: ArrayLike
) -> tuple[float, NDArray[np.float64]]:
    """Draw ``delta ~ N(0, cov)`` and return ``(g, step)``.

    With a nonzero global centroid ``c``, the step is ``g * c`` where
    ``g = delta . c / |c|^2`` (the projection of the draw onto ``c``).
    Otherwise the raw draw is the step and ``g`` is reported as NaN.
    """
    centroid = np.asarray(centroid, dtype=float)
    L = np.linalg.cholesky(np.asarray(cov, dtype=float))
    delta = L @ rng.standard_normal(centroid.size)
    nrm2 = float(centroid @ centroid)
    if nrm2 > 0.0:
        g = float(delta @ centroid) / nrm2
        return g, g * centroid
    return math.nan, delta


class _Evaluator:
    """Counts evaluations; points outside the box score +inf without evaluation.

    Rejecting rather than projecting keeps every simplex full-dimensional:
    projected vertices would pile up on box faces, and reflection, expansion
    and contraction can never leave the affine hull they span.
    """

    def __init__(self, objective: Objective, lo, hi):
        self.objective = objective
        self.lo, self.hi = lo, hi
        self.nfev = 0

    def __call__(self, x) -> float:
        if np.any(x < self.lo) or np.any(x > self.hi):
            return math.inf
        self.nfev += 1
        try:
            val = float(self.objective(x))
        except ObjectiveFailure:
            raise
        except Exception as exc:
            raise ObjectiveFailure(f"objective raised {exc!r}", point=x.copy()) from exc
        if math.isnan(val):
            raise ObjectiveFailure("objective returned NaN", point=x.copy())
        return val


def stochastic_replace(
    simplexes: list[Simplex],
    rng: np.random.Generator,
    evaluate: Callable[[NDArray[np.float64]], float],
    cov_floor: float = 1e-9,
) -> list[Simplex]:
    """Offer each simplex a Gaussian replacement of its worst vertex (greedy)."""
    c = global_centroid(simplexes)
    cov = vertex_covariance(simplexes, cov_floor)
    for s in simplexes:
        h = s.worst
        _, step = sample_direction(rng, c, cov)
        cand = s.vertices[h] + step
        f = evaluate(cand)
        if f < s.values[h]:
            s.vertices[h] = cand
            s.values[h] = f
    return simplexes


def _draw(rng: np.random.Generator, lo: float, hi: float) -> float:
    # uniform on (lo, hi]
    return hi - (hi - lo) * rng.random()


def _move(s: Simplex, alpha: float, gamma: float, beta: float, ev: _Evaluator) -> None:
    """One reflection / expansion / contraction cycle on simplex ``s`` (in place)."""
    order = np.argsort(s.values, kind="stable")
    l, h = order[0], order[-1]
    f_second = s.values[order[-2]]
    c = s.centroid

    # a long reflection that fails to beat the second-worst vertex is retried
    # at half the coefficient, down to the unit reflection
    while True:
        xr = reflect_point(s.vertices[h], c, alpha)
        fr = ev(xr)
        if fr < f_second or alpha <= 1.0:
            break
        alpha = max(1.0, 0.5 * alpha)
    if fr < s.values[l]:
        xe = expand(xr, c, gamma)
        fe = ev(xe)
        if fe < fr:
            s.vertices[h], s.values[h] = xe, fe
        else:
            s.vertices[h], s.values[h] = xr, fr
        return
    if fr < f_second:
        s.vertices[h], s.values[h] = xr, fr
        return
    if fr < s.values[h]:
        s.vertices[h], s.values[h] = xr, fr
    xc = contract(s.vertices[h], c, beta)
    fc = ev(xc)
    if fc < s.values[h]:
        s.vertices[h], s.values[h] = xc, fc
        return
    # contraction failed: pull every vertex toward the best one
    best = s.vertices[l].copy()
    for i in range(s.vertices.shape[0]):
        if i == l:
            continue
        s.vertices[i] = best + beta * (s.vertices[i] - best)
        s.values[i] = ev(s.vertices[i])


def initial_simplexes(
    evaluate: Callable[[NDArray[np.float64]], float],
    lo: NDArray[np.float64],
    hi: NDArray[np.float64],
    config: SdsaConfig,
    rng: np.random.Generator,
    x0: ArrayLike | None = None,
) -> list[Simplex]:
    """Regular simplexes of edge ``a_max`` (capped at half the box width per axis).

    A simplex that would poke out of the box is shrunk about its center until
    it fits, so it stays regular in the per-axis scaled coordinates. A start
    point ``x0`` on or near a face is first nudged inward so that at least a
    quarter-size simplex fits around it.
    """
    edge = np.minimum(config.a_max, 0.5 * (hi - lo))
    offsets = regular_simplex(np.zeros(lo.size), edge)
    out = []
    for k in range(config.n_simplexes):
        if k == 0 and x0 is not None:
            center = np.clip(
                np.asarray(x0, dtype=float),
                lo - 0.25 * offsets.min(axis=0),
                hi - 0.25 * offsets.max(axis=0),
            )
        else:
            center = lo + (hi - lo) * rng.random(lo.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(offsets > 0, (hi - center) / offsets, np.inf)
            room = np.minimum(room, np.where(offsets < 0, (lo - center) / offsets, np.inf))
        verts = center + min(1.0, float(room.min())) * offsets
        out.append(Simplex(verts, [evaluate(v) for v in verts]))
    return out


def minimize(
    objective: Objective,
    bounds: Sequence[tuple[float, float]],
    config: SdsaConfig = SdsaConfig(),
    x0: ArrayLike | None = None,
    simplexes: Sequence[Simplex] | None = None,
    callback: Callable[[int, float, NDArray[np.float64]], None] | None = None,
) -> SdsaResult:
    """Minimize ``objective`` over a box with SDSA.

    ``history`` holds ``(iteration, best value so far)``; iteration 0 is the
    initialization. Candidates outside ``bounds`` are rejected. Runs until
    ``config.i_max`` iterations or until every simplex has diameter below
    ``config.tol``. Pass ``simplexes`` to start from explicit vertex sets.
    """
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(hi < lo):
        raise ValueError("each bound must satisfy low <= high")
    rng = np.random.default_rng(config.seed)
    ev = _Evaluator(objective, lo, hi)

    if simplexes is None:
        simp = initial_simplexes(ev, lo, hi, config, rng, x0)
    else:
        simp = [s.copy() for s in simplexes]

    def incumbent():
        k = int(np.argmin([s.values[s.best] for s in simp]))
        s = simp[k]
        return s.values[s.best], s.vertices[s.best]

    best_f, best_x = incumbent()
    best_x = best_x.copy()
    history = [(0, float(best_f))]
    it = 0
    for it in range(1, config.i_max + 1):
        alpha = _draw(rng, 0.0, config.alpha_max)
        gamma = _draw(rng, 1.0, config.gamma_max)
        beta = _draw(rng, 0.0, config.beta_max)
        for s in simp:
            _move(s, alpha, gamma, beta, ev)
        if config.stochastic:
            stochastic_replace(simp, rng, ev, config.cov_floor)

        f, x = incumbent()
        if f < best_f:
            best_f, best_x = f, x.copy()
        history.append((it, float(best_f)))
        if callback is not None:
            callback(it, float(best_f), best_x)
        if all(s.diameter() < config.tol for s in simp):
            break

    return SdsaResult(best_x, float(best_f), history, ev.nfev, it, simp)


def nelder_mead_baseline(
    objective: Objective,
    bounds: Sequence[tuple[float, float]],
    max_fev: int,
    seed: int = 0,
    edge: float = 10.5907,
    alpha: float = 1.0,
    gamma: float = 2.0,
    beta: float = 0.5,
    tol: float = 1e-9,
) -> SdsaResult:
    """Single-simplex Nelder-Mead with fixed textbook coefficients.

    Shares the move logic with SDSA so that comparisons isolate the dual
    simplex, the random coefficients and the stochastic replacement.
    """
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = np.random.default_rng(seed)
    ev = _Evaluator(objective, lo, hi)
    cfg = SdsaConfig(a_max=edge, n_simplexes=1, stochastic=False)
    (s,) = initial_simplexes(ev, lo, hi, cfg, rng)
    history = [(0, float(s.values.min()))]
    it = 0
    while ev.nfev < max_fev and s.diameter() >= tol:
        it += 1
        _move(s, alpha, gamma, beta, ev)
        history.append((it, float(s.values.min())))
    return SdsaResult(s.vertices[s.best].copy(), float(s.values.min()), history, ev.nfev, it, [s])
