"""Horned Lizard Optimization Algorithm (HLOA): a bounded, derivative-free minimizer.

Each generation every candidate picks one of three moves:

* crypsis (p=0.4): ``best + u * (x_a - x_b)``, ``u ~ U(-1, 1)`` per coordinate,
  with ``a``, ``b`` two distinct peers other than the candidate itself;
* blood squirt (p=0.3): ``x + r * (best - x) + sigma_t * g``, ``r ~ U(0, 1)``,
  ``g ~ N(0, I)``, ``sigma_t`` shrinking linearly from ``sigma_start`` to
  ``sigma_end`` (fractions of the box width) as the budget is spent;
* escape (p=0.3): ``x + w_t * (upper - lower) * (r - 0.5)``, ``r ~ U(0, 1)``
  per coordinate, ``w_t`` shrinking linearly from 1 to 0.1.

Proposals are clamped to the box and replace their parent only on strict
improvement. After that the worst ``ceil(q * N)`` candidates, never including
the current best, are redrawn uniformly (the alpha-MSH restart).

Randomness for candidate ``i`` in generation ``g`` comes from its own stream
keyed on ``(seed, g, i)``, and proposals are built from the population as it
stood at the start of the generation, so evaluating candidates concurrently
cannot change the result.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._rng import make_rng

CRYPSIS, BLOOD_SQUIRT, ESCAPE = "crypsis", "blood_squirt", "escape"
_PROPOSAL_STREAM = 0x4C0A
_RESTART_STREAM = 0x4C0B
_INIT_STREAM = 0x4C0C


class OptimizationError(RuntimeError):
    """Raised when the objective yields no usable value."""


@dataclass(frozen=True, eq=False)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64, ndmin=1)
        hi = np.array(self.upper, dtype=np.float64, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D and of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, dim, low, high):
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def width(self):
        return self.upper - self.lower

    def clamp(self, x):
        return np.minimum(np.maximum(x, self.lower), self.upper)


@dataclass(frozen=True)
class HLOAConfig:
    pop_size: int = 20
    max_evaluations: int = 10_000
    p_crypsis: float = 0.4
    p_blood_squirt: float = 0.3
    p_escape: float = 0.3
    restart_fraction: float = 0.1
    sigma_start: float = 0.2
    sigma_end: float = 0.01
    seed: int = 0

    def validate(self):
        if self.pop_size < 4:
            raise ValueError(f"pop_size must be >= 4, got {self.pop_size}")
        if self.max_evaluations < self.pop_size:
            raise ValueError(
                f"max_evaluations ({self.max_evaluations}) must cover the initial population ({self.pop_size})"
            )
        probs = (self.p_crypsis, self.p_blood_squirt, self.p_escape)
        if min(probs) < 0 or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
            raise ValueError(f"strategy probabilities must be non-negative and sum to 1, got {probs}")
        if not 0.0 <= self.restart_fraction < 1.0:
            raise ValueError(f"restart_fraction must lie in [0, 1), got {self.restart_fraction}")
        if self.sigma_start < 0 or self.sigma_end < 0:
            raise ValueError("jump scales must be non-negative")

    @property
    def n_restart(self):
        return math.ceil(self.restart_fraction * self.pop_size)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True, eq=False)
class OptimizerState:
    space: SearchSpace
    config: HLOAConfig
    population: np.ndarray  # (N, dim)
    fitness: np.ndarray  # (N,); inf marks a candidate whose objective was NaN
    best_x: np.ndarray
    best_fitness: float
    generation: int = 0
    evaluations_used: int = 0
    nan_count: int = 0
    history: tuple = field(default=())  # (generation, evaluations_used, best_fitness)

    @property
    def progress(self):
        return min(1.0, self.evaluations_used / self.config.max_evaluations)

    @property
    def budget_left(self):
        return self.config.max_evaluations - self.evaluations_used

    @property
    def best_index(self):
        return int(np.argmin(self.fitness))


def jump_scale(config, progress):
    """Blood-squirt noise scale as a fraction of the box width."""
    return config.sigma_start + (config.sigma_end - config.sigma_start) * progress


def escape_weight(progress):
    return 1.0 + (0.1 - 1.0) * progress


def crypsis_move(best, x_a, x_b, u, space):
    return space.clamp(best + u * (x_a - x_b))


def blood_squirt_move(x, best, r, sigma, g, space):
    """``sigma`` is absolute (already multiplied by the box width)."""
    return space.clamp(x + r * (best - x) + sigma * g)


def escape_move(x, w, r, space):
    return space.clamp(x + w * space.width * (r - 0.5))


def choose_strategy(config, u):
    if u < config.p_crypsis:
        return CRYPSIS
    if u < config.p_crypsis + config.p_blood_squirt:
        return BLOOD_SQUIRT
    return ESCAPE


def _peers(rng, n, i):
    a, b = rng.choice(n - 1, size=2, replace=False)
    # map 0..n-2 onto 0..n-1 without i
    return int(a + (a >= i)), int(b + (b >= i))


def propose(state, i):
    """Proposal for candidate ``i`` and the strategy that produced it."""
    config, space = state.config, state.space
    rng = make_rng(config.seed, _PROPOSAL_STREAM, state.generation, i)
    strategy = choose_strategy(config, rng.random())
    x = state.population[i]
    d = space.dim
    if strategy == CRYPSIS:
        a, b = _peers(rng, state.population.shape[0], i)
        u = rng.uniform(-1.0, 1.0, size=d)
        return crypsis_move(state.best_x, state.population[a], state.population[b], u, space), strategy
    if strategy == BLOOD_SQUIRT:
        r = rng.random()
        g = rng.standard_normal(d)
        sigma = jump_scale(config, state.progress) * space.width
        return blood_squirt_move(x, state.best_x, r, sigma, g, space), strategy
    r = rng.random(d)
    return escape_move(x, escape_weight(state.progress), r, space), strategy


def _evaluate(objective, points, map_fn):
    """Objective values and the mask of NaN results."""
    values = np.array([float(v) for v in map_fn(objective, list(points))], dtype=np.float64)
    return values, np.isnan(values)


def init_population(space, config, objective, map_fn=map):
    config.validate()
    rng = make_rng(config.seed, _INIT_STREAM)
    pop = space.lower + rng.random((config.pop_size, space.dim)) * space.width
    pop = space.clamp(pop)
    fit, nan = _evaluate(objective, pop, map_fn)
    if nan.all():
        raise OptimizationError("objective returned NaN for the whole initial population")
    # a NaN candidate is kept in place but can never be the best
    fit[nan] = np.inf
    nan_count = int(nan.sum())
    best = int(np.argmin(fit))
    return OptimizerState(
        space=space,
        config=config,
        population=pop,
        fitness=fit,
        best_x=pop[best].copy(),
        best_fitness=float(fit[best]),
        generation=0,
        evaluations_used=config.pop_size,
        nan_count=nan_count,
        history=((0, config.pop_size, float(fit[best])),),
    )


def step(state, objective, map_fn=map):
    """Run one generation and return the new state."""
    if state.budget_left <= 0:
        raise ValueError("evaluation budget exhausted")
    config, space = state.config, state.space
    N = state.population.shape[0]
    pop = state.population.copy()
    fit = state.fitness.copy()

    m = min(N, state.budget_left)
    proposals = np.array([propose(state, i)[0] for i in range(m)])
    new_fit, nan = _evaluate(objective, proposals, map_fn)
    improved = ~nan & (new_fit < fit[:m])
    pop[:m][improved] = proposals[improved]
    fit[:m][improved] = new_fit[improved]
    nan_count = int(nan.sum())
    used = m

    # alpha-MSH restart of the worst candidates, sparing the current best
    k = min(config.n_restart, state.budget_left - used, N - 1)
    if k > 0:
        keep = int(np.argmin(fit))
        order = np.argsort(-fit, kind="stable")
        worst = np.array([j for j in order if j != keep][:k], dtype=np.intp)
        rng = make_rng(config.seed, _RESTART_STREAM, state.generation)
        fresh = space.clamp(space.lower + rng.random((k, space.dim)) * space.width)
        fresh_fit, fresh_nan = _evaluate(objective, fresh, map_fn)
        ok = ~fresh_nan
        pop[worst[ok]] = fresh[ok]
        fit[worst[ok]] = fresh_fit[ok]
        nan_count += int(fresh_nan.sum())
        used += k

    if nan_count == used:
        raise OptimizationError(f"objective returned NaN for every evaluation in generation {state.generation + 1}")

    best_x, best_f = state.best_x, state.best_fitness
    j = int(np.argmin(fit))
    if fit[j] < best_f:
        best_x, best_f = pop[j].copy(), float(fit[j])

    generation = state.generation + 1
    evaluations = state.evaluations_used + used
    return replace(
        state,
        population=pop,
        fitness=fit,
        best_x=best_x,
        best_fitness=best_f,
        generation=generation,
        evaluations_used=evaluations,
        nan_count=state.nan_count + nan_count,
        history=state.history + ((generation, evaluations, best_f),),
    )


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    x: np.ndarray
    fitness: float
    history: tuple
    state: OptimizerState

    @property
    def best_per_generation(self):
        return np.array([h[2] for h in self.history])

    def history_csv(self):
        lines = ["generation,evaluations_used,best_fitness"]
        lines += [f"{g},{e},{f!r}" for g, e, f in self.history]
        return "\n".join(lines) + "\n"


def optimize(objective, space, config=HLOAConfig(), map_fn=map, callback=None):
    """Minimize ``objective`` over ``space`` until ``config.max_evaluations`` is spent.

    ``map_fn`` evaluates a list of candidates (e.g. ``executor.map``); results
    do not depend on the order in which it runs them.
    """
    state = init_population(space, config, objective, map_fn)
    if callback is not None:
        callback(state)
    while state.budget_left > 0:
        state = step(state, objective, map_fn)
        if callback is not None:
            callback(state)
    return OptimizeResult(state.best_x.copy(), state.best_fitness, state.history, state)


def random_search(objective, space, max_evaluations, seed=0):
    """Uniform random sampling baseline; returns ``(best_x, best_fitness)``."""
    rng = make_rng(seed, 0x4A4D)
    points = space.lower + rng.random((int(max_evaluations), space.dim)) * space.width
    values = np.array([float(objective(x)) for x in points])
    values[np.isnan(values)] = np.inf
    i = int(np.argmin(values))
    return points[i].copy(), float(values[i])


def sphere(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * x))


def rastrigin(x):
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))
