# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Root finder for the square period system, with a tatonnement fallback."""

import logging
import numpy as np
from .markets import RESIDUAL_BLOCKS, MarketState, evaluate, to_solution
from .production import design_productivity
from economy.errors import DomainError, NonConvergence, SingularJacobian
from economy.model import SKILLS, Economy, EquilibriumSolution, FloatArray, FrozenModel
from pydantic import BaseModel, Field
from scipy.optimize import root
from typing import Callable, Optional


logger = logging.getLogger(__name__)

MAX_TATONNEMENT_STEP = 0.5
DOMAIN_PENALTY = 1e6
ROOT_XTOL = 1e-13
MAX_TRUST_FACTOR = 100.0
SINGULAR_TOLERANCE = 1e-8
BENCHMARK_SWEEPS = 100
BENCHMARK_TOL = 1e-10


class SolverOptions(BaseModel):
    """Tolerances and limits of the period solver."""

    tol: float = Field(default=1e-9, description='Max-norm tolerance on the residuals')
    max_iter: int = Field(
        default=500, description='Residual evaluations allowed to one root-finder attempt'
    )
    damping: float = Field(
        default=1.0,
        description='Initial trust region of the root finder, as a share of its widest setting',
    )
    jacobian_step: float = Field(default=1e-7, description='Forward-difference step in logs')
    warmup_iterations: int = Field(
        default=200, description='Tatonnement iterations before the root finder is retried'
    )
    relaxation: float = Field(default=0.5, description='Tatonnement relaxation factor')
    methods: tuple[str, ...] = Field(
        default=('hybr', 'lm'), description='scipy.optimize.root methods, tried in order'
    )


class PeriodGuess(FrozenModel):
    """Candidate values of the period unknowns."""

    prices: FloatArray = Field(description='p[s, r]')
    output: FloatArray = Field(description='X[s, r]')
    wages: FloatArray = Field(description='w[e, r]')
    design_price: FloatArray = Field(description='P_J[m]')

    @classmethod
    def ones(cls, economy: Economy) -> 'PeriodGuess':
        """Unit guess."""
        topology = economy.topology
        shape = (topology.domestic_sectors, topology.domestic_regions)
        return cls(
            prices=np.ones(shape),
            output=np.ones(shape),
            wages=np.ones((len(SKILLS), topology.domestic_regions)),
            design_price=np.ones(topology.country_count),
        )

    @classmethod
    def benchmark(cls, economy: Economy) -> 'PeriodGuess':
        """Cold start at unit output.

        Wages are last period's (or one). Prices sit at the markup over the marginal cost
        they imply, and design prices clear the design market at those prices. Both are
        found by fixed-point sweeps; a sweep that leaves the domain stops the refinement.
        """
        guess = cls.ones(economy)
        if economy.stocks.previous_wages is not None:
            guess = guess.replace(wages=np.array(economy.stocks.previous_wages, dtype=float))
        for _ in range(BENCHMARK_SWEEPS):
            try:
                state = evaluate(economy, **guess.model_dump())
            except DomainError:
                break
            design_price = _clearing_design_price(state, economy)
            change = max(
                float(np.max(np.abs(np.log(state.markup_price / guess.prices)))),
                float(np.max(np.abs(np.log(design_price / guess.design_price)))),
            )
            guess = guess.replace(prices=state.markup_price, design_price=design_price)
            if change < BENCHMARK_TOL:
                break
        return guess

    @classmethod
    def from_solution(cls, solution: EquilibriumSolution) -> 'PeriodGuess':
        """Warm start from a solved period."""
        return cls(
            prices=solution.prices,
            output=solution.output,
            wages=solution.wages,
            design_price=solution.design_price,
        )

    def to_vector(self) -> np.ndarray:
        return np.log(
            np.concatenate(
                [self.prices.ravel(), self.output.ravel(), self.wages.ravel(), self.design_price]
            )
        )


def _clearing_design_price(state: MarketState, economy: Economy) -> np.ndarray:
    """P_J with (Omega (P_J + Sub) / W_RD)^(eps / (1 - eps)) equal to the design demand."""
    params, fiscal = economy.parameters, economy.fiscal
    epsilon = params.rd_supply_elasticity
    productivity = design_productivity(
        economy.stocks.designs, params.union_spillover, params.national_spillover
    )
    receipts = state.rd_wage_index * state.design_demand ** ((1.0 - epsilon) / epsilon) / productivity
    price = receipts - (fiscal.rd_subsidy + fiscal.eu_rd_subsidy)
    return np.where(price > 0, price, receipts)


class PeriodSystem:
    """The period unknowns in logs and the residual function of the period markets."""

    def __init__(self, economy: Economy, steady: bool = False):
        topology = economy.topology
        self.economy = economy
        self.steady = steady
        Sd, Rd, M, E = (
            topology.domestic_sectors,
            topology.domestic_regions,
            topology.country_count,
            len(SKILLS),
        )
        self.shapes = {'prices': (Sd, Rd), 'output': (Sd, Rd), 'wages': (E, Rd), 'design_price': (M,)}
        sectors, regions, countries = (
            topology.sector_names[:-1],
            topology.region_names[:-1],
            topology.country_names,
        )
        self.labels = (
            [f'pricing {s}/{r}' for s in sectors for r in regions]
            + [f'goods {s}/{r}' for s in sectors for r in regions]
            + [f'labour {e}/{r}' for e in SKILLS for r in regions]
            + [f'designs {m}' for m in countries]
        )
        # wages rise with excess demand for hours, the other prices fall with excess supply
        self.signs = np.concatenate(
            [np.ones(2 * Sd * Rd), -np.ones(E * Rd), np.ones(M)]
        )

    @property
    def size(self) -> int:
        return len(self.labels)

    def unpack(self, x) -> dict[str, np.ndarray]:
        values = np.exp(np.asarray(x, dtype=float))
        unpacked, start = {}, 0
        for name, shape in self.shapes.items():
            count = int(np.prod(shape))
            unpacked[name] = values[start : start + count].reshape(shape)
            start += count
        return unpacked

    def state(self, x) -> MarketState:
        return evaluate(self.economy, **self.unpack(x), steady=self.steady)

    def residual(self, x) -> np.ndarray:
        """Concatenated market residuals; raises DomainError outside the admissible set."""
        blocks = self.state(x).residual_blocks()
        values = np.concatenate([blocks[name].ravel() for name in RESIDUAL_BLOCKS])
        if not np.all(np.isfinite(values)):
            raise DomainError('Non-finite market residual')
        return values


def _max_norm(values) -> float:
    return float(np.max(np.abs(values))) if np.size(values) else 0.0


def forward_jacobian(residual_fn: Callable, x, base, step: float) -> np.ndarray:
    """Forward-difference Jacobian; falls back to a backward step at the domain boundary."""
    x = np.asarray(x, dtype=float)
    jacobian = np.empty((len(base), len(x)))
    for j in range(len(x)):
        shifted = x.copy()
        shifted[j] += step
        try:
            jacobian[:, j] = (residual_fn(shifted) - base) / step
        except DomainError:
            shifted[j] = x[j] - step
            jacobian[:, j] = (base - residual_fn(shifted)) / step
    return jacobian


def offending_market(jacobian, labels: list[str]) -> str:
    """Residual carrying the most weight in the left null direction of a singular Jacobian."""
    left, _, _ = np.linalg.svd(jacobian)
    return labels[int(np.argmax(np.abs(left[:, -1])))]


def is_singular(jacobian) -> bool:
    """Smallest singular value below SINGULAR_TOLERANCE of the largest (or of one)."""
    singular_values = np.linalg.svd(jacobian, compute_uv=False)
    return bool(singular_values[-1] <= SINGULAR_TOLERANCE * max(singular_values[0], 1.0))


class _TrackedResidual:
    """Residual seen by the root finder.

    Points outside the domain return a flat penalty. Every evaluation that improves on
    the best max-norm so far is kept and, with a trace, recorded.
    """

    def __init__(
        self,
        residual_fn: Callable,
        x0,
        base,
        method: str,
        step: float,
        period: Optional[int],
        trace: Optional[list],
    ):
        self.residual_fn = residual_fn
        self.method = method
        self.step = step
        self.period = period
        self.trace = trace
        self.best_x = np.asarray(x0, dtype=float)
        self.best_norm = _max_norm(base)
        self.accepted = 0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        try:
            values = np.asarray(self.residual_fn(x), dtype=float)
        except DomainError:
            return np.full(len(x), DOMAIN_PENALTY)
        if not np.all(np.isfinite(values)):
            return np.full(len(x), DOMAIN_PENALTY)
        norm = _max_norm(values)
        if norm < self.best_norm:
            self.accepted += 1
            step = _max_norm(x - self.best_x)
            self.best_x, self.best_norm = x.copy(), norm
            logger.debug(f'{self.method} iterate {self.accepted}: residual {norm:.3e}, step {step:.3g}')
            if self.trace is not None:
                self.trace.append(
                    {
                        'period': self.period,
                        'method': self.method,
                        'iteration': self.accepted,
                        'residual': norm,
                        'step': step,
                    }
                )
        return values

    def jacobian(self, x) -> np.ndarray:
        """Forward differences of the unpenalised residual."""
        x = np.asarray(x, dtype=float)
        return forward_jacobian(self.residual_fn, x, self.residual_fn(x), self.step)


def _root_options(method: str, options: SolverOptions) -> dict:
    factor = min(max(MAX_TRUST_FACTOR * options.damping, 0.1), MAX_TRUST_FACTOR)
    if method == 'lm':
        return {'xtol': ROOT_XTOL, 'ftol': ROOT_XTOL, 'maxiter': options.max_iter, 'factor': factor}
    return {'xtol': ROOT_XTOL, 'maxfev': options.max_iter, 'factor': factor}


def _root_attempts(
    residual_fn: Callable,
    x0,
    labels: list[str],
    options: SolverOptions,
    period: Optional[int] = None,
    trace: Optional[list] = None,
):
    """Run `options.methods` in turn, each from the best point of the previous one.

    Returns:
        (best x, its residual norm, accepted iterates)

    Raises:
        SingularJacobian: If the Jacobian at `x0` is numerically singular
    """
    x = np.asarray(x0, dtype=float)
    base = np.asarray(residual_fn(x), dtype=float)
    norm = _max_norm(base)
    if norm <= options.tol:
        return x, norm, 0
    jacobian = forward_jacobian(residual_fn, x, base, options.jacobian_step)
    if is_singular(jacobian):
        raise SingularJacobian(offending_market(jacobian, labels))

    accepted = 0
    for method in options.methods:
        tracked = _TrackedResidual(
            residual_fn, x, base, method, options.jacobian_step, period, trace
        )
        try:
            root(tracked, x, jac=tracked.jacobian, method=method, options=_root_options(method, options))
        except DomainError:
            logger.debug(f'{method} stopped: Jacobian undefined at an iterate')
        accepted += tracked.accepted
        x, norm = tracked.best_x, tracked.best_norm
        if norm <= options.tol:
            break
        base = np.asarray(residual_fn(x), dtype=float)
        logger.debug(f'{method} stopped at residual {norm:.3e}')
    return x, norm, accepted


def newton(
    residual_fn: Callable,
    x0,
    labels: list[str],
    options: SolverOptions,
    period: Optional[int] = None,
    trace: Optional[list] = None,
):
    """Newton-type solve with `scipy.optimize.root` (Powell hybrid, then Levenberg-Marquardt).

    Returns:
        (x, residual norm, accepted iterates)

    Raises:
        SingularJacobian: If the Jacobian at the start point is singular
        NonConvergence: If no method reaches `options.tol`
    """
    x, norm, accepted = _root_attempts(residual_fn, x0, labels, options, period, trace)
    if norm > options.tol:
        raise NonConvergence(norm, accepted, period)
    return x, norm, accepted


def tatonnement(
    residual_fn: Callable,
    x0,
    signs,
    options: SolverOptions,
    iterations: int,
    period: Optional[int] = None,
    trace: Optional[list] = None,
):
    """Relaxed price adjustment x -= relaxation * sign * clip(residual).

    Steps that leave the admissible set are halved. Returns the best point visited and
    its residual norm.
    """
    x = np.asarray(x0, dtype=float)
    residual = residual_fn(x)
    best_x, best_norm = x, _max_norm(residual)
    relaxation = options.relaxation
    for iteration in range(1, iterations + 1):
        if best_norm < options.tol:
            break
        step = relaxation * np.asarray(signs) * np.clip(
            residual, -MAX_TATONNEMENT_STEP, MAX_TATONNEMENT_STEP
        )
        try:
            candidate_residual = residual_fn(x - step)
        except DomainError:
            relaxation *= 0.5
            continue
        x, residual = x - step, candidate_residual
        norm = _max_norm(residual)
        if norm < best_norm:
            best_x, best_norm = x, norm
        if trace is not None:
            trace.append(
                {
                    'period': period,
                    'method': 'tatonnement',
                    'iteration': iteration,
                    'residual': norm,
                    'step': relaxation,
                }
            )
    return best_x, best_norm


def solve_system(
    residual_fn: Callable,
    x0,
    signs,
    labels: list[str],
    options: SolverOptions,
    period: Optional[int] = None,
    trace: Optional[list] = None,
):
    """Root finder from `x0`; on failure, a tatonnement warm-up and a second attempt.

    Returns:
        (x, residual norm, iterations)
    """
    x, norm, iterations = np.asarray(x0, dtype=float), np.inf, 0
    try:
        x, norm, iterations = _root_attempts(residual_fn, x, labels, options, period, trace)
        if norm <= options.tol:
            return x, norm, iterations
        logger.info(f'Root finder stalled at residual {norm:.3e}; falling back to tatonnement warm-up')
    except (SingularJacobian, DomainError) as e:
        logger.info(f'Root finder failed ({e}); falling back to tatonnement warm-up')
    try:
        warm, warm_norm = tatonnement(
            residual_fn, x, signs, options, options.warmup_iterations, period, trace
        )
    except DomainError:
        raise NonConvergence(norm, iterations, period)
    iterations += options.warmup_iterations
    if warm_norm <= options.tol:
        return warm, warm_norm, iterations
    x, norm, accepted = newton(residual_fn, warm, labels, options, period, trace)
    return x, norm, iterations + accepted


def solve_period(
    economy: Economy,
    options: Optional[SolverOptions] = None,
    initial: Optional[PeriodGuess] = None,
    period: Optional[int] = None,
    steady: bool = False,
    trace: Optional[list] = None,
) -> EquilibriumSolution:
    """Solve one period for (p, X, w, P_J) given the predetermined stocks.

    Without `initial` the solve starts from `PeriodGuess.benchmark`. With `steady` the
    durable capital equals the period's durable output, so investment only replaces
    depreciation.

    Raises:
        NonConvergence: If neither the root finder nor the fallback reaches `options.tol`
        SingularJacobian: If the retried system is singular
    """
    options = options or SolverOptions()
    system = PeriodSystem(economy, steady=steady)
    guess = initial or PeriodGuess.benchmark(economy)
    x, norm, iterations = solve_system(
        system.residual, guess.to_vector(), system.signs, system.labels, options, period, trace
    )
    state = system.state(x)
    if state.floor_binding:
        regions = [economy.topology.region_names[r] for r in state.floor_binding]
        logger.warning(f'Innovation probability floor binds in {", ".join(regions)}')
    logger.debug(f'Period {period} solved in {iterations} iterations (residual {norm:.3e})')
    return to_solution(state, residual_norm=norm, iterations=iterations)
