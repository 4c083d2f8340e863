"""Fixed-step ARK IMEX stepper with modified-Newton stage solves.

Stage i of a method with explicit tableau (A^E, b^E, c^E) and diagonally
implicit tableau (A^I, b^I, c^I) solves

    z_i = q^n + dt * sum_{j<i} (aE_ij fE(z_j) + aI_ij fI(z_j)) + dt * aI_ii fI(z_i)

and the step returns q^n + dt * sum_i (bE_i fE(z_i) + bI_i fI(z_i)).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .tableaux import ARKMethod
from .tridiag import SingularMatrixError, TridiagonalSystem

DEFAULT_CLASS_WEIGHTS = MappingProxyType({
    "u": 10.0,       # horizontal velocity
    "w": 10.0,       # vertical velocity
    "phi": 1e5,      # geopotential
    "theta": 1e6,    # potential temperature
    "dpi": 1.0,      # hydrostatic pressure thickness
})


class NewtonConvergenceError(RuntimeError):
    def __init__(self, stage: int, iterations: int, last_delta: float):
        self.stage = stage
        self.iterations = iterations
        self.last_delta = last_delta
        super().__init__(f"Newton did not converge in stage {stage + 1} after {iterations} "
                         f"iterations (last WRMS increment {last_delta:.3e})")


@dataclass(frozen=True)
class NewtonConfig:
    epsilon: float = 0.1
    max_iterations: int = 10
    rate_floor_factor: float = 0.3
    epsilon_r: float = 1e-6
    class_weights: Mapping[str, float] = field(default_factory=lambda: DEFAULT_CLASS_WEIGHTS)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.rate_floor_factor < 1:
            raise ValueError("rate_floor_factor must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


# --- Jacobian descriptions ------------------------------------------------------

@dataclass(frozen=True)
class TridiagonalBlock:
    """Jacobian entries of one diagonal block covering [start, start + n)."""

    start: int
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @property
    def size(self) -> int:
        return len(self.diag)


class BlockTridiagonalJacobian:
    """Block-diagonal Jacobian whose blocks are tridiagonal and independent."""

    def __init__(self, blocks: Sequence[TridiagonalBlock], dimension: int):
        self.blocks = list(blocks)
        self.dimension = dimension
        pos = 0
        for k, blk in enumerate(sorted(self.blocks, key=lambda b: b.start)):
            if blk.start != pos:
                raise ValueError(f"Jacobian block {k} starts at {blk.start}, expected {pos}")
            pos += blk.size
        if pos != dimension:
            raise ValueError(f"Jacobian blocks cover {pos} of {dimension} components")
        # the blocks are independent, so one global tridiagonal system with zero
        # couplings at the block joins solves them all in a single kernel call
        self._sub = np.zeros(max(dimension - 1, 0))
        self._diag = np.zeros(dimension)
        self._sup = np.zeros(max(dimension - 1, 0))
        self._starts = np.array(sorted(b.start for b in self.blocks))
        for blk in self.blocks:
            a, n = blk.start, blk.size
            self._diag[a:a + n] = blk.diag
            self._sub[a:a + n - 1] = blk.sub
            self._sup[a:a + n - 1] = blk.sup

    def solve(self, h: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (I - h J) x = rhs."""
        system = TridiagonalSystem(-h * self._sub, 1.0 - h * self._diag, -h * self._sup)
        try:
            system.factor()
        except SingularMatrixError as exc:
            k = int(np.searchsorted(self._starts, exc.index, side="right")) - 1
            raise SingularMatrixError(exc.index - int(self._starts[k]), k) from None
        return system.solve(rhs)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dimension)
        for blk in self.blocks:
            sl = slice(blk.start, blk.start + blk.size)
            out[sl] = TridiagonalSystem(blk.sub, blk.diag, blk.sup).matvec(v[sl])
        return out

    def dense(self) -> np.ndarray:
        J = np.zeros((self.dimension, self.dimension))
        for blk in self.blocks:
            sl = slice(blk.start, blk.start + blk.size)
            J[sl, sl] = TridiagonalSystem(blk.sub, blk.diag, blk.sup).dense()
        return J


# --- problem contract -------------------------------------------------------------

class SplitODEProblem(ABC):
    """Additively split system dq/dt = f^E(t, q) + f^I(t, q).

    Subclasses set ``dimension`` and ``component_classes`` (one WRMS weight
    class name per component) and implement the three operations below.
    """

    dimension: int
    component_classes: tuple[str, ...]

    @abstractmethod
    def eval_explicit(self, t: float, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def eval_implicit(self, t: float, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def implicit_jacobian(self, t: float, q: np.ndarray):
        """Return an object with ``solve(h, rhs)`` for (I - hJ) x = rhs, plus
        ``matvec`` and ``dense``."""

    def initial_state(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_exact(self) -> bool:
        return False

    def exact_solution(self, t: float) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no exact solution")

    def energy(self, q: np.ndarray) -> float:
        raise NotImplementedError(f"{type(self).__name__} has no energy functional")

    def rhs(self, t: float, q: np.ndarray) -> np.ndarray:
        return self.eval_explicit(t, q) + self.eval_implicit(t, q)

    def wrms_weights(self, reference: np.ndarray, config: NewtonConfig | None = None) -> np.ndarray:
        cfg = config or NewtonConfig()
        absolute = np.array([cfg.class_weights[c] for c in self.component_classes]) * cfg.epsilon_r
        return cfg.epsilon_r * np.abs(reference) + absolute


def wrms_norm(v: np.ndarray, weights: np.ndarray) -> float:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0.0):
        raise ValueError("WRMS weights must be strictly positive")
    r = np.asarray(v, dtype=float) / weights
    return math.sqrt(float(np.dot(r, r)) / r.size)


# --- Newton stage solve --------------------------------------------------------------

@dataclass
class NewtonResult:
    z: np.ndarray
    iterations: int
    deltas: list[float]


def newton_solve_stage(problem: SplitODEProblem, stage_index: int, a_ii: float, dt: float,
                       t: float, known: np.ndarray, guess: np.ndarray, weights: np.ndarray,
                       config: NewtonConfig) -> NewtonResult:
    """Solve z = known + dt * a_ii * f^I(t, z) by Newton's method from ``guess``.

    The Jacobian is re-evaluated every iteration. Convergence when
    R * ||delta||_WRMS < epsilon, where R = max(0.3 R, ||delta_m|| / ||delta_{m-1}||)
    from the second iteration on and R = 1 for the first.
    """
    if not a_ii > 0:
        raise ValueError("Newton stage solve needs a positive diagonal coefficient")
    h = dt * a_ii
    z = np.array(guess, dtype=float)
    rate = 1.0
    previous = None
    deltas: list[float] = []
    for m in range(1, config.max_iterations + 1):
        residual = known + h * problem.eval_implicit(t, z) - z
        delta = problem.implicit_jacobian(t, z).solve(h, residual)
        z = z + delta
        norm = wrms_norm(delta, weights)
        deltas.append(norm)
        if previous is not None:
            ratio = norm / previous if previous > 0 else (0.0 if norm == 0 else math.inf)
            rate = max(config.rate_floor_factor * rate, ratio)
        if not math.isfinite(norm):
            break
        if rate * norm < config.epsilon:
            return NewtonResult(z, m, deltas)
        previous = norm
    raise NewtonConvergenceError(stage_index, len(deltas), deltas[-1] if deltas else math.nan)


# --- step -----------------------------------------------------------------------------

@dataclass
class StepDiagnostics:
    newton_iterations: list[int]
    newton_solves: int = 0
    explicit_evals: int = 0
    implicit_evals: int = 0
    final_deltas: list[float] = field(default_factory=list)


def step(method: ARKMethod, problem: SplitODEProblem, t: float, q: np.ndarray, dt: float,
         config: NewtonConfig | None = None, weights: np.ndarray | None = None):
    """Advance one step. Returns (q_next, StepDiagnostics); ``q`` is not modified."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    cfg = config or NewtonConfig()
    ex, im = method.explicit, method.implicit
    s = method.stages
    diag = StepDiagnostics(newton_iterations=[0] * s)
    fE: list[np.ndarray | None] = [None] * s
    fI: list[np.ndarray | None] = [None] * s

    if method.is_pure_explicit:
        # one uniform path: the explicit tableau integrates the full right-hand side
        for i in range(s):
            z = _accumulate(q, dt, i, ex.A, fE, None, None)
            if method.explicit_used[i]:
                fE[i] = problem.rhs(t + ex.c[i] * dt, z)
                diag.explicit_evals += 1
        return _update(q, dt, ex.b, fE, None, None), diag

    if weights is None:
        weights = problem.wrms_weights(q, cfg)
    for i in range(s):
        known = _accumulate(q, dt, i, ex.A, fE, im.A, fI)
        a_ii = im.A[i, i]
        if a_ii != 0.0:
            res = newton_solve_stage(problem, i, a_ii, dt, t + im.c[i] * dt, known, q, weights, cfg)
            z = res.z
            diag.newton_iterations[i] = res.iterations
            diag.newton_solves += 1
            diag.final_deltas.append(res.deltas[-1])
        else:
            z = known
        if method.explicit_used[i]:
            fE[i] = problem.eval_explicit(t + ex.c[i] * dt, z)
            diag.explicit_evals += 1
        if method.implicit_used[i]:
            fI[i] = problem.eval_implicit(t + im.c[i] * dt, z)
            diag.implicit_evals += 1
    return _update(q, dt, ex.b, fE, im.b, fI), diag


def _accumulate(q, dt, i, AE, fE, AI, fI):
    acc = None
    for j in range(i):
        if AE[i, j] != 0.0:
            term = AE[i, j] * fE[j]
            acc = term if acc is None else acc + term
        if AI is not None and AI[i, j] != 0.0:
            term = AI[i, j] * fI[j]
            acc = term if acc is None else acc + term
    return q.copy() if acc is None else q + dt * acc


def _update(q, dt, bE, fE, bI, fI):
    acc = None
    for j in range(len(bE)):
        if bE[j] != 0.0:
            term = bE[j] * fE[j]
            acc = term if acc is None else acc + term
        if bI is not None and bI[j] != 0.0:
            term = bI[j] * fI[j]
            acc = term if acc is None else acc + term
    return q.copy() if acc is None else q + dt * acc


# --- post-step operator splitting -------------------------------------------------------

def apply_split_poststep(state: np.ndarray, operator, dt: float, K: int,
                         indices: slice | np.ndarray = slice(None)) -> np.ndarray:
    """Apply K forward-Euler substeps u <- u - (dt/K) * operator.apply(u).

    ``operator.apply(u)`` returns the dissipative tendency (e.g. nu * Lap^2 u);
    only ``state[indices]`` is touched. K = 0 returns the state unchanged.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if K == 0:
        return state
    out = np.array(state, dtype=float)
    sub_dt = dt / K
    u = out[indices]
    for _ in range(K):
        u = u - sub_dt * operator.apply(u)
    out[indices] = u
    return out


@dataclass(frozen=True)
class PostStep:
    """A post-step hook: operator applied with K substeps to ``indices``."""

    operator: object
    K: int
    indices: slice | np.ndarray = slice(None)

    def __call__(self, q: np.ndarray, dt: float) -> np.ndarray:
        return apply_split_poststep(q, self.operator, dt, self.K, self.indices)


# --- integrate ---------------------------------------------------------------------------

BLOWUP_FACTOR = 1e8


@dataclass
class Failure:
    kind: str          # "unstable" or "newton" or "singular"
    time: float
    step: int
    message: str


@dataclass
class Trajectory:
    t: float
    q: np.ndarray
    steps_completed: int
    failure: Failure | None
    newton_iterations: np.ndarray          # (steps, stages) iteration counts
    explicit_evals: int
    implicit_evals: int
    newton_solves: int
    observations: dict[str, list] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure is None


def integrate(method: ARKMethod, problem: SplitODEProblem, t0: float, q0: np.ndarray, dt: float,
              n_steps: int, post_step: Callable[[np.ndarray, float], np.ndarray] | None = None,
              observers: Mapping[str, Callable[[float, np.ndarray], object]] | None = None,
              observe_every: int = 1, config: NewtonConfig | None = None) -> Trajectory:
    """Take ``n_steps`` fixed steps; failures end the run and are recorded."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    cfg = config or NewtonConfig()
    q = np.array(q0, dtype=float)
    t = float(t0)
    observers = dict(observers or {})
    obs = {name: [(t, fn(t, q))] for name, fn in observers.items()}
    blow_weights = problem.wrms_weights(q, cfg)
    limit = BLOWUP_FACTOR * max(wrms_norm(q, blow_weights), 1.0)
    iters = np.zeros((n_steps, method.stages), dtype=int)
    counts = [0, 0, 0]
    failure = None
    done = 0
    for n in range(n_steps):
        try:
            q_new, diag = step(method, problem, t, q, dt, cfg)
        except NewtonConvergenceError as exc:
            failure = Failure("newton", t, n, str(exc))
            break
        except SingularMatrixError as exc:
            failure = Failure("singular", t, n, str(exc))
            break
        if post_step is not None:
            q_new = post_step(q_new, dt)
        t_new = t0 + (n + 1) * dt
        iters[n] = diag.newton_iterations
        counts[0] += diag.explicit_evals
        counts[1] += diag.implicit_evals
        counts[2] += diag.newton_solves
        q, t, done = q_new, t_new, n + 1
        if not np.all(np.isfinite(q)):
            failure = Failure("unstable", t, done, "non-finite state")
            break
        if wrms_norm(q, blow_weights) > limit:
            failure = Failure("unstable", t, done, "state norm exceeded 1e8 x initial")
            break
        if observers and (done % observe_every == 0 or done == n_steps):
            for name, fn in observers.items():
                obs[name].append((t, fn(t, q)))
    return Trajectory(t, q, done, failure, iters[:done], counts[0], counts[1], counts[2], obs)
