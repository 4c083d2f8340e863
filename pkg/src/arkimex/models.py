"""Desk-scale split ODE systems.

* ``SplitOscillator``: a rotation split into a slow explicit and a fast
  implicit part.
* ``OscillatorEnsemble``: uncoupled rotations with explicit frequencies in
  (0, omega_max], optionally with an implicit share and a periodic field that
  is advected explicitly and damped by split hyperviscosity.
* ``AcousticColumn``: vertical acoustic waves in interleaved (phi, w) with
  stiff implicit coupling, a tridiagonal Schur-reduced Jacobian and slow
  explicit advection.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .integrator import (BlockTridiagonalJacobian, PostStep, SplitODEProblem,
                         TridiagonalBlock)
from .tridiag import TridiagonalSystem


def _rotate(q0, angle):
    c, s = np.cos(angle), np.sin(angle)
    x, y = q0[..., 0], q0[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def oscillator_exact(omega_E: float, omega_I: float, q0, t: float) -> np.ndarray:
    """Rotation of q0 by the angle (omega_E + omega_I) * t."""
    return _rotate(np.asarray(q0, dtype=float), (omega_E + omega_I) * t)


def _rotation_blocks(omegas, start=0):
    return [TridiagonalBlock(start + 2 * k, np.array([w]), np.zeros(2), np.array([-w]))
            for k, w in enumerate(omegas)]


class SplitOscillator(SplitODEProblem):
    """dq/dt = (omega_E + omega_I) J q with J the quarter-turn rotation."""

    def __init__(self, omega_E: float = 1.0, omega_I: float = 10.0, q0=(0.6, 0.8)):
        self.omega_E = float(omega_E)
        self.omega_I = float(omega_I)
        self.q0 = np.array(q0, dtype=float)
        self.dimension = 2
        self._jacobian = None
        self.component_classes = ("u", "u")

    def scaled(self, X: float) -> "SplitOscillator":
        return SplitOscillator(self.omega_E * X, self.omega_I, self.q0)

    def eval_explicit(self, t, q):
        return self.omega_E * np.array([-q[1], q[0]])

    def eval_implicit(self, t, q):
        return self.omega_I * np.array([-q[1], q[0]])

    def implicit_jacobian(self, t, q):
        # linear problem: the Jacobian is built once
        if self._jacobian is None:
            self._jacobian = BlockTridiagonalJacobian(_rotation_blocks([self.omega_I]), 2)
        return self._jacobian

    def initial_state(self):
        return self.q0.copy()

    @property
    def has_exact(self):
        return True

    def exact_solution(self, t):
        return oscillator_exact(self.omega_E, self.omega_I, self.q0, t)

    def energy(self, q):
        return float(q[0] ** 2 + q[1] ** 2)


class HyperviscosityOperator:
    """u -> nu * Lap(Lap(u)) on a periodic grid of n points with spacing dx."""

    def __init__(self, n: int, dx: float, nu: float):
        self.n = int(n)
        self.dx = float(dx)
        self.nu = float(nu)

    def laplacian(self, u):
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / self.dx ** 2

    def apply(self, u):
        return self.nu * self.laplacian(self.laplacian(np.asarray(u, dtype=float)))

    def eigenvalue(self, k) -> np.ndarray:
        """nu * lambda_k^2 with lambda_k = (4/dx^2) sin^2(pi k / n)."""
        lam = 4.0 / self.dx ** 2 * np.sin(np.pi * np.asarray(k) / self.n) ** 2
        return self.nu * lam ** 2


def hyperviscosity_apply(op: HyperviscosityOperator, u) -> np.ndarray:
    return op.apply(u)


class OscillatorEnsemble(SplitODEProblem):
    """K uncoupled oscillators, optionally followed by a periodic field u.

    Oscillator k rotates with omega_explicit[k] (explicit) plus
    omega_implicit[k] (implicit). The field is advected with speed
    ``advection`` by centered differences (explicit, skew-symmetric) and damped
    by ``HyperviscosityOperator`` through a post-step, not the right-hand side.
    """

    def __init__(self, omega_explicit, omega_implicit=0.0, q0=None, *, field_points: int = 0,
                 advection: float = 0.0, nu: float = 0.0, field_state=None):
        self.omega_E = np.atleast_1d(np.array(omega_explicit, dtype=float))
        self.omega_I = np.broadcast_to(np.array(omega_implicit, dtype=float),
                                       self.omega_E.shape).copy()
        K = len(self.omega_E)
        self.K = K
        self.field_points = int(field_points)
        self.advection = float(advection)
        self.dx = 1.0 / self.field_points if self.field_points else 1.0
        self.hyperviscosity = HyperviscosityOperator(max(self.field_points, 1), self.dx, nu)
        self.dimension = 2 * K + self.field_points
        self._jacobian = None
        self.component_classes = ("u",) * self.dimension
        if q0 is None:
            phase = 0.3 + 2.399963229728653 * np.arange(K)   # golden-angle spread
            osc = np.stack([np.cos(phase), np.sin(phase)], axis=1).ravel()
            if self.field_points:
                x = np.arange(self.field_points) * self.dx
                fld = (2.0 + np.sin(2 * np.pi * x) + 0.5 * np.cos(4 * np.pi * x + 0.3)
                       if field_state is None else np.asarray(field_state, dtype=float))
                q0 = np.concatenate([osc, fld])
            else:
                q0 = osc
        self.q0 = np.array(q0, dtype=float)
        if self.q0.shape != (self.dimension,):
            raise ValueError(f"initial state must have length {self.dimension}")

    @classmethod
    def spanning(cls, omega_max: float = 1.0, K: int = 8, **kw) -> "OscillatorEnsemble":
        """Frequencies omega_max * k / K for k = 1..K."""
        return cls(omega_max * np.arange(1, K + 1) / K, **kw)

    @property
    def field_slice(self) -> slice:
        return slice(2 * self.K, self.dimension)

    @property
    def omega_max(self) -> float:
        return float(np.max(np.abs(self.omega_E))) if self.K else 0.0

    def scaled(self, X: float) -> "OscillatorEnsemble":
        return OscillatorEnsemble(self.omega_E * X, self.omega_I, self.q0,
                                  field_points=self.field_points, advection=self.advection * X,
                                  nu=self.hyperviscosity.nu)

    def _rot(self, omegas, q):
        out = np.zeros(self.dimension)
        x, y = q[0:2 * self.K:2], q[1:2 * self.K:2]
        out[0:2 * self.K:2] = -omegas * y
        out[1:2 * self.K:2] = omegas * x
        return out

    def eval_explicit(self, t, q):
        out = self._rot(self.omega_E, q)
        if self.field_points and self.advection != 0.0:
            u = q[self.field_slice]
            out[self.field_slice] = -self.advection * (np.roll(u, -1) - np.roll(u, 1)) / (2 * self.dx)
        return out

    def eval_implicit(self, t, q):
        return self._rot(self.omega_I, q)

    def implicit_jacobian(self, t, q):
        if self._jacobian is None:
            blocks = _rotation_blocks(self.omega_I)
            if self.field_points:
                n = self.field_points
                blocks.append(TridiagonalBlock(2 * self.K, np.zeros(n - 1), np.zeros(n),
                                               np.zeros(n - 1)))
            self._jacobian = BlockTridiagonalJacobian(blocks, self.dimension)
        return self._jacobian

    def initial_state(self):
        return self.q0.copy()

    def post_step(self, K: int) -> PostStep:
        return PostStep(self.hyperviscosity, K, self.field_slice)

    @property
    def has_exact(self):
        return True

    def exact_solution(self, t, dissipation: bool = True):
        """Exact flow; ``dissipation`` includes the hyperviscous decay of the field."""
        osc = _rotate(self.q0[: 2 * self.K].reshape(self.K, 2), (self.omega_E + self.omega_I) * t)
        if not self.field_points:
            return osc.ravel()
        n = self.field_points
        k = np.fft.fftfreq(n, d=1.0 / n)
        rate = -1j * self.advection * np.sin(2 * np.pi * k / n) / self.dx
        if dissipation:
            rate = rate - self.hyperviscosity.eigenvalue(k)
        u = np.fft.ifft(np.fft.fft(self.q0[self.field_slice]) * np.exp(rate * t)).real
        return np.concatenate([osc.ravel(), u])

    def energy(self, q):
        return float(np.dot(q, q))


# --- acoustic column ---------------------------------------------------------------

class SchurColumnJacobian:
    """Implicit Jacobian of the column, solved through its Schur complement.

    In interleaved order the Jacobian is J = [[0, g I], [L, 0]] (phi rows,
    w rows) with L tridiagonal. (I - hJ) x = r reduces to the tridiagonal
    system (I - h^2 g L) dphi = r_phi + h g r_w, followed by the
    back-substitution dw = r_w + h L dphi.
    """

    def __init__(self, g: float, sub, diag, sup):
        self.g = g
        self.sub, self.diag, self.sup = sub, diag, sup
        self.M = len(diag)
        self.dimension = 2 * self.M

    @property
    def coupling(self) -> TridiagonalSystem:
        """The tridiagonal block L = d(dw/dt)/d(phi)."""
        return TridiagonalSystem(self.sub, self.diag, self.sup)

    def reduced_system(self, h: float) -> TridiagonalSystem:
        s = h * h * self.g
        return TridiagonalSystem(-s * self.sub, 1.0 - s * self.diag, -s * self.sup)

    def back_substitute(self, h: float, r_w, dphi) -> np.ndarray:
        return r_w + h * self.coupling.matvec(dphi)

    def solve(self, h: float, rhs) -> np.ndarray:
        r_phi, r_w = rhs[0::2], rhs[1::2]
        dphi = self.reduced_system(h).factor(block=0).solve(r_phi + h * self.g * r_w)
        out = np.empty(self.dimension)
        out[0::2] = dphi
        out[1::2] = self.back_substitute(h, r_w, dphi)
        return out

    def matvec(self, v) -> np.ndarray:
        out = np.empty(self.dimension)
        out[0::2] = self.g * v[1::2]
        out[1::2] = self.coupling.matvec(v[0::2])
        return out

    def dense(self) -> np.ndarray:
        J = np.zeros((self.dimension, self.dimension))
        idx = np.arange(self.M)
        J[2 * idx, 2 * idx + 1] = self.g
        J[1::2, 0::2] = self.coupling.dense()
        return J


class AcousticColumn(SplitODEProblem):
    """Vertical acoustic column on interfaces j = 1..M above a rigid surface j = 0.

    State (phi_1, w_1, ..., phi_M, w_M). The surface (phi_0 = 0, w_0 = 0) lies
    outside the state; the lid row j = M has dw/dt = 0. With C = c^2/(g dz^2):

        dphi_j/dt = g w_j
        dw_j/dt   = C (phi_{j+1} - 2 phi_j + phi_{j-1}) (1 + kappa phi_j),  j < M

    The explicit part is advection -a d/dz of phi and w by centered
    differences on rows j < M (zero at the lid), which keeps its spectrum on
    the imaginary axis.
    """

    def __init__(self, M: int = 32, dz: float = 500.0, c: float = 340.0, g: float = 9.81,
                 a: float = 3.4, kappa: float = 0.0, q0=None, modes=None):
        if M < 2:
            raise ValueError("column needs M >= 2")
        self.M, self.dz, self.c, self.g, self.a, self.kappa = int(M), float(dz), float(c), \
            float(g), float(a), float(kappa)
        self.C = self.c ** 2 / (self.g * self.dz ** 2)
        self.dimension = 2 * self.M
        self.component_classes = ("phi", "w") * self.M
        if q0 is None:
            q0 = sum((self.eigenmode(k, amp) for k, amp in (modes or {1: 10.0}).items()),
                     np.zeros(self.dimension))
        self.q0 = np.array(q0, dtype=float)

    def scaled(self, X: float) -> "AcousticColumn":
        return AcousticColumn(self.M, self.dz, self.c, self.g, self.a * X, self.kappa, self.q0)

    # spectral helpers -----------------------------------------------------------
    def eigenfrequency(self, k: int) -> float:
        return 2.0 * self.c / self.dz * np.sin(k * np.pi / (2 * self.M))

    def eigenmode(self, k: int, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
        """Linear normal mode k (1 <= k < M) at phase ``phase`` of its oscillation."""
        j = np.arange(1, self.M + 1)
        shape = np.sin(k * np.pi * j / self.M)
        shape[-1] = 0.0
        om = self.eigenfrequency(k)
        q = np.zeros(self.dimension)
        q[0::2] = amplitude * np.cos(phase) * shape
        q[1::2] = -amplitude * om / self.g * np.sin(phase) * shape
        return q

    # right-hand sides --------------------------------------------------------------
    def _laplacian(self, phi):
        below = np.concatenate([[0.0], phi[:-1]])
        above = np.concatenate([phi[1:], [phi[-1]]])
        lap = above - 2.0 * phi + below
        lap[-1] = 0.0
        return lap

    def eval_implicit(self, t, q):
        phi, w = q[0::2], q[1::2]
        out = np.empty(self.dimension)
        out[0::2] = self.g * w
        dw = self.C * self._laplacian(phi) * (1.0 + self.kappa * phi)
        dw[-1] = 0.0
        out[1::2] = dw
        return out

    def _advect(self, f):
        below = np.concatenate([[0.0], f[:-1]])
        above = np.concatenate([f[1:], [0.0]])
        out = -self.a * (above - below) / (2.0 * self.dz)
        out[-1] = 0.0
        return out

    def eval_explicit(self, t, q):
        out = np.empty(self.dimension)
        if self.a == 0.0:
            out[:] = 0.0
            return out
        out[0::2] = self._advect(q[0::2])
        out[1::2] = self._advect(q[1::2])
        return out

    def implicit_jacobian(self, t, q):
        phi = q[0::2]
        M = self.M
        fac = self.C * (1.0 + self.kappa * phi)
        diag = -2.0 * fac + self.C * self.kappa * self._laplacian(phi)
        sub = fac[1:].copy()          # row j, column j-1
        sup = fac[:-1].copy()         # row j, column j+1
        diag[-1] = 0.0
        sub[-1] = 0.0                 # lid row has no dependence on phi
        return SchurColumnJacobian(self.g, sub, diag, sup) if M else None

    # oracles -----------------------------------------------------------------------
    def initial_state(self):
        return self.q0.copy()

    def linear_matrix(self) -> np.ndarray:
        """Dense implicit operator of the linear (kappa = 0) column."""
        return AcousticColumn(self.M, self.dz, self.c, self.g, 0.0, 0.0).implicit_jacobian(
            0.0, np.zeros(self.dimension)).dense()

    def explicit_matrix(self) -> np.ndarray:
        eye = np.eye(self.dimension)
        return np.column_stack([self.eval_explicit(0.0, e) for e in eye])

    @property
    def has_exact(self):
        return self.kappa == 0.0 and self.a == 0.0

    def exact_solution(self, t):
        return column_exact(self, t)

    def energy(self, q):
        return column_energy(self, q)


def column_rhs_explicit(column: AcousticColumn, t, state):
    return column.eval_explicit(t, state)


def column_rhs_implicit(column: AcousticColumn, t, state):
    return column.eval_implicit(t, state)


def column_implicit_jacobian(column: AcousticColumn, t, state):
    return column.implicit_jacobian(t, state)


def column_exact(column: AcousticColumn, t: float, q0=None) -> np.ndarray:
    """Exact linear evolution by matrix exponential (kappa = 0, a = 0 only)."""
    if column.kappa != 0.0 or column.a != 0.0:
        raise ValueError("column_exact requires kappa = 0 and a = 0")
    q0 = column.q0 if q0 is None else np.asarray(q0, dtype=float)
    return expm(column.linear_matrix() * t) @ q0


def column_energy(column: AcousticColumn, state) -> float:
    """sum w_j^2 + c^2/(g^2 dz^2) * sum_{j=0}^{M-1} (phi_{j+1} - phi_j)^2, phi_0 = 0."""
    phi, w = state[0::2], state[1::2]
    d = np.diff(np.concatenate([[0.0], phi]))
    return float(np.dot(w, w) + column.c ** 2 / (column.g * column.dz) ** 2 * np.dot(d, d))


def jacobian_fd_check(problem: SplitODEProblem, q, rng: np.random.Generator, h: float = 1e-6,
                      t: float = 0.0) -> float:
    """Relative mismatch between J v and a central difference of f^I along random v."""
    q = np.asarray(q, dtype=float)
    v = rng.standard_normal(q.shape)
    scale = max(np.linalg.norm(q) / np.sqrt(q.size), 1.0)
    hv = h * scale * v
    fd = (problem.eval_implicit(t, q + hv) - problem.eval_implicit(t, q - hv)) / (2 * h * scale)
    jv = problem.implicit_jacobian(t, q).matvec(v)
    return float(np.linalg.norm(fd - jv) / max(np.linalg.norm(jv), 1e-300))
