"""Markovian open-system dynamics with instantaneous measurement feedback.

A system is specified by an internal Hamiltonian H, a time step dt, and a
set of output channels. Channel m carries jump terms (xi, L) and a feedback
unitary R_m applied the instant the environment registers outcome m, giving
the effective jump operator J_m = R_m sum(xi L). The averaged state obeys

    drho/dt = -i [H, rho] - (1/2) sum_m {J_m^dagger J_m, rho}
              + sum_m J_m rho J_m^dagger

(hbar = 1); setting every R_m to the identity recovers the feedback-free
equation. Coarse-graining time in steps of dt compiles the dynamics into a
labeled Kraus set: K_m = J_m sqrt(dt) for each channel, and a no-jump
operator K_0 = exp(-i H_cond dt) with H_cond = H - (i/2) sum_m J_m^dagger
J_m. The compiled set misses completeness by O(dt^2), which is reported,
not repaired.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatchError,
    TimeStepTooLargeError,
    TimeStepWarning,
    ValidationError,
)
from .hqmm import (
    DEFAULT_COMPLETENESS_TOL,
    HQMM,
    LabeledKrausSet,
    apply_channel,
    completeness_defect,
)
from .linalg import (
    HERMITICITY_TOL,
    DensityMatrix,
    as_operator,
    matrix_exp,
    trace_distance,
    validate_unitary,
)

NO_JUMP_SYMBOL = "0"
UNITARY_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-8
DT_LOAD_ERROR = 0.5
DT_LOAD_WARN = 0.1


@dataclass(frozen=True)
class JumpTerm:
    """One (amplitude, operator) contribution to a feedback channel.

    The amplitude carries units of sqrt(rate); the operator is
    dimensionless.
    """

    amplitude: complex
    operator: np.ndarray

    def __post_init__(self):
        amp = complex(self.amplitude)
        if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise ValidationError("jump amplitude must be finite")
        op = as_operator(self.operator)
        op = op.copy()
        op.flags.writeable = False
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "operator", op)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]


@dataclass(frozen=True)
class FeedbackChannel:
    """Output channel: a symbol, its feedback unitary, and its jump terms."""

    symbol: str
    feedback: np.ndarray
    terms: tuple[JumpTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbol", str(self.symbol))
        r = as_operator(self.feedback)
        if not validate_unitary(r, UNITARY_TOL):
            raise ValidationError(
                f"feedback operator for channel {self.symbol!r} is not unitary"
            )
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "feedback", r)
        terms = tuple(self.terms)
        if not terms:
            raise ValidationError(
                f"channel {self.symbol!r} must carry at least one jump term"
            )
        for t in terms:
            if t.dim != r.shape[0]:
                raise DimensionMismatchError(
                    f"jump operator dimension {t.dim} does not match feedback "
                    f"dimension {r.shape[0]} in channel {self.symbol!r}"
                )
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.feedback.shape[0]


@dataclass(frozen=True)
class OpenSystemSpec:
    """Internal Hamiltonian, feedback channels, and coarse-graining step."""

    dim: int
    h_int: np.ndarray
    channels: tuple[FeedbackChannel, ...]
    dt: float

    def __post_init__(self):
        h = as_operator(self.h_int, dim=self.dim)
        herm = float(np.linalg.norm(h - h.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValidationError(
                f"internal Hamiltonian is not Hermitian: deviation {herm:.3e}"
            )
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "h_int", h)
        channels = tuple(self.channels)
        seen = set()
        for ch in channels:
            if ch.dim != self.dim:
                raise DimensionMismatchError(
                    f"channel {ch.symbol!r} has dimension {ch.dim}, expected {self.dim}"
                )
            if ch.symbol == NO_JUMP_SYMBOL:
                raise ValidationError(
                    f"symbol {NO_JUMP_SYMBOL!r} is reserved for the no-jump outcome"
                )
            if ch.symbol in seen:
                raise ValidationError(f"duplicate channel symbol {ch.symbol!r}")
            seen.add(ch.symbol)
        object.__setattr__(self, "channels", channels)
        dt = float(self.dt)
        if not (math.isfinite(dt) and dt > 0):
            raise ValidationError(f"time step must be positive and finite, got {dt}")
        object.__setattr__(self, "dt", dt)

    def with_dt(self, dt: float) -> "OpenSystemSpec":
        """Copy of this spec with a different coarse-graining step."""
        return replace(self, dt=dt)


def effective_jump_operator(channel: FeedbackChannel) -> np.ndarray:
    """J_m = R_m sum_terms(xi L): feedback folded into the summed jumps."""
    acc = np.zeros((channel.dim, channel.dim), dtype=complex)
    for t in channel.terms:
        acc += t.amplitude * t.operator
    return channel.feedback @ acc


def _jump_stack(spec: OpenSystemSpec) -> np.ndarray:
    if not spec.channels:
        return np.zeros((0, spec.dim, spec.dim), dtype=complex)
    return np.stack([effective_jump_operator(ch) for ch in spec.channels])


def _damping_operator(jumps: np.ndarray, dim: int) -> np.ndarray:
    """sum_m J_m^dagger J_m."""
    if jumps.shape[0] == 0:
        return np.zeros((dim, dim), dtype=complex)
    return np.einsum("mba,mbc->ac", jumps.conj(), jumps)


def conditional_hamiltonian(spec: OpenSystemSpec) -> np.ndarray:
    """Non-Hermitian generator of the no-jump evolution,
    H - (i/2) sum_m J_m^dagger J_m. Invariant under the feedback unitaries."""
    jumps = _jump_stack(spec)
    return spec.h_int - 0.5j * _damping_operator(jumps, spec.dim)


def _rhs(h: np.ndarray, jumps: np.ndarray, damping: np.ndarray,
         rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    out -= 0.5 * (damping @ rho + rho @ damping)
    if jumps.shape[0]:
        out += np.einsum("mab,bc,mdc->ad", jumps, rho, jumps.conj())
    return out


def master_rhs(spec: OpenSystemSpec, rho) -> np.ndarray:
    """Right-hand side of the averaged master equation at the given state.

    Trace-free and Hermiticity-preserving for Hermitian input.
    """
    rho = as_operator(rho, dim=spec.dim)
    jumps = _jump_stack(spec)
    return _rhs(spec.h_int, jumps, _damping_operator(jumps, spec.dim), rho)


def _rk4_states(spec: OpenSystemSpec, rho0: np.ndarray, t_final: float, steps: int):
    """Yield (t, state) at t = 0 and after every classic RK4 step."""
    jumps = _jump_stack(spec)
    damping = _damping_operator(jumps, spec.dim)
    h = spec.h_int
    dt = t_final / steps
    cur = rho0
    yield 0.0, cur
    for k in range(steps):
        k1 = _rhs(h, jumps, damping, cur)
        k2 = _rhs(h, jumps, damping, cur + 0.5 * dt * k1)
        k3 = _rhs(h, jumps, damping, cur + 0.5 * dt * k2)
        k4 = _rhs(h, jumps, damping, cur + dt * k3)
        cur = cur + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        yield (k + 1) * dt, cur


def rk4_evolve(spec: OpenSystemSpec, rho0: DensityMatrix, t_final: float,
               steps: int) -> DensityMatrix:
    """Integrate the master equation with fixed-step classic Runge-Kutta.

    The result is re-Hermitized and eigenvalue-floored; a trace drift beyond
    1e-8 raises NumericFailureError.
    """
    if steps < 1:
        raise ValidationError("steps must be at least 1")
    if t_final < 0:
        raise ValidationError("t_final must be nonnegative")
    if rho0.dim != spec.dim:
        raise DimensionMismatchError(
            f"state dimension {rho0.dim} does not match system dimension {spec.dim}"
        )
    if t_final == 0:
        return rho0
    final = rho0.mat
    for _, state in _rk4_states(spec, rho0.mat, t_final, steps):
        final = state
    return DensityMatrix.from_evolved(final, trace_tol=TRACE_DRIFT_TOL)


@dataclass(frozen=True)
class DiscretizationResult:
    """Compiled Kraus set plus its measured completeness defect."""

    kraus: LabeledKrausSet
    defect: float
    quadratic_coefficient: float  # defect / dt^2


def discretize(spec: OpenSystemSpec) -> DiscretizationResult:
    """Compile the spec into a labeled Kraus set on the step dt.

    K_m = J_m sqrt(dt) per channel; K_0 = exp(-i H_cond dt) labeled with the
    reserved no-jump symbol. The completeness defect of the set is O(dt^2)
    and is registered as its tolerance instead of being repaired.
    """
    jumps = [(ch.symbol, effective_jump_operator(ch)) for ch in spec.channels]
    load = 0.0
    for _, j in jumps:
        load = max(load, spec.dt * np.linalg.norm(j, 2) ** 2)
    if load > DT_LOAD_ERROR:
        raise TimeStepTooLargeError(
            f"dt * max ||J^dagger J|| = {load:.3g} exceeds {DT_LOAD_ERROR}; "
            "reduce the time step"
        )
    if load > DT_LOAD_WARN:
        warnings.warn(
            f"dt * max ||J^dagger J|| = {load:.3g} exceeds {DT_LOAD_WARN}; "
            "discretization error may be noticeable",
            TimeStepWarning,
            stacklevel=2,
        )
    k0 = matrix_exp(-1j * conditional_hamiltonian(spec) * spec.dt)
    root_dt = math.sqrt(spec.dt)
    ops = [(NO_JUMP_SYMBOL, k0)]
    ops.extend((sym, j * root_dt) for sym, j in jumps)
    defect = completeness_defect([m for _, m in ops])
    tol = max(DEFAULT_COMPLETENESS_TOL, 1.5 * defect)
    kraus = LabeledKrausSet(ops, completeness_tol=tol)
    return DiscretizationResult(kraus, defect, defect / spec.dt**2)


@dataclass(frozen=True)
class ConsistencyPoint:
    dt: float
    steps: int
    distance: float


def channel_vs_master(
    spec: OpenSystemSpec,
    rho0: DensityMatrix,
    t_final: float,
    dts=(0.04, 0.02, 0.01, 0.005),
    reference_steps: int = 10_000,
) -> tuple[ConsistencyPoint, ...]:
    """Error curve of the coarse-grained channel against the master equation.

    For each dt, iterates the symbol-ignored channel of the discretized spec
    for t_final/dt steps and reports the trace distance to a high-resolution
    RK4 solution. Distances shrink first order in dt.
    """
    reference = rk4_evolve(spec, rho0, t_final, reference_steps)
    points = []
    for dt in dts:
        steps = round(t_final / dt)
        if steps < 0 or abs(steps * dt - t_final) > 1e-9:
            raise ValidationError(
                f"t_final {t_final} is not an integer multiple of dt {dt}"
            )
        model = HQMM(discretize(spec.with_dt(dt)).kraus, rho0)
        state = rho0
        for _ in range(steps):
            state = apply_channel(model, state)
        points.append(ConsistencyPoint(dt, steps, trace_distance(state, reference)))
    return tuple(points)
