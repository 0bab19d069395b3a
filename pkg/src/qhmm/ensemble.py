"""Reproducible trajectory ensembles and agreement statistics.

Trajectories are mutually independent: trajectory i draws from a Philox
stream keyed by splitmix64(master_seed, i), so an ensemble is a pure
function of (model, config) no matter how or in what order trajectories
execute. Counts are exact integers; aggregation is the associative merge of
count maps plus a state sum taken in trajectory-index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hqmm
from .errors import ValidationError
from .hqmm import HQMM, enumerate_sequences
from .linalg import DensityMatrix, trace_distance
from .opensystem import DiscretizationResult, OpenSystemSpec, discretize, rk4_evolve
from .rng import GENERATOR_ID, derive_trajectory_seed

Sequence = tuple[str, ...]


@dataclass(frozen=True)
class EnsembleConfig:
    num_trajectories: int
    length: int
    master_seed: int
    record_states: bool = False

    def __post_init__(self):
        if self.num_trajectories < 1:
            raise ValidationError("num_trajectories must be at least 1")
        if self.length < 0:
            raise ValidationError("length must be nonnegative")


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Exact integer counts per observed sequence."""

    counts: dict[Sequence, int]
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValidationError("counts do not sum to the stated total")

    def frequency(self, seq: Sequence) -> float:
        return self.counts.get(seq, 0) / self.total

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        merged = dict(self.counts)
        for seq, c in other.counts.items():
            merged[seq] = merged.get(seq, 0) + c
        return EmpiricalDistribution(merged, self.total + other.total)


@dataclass(frozen=True)
class EnsembleResult:
    distribution: EmpiricalDistribution
    average_state: DensityMatrix
    std_errors: dict[Sequence, float]
    generator: str
    final_states: tuple[DensityMatrix, ...] | None = None


def run_ensemble(model: HQMM, cfg: EnsembleConfig) -> EnsembleResult:
    """Sample num_trajectories independent output sequences.

    The average state is the mean of the final conditional states; standard
    errors are binomial per sequence.
    """
    counts: dict[Sequence, int] = {}
    state_sum = np.zeros((model.dim, model.dim), dtype=complex)
    finals = [] if cfg.record_states else None
    for i in range(cfg.num_trajectories):
        seed = derive_trajectory_seed(cfg.master_seed, i)
        seq, final = hqmm.sample(model, cfg.length, seed)
        counts[seq] = counts.get(seq, 0) + 1
        state_sum += final.mat
        if finals is not None:
            finals.append(final)
    n = cfg.num_trajectories
    average = DensityMatrix.from_evolved(state_sum / n, trace_tol=1e-10)
    std_errors = {
        seq: math.sqrt(c / n * (1.0 - c / n) / n) for seq, c in counts.items()
    }
    return EnsembleResult(
        distribution=EmpiricalDistribution(counts, n),
        average_state=average,
        std_errors=std_errors,
        generator=GENERATOR_ID,
        final_states=tuple(finals) if finals is not None else None,
    )


def total_variation(emp: EmpiricalDistribution, exact: dict[Sequence, float]) -> float:
    """(1/2) sum over the union of supports of |frequency - probability|."""
    keys = set(emp.counts) | set(exact)
    return 0.5 * sum(abs(emp.frequency(k) - exact.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class MasterComparison:
    """Ensemble-average state versus the integrated master equation."""

    distance: float
    statistical_scale: float  # 1 / sqrt(num_trajectories)
    bound: float  # 3 * statistical_scale + band_coefficient * dt
    passed: bool
    ensemble: EnsembleResult
    reference: DensityMatrix
    discretization: DiscretizationResult


def ensemble_vs_master(
    spec: OpenSystemSpec,
    rho0: DensityMatrix,
    cfg: EnsembleConfig,
    t_final: float,
    band_coefficient: float = 1.0,
    reference_steps: int = 10_000,
) -> MasterComparison:
    """Sample the discretized machine and compare its average final state
    against the RK4 master-equation solution at the same time.

    Passes when the trace distance sits inside 3/sqrt(N) + C*dt, with
    C = band_coefficient covering the first-order discretization bias.
    """
    if abs(cfg.length * spec.dt - t_final) > 1e-9:
        raise ValidationError(
            f"t_final {t_final} must equal length * dt = {cfg.length * spec.dt}"
        )
    disc = discretize(spec)
    result = run_ensemble(HQMM(disc.kraus, rho0), cfg)
    reference = rk4_evolve(spec, rho0, t_final, reference_steps)
    distance = trace_distance(result.average_state, reference)
    scale = 1.0 / math.sqrt(cfg.num_trajectories)
    bound = 3.0 * scale + band_coefficient * spec.dt
    return MasterComparison(
        distance=distance,
        statistical_scale=scale,
        bound=bound,
        passed=distance <= bound,
        ensemble=result,
        reference=reference,
        discretization=disc,
    )


def exact_distribution_if_feasible(model: HQMM, length: int):
    """Enumerate the model's length-L distribution, or None past the cap."""
    if len(model.symbols) ** length > hqmm.ENUMERATION_CAP:
        return None
    return enumerate_sequences(model, length)
