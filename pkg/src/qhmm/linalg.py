"""Dense complex linear algebra primitives shared by every other module.

Conventions: hbar = 1 throughout, so rates and energies are inverse time.
All operators are dense square complex matrices at desk scale (a few dozen
states at most); basis index 0 is taken as the ground state in two-level
examples.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, NumericFailureError, ValidationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10


def as_operator(a, dim: int | None = None) -> np.ndarray:
    """Coerce to a square complex128 matrix with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"operator must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError("operator dimension must be at least 1")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {m.shape[0]}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise ValidationError("operator entries must be finite (no NaN/Inf)")
    return m


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_operator(a).conj().T.copy()


def trace(a) -> complex:
    """Sum of diagonal entries."""
    return complex(np.trace(as_operator(a)))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """(A + A^dagger) / 2."""
    return (a + a.conj().T) / 2


def matrix_exp(a) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring.

    Raises NumericFailureError if the result is not entrywise finite.
    """
    m = as_operator(a)
    result = scipy.linalg.expm(m)
    if not (np.all(np.isfinite(result.real)) and np.all(np.isfinite(result.imag))):
        raise NumericFailureError("matrix exponential produced non-finite entries")
    return result


def validate_unitary(a, tol: float) -> bool:
    """True iff ||a^dagger a - I||_F <= tol."""
    if tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    m = as_operator(a)
    eye = np.eye(m.shape[0], dtype=complex)
    return bool(np.linalg.norm(m.conj().T @ m - eye) <= tol)


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state of the machine.

    Instances are immutable; the wrapped matrix is read-only and safe to
    share across concurrent tasks.
    """

    __slots__ = ("mat",)

    def __init__(self, mat):
        m = as_operator(mat)
        herm = float(np.linalg.norm(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValidationError(
                f"density matrix is not Hermitian: ||m - m^dagger||_F = {herm:.3e}"
            )
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {tr:.12g} is not 1")
        lo = float(np.linalg.eigvalsh(hermitian_part(m)).min())
        if lo < EIGENVALUE_FLOOR:
            raise ValidationError(
                f"density matrix is not positive semidefinite: min eigenvalue {lo:.3e}"
            )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_evolved(cls, mat, trace_tol: float = 1e-8) -> "DensityMatrix":
        """Rebuild a state from numerically evolved data.

        Hermitizes, clips eigenvalues in [EIGENVALUE_FLOOR, 0) to zero, and
        renormalizes the trace. Raises NumericFailureError when the input
        drifted beyond trace_tol in trace or below the eigenvalue floor.
        """
        m = hermitian_part(as_operator(mat))
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > trace_tol:
            raise NumericFailureError(
                f"state trace drifted to {tr:.12g} (tolerance {trace_tol:g})"
            )
        w, v = np.linalg.eigh(m)
        lo = float(w.min())
        if lo < EIGENVALUE_FLOOR:
            raise NumericFailureError(
                f"state eigenvalue {lo:.3e} fell below floor {EIGENVALUE_FLOOR:g}"
            )
        w = np.clip(w, 0.0, None)
        m = hermitian_part((v * w) @ v.conj().T)
        return cls(m / np.trace(m).real)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) * sum of absolute eigenvalues of (a - b), clipped to [0, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(
            f"trace distance needs equal dims, got {a.dim} and {b.dim}"
        )
    w = np.linalg.eigvalsh(a.mat - b.mat)
    return float(min(max(0.5 * np.abs(w).sum(), 0.0), 1.0))


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Random full-rank state from a complex Wishart draw."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m = hermitian_part(m / np.trace(m).real)
    return DensityMatrix(m / np.trace(m).real)
