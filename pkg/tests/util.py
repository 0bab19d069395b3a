"""Shared operators and model factories for the test suite.

Two-level conventions: basis index 0 is the ground state, so the lowering
operator |g><e| has its 1 in the upper right corner.
"""

import numpy as np

from qhmm.hqmm import HQMM, LabeledKrausSet
from qhmm.linalg import DensityMatrix
from qhmm.opensystem import FeedbackChannel, JumpTerm, OpenSystemSpec

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|

GROUND = DensityMatrix(np.diag([1, 0]).astype(complex))
EXCITED = DensityMatrix(np.diag([0, 1]).astype(complex))
PLUS = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))


def amplitude_damping(p, initial=EXCITED):
    """Two-operator damping machine: '0' keeps, '1' decays with weight p."""
    k0 = np.diag([1.0, np.sqrt(1.0 - p)]).astype(complex)
    k1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]], dtype=complex)
    return HQMM(LabeledKrausSet([("0", k0), ("1", k1)]), initial)


def identity_machine(initial=GROUND):
    return HQMM(LabeledKrausSet([("0", np.eye(initial.dim, dtype=complex))]), initial)


def decay_spec(kappa=1.0, dt=0.01, feedback=None, h_int=None):
    """Single-channel two-level emitter with decay rate kappa.

    feedback defaults to the identity (no feedback); pass SIGMA_X for the
    bit-flip feedback variant. The channel emits symbol '1'.
    """
    r = IDENTITY_2 if feedback is None else feedback
    h = np.zeros((2, 2), dtype=complex) if h_int is None else h_int
    channel = FeedbackChannel(
        symbol="1",
        feedback=r,
        terms=(JumpTerm(amplitude=np.sqrt(kappa), operator=SIGMA_MINUS),),
    )
    return OpenSystemSpec(dim=2, h_int=h, channels=(channel,), dt=dt)


def no_channel_spec(dim=2, dt=0.01, h_int=None):
    h = np.zeros((dim, dim), dtype=complex) if h_int is None else h_int
    return OpenSystemSpec(dim=dim, h_int=h, channels=(), dt=dt)
