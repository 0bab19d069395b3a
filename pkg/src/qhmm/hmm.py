"""Classical hidden Markov machines with symbol-labeled transition matrices.

A model holds one nonnegative matrix T_m per output symbol m acting on
column probability vectors from the left; the stacked sum over symbols is
column stochastic. The probability of an output sequence s_1 .. s_L is the
all-ones functional applied to T_{s_L} ... T_{s_1} p0, with s_1 applied
first.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EnumerationTooLargeError,
    UnknownSymbolError,
    ValidationError,
)
from .rng import philox_generator

COLUMN_SUM_TOL = 1e-10
ENUMERATION_CAP = 10**6


class HMM:
    """Symbol-labeled substochastic transition matrices plus an initial
    distribution. Immutable after construction."""

    __slots__ = ("alphabet", "transitions", "initial")

    def __init__(self, alphabet, transitions, initial):
        alphabet = tuple(str(s) for s in alphabet)
        if not alphabet:
            raise ValidationError("alphabet must contain at least one symbol")
        if len(set(alphabet)) != len(alphabet):
            raise ValidationError("alphabet contains duplicate symbols")
        if set(transitions) != set(alphabet):
            raise ValidationError(
                "transitions must define exactly one matrix per alphabet symbol"
            )

        p0 = np.asarray(initial, dtype=float)
        if p0.ndim != 1 or p0.size < 1:
            raise ValidationError("initial distribution must be a nonempty vector")
        n = p0.size
        if np.any(p0 < 0):
            raise ValidationError("initial distribution has a negative entry")
        if abs(p0.sum() - 1.0) > COLUMN_SUM_TOL:
            raise ValidationError(
                f"initial distribution sums to {p0.sum():.12g}, not 1"
            )

        mats = {}
        for sym in alphabet:
            t = np.asarray(transitions[sym], dtype=float)
            if t.shape != (n, n):
                raise ValidationError(
                    f"transition matrix for symbol {sym!r} has shape {t.shape}, "
                    f"expected ({n}, {n})"
                )
            if not np.all(np.isfinite(t)):
                raise ValidationError(f"transition matrix for {sym!r} has non-finite entries")
            if np.any(t < 0):
                raise ValidationError(f"transition matrix for {sym!r} has a negative entry")
            t = t.copy()
            t.flags.writeable = False
            mats[sym] = t

        column_sums = sum(mats.values()).sum(axis=0)
        bad = np.abs(column_sums - 1.0)
        if bad.max() > COLUMN_SUM_TOL:
            raise ValidationError(
                "column-stochasticity violated: stacked transition columns sum to "
                f"{column_sums[bad.argmax()]:.12g} at column {int(bad.argmax())}"
            )

        p0 = p0.copy()
        p0.flags.writeable = False
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "transitions", mats)
        object.__setattr__(self, "initial", p0)

    def __setattr__(self, name, value):
        raise AttributeError("HMM is immutable")

    @property
    def num_states(self) -> int:
        return self.initial.size

    def matrix(self, symbol: str) -> np.ndarray:
        try:
            return self.transitions[symbol]
        except KeyError:
            raise UnknownSymbolError(f"symbol {symbol!r} is not in the alphabet") from None


def sequence_probability(model: HMM, seq) -> float:
    """Probability of emitting exactly the given output sequence."""
    vec = model.initial
    for sym in seq:
        vec = model.matrix(sym) @ vec
    return float(vec.sum())


def step_distribution(model: HMM, dist, symbol: str) -> np.ndarray:
    """One transition: T_symbol applied to dist, left unnormalized.

    The 1-norm of the result is the probability of emitting the symbol from
    dist.
    """
    d = np.asarray(dist, dtype=float)
    if d.shape != (model.num_states,):
        raise ValidationError(
            f"distribution has shape {d.shape}, expected ({model.num_states},)"
        )
    if np.any(d < 0):
        raise ValidationError("distribution has a negative entry")
    return model.matrix(symbol) @ d


def sample(model: HMM, length: int, seed: int) -> tuple[str, ...]:
    """Draw one output sequence of the given length.

    Sequential conditional sampling: at each step the symbol is drawn by
    inverse CDF in alphabet order with probability ||T_m v||_1 / ||v||_1,
    then v <- T_m v (renormalized to avoid underflow). Deterministic given
    the seed; uses a Philox counter-based generator keyed by it.
    """
    if length < 0:
        raise ValidationError("length must be nonnegative")
    uniforms = philox_generator(seed).random(length)
    vec = model.initial
    out = []
    for u in uniforms:
        total = vec.sum()
        weights = [float((model.transitions[s] @ vec).sum()) for s in model.alphabet]
        acc = 0.0
        choice = None
        for idx, w in enumerate(weights):
            acc += w / total
            if u < acc:
                choice = idx
                break
        if choice is None:
            choice = max(i for i, w in enumerate(weights) if w > 0.0)
        sym = model.alphabet[choice]
        vec = model.transitions[sym] @ vec
        vec = vec / vec.sum()
        out.append(sym)
    return tuple(out)


def enumerate_sequences(model: HMM, length: int) -> dict[tuple[str, ...], float]:
    """Exhaustive map from every length-L sequence to its probability."""
    if length < 0:
        raise ValidationError("length must be nonnegative")
    if len(model.alphabet) ** length > ENUMERATION_CAP:
        raise EnumerationTooLargeError(
            f"{len(model.alphabet)}^{length} sequences exceed the cap of {ENUMERATION_CAP}"
        )
    out: dict[tuple[str, ...], float] = {}

    def walk(prefix, vec, depth):
        if depth == length:
            out[prefix] = float(vec.sum())
            return
        for sym in model.alphabet:
            walk(prefix + (sym,), model.transitions[sym] @ vec, depth + 1)

    walk((), model.initial, 0)
    return out


def random_hmm(num_states: int, alphabet, rng: np.random.Generator) -> HMM:
    """Random valid model: uniform entries, columns of the stacked sum
    normalized to 1."""
    alphabet = tuple(alphabet)
    raw = {s: rng.random((num_states, num_states)) for s in alphabet}
    column_sums = sum(raw.values()).sum(axis=0)
    transitions = {s: t / column_sums for s, t in raw.items()}
    p0 = rng.random(num_states)
    return HMM(alphabet, transitions, p0 / p0.sum())
