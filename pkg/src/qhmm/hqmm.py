"""Quantum hidden Markov machines driven by symbol-labeled Kraus operators.

The machine's internal state is a density matrix; each time step applies a
generalized measurement whose outcome is the emitted symbol. A symbol s may
carry several Kraus operators: its subensemble map is
E_s(rho) = sum_{k labeled s} K_k rho K_k^dagger, and the probability of a
sequence is the trace of the composed unnormalized maps. With one operator
per symbol this reduces to the plain operator-product form. The full set
must satisfy sum_k K_k^dagger K_k = I up to the set's registered
completeness tolerance; time-discretized sets register their expected
defect instead of the strict default.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DimensionMismatchError,
    EnumerationTooLargeError,
    NumericFailureError,
    UnknownSymbolError,
    ValidationError,
    ZeroProbabilityError,
)
from .hmm import HMM
from .linalg import DensityMatrix, as_operator, random_density_matrix
from .rng import philox_generator

DEFAULT_COMPLETENESS_TOL = 1e-10
NEGATIVE_PROB_TOL = 1e-12
ZERO_PROB_FLOOR = 1e-14
ENUMERATION_CAP = 10**6


def completeness_defect(operators) -> float:
    """Frobenius norm of sum_k K_k^dagger K_k - I.

    Accepts a LabeledKrausSet or any iterable of square matrices.
    """
    if isinstance(operators, LabeledKrausSet):
        mats = [m for _, m in operators.operators]
    else:
        mats = [as_operator(m) for m in operators]
    if not mats:
        raise ValidationError("completeness defect needs at least one operator")
    dim = mats[0].shape[0]
    acc = -np.eye(dim, dtype=complex)
    for m in mats:
        if m.shape[0] != dim:
            raise DimensionMismatchError("Kraus operators have mixed dimensions")
        acc += m.conj().T @ m
    return float(np.linalg.norm(acc))


class LabeledKrausSet:
    """Kraus operators grouped by the output symbol they emit."""

    __slots__ = ("dim", "operators", "symbols", "completeness_tol",
                 "_stacks", "_kernels", "_kernels_flat", "_all_stack")

    def __init__(self, operators, completeness_tol: float = DEFAULT_COMPLETENESS_TOL):
        ops = [(str(sym), as_operator(m)) for sym, m in operators]
        if not ops:
            raise ValidationError("Kraus set must contain at least one operator")
        dim = ops[0][1].shape[0]
        for sym, m in ops:
            if m.shape[0] != dim:
                raise DimensionMismatchError(
                    f"operator labeled {sym!r} has dimension {m.shape[0]}, expected {dim}"
                )

        defect = completeness_defect([m for _, m in ops])
        if defect > completeness_tol:
            raise ValidationError(
                f"completeness defect {defect:.6e} exceeds tolerance {completeness_tol:g}"
            )

        symbols = []
        for sym, _ in ops:
            if sym not in symbols:
                symbols.append(sym)

        frozen = []
        for sym, m in ops:
            m = m.copy()
            m.flags.writeable = False
            frozen.append((sym, m))

        # Per-symbol operator stacks and probability kernels
        # M_s = sum_{k labeled s} K_k^dagger K_k, so P(s | rho) = Re Tr(rho M_s).
        stacks = {}
        for sym in symbols:
            stacks[sym] = np.stack([m for s, m in frozen if s == sym])
        kernels = np.stack(
            [np.einsum("kba,kbc->ac", stacks[s].conj(), stacks[s]) for s in symbols]
        )

        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "operators", tuple(frozen))
        object.__setattr__(self, "symbols", tuple(symbols))
        object.__setattr__(self, "completeness_tol", float(completeness_tol))
        object.__setattr__(self, "_stacks", stacks)
        object.__setattr__(self, "_kernels", kernels)
        # Row s holds M_s^T flattened, so kernels_flat @ vec(rho) = Tr(rho M_s).
        object.__setattr__(
            self, "_kernels_flat",
            np.ascontiguousarray(kernels.transpose(0, 2, 1).reshape(len(symbols), -1)),
        )
        object.__setattr__(self, "_all_stack", np.stack([m for _, m in frozen]))

    def __setattr__(self, name, value):
        raise AttributeError("LabeledKrausSet is immutable")

    def stack_for(self, symbol: str) -> np.ndarray:
        """All operators labeled with the symbol, as a (k, dim, dim) array."""
        try:
            return self._stacks[symbol]
        except KeyError:
            raise UnknownSymbolError(f"symbol {symbol!r} is not in the model") from None

    def __repr__(self):
        return (f"LabeledKrausSet(dim={self.dim}, operators={len(self.operators)}, "
                f"symbols={list(self.symbols)})")


class HQMM:
    """A labeled Kraus set plus the initial internal state."""

    __slots__ = ("kraus", "initial")

    def __init__(self, kraus: LabeledKrausSet, initial: DensityMatrix):
        if kraus.dim != initial.dim:
            raise DimensionMismatchError(
                f"Kraus dimension {kraus.dim} does not match state dimension {initial.dim}"
            )
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "initial", initial)

    def __setattr__(self, name, value):
        raise AttributeError("HQMM is immutable")

    @property
    def dim(self) -> int:
        return self.kraus.dim

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.kraus.symbols


def _apply_stack(stack: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """sum_k K_k mat K_k^dagger for a stacked operator family."""
    return np.einsum("kab,bc,kdc->ad", stack, mat, stack.conj())


def _clip_probability(p: float) -> float:
    if p < 0.0:
        if p >= -NEGATIVE_PROB_TOL:
            return 0.0
        raise NumericFailureError(
            f"sequence probability {p:.6e} is more negative than roundoff allows"
        )
    return p


def sequence_probability(model: HQMM, seq) -> float:
    """Probability of the machine emitting exactly the given sequence."""
    cur = model.initial.mat
    for sym in seq:
        cur = _apply_stack(model.kraus.stack_for(sym), cur)
    return _clip_probability(float(np.trace(cur).real))


def apply_channel(model: HQMM, rho: DensityMatrix) -> DensityMatrix:
    """Symbol-ignored step: sum over all operators of K rho K^dagger."""
    if rho.dim != model.dim:
        raise DimensionMismatchError(
            f"state dimension {rho.dim} does not match model dimension {model.dim}"
        )
    raw = _apply_stack(model.kraus._all_stack, rho.mat)
    return DensityMatrix.from_evolved(
        raw, trace_tol=model.kraus.completeness_tol + 1e-12
    )


def conditional_state(model: HQMM, rho: DensityMatrix, symbol: str):
    """Renormalized subensemble state after observing the symbol.

    Returns (state, probability) where probability is the trace of the
    unnormalized subensemble matrix.
    """
    if rho.dim != model.dim:
        raise DimensionMismatchError(
            f"state dimension {rho.dim} does not match model dimension {model.dim}"
        )
    sigma = _apply_stack(model.kraus.stack_for(symbol), rho.mat)
    p = float(np.trace(sigma).real)
    if p <= ZERO_PROB_FLOOR:
        raise ZeroProbabilityError(
            f"symbol {symbol!r} has probability {p:.3e}; no renormalizable state"
        )
    return DensityMatrix.from_evolved(sigma / p, trace_tol=1e-9), p


def sample(model: HQMM, length: int, seed: int):
    """Draw one output sequence, returning (symbols, final conditional state).

    At each step the symbol is drawn by inverse CDF in symbol order with one
    uniform variate, then the machine continues from the renormalized
    conditional state. Deterministic given the seed (Philox stream).
    """
    if length < 0:
        raise ValidationError("length must be nonnegative")
    if length == 0:
        return (), model.initial
    uniforms = philox_generator(seed).random(length)
    kraus = model.kraus
    kernels_flat = kraus._kernels_flat
    symbols = kraus.symbols
    num_symbols = len(symbols)
    stacks = [kraus._stacks[s] for s in symbols]
    # Single-operator symbols take two small matmuls instead of an einsum.
    singles = [(st[0], st[0].conj().T) if st.shape[0] == 1 else None for st in stacks]
    cur = model.initial.mat
    out = []
    for u in uniforms:
        probs = (kernels_flat @ cur.reshape(-1)).real
        acc = 0.0
        choice = None
        for idx in range(num_symbols):
            acc += probs[idx]
            if u < acc:
                choice = idx
                break
        if choice is None:
            # u landed past the accumulated total (roundoff or completeness
            # defect); fall back to the last symbol that can actually fire.
            positive = [i for i in range(num_symbols) if probs[i] > ZERO_PROB_FLOOR]
            if not positive:
                raise NumericFailureError("no symbol has positive probability")
            choice = positive[-1]
        single = singles[choice]
        if single is not None:
            sigma = single[0] @ cur @ single[1]
        else:
            sigma = _apply_stack(stacks[choice], cur)
        cur = sigma / np.trace(sigma).real
        out.append(symbols[choice])
    return tuple(out), DensityMatrix.from_evolved(cur, trace_tol=1e-9)


def enumerate_sequences(model: HQMM, length: int) -> dict[tuple[str, ...], float]:
    """Exhaustive map from every length-L sequence to its probability."""
    if length < 0:
        raise ValidationError("length must be nonnegative")
    symbols = model.symbols
    if len(symbols) ** length > ENUMERATION_CAP:
        raise EnumerationTooLargeError(
            f"{len(symbols)}^{length} sequences exceed the cap of {ENUMERATION_CAP}"
        )
    stacks = model.kraus._stacks
    out: dict[tuple[str, ...], float] = {}

    def walk(prefix, mat, depth):
        if depth == length:
            out[prefix] = _clip_probability(float(np.trace(mat).real))
            return
        for sym in symbols:
            walk(prefix + (sym,), _apply_stack(stacks[sym], mat), depth + 1)

    walk((), model.initial.mat, 0)
    return out


def embed_hmm(model: HMM) -> HQMM:
    """Lift a classical model to an equivalent quantum one.

    One Kraus operator sqrt(T_m[j, i]) |j><i| per nonzero transition entry,
    labeled m, with a diagonal initial state; sequence probabilities agree
    with the classical model to numerical precision. The completeness
    tolerance inherits the classical column-sum tolerance.
    """
    n = model.num_states
    ops = []
    for sym in model.alphabet:
        t = model.transitions[sym]
        for j in range(n):
            for i in range(n):
                if t[j, i] != 0.0:
                    m = np.zeros((n, n), dtype=complex)
                    m[j, i] = math.sqrt(t[j, i])
                    ops.append((sym, m))
    defect = completeness_defect([m for _, m in ops])
    tol = max(DEFAULT_COMPLETENESS_TOL, 1.25 * defect)
    kraus = LabeledKrausSet(ops, completeness_tol=tol)
    initial = DensityMatrix(np.diag(model.initial).astype(complex))
    return HQMM(kraus, initial)


def random_hqmm(
    dim: int,
    symbols,
    rng: np.random.Generator,
    max_kraus_per_symbol: int = 2,
) -> HQMM:
    """Random valid machine: slices of a Haar-ish random isometry, so the
    completeness condition holds to machine precision."""
    symbols = tuple(symbols)
    counts = [int(rng.integers(1, max_kraus_per_symbol + 1)) for _ in symbols]
    total = sum(counts)
    g = rng.standard_normal((total * dim, dim)) + 1j * rng.standard_normal((total * dim, dim))
    q, _ = np.linalg.qr(g)
    ops = []
    block = 0
    for sym, count in zip(symbols, counts):
        for _ in range(count):
            ops.append((sym, q[block * dim:(block + 1) * dim, :]))
            block += 1
    kraus = LabeledKrausSet(ops)
    return HQMM(kraus, random_density_matrix(dim, rng))
