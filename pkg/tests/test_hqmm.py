import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qhmm.errors import (
    DimensionMismatchError,
    EnumerationTooLargeError,
    UnknownSymbolError,
    ValidationError,
    ZeroProbabilityError,
)
from qhmm.hmm import HMM, random_hmm
from qhmm.hmm import enumerate_sequences as hmm_enumerate
from qhmm.hmm import sequence_probability as hmm_probability
from qhmm.hqmm import (
    HQMM,
    LabeledKrausSet,
    apply_channel,
    completeness_defect,
    conditional_state,
    embed_hmm,
    enumerate_sequences,
    random_hqmm,
    sample,
    sequence_probability,
)
from qhmm.linalg import DensityMatrix, random_density_matrix
from util import EXCITED, GROUND, amplitude_damping, identity_machine


def oracle_probability(model, seq):
    """Direct operator-sum evaluation with raw numpy, one branch per
    assignment of a Kraus operator to each symbol occurrence."""
    groups = []
    for sym in seq:
        groups.append([m for s, m in model.kraus.operators if s == sym])
    total = 0.0
    for combo in itertools.product(*groups):
        op = np.eye(model.dim, dtype=complex)
        for k in combo:
            op = k @ op
        total += float(np.trace(op @ model.initial.mat @ op.conj().T).real)
    return total


class TestLabeledKrausSet:
    def test_requires_at_least_one_operator(self):
        with pytest.raises(ValidationError):
            LabeledKrausSet([])

    def test_rejects_incomplete_set(self):
        with pytest.raises(ValidationError, match="completeness"):
            LabeledKrausSet([("0", np.eye(2) * 0.5)])

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            LabeledKrausSet([("0", np.eye(2)), ("1", np.zeros((3, 3)))])

    def test_symbol_order_is_first_appearance(self):
        k = np.eye(2, dtype=complex) / np.sqrt(2)
        ks = LabeledKrausSet([("b", k), ("a", k)])
        assert ks.symbols == ("b", "a")


class TestCompletenessDefect:
    def test_identity(self):
        assert completeness_defect([np.eye(2)]) == pytest.approx(0.0, abs=1e-15)

    def test_two_half_weight_identities(self):
        k = np.eye(2) / np.sqrt(2)
        assert completeness_defect([k, k]) == pytest.approx(0.0, abs=1e-15)

    def test_doubled_identity_set(self):
        # sum K^dag K = 2 I, defect ||I||_F = sqrt(dim)
        assert completeness_defect([np.eye(2), np.eye(2)]) == pytest.approx(np.sqrt(2))
        assert completeness_defect([np.eye(3), np.eye(3)]) == pytest.approx(np.sqrt(3))


class TestSequenceProbability:
    def test_identity_channel(self):
        model = identity_machine()
        assert sequence_probability(model, ("0", "0", "0")) == pytest.approx(1.0)

    def test_amplitude_damping_jump(self):
        model = amplitude_damping(0.1)
        assert sequence_probability(model, ("1",)) == pytest.approx(0.1, abs=1e-14)

    def test_length_one_normalization(self):
        model = amplitude_damping(0.1)
        total = sequence_probability(model, ("0",)) + sequence_probability(model, ("1",))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_empty_sequence(self):
        assert sequence_probability(amplitude_damping(0.3), ()) == pytest.approx(1.0)

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbolError):
            sequence_probability(amplitude_damping(0.1), ("2",))

    def test_matches_oracle_on_random_machines(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            model = random_hqmm(2, ("a", "b"), rng)
            for seq in itertools.product("ab", repeat=3):
                assert sequence_probability(model, seq) == pytest.approx(
                    oracle_probability(model, seq), abs=1e-12
                )


class TestApplyChannel:
    def test_identity_channel(self):
        model = identity_machine()
        rho = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
        assert_allclose(apply_channel(model, rho).mat, rho.mat, atol=1e-14)

    def test_full_decay(self):
        model = amplitude_damping(1.0)
        assert_allclose(apply_channel(model, EXCITED).mat, GROUND.mat, atol=1e-14)

    def test_partial_decay(self):
        model = amplitude_damping(0.1)
        assert_allclose(
            apply_channel(model, EXCITED).mat, np.diag([0.1, 0.9]), atol=1e-14
        )

    def test_dimension_mismatch(self):
        model = amplitude_damping(0.1)
        with pytest.raises(DimensionMismatchError):
            apply_channel(model, DensityMatrix(np.eye(3, dtype=complex) / 3))

    def test_preserves_state_invariants_on_random_machines(self):
        rng = np.random.default_rng(32)
        for _ in range(15):
            model = random_hqmm(3, ("a", "b"), rng)
            rho = random_density_matrix(3, rng)
            out = apply_channel(model, rho)
            assert np.trace(out.mat).real == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.norm(out.mat - out.mat.conj().T) <= 1e-12
            assert np.linalg.eigvalsh(out.mat).min() >= -1e-10


class TestConditionalState:
    def test_identity_channel(self):
        model = identity_machine()
        state, p = conditional_state(model, model.initial, "0")
        assert p == pytest.approx(1.0, abs=1e-14)
        assert_allclose(state.mat, model.initial.mat, atol=1e-14)

    def test_damping_jump_state(self):
        model = amplitude_damping(0.1)
        state, p = conditional_state(model, EXCITED, "1")
        assert p == pytest.approx(0.1, abs=1e-14)
        assert_allclose(state.mat, GROUND.mat, atol=1e-14)

    def test_zero_probability_symbol(self):
        model = amplitude_damping(0.1)
        with pytest.raises(ZeroProbabilityError):
            conditional_state(model, GROUND, "1")

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            model = random_hqmm(2, ("a", "b", "c"), rng)
            rho = random_density_matrix(2, rng)
            total = 0.0
            for sym in model.symbols:
                total += conditional_state(model, rho, sym)[1]
            assert total == pytest.approx(1.0, abs=1e-10)


class TestSample:
    def test_identity_channel(self):
        seq, final = sample(identity_machine(), 4, seed=5)
        assert seq == ("0",) * 4

    def test_length_zero(self):
        model = amplitude_damping(0.2)
        seq, final = sample(model, 0, seed=5)
        assert seq == ()
        assert final is model.initial

    def test_reproducible(self):
        model = amplitude_damping(0.3)
        seq_a, final_a = sample(model, 10, seed=77)
        seq_b, final_b = sample(model, 10, seed=77)
        assert seq_a == seq_b
        assert np.array_equal(final_a.mat, final_b.mat)

    def test_first_step_jump_frequency(self):
        # exact value 0.1 from sequence_probability; 4 standard errors
        model = amplitude_damping(0.1)
        n = 100_000
        jumps = 0
        for i in range(n):
            seq, _ = sample(model, 1, seed=i)
            jumps += seq == ("1",)
        p = sequence_probability(model, ("1",))
        se = math.sqrt(p * (1.0 - p) / n)
        assert abs(jumps / n - p) <= 4.0 * se


class TestEnumerate:
    def test_identity_channel(self):
        result = enumerate_sequences(identity_machine(), 3)
        assert result == {("0", "0", "0"): pytest.approx(1.0)}

    def test_amplitude_damping_length_one(self):
        result = enumerate_sequences(amplitude_damping(0.1), 1)
        assert result[("0",)] == pytest.approx(0.9, abs=1e-14)
        assert result[("1",)] == pytest.approx(0.1, abs=1e-14)

    def test_random_machine_normalization(self):
        rng = np.random.default_rng(34)
        model = random_hqmm(2, ("a", "b"), rng)
        total = sum(enumerate_sequences(model, 3).values())
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_rejects_oversized_enumeration(self):
        model = amplitude_damping(0.1)
        with pytest.raises(EnumerationTooLargeError):
            enumerate_sequences(model, 21)

    def test_marginal_over_last_symbol(self):
        rng = np.random.default_rng(35)
        model = random_hqmm(2, ("a", "b"), rng)
        level3 = enumerate_sequences(model, 3)
        level2 = enumerate_sequences(model, 2)
        for seq, p in level2.items():
            marginal = sum(level3[seq + (s,)] for s in model.symbols)
            assert marginal == pytest.approx(p, abs=1e-10)


class TestEmbedHmm:
    def test_deterministic_single_state(self):
        model = HMM(("a",), {"a": [[1.0]]}, [1.0])
        embedded = embed_hmm(model)
        assert embedded.dim == 1
        assert embedded.symbols == ("a",)
        assert len(embedded.kraus.operators) == 1
        assert_allclose(embedded.kraus.operators[0][1], [[1.0]])

    def test_two_state_sequence(self):
        model = HMM(
            ("a", "b"),
            {"a": [[0.5, 0.0], [0.0, 0.5]], "b": [[0.0, 0.5], [0.5, 0.0]]},
            [1.0, 0.0],
        )
        embedded = embed_hmm(model)
        seq = ("a", "b")
        assert sequence_probability(embedded, seq) == pytest.approx(
            hmm_probability(model, seq), abs=1e-14
        )

    def test_random_models_agree_on_all_short_sequences(self):
        rng = np.random.default_rng(36)
        for _ in range(5):
            model = random_hmm(3, ("a", "b"), rng)
            embedded = embed_hmm(model)
            for length in range(4):
                classical = hmm_enumerate(model, length)
                quantum = enumerate_sequences(embedded, length)
                for seq, p in classical.items():
                    assert abs(quantum[seq] - p) <= 1e-12


class TestKrausCompletenessPropagation:
    def test_sums_to_one_for_any_length(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            model = random_hqmm(3, ("a", "b", "c"), rng)
            for length in range(1, 5):
                total = sum(enumerate_sequences(model, length).values())
                assert abs(total - 1.0) <= length * 1e-10 * 10
