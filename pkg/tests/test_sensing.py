"""Testes para o módulo sensing (Φ, aquisição, pacotes e canal)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cs_fallwatch.errors import (
    EmptyMeasurementError,
    InvalidLossModelError,
    InvalidMatrixShapeError,
    InvalidPayloadError,
    MixedFramesError,
    PacketDecodeError,
    SeedMismatchError,
)
from cs_fallwatch.frames import SignalVec
from cs_fallwatch.sensing import (
    PRNG_STREAM,
    LossModel,
    MeasurementMatrix,
    MeasurementSet,
    acquire,
    assemble,
    build_matrix,
    decode_packets,
    encode_packets,
    matrix_for,
    measurement_count,
    packetize,
    random_drop_set,
    read_packets,
    split_by_frame,
    transmit,
    write_packets,
)


def _signal(values) -> SignalVec:
    values = np.asarray(values, dtype=float)
    side = int(np.sqrt(values.size))
    return SignalVec(values=values, origin_dims=(side, values.size // side))


def _measurements(m: int, frame_id: int = 0, seed: int = 0) -> MeasurementSet:
    return MeasurementSet(
        values=np.arange(m, dtype=float),
        row_indices=np.arange(m),
        frame_id=frame_id,
        matrix_seed=seed,
        total_rows=m,
    )


class TestBuildMatrix:
    """Testes para build_matrix."""

    def test_small_matrix_should_have_orthonormal_rows(self):
        """(seed=42, m=2, n=4): ΦΦᵀ ≈ I₂ por menos de 1e−10."""
        phi = build_matrix(42, 2, 4)
        assert np.max(np.abs(phi.entries @ phi.entries.T - np.eye(2))) < 1e-10

    def test_should_be_deterministic(self):
        """build_matrix(7, 16, 64) duas vezes → entradas idênticas."""
        assert np.array_equal(build_matrix(7, 16, 64).entries, build_matrix(7, 16, 64).entries)

    def test_square_matrix_should_be_orthogonal(self):
        """(seed=1, m=8, n=8): ΦΦᵀ e ΦᵀΦ ≈ I₈."""
        a = build_matrix(1, 8, 8).entries
        assert np.max(np.abs(a @ a.T - np.eye(8))) < 1e-8
        assert np.max(np.abs(a.T @ a - np.eye(8))) < 1e-8

    @pytest.mark.slow
    @pytest.mark.parametrize("seed,m,n", [(3, 2048, 4096), (11, 1024, 1024), (5, 400, 900)])
    def test_large_matrices_should_stay_orthonormal(self, seed, m, n):
        """Grades até N=4096 mantêm max|ΦΦᵀ − I| < 1e−8."""
        a = build_matrix(seed, m, n).entries
        assert np.max(np.abs(a @ a.T - np.eye(m))) < 1e-8

    def test_should_record_seed_and_stream(self):
        phi = build_matrix(9, 3, 9)
        assert phi.seed == 9
        assert phi.prng_stream == PRNG_STREAM
        assert phi.is_complete
        assert phi.row_indices.tolist() == [0, 1, 2]

    def test_should_reject_more_rows_than_columns(self):
        with pytest.raises(InvalidMatrixShapeError):
            build_matrix(1, 5, 4)

    def test_different_seeds_should_differ(self):
        assert not np.array_equal(build_matrix(1, 4, 16).entries, build_matrix(2, 4, 16).entries)


class TestMatrixFor:
    """Testes para measurement_count/matrix_for."""

    def test_should_round_sub_rate(self):
        assert measurement_count(64, 0.5) == 2048
        assert measurement_count(10, 0.255) == 26

    def test_should_keep_at_least_one_row(self):
        assert measurement_count(4, 0.0001) == 1

    def test_matrix_for_should_match_frame_size(self):
        phi = matrix_for(8, 0.25, seed=3)
        assert (phi.rows, phi.cols) == (16, 64)
        assert phi.sub_rate == pytest.approx(0.25)


class TestAcquire:
    """Testes para acquire."""

    def test_selector_rows_should_pick_entries(self):
        """Φ = (e₁ᵀ, e₃ᵀ), x = (5,6,7,8) → y = (5,7)."""
        entries = np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
        phi = MeasurementMatrix(entries=entries, seed=0, total_rows=2, row_indices=np.arange(2))
        y = acquire(phi, _signal([5, 6, 7, 8]))
        assert y.values.tolist() == [5, 7]

    def test_zero_signal_should_give_zero_measurements(self):
        phi = build_matrix(2, 4, 16)
        assert np.all(acquire(phi, _signal(np.zeros(16))).values == 0)

    def test_should_match_triple_loop_oracle(self):
        """Φ (seed 3, 4×16) contra um produto matriz-vetor em laço."""
        phi = build_matrix(3, 4, 16)
        x = np.random.default_rng(0).normal(size=16)
        expected = [sum(phi.entries[i, j] * x[j] for j in range(16)) for i in range(4)]
        y = acquire(phi, _signal(x), frame_id=7)
        assert np.max(np.abs(y.values - expected)) < 1e-12
        assert y.frame_id == 7
        assert y.matrix_seed == 3
        assert y.is_complete

    def test_should_reject_wrong_length(self):
        with pytest.raises(InvalidMatrixShapeError):
            acquire(build_matrix(2, 4, 16), _signal(np.zeros(9)))

    def test_encoder_path_should_not_use_linear_algebra(self, mocker):
        """Aquisição, pacotes e canal não resolvem sistemas nem fatoram matrizes."""
        phi = build_matrix(4, 8, 16)
        for name in ("solve", "inv", "qr", "svd", "lstsq", "pinv", "cholesky"):
            mocker.patch(f"numpy.linalg.{name}", side_effect=AssertionError(name))
        y = acquire(phi, _signal(np.arange(16)))
        received = transmit(packetize(y, 3), LossModel.iid(0.3, seed=1))
        assert len(received) <= 3


class TestPacketize:
    """Testes para packetize."""

    def test_should_split_in_contiguous_blocks(self):
        """M=10, payload=4 → 4,4,2."""
        packets = packetize(_measurements(10), 4)
        assert [p.count for p in packets] == [4, 4, 2]
        assert [p.row_indices.tolist() for p in packets] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]
        assert [p.packet_seq for p in packets] == [0, 1, 2]

    def test_large_payload_should_give_single_packet(self):
        assert len(packetize(_measurements(5), 5)) == 1
        assert len(packetize(_measurements(5), 50)) == 1

    @pytest.mark.property
    @settings(max_examples=50, deadline=None)
    @given(m=st.integers(1, 60), payload=st.integers(1, 20))
    def test_packets_should_partition_indices(self, m, payload):
        """União dos índices == 0..M−1 e pacotes disjuntos (ex.: M=37, payload=5)."""
        packets = packetize(_measurements(m), payload)
        indices = np.concatenate([p.row_indices for p in packets])
        assert sorted(indices.tolist()) == list(range(m))
        assert len(set(indices.tolist())) == m

    def test_should_reject_invalid_payload(self):
        with pytest.raises(InvalidPayloadError):
            packetize(_measurements(4), 0)


class TestTransmit:
    """Testes para transmit e LossModel."""

    def test_lossless_channel_should_keep_everything(self):
        packets = packetize(_measurements(20), 2)
        assert transmit(packets, LossModel.iid(0.0, seed=3)) == packets

    def test_total_loss_should_drop_everything(self):
        assert transmit(packetize(_measurements(20), 2), LossModel.iid(1.0, seed=3)) == []

    def test_should_be_deterministic(self):
        packets = packetize(_measurements(40), 2)
        loss = LossModel.iid(0.4, seed=12)
        first = [p.packet_seq for p in transmit(packets, loss)]
        second = [p.packet_seq for p in transmit(packets, loss)]
        assert first == second

    def test_survivors_should_keep_order(self):
        packets = packetize(_measurements(40), 2)
        seqs = [p.packet_seq for p in transmit(packets, LossModel.iid(0.5, seed=1))]
        assert seqs == sorted(seqs)

    def test_explicit_drop_set_should_ignore_unknown_packets(self):
        packets = packetize(_measurements(9), 3)
        survivors = transmit(packets, LossModel.explicit([1, 99]))
        assert [p.packet_seq for p in survivors] == [0, 2]

    def test_for_frame_should_vary_seed_per_frame(self):
        loss = LossModel.iid(0.5, seed=4)
        assert loss.for_frame(0).seed != loss.for_frame(1).seed
        assert loss.for_frame(3) == loss.for_frame(3)
        assert LossModel.explicit([1]).for_frame(5) == LossModel.explicit([1])

    def test_invalid_probability_should_fail(self):
        with pytest.raises(InvalidLossModelError):
            LossModel.iid(1.5)

    def test_random_drop_set_should_have_exact_size(self):
        drops = random_drop_set(10, 3, seed=8)
        assert len(drops) == 3
        assert drops == sorted(set(drops))
        assert all(0 <= s < 10 for s in drops)
        with pytest.raises(InvalidLossModelError):
            random_drop_set(3, 4, seed=0)


class TestAssemble:
    """Testes para assemble."""

    @pytest.fixture
    def encoded(self):
        phi = build_matrix(6, 12, 36)
        y = acquire(phi, _signal(np.linspace(0, 255, 36)), frame_id=2)
        return phi, y, packetize(y, 4)

    def test_full_receipt_should_match_encoder(self, encoded):
        phi, y, packets = encoded
        y_partial, phi_partial = assemble(packets, phi)
        assert np.array_equal(y_partial.values, y.values)
        assert np.array_equal(phi_partial.entries, phi.entries)
        assert y_partial.is_complete

    def test_partial_receipt_should_union_indices(self, encoded):
        """Pacotes {0,2} de 3 → índices exatamente a união."""
        phi, y, packets = encoded
        y_partial, phi_partial = assemble([packets[0], packets[2]], phi)
        expected = packets[0].row_indices.tolist() + packets[2].row_indices.tolist()
        assert y_partial.row_indices.tolist() == expected
        assert np.array_equal(phi_partial.entries, phi.entries[expected])
        assert not y_partial.is_complete

    def test_partial_matrix_should_stay_orthonormal(self, encoded):
        phi, _, packets = encoded
        _, phi_partial = assemble([packets[2], packets[1]], phi)
        gram = phi_partial.entries @ phi_partial.entries.T
        assert np.max(np.abs(gram - np.eye(phi_partial.rows))) < 1e-8

    def test_duplicates_and_order_should_not_matter(self, encoded):
        phi, _, packets = encoded
        a, _ = assemble([packets[1], packets[0], packets[1]], phi)
        b, _ = assemble([packets[0], packets[1]], phi)
        assert np.array_equal(a.row_indices, b.row_indices)
        assert np.array_equal(a.values, b.values)

    def test_empty_receipt_should_fail(self, encoded):
        phi, _, _ = encoded
        with pytest.raises(EmptyMeasurementError):
            assemble([], phi)

    def test_mixed_frames_should_fail(self, encoded):
        phi, _, packets = encoded
        other = acquire(phi, _signal(np.zeros(36)), frame_id=3)
        with pytest.raises(MixedFramesError):
            assemble([packets[0], packetize(other, 4)[0]], phi)

    def test_seed_mismatch_should_fail(self, encoded):
        _, _, packets = encoded
        with pytest.raises(SeedMismatchError):
            assemble(packets, build_matrix(7, 12, 36))


class TestWireFormat:
    """Testes para o formato de fio dos pacotes."""

    def test_stream_should_survive_file_roundtrip(self, tmp_path):
        phi = build_matrix(6, 10, 25)
        packets = packetize(acquire(phi, _signal(np.arange(25)), frame_id=4), 3)
        size = write_packets(tmp_path / "s.bin", packets)
        assert size == sum(p.wire_size for p in packets)
        loaded = read_packets(tmp_path / "s.bin")
        assert [(p.frame_id, p.packet_seq, p.matrix_seed) for p in loaded] == [
            (4, p.packet_seq, 6) for p in packets
        ]
        assert all(np.array_equal(a.values, b.values) for a, b in zip(loaded, packets))

    def test_header_should_be_little_endian(self):
        packet = packetize(_measurements(1, frame_id=1, seed=2), 1)[0]
        data = encode_packets([packet])
        assert data[:8] == (1).to_bytes(8, "little")
        assert data[12:20] == (2).to_bytes(8, "little")
        assert len(data) == 24 + 12

    def test_truncated_stream_should_fail(self):
        data = encode_packets(packetize(_measurements(4), 2))
        with pytest.raises(PacketDecodeError):
            decode_packets(data[:-3])
        with pytest.raises(PacketDecodeError):
            decode_packets(data[:10])

    def test_split_by_frame_should_group_in_arrival_order(self):
        packets = packetize(_measurements(4, frame_id=2), 2) + packetize(_measurements(4, frame_id=1), 2)
        groups = split_by_frame(packets)
        assert list(groups) == [2, 1]
        assert [len(v) for v in groups.values()] == [2, 2]
