"""Tensor container invariants and the analytic parameter/FLOP formulas."""
import numpy as np
import pytest

from ftl.tensor import (
    ConfigError,
    ConvSpec,
    DenseSpec,
    LstmSpec,
    ShapeError,
    Tensor,
    conv_out_extent,
    count_flops,
    count_params,
    same_padding,
)


class TestTensor:
    def test_flat_length_matches_shape(self):
        t = Tensor(np.arange(12.0), shape=(3, 4))
        assert t.shape == (3, 4)
        assert t.size == 12
        assert t.data.shape == (12,)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ShapeError):
            Tensor(np.arange(10.0), shape=(3, 4))

    def test_zero_extent_rejected(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((0, 3)))

    def test_scalar_promoted_to_length_one(self):
        t = Tensor(2.5)
        assert t.shape == (1,)

    def test_data_is_row_major_view(self):
        t = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(t.data, [1.0, 2.0, 3.0, 4.0])

    def test_float64_storage(self):
        assert Tensor([1, 2, 3]).array.dtype == np.float64


class TestSpecs:
    def test_groups_must_divide_channels(self):
        ConvSpec(8, 8, 3, 3, groups=4)
        with pytest.raises(ConfigError):
            ConvSpec(8, 6, 3, 3, groups=4)
        with pytest.raises(ConfigError):
            ConvSpec(8, 8, 3, 3, groups=0)

    def test_lstm_paper_dims_valid(self):
        spec = LstmSpec(input_size=6144, hidden_size=60, sequence_length=5)
        assert spec.hidden_size == 60

    def test_conv_out_extent(self):
        assert conv_out_extent(7, 3, 2, 1) == 4
        assert conv_out_extent(5, 5, 1, 0) == 1
        with pytest.raises(ShapeError):
            conv_out_extent(2, 4, 1, 0)

    def test_same_padding(self):
        assert same_padding(3) == 1
        with pytest.raises(ConfigError):
            same_padding(4)


class TestAccounting:
    def test_conv_256_standard(self):
        spec = ConvSpec(256, 256, 3, 3, groups=1)
        assert count_params(spec) == 589_824 + 256

    def test_conv_256_grouped_is_quarter_weights(self):
        spec = ConvSpec(256, 256, 3, 3, groups=4)
        assert count_params(spec) == 147_456 + 256

    def test_conv_6_to_64(self):
        assert count_params(ConvSpec(6, 64, 3, 3)) == 64 * 6 * 9 + 64 == 3_520

    def test_factor_g_weight_division(self):
        for g in (2, 4, 8):
            std = ConvSpec(64, 64, 3, 3, groups=1, bias=False)
            grp = ConvSpec(64, 64, 3, 3, groups=g, bias=False)
            assert count_params(grp) * g == count_params(std)

    def test_factor_g_flop_division(self):
        for g in (2, 4, 8):
            std = ConvSpec(256, 256, 3, 3, groups=1)
            grp = ConvSpec(256, 256, 3, 3, groups=g)
            assert count_flops(grp, 4, 6) * g == count_flops(std, 4, 6)

    def test_conv_flops_multiply_add_convention(self):
        # one output element of a 3x3 single-channel conv = 9 MACs = 18 FLOPs
        assert count_flops(ConvSpec(1, 1, 3, 3), 1, 1) == 18

    def test_dense_params(self):
        assert count_params(DenseSpec(60, 2)) == 122

    def test_lstm_params(self):
        spec = LstmSpec(6144, 60, 5)
        assert count_params(spec) == 4 * (60 * (6144 + 60) + 60) == 1_489_200
