import numpy as np
import pytest

from windadapt.errors import (
    BadMagicError,
    NumericalDivergence,
    TruncatedError,
    VersionMismatchError,
)
from windadapt.nn import (
    LEARNABLE_GROUPS,
    PARAM_GROUPS,
    AdamState,
    Architecture,
    FreezeMask,
    adam_step,
    backward,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from windadapt.nn.layers import softmax_cross_entropy

from gradcheck import finite_diff, rel_error

TINY = Architecture(window_len=4, n_features=2, kernel=3, c1=2, c2=2, hidden=3, n_classes=2)


def params_equal(a, b):
    return all(np.array_equal(a.group(g), b.group(g)) for g in PARAM_GROUPS)


class TestInit:
    def test_deterministic(self):
        p1 = init_params(TINY, seed=7)
        p2 = init_params(TINY, seed=7)
        assert params_equal(p1, p2)

    def test_bn_gamma_ones(self):
        p = init_params(Architecture(window_len=8, n_features=3, c1=5, c2=4), seed=0)
        np.testing.assert_array_equal(p.bn1_gamma, np.ones(5))
        np.testing.assert_array_equal(p.bn2_run_var, np.ones(4))
        assert not p.conv1_b.any() and not p.fc1_b.any()

    def test_he_variance_fc2(self):
        arch = Architecture(window_len=8, n_features=3, hidden=128, n_classes=6)
        p = init_params(arch, seed=3)
        var = p.fc2_w.var()
        assert abs(var - 2.0 / 128) < 0.2 * (2.0 / 128)


class TestForward:
    def test_eval_deterministic(self):
        p = init_params(TINY, seed=1)
        x = np.random.default_rng(2).standard_normal((5, 4, 2))
        l1, _ = forward(p, x, mode="eval")
        l2, _ = forward(p, x, mode="eval")
        np.testing.assert_array_equal(l1, l2)

    def test_logits_shape(self):
        p = init_params(TINY, seed=1)
        for b in (1, 3, 17):
            logits, _ = forward(p, np.zeros((b, 4, 2)), mode="eval")
            assert logits.shape == (b, 2)

    def test_nan_input_raises(self):
        p = init_params(TINY, seed=1)
        x = np.zeros((2, 4, 2))
        x[0, 0, 0] = np.nan
        with pytest.raises(NumericalDivergence):
            forward(p, x, mode="eval")

    def test_shape_mismatch(self):
        p = init_params(TINY, seed=1)
        with pytest.raises(ValueError):
            forward(p, np.zeros((2, 5, 2)), mode="eval")

    def test_full_network_gradients_match_finite_differences(self):
        rng = np.random.default_rng(42)
        p = init_params(TINY, seed=9)
        x = rng.standard_normal((3, 4, 2))
        y = rng.integers(0, 2, 3)

        logits, cache = forward(p, x, mode="train")
        loss, grad_logits = softmax_cross_entropy(logits, y)
        grads = backward(p, cache, grad_logits)

        def loss_of(group):
            def f(v):
                orig = p.group(group).copy()
                p.group(group)[...] = v
                lg, _ = forward(p, x, mode="train")
                out, _ = softmax_cross_entropy(lg, y)
                p.group(group)[...] = orig
                return out
            return f

        for g in LEARNABLE_GROUPS:
            num = finite_diff(loss_of(g), p.group(g).copy())
            assert rel_error(grads[g], num) < 1e-3, f"gradient mismatch in {g}"


class TestAdam:
    def test_first_step_closed_form(self):
        p = init_params(TINY, seed=0)
        p.fc2_b[...] = 1.0
        grads = {g: np.zeros_like(p.group(g)) for g in LEARNABLE_GROUPS}
        grads["fc2_b"] = np.ones_like(p.fc2_b)
        state = AdamState.for_params(p, lr=0.001)
        adam_step(p, grads, state, FreezeMask.all_trainable())
        # m_hat = v_hat = 1 after bias correction, so the step is lr/(1 + eps)
        expected = 1.0 - 0.001 / (1.0 + 1e-8)
        np.testing.assert_allclose(p.fc2_b, expected, rtol=1e-12)
        assert abs(p.fc2_b[0] - 0.999000) < 1e-6

    def test_frozen_group_unchanged(self):
        p = init_params(TINY, seed=0)
        before = p.conv1_w.copy()
        grads = {g: np.ones_like(p.group(g)) for g in LEARNABLE_GROUPS}
        state = AdamState.for_params(p)
        adam_step(p, grads, state, FreezeMask.fc_only())
        np.testing.assert_array_equal(p.conv1_w, before)
        assert not state.m["conv1_w"].any() and not state.v["conv1_w"].any()
        assert (p.fc1_w != init_params(TINY, seed=0).fc1_w).any()

    def test_zero_grads_identity_but_t_increments(self):
        p = init_params(TINY, seed=0)
        snapshot = p.copy()
        grads = {g: np.zeros_like(p.group(g)) for g in LEARNABLE_GROUPS}
        state = AdamState.for_params(p)
        adam_step(p, grads, state, FreezeMask.all_trainable())
        assert state.t == 1
        assert params_equal(p, snapshot)

    def test_all_frozen_mask_is_identity(self):
        p = init_params(TINY, seed=0)
        snapshot = p.copy()
        mask = FreezeMask(trainable={g: False for g in LEARNABLE_GROUPS}, bn_stats_frozen=True)
        grads = {g: np.ones_like(p.group(g)) for g in LEARNABLE_GROUPS}
        adam_step(p, grads, AdamState.for_params(p), mask)
        assert params_equal(p, snapshot)


class TestCheckpoint:
    def test_round_trip_bitwise(self, tmp_path):
        p = init_params(TINY, seed=11)
        p.bn1_run_mean[...] = np.random.default_rng(0).standard_normal(TINY.c1)
        path = tmp_path / "m.ckpt"
        save_checkpoint(p, path)
        q = load_checkpoint(path)
        assert params_equal(p, q)
        assert q.arch == TINY

        x = np.random.default_rng(5).standard_normal((4, 4, 2))
        np.testing.assert_array_equal(forward(p, x, "eval")[0], forward(q, x, "eval")[0])

    def test_save_load_save_idempotent(self, tmp_path):
        p = init_params(TINY, seed=11)
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(p, a)
        save_checkpoint(load_checkpoint(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOPE" + bytes(100))
        with pytest.raises(BadMagicError):
            load_checkpoint(path)

    def test_bad_version(self, tmp_path):
        p = init_params(TINY, seed=0)
        path = tmp_path / "v.ckpt"
        save_checkpoint(p, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatchError):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        p = init_params(TINY, seed=0)
        path = tmp_path / "t.ckpt"
        save_checkpoint(p, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:len(raw) - 16])
        with pytest.raises(TruncatedError):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path):
        p = init_params(TINY, seed=0)
        path = tmp_path / "x.ckpt"
        save_checkpoint(p, path)
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(TruncatedError):
            load_checkpoint(path)


class TestFreezeMask:
    def test_partial_counts(self):
        mask = FreezeMask.fc_only()
        trainable = [g for g, v in mask.trainable.items() if v]
        assert sorted(trainable) == ["fc1_b", "fc1_w", "fc2_b", "fc2_w"]
        # 12 learnable groups + the BN statistics flag = 13 freeze decisions
        assert len(mask.trainable) + 1 == 13
        assert mask.bn_stats_frozen

    def test_full_counts(self):
        mask = FreezeMask.all_trainable()
        assert all(mask.trainable.values())
        assert not mask.bn_stats_frozen

    def test_mask_must_cover_all_groups(self):
        with pytest.raises(ValueError):
            FreezeMask(trainable={"fc1_w": True}, bn_stats_frozen=False)
