import math

import numpy as np
import pytest

from chainmover.errors import ShapeError
from chainmover.nets import (Adam, CriticNet, Mlp, PolicyNet, Var,
                             clip_grad_norm, elu, exp, flatten_params,
                             load_checkpoint, log, matmul, minimum,
                             save_checkpoint, set_flat_params, tanh, vmean,
                             vsum, clip)
from chainmover.sim import ACTION_HIGH, ACTION_LOW


# --------------------------------------------------------------------------
# Autodiff: forward oracles and gradient checks
# --------------------------------------------------------------------------

def test_mlp_forward_numpy_oracle():
    rng = np.random.default_rng(0)
    net = Mlp([4, 8, 3], rng)
    x = rng.normal(size=(5, 4))
    w0, b0, w1, b1 = (p.value for p in net.params)
    h = x @ w0 + b0
    h = np.where(h > 0, h, np.exp(np.minimum(h, 0)) - 1.0)
    want = h @ w1 + b1
    assert net.forward(x) == pytest.approx(want, abs=1e-12)
    # tape-based forward agrees with the tape-free one
    assert net.forward_var(Var(x)).value == pytest.approx(want, abs=1e-12)


def test_mlp_rejects_wrong_input_dim():
    net = Mlp([4, 8, 3], np.random.default_rng(0))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 5)))


def _central_difference(f, params, eps=1e-6):
    """Numeric gradient of scalar f() w.r.t. every parameter entry."""
    grads = []
    for p in params:
        g = np.zeros_like(p.value)
        flat = p.value.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            hi = f()
            flat[i] = old - eps
            lo = f()
            flat[i] = old
            gf[i] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def assert_grads_match(loss_fn, params, rel=1e-3):
    loss = loss_fn()
    loss.backward()
    analytic = [np.zeros_like(p.value) if p.grad is None else p.grad.copy()
                for p in params]
    numeric = _central_difference(lambda: float(loss_fn().value), params)
    for a, n in zip(analytic, numeric):
        denom = max(np.abs(n).max(), np.abs(a).max(), 1e-8)
        assert np.abs(a - n).max() / denom < rel


def test_mlp_gradient_check():
    rng = np.random.default_rng(1)
    net = Mlp([3, 6, 2], rng)
    x = rng.normal(size=(4, 3))
    t = rng.normal(size=(4, 2))

    def loss():
        d = net.forward_var(Var(x)) - Var(t)
        return vmean(d * d)

    assert_grads_match(loss, net.params)


def test_elementwise_op_gradient_checks():
    rng = np.random.default_rng(2)
    x = Var(rng.uniform(0.5, 2.0, size=(3, 2)))
    y = Var(rng.uniform(0.5, 2.0, size=(3, 2)))

    cases = [
        lambda: vsum(tanh(x) * y),
        lambda: vsum(elu(x - y * 2.0)),
        lambda: vsum(exp(x * 0.3) / y),
        lambda: vsum(log(x) + x ** 2.0),
        lambda: vsum(minimum(x, y) * 3.0),
        lambda: vsum(clip(x, 0.8, 1.5)),
        lambda: vmean(x * x, axis=0) ** 2.0 if False else vsum(vmean(x, axis=1)),
    ]
    for f in cases:
        x.grad = y.grad = None
        assert_grads_match(f, [x, y])


def test_broadcast_gradients():
    rng = np.random.default_rng(3)
    a = Var(rng.normal(size=(4, 3)))
    b = Var(rng.normal(size=(3,)))  # broadcast over rows
    assert_grads_match(lambda: vsum(a * b + b), [a, b])


def test_backward_zeroes_stale_grads():
    x = Var(np.array([2.0]))
    y = vsum(x * x)
    y.backward()
    first = x.grad.copy()
    y2 = vsum(x * x)
    y2.backward()
    assert x.grad == pytest.approx(first)  # not accumulated across calls


# --------------------------------------------------------------------------
# Policy / critic heads
# --------------------------------------------------------------------------

def test_policy_actions_within_bounds():
    rng = np.random.default_rng(4)
    pol = PolicyNet(5, ACTION_LOW, ACTION_HIGH, (16,), rng, init_log_std=0.5)
    obs = rng.normal(scale=3.0, size=(100, 5))
    a, u, logp = pol.sample(obs, rng)
    lo = np.asarray(ACTION_LOW)
    hi = np.asarray(ACTION_HIGH)
    assert (a >= lo).all() and (a <= hi).all()
    det = pol.act_deterministic(obs)
    assert (det >= lo).all() and (det <= hi).all()
    assert logp.shape == (100,)


def test_policy_log_prob_consistency():
    """Tape log-prob equals the rollout-time numpy log-prob."""
    rng = np.random.default_rng(5)
    pol = PolicyNet(4, ACTION_LOW, ACTION_HIGH, (8,), rng)
    obs = rng.normal(size=(6, 4))
    _, u, logp = pol.sample(obs, rng)
    assert pol.log_prob_var(obs, u).value == pytest.approx(logp, abs=1e-12)


def test_policy_log_prob_gradient_check():
    rng = np.random.default_rng(6)
    pol = PolicyNet(3, ACTION_LOW, ACTION_HIGH, (6,), rng)
    obs = rng.normal(size=(5, 3))
    _, u, _ = pol.sample(obs, rng)
    assert_grads_match(lambda: vmean(pol.log_prob_var(obs, u)), pol.params)


def test_policy_per_dimension_init_log_std():
    rng = np.random.default_rng(7)
    stds = (-1.9, -1.9, -1.9, -3.0, -3.0, -3.0)
    pol = PolicyNet(4, ACTION_LOW, ACTION_HIGH, (8,), rng, init_log_std=stds)
    assert pol.log_std.value == pytest.approx(np.asarray(stds))


def test_policy_entropy_closed_form():
    rng = np.random.default_rng(8)
    pol = PolicyNet(4, ACTION_LOW, ACTION_HIGH, (8,), rng, init_log_std=-0.5)
    n = len(ACTION_LOW)
    want = n * (-0.5) + 0.5 * (1.0 + math.log(2 * math.pi)) * n
    assert float(pol.entropy_var().value) == pytest.approx(want, abs=1e-12)


def test_critic_gradient_check():
    rng = np.random.default_rng(9)
    critic = CriticNet(4, (8,), rng)
    obs = rng.normal(size=(6, 4))
    t = rng.normal(size=6)

    def loss():
        d = critic.value_var(obs) - Var(t)
        return vmean(d * d)

    assert_grads_match(loss, critic.params)
    assert critic.value(obs) == pytest.approx(critic.value_var(obs).value)


# --------------------------------------------------------------------------
# Optimizer and helpers
# --------------------------------------------------------------------------

def test_adam_first_step_closed_form():
    """After one step with bias correction, the update is exactly lr * sign(g)
    (eps-free limit)."""
    p = Var(np.array([1.0, -2.0]))
    opt = Adam([p], lr=0.1, eps=0.0)
    p.grad = np.array([0.3, -0.7])
    opt.step()
    assert p.value == pytest.approx([1.0 - 0.1, -2.0 + 0.1], abs=1e-12)


def test_adam_converges_on_quadratic():
    p = Var(np.array([5.0]))
    opt = Adam([p], lr=0.1)
    for _ in range(500):
        loss = vsum(p * p)
        loss.backward()
        opt.step()
    assert abs(p.value[0]) < 1e-2


def test_clip_grad_norm():
    a = Var(np.zeros(3))
    b = Var(np.zeros(2))
    a.grad = np.array([3.0, 0.0, 0.0])
    b.grad = np.array([0.0, 4.0])
    total = clip_grad_norm([a, b], 1.0)
    assert total == pytest.approx(5.0)
    norm = math.sqrt(float((a.grad ** 2).sum() + (b.grad ** 2).sum()))
    assert norm == pytest.approx(1.0, abs=1e-12)


def test_flatten_round_trip():
    rng = np.random.default_rng(10)
    net = Mlp([3, 5, 2], rng)
    flat = flatten_params(net.params)
    other = Mlp([3, 5, 2], np.random.default_rng(99))
    set_flat_params(other.params, flat)
    x = rng.normal(size=(2, 3))
    assert other.forward(x) == pytest.approx(net.forward(x), abs=1e-15)
    with pytest.raises(ShapeError):
        set_flat_params(other.params, flat[:-1])


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    pol = PolicyNet(4, ACTION_LOW, ACTION_HIGH, (8,), rng)
    path = str(tmp_path / "p.ckpt")
    meta = {"kind": "policy", "obs_dim": 4, "hidden": [8]}
    save_checkpoint(path, meta, pol.params)
    back_meta, arrays = load_checkpoint(path)
    assert back_meta["kind"] == "policy"
    assert back_meta["obs_dim"] == 4
    for p, a in zip(pol.params, arrays):
        assert a == pytest.approx(p.value, abs=0.0)


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "junk.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ValueError):
        load_checkpoint(str(p))
