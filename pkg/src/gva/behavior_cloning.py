"""Offline imitation: expert data, small MLP policies, minibatch training.

Experts are rolled out on a linear system to build a dataset of (state,
action) pairs; a linear or feed-forward policy is then fit by minimizing the
batch-mean half squared error between predicted and expert actions. The
training loop shuffles pooled pairs each epoch, keeps an optional shadow
parameter vector via the exponential moving average filter, and emits
checkpoint records with losses and (optionally) per-seed rollout rewards for
both the raw and the filtered parameters.

Policies may be augmented with the previous action as an extra input block;
the first action of every episode uses a zero previous action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import optim
from .errors import DataError, NumericError
from .linear_control import LinearSystem, rollout
from .metrics import CheckpointRecord
from .numerics import RngState, split
from .stabilizers import EmaConfig

ACTIVATIONS = ("relu", "tanh")


# ---------------------------------------------------------------------------
# dataset


@dataclass
class Dataset:
    """Expert trajectories plus a train/val split over trajectory indices."""

    trajectories: list
    train_idx: list[int]
    val_idx: list[int]

    def __post_init__(self):
        n = len(self.trajectories)
        if n == 0:
            raise ValueError("dataset needs at least one trajectory")
        combined = sorted(self.train_idx) + sorted(self.val_idx)
        if sorted(combined) != list(range(n)):
            raise ValueError("train and val indices must partition the trajectories")
        d_x = self.trajectories[0][0].shape[1]
        d_u = self.trajectories[0][1].shape[1]
        for i, (states, actions) in enumerate(self.trajectories):
            if states.ndim != 2 or actions.ndim != 2:
                raise ValueError(f"trajectory {i} must hold 2-d state/action arrays")
            if states.shape[1] != d_x or actions.shape[1] != d_u:
                raise ValueError(f"trajectory {i} has inconsistent dimensions")
            if not 0 <= states.shape[0] - actions.shape[0] <= 1:
                raise ValueError(
                    f"trajectory {i}: expected one action per non-terminal state"
                )

    @property
    def d_x(self) -> int:
        return self.trajectories[0][0].shape[1]

    @property
    def d_u(self) -> int:
        return self.trajectories[0][1].shape[1]


def collect_expert_data(system: LinearSystem, expert, N: int, rng: RngState) -> Dataset:
    """N expert rollouts, truncated at cliff termination, split 90/10."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    streams = split(rng, N + 1)
    trajectories = []
    for i in range(N):
        x0 = system.init.sample(streams[i], system.d_x)
        res = rollout(system, expert, x0, streams[i])
        if res.diverged:
            raise DataError(f"expert diverged on trajectory {i}")
        if res.actions.shape[0] == 0:
            trajectories.append((res.states[:1], np.zeros((0, system.d_u))))
        else:
            trajectories.append((res.states, res.actions))
    perm = streams[N].permutation(N)
    n_val = max(1, N // 10)
    val_idx = sorted(int(i) for i in perm[:n_val])
    train_idx = sorted(int(i) for i in perm[n_val:])
    return Dataset(trajectories=trajectories, train_idx=train_idx, val_idx=val_idx)


def pooled_pairs(dataset: Dataset, indices) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack (state, previous action, action) triples across trajectories.

    The previous action of the first pair in each trajectory is zero.
    """
    xs, prevs, us = [], [], []
    for i in indices:
        states, actions = dataset.trajectories[i]
        m = actions.shape[0]
        if m == 0:
            continue
        xs.append(states[:m])
        us.append(actions)
        prev = np.vstack([np.zeros((1, dataset.d_u)), actions[:-1]])
        prevs.append(prev)
    if not xs:
        raise DataError("no (state, action) pairs in the selected trajectories")
    return np.vstack(xs), np.vstack(prevs), np.vstack(us)


def dataset_to_csv(dataset: Dataset, path) -> None:
    """One row per (traj_id, h) pair; the terminal state is not exported."""
    d_x, d_u = dataset.d_x, dataset.d_u
    cols = (["traj_id", "h", "split"]
            + [f"x{j}" for j in range(d_x)] + [f"u{j}" for j in range(d_u)])
    val = set(dataset.val_idx)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i, (states, actions) in enumerate(dataset.trajectories):
            tag = "val" if i in val else "train"
            for h in range(actions.shape[0]):
                nums = [format(v, ".17g") for v in states[h]] \
                    + [format(v, ".17g") for v in actions[h]]
                fh.write(",".join([str(i), str(h), tag] + nums) + "\n")


def dataset_from_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        d_x = sum(1 for c in header if c.startswith("x"))
        d_u = sum(1 for c in header if c.startswith("u"))
        rows = {}
        tags = {}
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 3 + d_x + d_u:
                raise DataError(f"malformed dataset row: {line.strip()!r}")
            tid, h, tag = int(parts[0]), int(parts[1]), parts[2]
            vals = [float(v) for v in parts[3:]]
            rows.setdefault(tid, []).append((h, vals[:d_x], vals[d_x:]))
            tags[tid] = tag
    if not rows:
        raise DataError("dataset CSV holds no rows")
    trajectories, train_idx, val_idx = [], [], []
    for new_id, tid in enumerate(sorted(rows)):
        entries = sorted(rows[tid])
        states = np.array([e[1] for e in entries])
        actions = np.array([e[2] for e in entries])
        trajectories.append((states, actions))
        (val_idx if tags[tid] == "val" else train_idx).append(new_id)
    return Dataset(trajectories=trajectories, train_idx=train_idx, val_idx=val_idx)


# ---------------------------------------------------------------------------
# policy


class MlpPolicy:
    """Feed-forward policy; an empty hidden list is a plain affine map.

    Parameters flatten layer by layer, weights row-major then bias, so the
    count is sum((in_i + 1) * out_i).
    """

    def __init__(self, d_x: int, d_u: int, hidden: list[int] | None = None,
                 activation: str = "relu", prev_action_augmented: bool = False):
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if d_x < 1 or d_u < 1:
            raise ValueError("d_x and d_u must be >= 1")
        hidden = list(hidden or [])
        if any(h < 1 for h in hidden):
            raise ValueError("hidden widths must be >= 1")
        self.d_x = d_x
        self.d_u = d_u
        self.activation = activation
        self.prev_action_augmented = prev_action_augmented
        d_in = d_x + (d_u if prev_action_augmented else 0)
        self.layer_dims = [d_in] + hidden + [d_u]
        self.weights = [np.zeros((o, i)) for i, o in
                        zip(self.layer_dims[:-1], self.layer_dims[1:])]
        self.biases = [np.zeros(o) for o in self.layer_dims[1:]]
        self._prev_u = np.zeros(d_u)

    @property
    def n_params(self) -> int:
        return sum((i + 1) * o for i, o in
                   zip(self.layer_dims[:-1], self.layer_dims[1:]))

    def to_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {vec.shape}")
        pos = 0
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            n = w.size
            self.weights[k] = vec[pos:pos + n].reshape(w.shape)
            pos += n
            self.biases[k] = vec[pos:pos + b.size].copy()
            pos += b.size

    def reset(self) -> None:
        self._prev_u = np.zeros(self.d_u)

    def act(self, x: np.ndarray) -> np.ndarray:
        if self.prev_action_augmented:
            u = mlp_forward(self, x, self._prev_u)
            self._prev_u = u
            return u
        return mlp_forward(self, x)


def init_mlp(rng: RngState, d_x: int, d_u: int, hidden: list[int] | None = None,
             activation: str = "relu", prev_action_augmented: bool = False) -> MlpPolicy:
    """Uniform +-1/sqrt(fan_in) weights and biases."""
    policy = MlpPolicy(d_x, d_u, hidden, activation, prev_action_augmented)
    for k, w in enumerate(policy.weights):
        lim = 1.0 / math.sqrt(w.shape[1])
        policy.weights[k] = rng.uniform(-lim, lim, size=w.shape)
        policy.biases[k] = rng.uniform(-lim, lim, size=w.shape[0])
    return policy


def _activate(policy: MlpPolicy, z: np.ndarray) -> np.ndarray:
    if policy.activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(policy: MlpPolicy, z: np.ndarray) -> np.ndarray:
    if policy.activation == "relu":
        return (z > 0.0).astype(float)
    return 1.0 - np.tanh(z) ** 2


def _assemble_input(policy: MlpPolicy, X: np.ndarray, prev_U) -> np.ndarray:
    if policy.prev_action_augmented:
        if prev_U is None:
            raise ValueError("augmented policy requires previous actions")
        return np.hstack([X, prev_U])
    if prev_U is not None:
        raise ValueError("policy is not augmented; previous actions not accepted")
    return X


def _forward_batch(policy: MlpPolicy, A0: np.ndarray):
    """Returns (output, pre-activations, post-activations per layer)."""
    zs, acts = [], [A0]
    a = A0
    last = len(policy.weights) - 1
    for k, (w, b) in enumerate(zip(policy.weights, policy.biases)):
        z = a @ w.T + b
        zs.append(z)
        a = z if k == last else _activate(policy, z)
        acts.append(a)
    return a, zs, acts


def mlp_forward(policy: MlpPolicy, x, prev_u=None) -> np.ndarray:
    """Single-input forward pass; the final layer is affine."""
    x = np.asarray(x, dtype=float)
    if x.shape != (policy.d_x,):
        raise ValueError(f"expected state of shape ({policy.d_x},), got {x.shape}")
    prev = None
    if prev_u is not None:
        prev = np.asarray(prev_u, dtype=float).reshape(1, -1)
        if prev.shape[1] != policy.d_u:
            raise ValueError(f"previous action must have dim {policy.d_u}")
    A0 = _assemble_input(policy, x.reshape(1, -1), prev)
    out, _, _ = _forward_batch(policy, A0)
    return out[0]


def bc_batch_loss(policy: MlpPolicy, X, prev_U, U) -> float:
    """Batch mean of the half squared action error."""
    A0 = _assemble_input(policy, X, prev_U if policy.prev_action_augmented else None)
    out, _, _ = _forward_batch(policy, A0)
    diff = out - U
    return 0.5 * float(np.einsum("ij,ij->", diff, diff)) / X.shape[0]


def _grad_and_loss(policy: MlpPolicy, X, prev_U, U):
    """One shared forward pass for the flat gradient and the batch loss."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if X.shape[0] != U.shape[0]:
        raise ValueError("state and action batches differ in length")
    if X.shape[1] != policy.d_x or U.shape[1] != policy.d_u:
        raise ValueError("batch dimensions do not match the policy")
    A0 = _assemble_input(policy, X,
                         np.atleast_2d(np.asarray(prev_U, dtype=float))
                         if policy.prev_action_augmented else None)
    out, zs, acts = _forward_batch(policy, A0)
    n = X.shape[0]
    diff = out - U
    loss = 0.5 * float(np.einsum("ij,ij->", diff, diff)) / n
    delta = diff / n
    parts = [None] * len(policy.weights)
    for k in range(len(policy.weights) - 1, -1, -1):
        gw = delta.T @ acts[k]
        gb = delta.sum(axis=0)
        parts[k] = (gw, gb)
        if k > 0:
            delta = (delta @ policy.weights[k]) * _activate_grad(policy, zs[k - 1])
    grad = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in parts])
    return grad, loss


def mlp_grad(policy: MlpPolicy, batch) -> np.ndarray:
    """Exact flat gradient of the batch-mean half squared error.

    batch is (X, prev_U, U); prev_U is ignored unless the policy is
    augmented. Ordering matches MlpPolicy.to_vector.
    """
    X, prev_U, U = batch
    grad, _ = _grad_and_loss(policy, X, prev_U, U)
    return grad


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalResult:
    rewards: np.ndarray
    diverged: np.ndarray
    mean_reward: float


def eval_checkpoint(system: LinearSystem, policy, seeds: int, rng: RngState) -> EvalResult:
    """Per-seed rollout rewards; seed k's draws depend only on (rng, k).

    Diverged rollouts are flagged and excluded from the mean.
    """
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    rewards = np.empty(seeds)
    diverged = np.zeros(seeds, dtype=bool)
    for k, stream in enumerate(split(rng, seeds)):
        x0 = system.init.sample(stream, system.d_x)
        res = rollout(system, policy, x0, stream)
        rewards[k] = res.total_reward
        diverged[k] = res.diverged
    ok = rewards[~diverged]
    mean = float(ok.mean()) if ok.size else math.nan
    return EvalResult(rewards=rewards, diverged=diverged, mean_reward=mean)


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    optimizer: str = "adamw"
    lr: optim.LrSchedule = field(
        default_factory=lambda: optim.LrSchedule.constant(3e-4))
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.0
    momentum: float = 0.0
    ema: EmaConfig | None = None
    eval_every: int = 100
    eval_seeds: int = 20
    retain_params: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.optimizer not in ("sgd", "adamw"):
            raise ValueError(f"optimizer must be sgd or adamw, got {self.optimizer!r}")


@dataclass
class BcCheckpoint:
    step: int
    train_loss: float
    val_loss: float
    val_loss_ema: float
    eval_raw: EvalResult | None = None
    eval_ema: EvalResult | None = None
    params_raw: np.ndarray | None = None
    params_ema: np.ndarray | None = None


def _make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return optim.SgdState(beta1=config.momentum)
    return optim.AdamWState(beta1=config.beta1, beta2=config.beta2,
                            weight_decay=config.weight_decay)


def train_bc(dataset: Dataset, policy: MlpPolicy, config: TrainConfig,
             system: LinearSystem, rng: RngState,
             eval_rng: RngState | None = None) -> list[BcCheckpoint]:
    """Minibatch regression on pooled expert pairs with checkpoint records.

    Checkpoints land at step 0, every eval_every optimizer steps, and the
    final step. The filter shadow (when configured) advances every optimizer
    step; rollout rewards are evaluated for raw and shadow parameters with
    eval draws fixed for the whole run (pass eval_rng to share those draws
    with evaluations done outside the loop).
    """
    if policy.d_x != dataset.d_x or policy.d_u != dataset.d_u:
        raise ValueError("policy dimensions do not match the dataset")
    X, prev_U, U = pooled_pairs(dataset, dataset.train_idx)
    Xv, prev_Uv, Uv = pooled_pairs(dataset, dataset.val_idx)
    n = X.shape[0]
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    shuffle_root, eval_root = split(rng, 2)
    if eval_rng is not None:
        eval_root = eval_rng
    epoch_streams = split(shuffle_root, max(1, config.epochs))
    params = policy.to_vector()
    opt_state = _make_optimizer(config)
    filt = config.ema.build() if config.ema is not None else None
    shadow = filt.update(0, params) if filt is not None else params
    records: list[BcCheckpoint] = []

    def checkpoint(step: int, train_loss: float):
        policy.set_vector(params)
        val_loss = bc_batch_loss(policy, Xv, prev_Uv, Uv)
        ev_raw = (eval_checkpoint(system, policy, config.eval_seeds, eval_root)
                  if config.eval_seeds > 0 else None)
        policy.set_vector(shadow)
        val_ema = bc_batch_loss(policy, Xv, prev_Uv, Uv)
        ev_ema = (eval_checkpoint(system, policy, config.eval_seeds, eval_root)
                  if config.eval_seeds > 0 else None)
        policy.set_vector(params)
        records.append(BcCheckpoint(
            step=step, train_loss=train_loss, val_loss=val_loss,
            val_loss_ema=val_ema, eval_raw=ev_raw, eval_ema=ev_ema,
            params_raw=params.copy() if config.retain_params else None,
            params_ema=shadow.copy() if config.retain_params else None,
        ))

    checkpoint(0, bc_batch_loss(policy, X, prev_U, U))
    step = 0
    for epoch in range(config.epochs):
        order = epoch_streams[epoch].permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            policy.set_vector(params)
            grad, loss = _grad_and_loss(policy, X[idx], prev_U[idx], U[idx])
            if not math.isfinite(loss):
                last = records[-1].step if records else 0
                raise NumericError(
                    f"non-finite training loss at step {step + 1}; "
                    f"last finite checkpoint at step {last}"
                )
            step += 1
            lr = optim.lr_at(config.lr, step, max(1, total_steps))
            if config.optimizer == "sgd":
                params = optim.sgd_step(opt_state, params, grad, lr)
            else:
                params = optim.adamw_step(opt_state, params, grad, lr)
            if filt is not None:
                shadow = filt.update(step, params)
            else:
                shadow = params
            if step % config.eval_every == 0 or step == total_steps:
                checkpoint(step, loss)
    policy.set_vector(params)
    return records


def curve_records(records: list[BcCheckpoint], which: str = "raw") -> list[CheckpointRecord]:
    """Project training checkpoints onto reward-curve records."""
    if which not in ("raw", "ema"):
        raise ValueError("which must be 'raw' or 'ema'")
    out = []
    for rec in records:
        ev = rec.eval_raw if which == "raw" else rec.eval_ema
        loss = rec.val_loss if which == "raw" else rec.val_loss_ema
        if ev is None:
            out.append(CheckpointRecord(step=rec.step, mean_reward=math.nan,
                                        val_loss=loss))
        else:
            out.append(CheckpointRecord(
                step=rec.step, mean_reward=ev.mean_reward,
                rewards=ev.rewards[~ev.diverged],
                val_loss=loss, n_diverged=int(ev.diverged.sum()),
            ))
    return out
