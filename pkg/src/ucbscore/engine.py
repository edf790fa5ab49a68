"""Generic sequential allocation loop shared by every index policy.

A policy object supplies the family-specific parts:

* ``n0`` -- forced pulls per arm before indices are compared,
* ``d_tilde(t)`` -- the inflation offset in the index radius,
* ``new_stats()`` / ``update(stats, x)`` -- the per-arm sufficient statistics,
* ``index(arm, stats, n)`` -- the upper confidence index at global clock ``n``.

Rewards come from per-arm tapes: the k-th pull of arm i always receives the
k-th entry of arm i's tape.  Together with one tie-break uniform per round this
makes a run a pure function of its seed stream.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np


class IndexPolicy(Protocol):
    name: str
    n0: int

    def d_tilde(self, t: int) -> float: ...

    def new_stats(self) -> Any: ...

    def update(self, stats: Any, x: float) -> Any: ...

    def index(self, arm: int, stats: Any, n: int) -> float: ...


class ArmModel(Protocol):
    family: str

    def score(self) -> float: ...

    def sample(self, u: np.ndarray) -> np.ndarray: ...

    def M(self, rho: float) -> float: ...


@dataclass
class PolicyState:
    n0: int
    arm_count: int
    stats: list
    clock_n: int = 0
    pulls: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.arm_count < 1:
            raise ValueError("arm set is empty")
        if not self.pulls:
            self.pulls = [0] * self.arm_count
        if len(self.pulls) != self.arm_count or len(self.stats) != self.arm_count:
            raise ValueError("pulls/stats length does not match arm_count")

    @classmethod
    def initial(cls, policy: IndexPolicy, arm_count: int) -> "PolicyState":
        return cls(
            n0=policy.n0,
            arm_count=arm_count,
            stats=[policy.new_stats() for _ in range(arm_count)],
        )

    @property
    def in_initial_phase(self) -> bool:
        return self.clock_n < self.n0 * self.arm_count

    def copy(self) -> "PolicyState":
        return copy.deepcopy(self)


@dataclass
class Trace:
    selections: np.ndarray
    rewards: np.ndarray
    suboptimal_counts: dict[int, int]
    checkpoint_pulls: dict[int, np.ndarray]


def select_arm(state: PolicyState, indices: Sequence[float] | None, rng) -> int:
    """Pick the next arm.

    During the initial phase this is the lowest-numbered arm that still has
    fewer than ``n0`` pulls and ``indices`` is ignored.  Afterwards the argmax
    of ``indices`` is returned; exact ties (including several ``inf``) are
    broken uniformly.  ``rng`` is a numpy ``Generator`` or an already drawn
    uniform in [0, 1).
    """
    if state.arm_count < 1:
        raise ValueError("arm set is empty")
    if state.in_initial_phase:
        for i, p in enumerate(state.pulls):
            if p < state.n0:
                return i
    values = np.asarray(indices, dtype=float)
    if values.shape != (state.arm_count,):
        raise ValueError(f"expected {state.arm_count} indices, got shape {values.shape}")
    if np.isnan(values).any():
        raise ValueError("index values must not be NaN")
    best = values.max()
    tied = np.flatnonzero(values == best)
    if len(tied) == 1:
        return int(tied[0])
    u = rng.random() if hasattr(rng, "random") else float(rng)
    return int(tied[int(u * len(tied))])


def observe(state: PolicyState, policy: IndexPolicy, arm: int, reward: float) -> PolicyState:
    """Record one reward in place and return the same state."""
    if not 0 <= arm < state.arm_count:
        raise IndexError(f"arm {arm} out of range for {state.arm_count} arms")
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward!r}")
    state.stats[arm] = policy.update(state.stats[arm], reward)
    state.pulls[arm] += 1
    state.clock_n += 1
    return state


def default_checkpoints(horizon: int) -> list[int]:
    points = []
    p = 10
    while p < horizon:
        points.append(p)
        p *= 10
    points.append(horizon)
    return points


def stream_generator(seed) -> np.random.Generator:
    """Counter-based generator for an integer seed or a tuple such as (seed, replication)."""
    entropy = [int(s) for s in np.atleast_1d(seed)]
    if any(s < 0 for s in entropy):
        raise ValueError("seeds must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    # 52 random bits centred in their cell: never exactly 0 or 1.
    k = rng.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-52


def draw_tapes(arms: Sequence[ArmModel], horizon: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Reward tapes (one row per arm) and tie-break uniforms for one run."""
    rng = stream_generator(seed)
    u = open_uniforms(rng, (len(arms) + 1, horizon))
    rewards = np.empty((len(arms), horizon))
    for i, arm in enumerate(arms):
        rewards[i] = arm.sample(u[i])
    return rewards, u[-1]


def optimal_set(arms: Sequence[ArmModel]) -> np.ndarray:
    scores = np.array([arm.score() for arm in arms])
    return scores == scores.max()


def run_horizon(
    arms: Sequence[ArmModel],
    policy: IndexPolicy,
    horizon: int,
    seed,
    checkpoints: Sequence[int] | None = None,
) -> Trace:
    """Run the policy for ``horizon`` rounds on one seeded reward stream."""
    N = len(arms)
    if N < 2:
        raise ValueError("need at least two arms")
    if horizon < policy.n0 * N:
        raise ValueError(f"horizon {horizon} is shorter than the initial phase {policy.n0 * N}")
    if checkpoints is None:
        checkpoints = default_checkpoints(horizon)
    checkpoints = sorted(set(int(c) for c in checkpoints if 0 < c <= horizon))

    tapes, ties = draw_tapes(arms, horizon, seed)
    optimal = optimal_set(arms)
    state = PolicyState.initial(policy, N)
    selections = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    checkpoint_pulls = {}
    pending = list(checkpoints)
    indices = [0.0] * N

    for step in range(horizon):
        if not state.in_initial_phase:
            n = state.clock_n
            indices = [policy.index(i, state.stats[i], n) for i in range(N)]
        arm = select_arm(state, indices, ties[step])
        x = float(tapes[arm, state.pulls[arm]])
        observe(state, policy, arm, x)
        selections[step] = arm
        rewards[step] = x
        if pending and state.clock_n == pending[0]:
            checkpoint_pulls[pending.pop(0)] = np.array(state.pulls, dtype=np.int64)

    suboptimal = {h: int(p[~optimal].sum()) for h, p in checkpoint_pulls.items()}
    return Trace(selections, rewards, suboptimal, checkpoint_pulls)
