"""Monte Carlo estimators of the time-average age.

``simulate`` draws i.i.d. update cycles (waiting time W, then service S) and
returns the renewal-reward ratio sum(Q) / sum(Y) with Q_j = Y_j^2 / 2 +
Y_j S_{j+1}. Cycles are generated in fixed-size blocks, each from its own
counter-based stream keyed by (seed, block index), so the estimate does not
depend on how blocks are spread over workers.

``simulate_trajectory`` integrates the instantaneous age along one sample
path of Poisson arrivals with blocking, independently of the cycle model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import functools
import logging
import math
from typing import Any

import numpy as np
from scipy import stats

from .const import (
    CONFIDENCE_LEVEL,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_CYCLES,
    DEFAULT_HORIZON,
    DEFAULT_SEED,
    DEFAULT_TRAJECTORY_BATCHES,
    Policy,
)
from .exceptions import InvalidParameterError
from .parallel import map_ordered
from .pmf import (
    Pmf,
    SelectionSet,
    conditional_randomized,
    conditional_subset,
    conditional_topk,
    head_mass,
    pmf_with_empty,
    prefix_mass,
    randomized_mass,
)

_LOGGER = logging.getLogger(__name__)

# Keeps the trajectory stream apart from the per-block cycle streams
_TRAJECTORY_STREAM = 2**32 - 1
_ARRIVAL_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One simulation scenario.

    ``lengths`` follows the policy's encoded symbols: the selection (highest-k),
    all n realizations (randomized), the k head symbols (empty-noreset, whose
    empty symbol has length ``empty_length``) or the k head symbols plus the
    empty symbol last (empty-reset).
    """

    policy: Policy
    pmf: Pmf
    lengths: np.ndarray
    arrival_rate: float
    k: int | None = None
    alpha: float | None = None
    empty_length: float | None = None
    selection: SelectionSet | None = None
    cycles: int = DEFAULT_CYCLES
    seed: int = DEFAULT_SEED
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self) -> None:
        """Validate the scenario."""
        object.__setattr__(self, "lengths", np.array(self.lengths, dtype=float))
        if not self.arrival_rate > 0 or not math.isfinite(self.arrival_rate):
            raise InvalidParameterError(
                f"Arrival rate must be positive: {self.arrival_rate}"
            )
        if self.cycles < 1:
            raise InvalidParameterError(f"cycles must be >= 1, got {self.cycles}")
        if self.block_size < 1:
            raise InvalidParameterError("block_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")
        if self.lengths.ndim != 1 or not np.all(np.isfinite(self.lengths)):
            raise InvalidParameterError("lengths must be a finite vector")
        if np.any(self.lengths < 0):
            raise InvalidParameterError("Codeword lengths must be non-negative")
        if self.policy is not Policy.HIGHEST_K and self.selection is not None:
            raise InvalidParameterError("Only the highest-k policy takes a selection")
        if self.policy is Policy.HIGHEST_K:
            if self.selection is None and self.k is None:
                raise InvalidParameterError(
                    "The highest-k policy needs k or a selection"
                )
        elif self.k is None:
            raise InvalidParameterError(f"The {self.policy} policy needs k")
        expected = _encoding(self)[0].n
        if self.lengths.size != expected:
            raise InvalidParameterError(
                f"{self.policy} expects {expected} lengths, got {self.lengths.size}"
            )

    @property
    def encoded_selection(self) -> SelectionSet | None:
        """Selection used by the highest-k policy."""
        if self.policy is not Policy.HIGHEST_K:
            return None
        if self.selection is not None:
            return self.selection
        assert self.k is not None
        return SelectionSet.prefix(self.k)


def _encoding(config: SimConfig) -> tuple[Pmf, float, float]:
    """Return (encoding pmf, success probability per arrival, empty length)."""
    k = config.k
    if config.policy is Policy.HIGHEST_K:
        selection = config.encoded_selection
        assert selection is not None
        return (
            conditional_subset(config.pmf, selection),
            head_mass(config.pmf, selection),
            0.0,
        )
    assert k is not None
    if config.policy is Policy.RANDOMIZED:
        if config.alpha is None:
            raise InvalidParameterError("The randomized policy needs alpha")
        return (
            conditional_randomized(config.pmf, k, config.alpha),
            randomized_mass(config.pmf, k, config.alpha),
            0.0,
        )
    if config.policy is Policy.EMPTY_NORESET:
        if config.empty_length is None or config.empty_length < 0:
            raise InvalidParameterError("The empty-noreset policy needs empty_length")
        if not 1 <= k < config.pmf.n:
            raise InvalidParameterError("The empty symbol needs 1 <= k < n")
        return (
            conditional_topk(config.pmf, k),
            prefix_mass(config.pmf, k),
            float(config.empty_length),
        )
    if config.policy is Policy.EMPTY_RESET:
        return pmf_with_empty(config.pmf, k), 1.0, 0.0
    raise InvalidParameterError(f"Unknown policy {config.policy!r}")


@dataclass(frozen=True)
class AgeEstimate:
    """Renewal-reward estimate of the average age."""

    mean_age: float
    half_width_95: float
    cycles: int
    sum_q: float
    sum_y: float
    mean_wait: float
    mean_wait_half_width: float
    seed: int = DEFAULT_SEED

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-ready mapping."""
        return {
            "mean_age": self.mean_age,
            "half_width_95": self.half_width_95,
            "cycles": self.cycles,
            "sum_q": self.sum_q,
            "sum_y": self.sum_y,
            "mean_wait": self.mean_wait,
            "mean_wait_half_width": self.mean_wait_half_width,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class _CycleModel:
    lengths: np.ndarray
    probs: np.ndarray
    success: float
    empty_length: float
    arrival_rate: float
    seed: int
    block_size: int
    cycles: int


@dataclass(frozen=True)
class _BlockSums:
    count: int
    q: float
    y: float
    q2: float
    y2: float
    qy: float
    w: float
    w2: float


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,)))
    )


def _simulate_block(model: _CycleModel, block: int) -> _BlockSums:
    start = block * model.block_size
    count = min(model.block_size, model.cycles - start)
    rng = _block_rng(model.seed, block)

    if model.success < 1.0:
        u = rng.random(count)
        attempts = 1.0 + np.floor(np.log1p(-u) / math.log1p(-model.success))
    else:
        attempts = np.ones(count)
    wait = (attempts - 1.0) * model.empty_length + rng.gamma(
        attempts, 1.0 / model.arrival_rate
    )
    service = rng.choice(model.lengths, size=count + 1, p=model.probs)
    cycle = service[:-1] + wait
    area = 0.5 * cycle * cycle + cycle * service[1:]
    _LOGGER.debug("Simulated block %d (%d cycles)", block, count)
    return _BlockSums(
        count=count,
        q=float(area.sum()),
        y=float(cycle.sum()),
        q2=float((area * area).sum()),
        y2=float((cycle * cycle).sum()),
        qy=float((area * cycle).sum()),
        w=float(wait.sum()),
        w2=float((wait * wait).sum()),
    )


def _z_value() -> float:
    return float(stats.norm.ppf(0.5 + CONFIDENCE_LEVEL / 2.0))


def simulate(config: SimConfig, jobs: int | None = 1) -> AgeEstimate:
    """Estimate the average age of ``config`` from i.i.d. update cycles."""
    cond, success, empty_length = _encoding(config)
    model = _CycleModel(
        lengths=config.lengths,
        probs=cond.probs,
        success=success,
        empty_length=empty_length,
        arrival_rate=config.arrival_rate,
        seed=config.seed,
        block_size=config.block_size,
        cycles=config.cycles,
    )
    blocks = math.ceil(config.cycles / config.block_size)
    parts = map_ordered(functools.partial(_simulate_block, model), range(blocks), jobs)

    count = sum(p.count for p in parts)
    sum_q = sum(p.q for p in parts)
    sum_y = sum(p.y for p in parts)
    mean_q2 = sum(p.q2 for p in parts) / count
    mean_y2 = sum(p.y2 for p in parts) / count
    mean_qy = sum(p.qy for p in parts) / count
    mean_y = sum_y / count
    ratio = sum_q / sum_y

    # delta method for a ratio of means
    spread = max(mean_q2 - 2.0 * ratio * mean_qy + ratio * ratio * mean_y2, 0.0)
    z = _z_value()
    half_width = z * math.sqrt(spread / (count * mean_y * mean_y))

    sum_w = sum(p.w for p in parts)
    mean_w = sum_w / count
    if count > 1:
        centered = sum(p.w2 for p in parts) - count * mean_w * mean_w
        var_w = max(centered, 0.0) / (count - 1)
        wait_half_width = z * math.sqrt(var_w / count)
    else:
        wait_half_width = 0.0

    _LOGGER.debug(
        "Simulated %d cycles: age=%.12g +/- %.3g", count, ratio, half_width
    )
    return AgeEstimate(
        mean_age=ratio,
        half_width_95=half_width,
        cycles=count,
        sum_q=sum_q,
        sum_y=sum_y,
        mean_wait=mean_w,
        mean_wait_half_width=wait_half_width,
        seed=config.seed,
    )


@dataclass(frozen=True)
class TrajectoryEvent:
    """A transmission finishing at the receiver."""

    time: float
    generated: float
    symbol: int
    length: float
    empty: bool
    resets: bool
    age: float


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Time-average age along one sample path."""

    mean_age: float
    half_width_95: float
    horizon: float
    arrivals: int
    deliveries: int
    batches: int
    events: tuple[TrajectoryEvent, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-ready mapping without the event log."""
        return {
            "mean_age": self.mean_age,
            "half_width_95": self.half_width_95,
            "horizon": self.horizon,
            "arrivals": self.arrivals,
            "deliveries": self.deliveries,
            "batches": self.batches,
        }


@dataclass(frozen=True)
class _Actions:
    """Per-realization transmission rule."""

    length: np.ndarray
    accept: np.ndarray
    resets: np.ndarray
    empty: np.ndarray


def _actions(config: SimConfig) -> _Actions:
    n = config.pmf.n
    length = np.zeros(n)
    accept = np.zeros(n)
    resets = np.ones(n, dtype=bool)
    empty = np.zeros(n, dtype=bool)
    if config.policy is Policy.HIGHEST_K:
        selection = config.encoded_selection
        assert selection is not None
        positions = selection.positions()
        length[positions] = config.lengths
        accept[positions] = 1.0
        return _Actions(length, accept, resets, empty)

    k = config.k
    assert k is not None
    if config.policy is Policy.RANDOMIZED:
        assert config.alpha is not None
        length[:] = config.lengths
        accept[:k] = 1.0
        accept[k:] = config.alpha
        return _Actions(length, accept, resets, empty)

    length[:k] = config.lengths[:k]
    accept[:] = 1.0
    empty[k:] = True
    if config.policy is Policy.EMPTY_NORESET:
        assert config.empty_length is not None
        length[k:] = config.empty_length
        resets[k:] = False
    else:
        length[k:] = config.lengths[k]
    return _Actions(length, accept, resets, empty)


class _AreaAccumulator:
    """Integral of t - u over [0, horizon], split into equal batches."""

    def __init__(self, horizon: float, batches: int) -> None:
        """Initialize."""
        self.horizon = horizon
        self.width = horizon / batches
        self.areas = np.zeros(batches)
        self.clock = 0.0

    def advance(self, until: float, generated: float) -> None:
        """Add the age area from the current clock up to ``until``."""
        until = min(until, self.horizon)
        last = self.areas.size - 1
        start = self.clock
        while start < until:
            index = min(int(start // self.width), last)
            boundary = (index + 1) * self.width
            if boundary <= start and index < last:
                index += 1
                boundary = (index + 1) * self.width
            end = until if index == last else min(until, boundary)
            self.areas[index] += 0.5 * (
                (end - generated) ** 2 - (start - generated) ** 2
            )
            start = end
        self.clock = max(self.clock, until)


def simulate_trajectory(
    config: SimConfig,
    horizon: float = DEFAULT_HORIZON,
    *,
    batches: int = DEFAULT_TRAJECTORY_BATCHES,
    record_events: bool = True,
) -> TrajectoryEstimate:
    """Integrate the receiver's age over [0, horizon] along one sample path.

    Arrivals that find the transmitter busy are lost. The age starts at 0.
    Deliveries of the empty symbol reset the age only under the empty-reset
    policy.
    """
    if not horizon > 0 or not math.isfinite(horizon):
        raise InvalidParameterError(f"horizon must be positive, got {horizon}")
    if batches < 2:
        raise InvalidParameterError("At least two batches are needed")
    actions = _actions(config)
    rng = np.random.Generator(
        np.random.Philox(
            np.random.SeedSequence(config.seed, spawn_key=(_TRAJECTORY_STREAM,))
        )
    )
    probs = config.pmf.probs
    mean_gap = 1.0 / config.arrival_rate

    area = _AreaAccumulator(horizon, batches)
    events: list[TrajectoryEvent] = []
    generated = 0.0
    busy_until = 0.0
    now = 0.0
    arrivals = 0
    deliveries = 0
    done = False
    while not done:
        gaps = rng.exponential(mean_gap, size=_ARRIVAL_CHUNK)
        symbols = rng.choice(probs.size, size=_ARRIVAL_CHUNK, p=probs)
        coins = rng.random(_ARRIVAL_CHUNK)
        for gap, symbol, coin in zip(gaps, symbols, coins):
            now += gap
            if now >= horizon:
                done = True
                break
            arrivals += 1
            if now < busy_until or coin >= actions.accept[symbol]:
                continue
            length = float(actions.length[symbol])
            delivered = now + length
            busy_until = delivered
            if delivered > horizon:
                continue
            resets = bool(actions.resets[symbol])
            area.advance(delivered, generated)
            if resets:
                generated = now
                deliveries += 1
            if record_events:
                events.append(
                    TrajectoryEvent(
                        time=delivered,
                        generated=now,
                        symbol=int(symbol) + 1,
                        length=length,
                        empty=bool(actions.empty[symbol]),
                        resets=resets,
                        age=delivered - generated,
                    )
                )
    area.advance(horizon, generated)

    batch_means = area.areas / area.width
    mean_age = float(area.areas.sum() / horizon)
    quantile = float(stats.t.ppf(0.5 + CONFIDENCE_LEVEL / 2.0, batches - 1))
    half_width = quantile * float(np.std(batch_means, ddof=1)) / math.sqrt(batches)
    _LOGGER.debug(
        "Trajectory over %.6g: %d arrivals, %d resets, age=%.12g",
        horizon,
        arrivals,
        deliveries,
        mean_age,
    )
    return TrajectoryEstimate(
        mean_age=mean_age,
        half_width_95=half_width,
        horizon=horizon,
        arrivals=arrivals,
        deliveries=deliveries,
        batches=batches,
        events=tuple(events),
    )
