"""Slot-level state dynamics of the broadcast network.

A network is a set of sources, each holding at most one buffered update of
``L`` packets. In every slot the base station schedules at most one source,
which then attempts to push one packet over its unreliable channel. Age drops
only when the last packet of an update is delivered. The dynamics here are
policy-agnostic; decision rules live in :mod:`aoilab.policies`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class SourceParams:
    """Static per-source configuration: priority weight, channel reliability,
    and the number of packets that make up one update."""

    alpha: float
    p: float
    L: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigurationError(f"p must be in (0, 1], got {self.p}")
        if int(self.L) != self.L or self.L < 1:
            raise ConfigurationError(f"L must be an integer >= 1, got {self.L}")


def params_arrays(params: Sequence[SourceParams]):
    """(alpha, p, L) as numpy arrays, validating the list is non-empty."""
    if len(params) == 0:
        raise ConfigurationError("source list must be non-empty")
    alpha = np.array([s.alpha for s in params], dtype=np.float64)
    p = np.array([s.p for s in params], dtype=np.float64)
    L = np.array([s.L for s in params], dtype=np.int64)
    return alpha, p, L


class GenerationMode(Enum):
    """When an idle source re-timestamps its buffered update.

    REFRESH: a source with a full buffer regenerates every slot it is not
    delivering, so transmissions always start on a one-slot-old update.
    HOLD_UNTIL_DELIVERY: a new update is generated only when the previous one
    completes; the buffered update keeps aging while the source waits.
    """

    REFRESH = "refresh"
    HOLD_UNTIL_DELIVERY = "hold"

    @classmethod
    def parse(cls, text: str) -> "GenerationMode":
        for mode in cls:
            if mode.value == text:
                return mode
        raise ConfigurationError(f"unknown generation mode {text!r} (use 'refresh' or 'hold')")


@dataclass(frozen=True)
class Decision:
    """Per-slot scheduling output: idle, or transmit one source (0-based index)."""

    source: Optional[int]

    @property
    def is_idle(self) -> bool:
        return self.source is None


IDLE = Decision(None)


def transmit(source: int) -> Decision:
    return Decision(int(source))


class DeliveryKind(Enum):
    FIRST_PACKET = "first_packet"
    MID_PACKET = "mid_packet"
    UPDATE_COMPLETE = "update_complete"


@dataclass(frozen=True)
class DeliveryEvent:
    """A successful packet delivery, tagged by its position in the update."""

    source: int
    slot: int
    kind: DeliveryKind
    z_at_event: int


@dataclass
class SourceState:
    """Dynamic per-source state.

    h: age of information at the beginning of the slot (slots).
    z: system time of the buffered update (slots).
    l_rem: packets of the buffered update still to deliver.
    x_debt: throughput debt (target minus actual cumulative deliveries).
    first_delivery_slot: slot of the in-service update's first delivery
        (set iff l_rem < L).
    last_completion_slot: slot of the last completed update, 0 if none.
    """

    h: int = 1
    z: int = 0
    l_rem: int = 1
    x_debt: float = 0.0
    first_delivery_slot: Optional[int] = None
    last_completion_slot: int = 0


@dataclass
class NetworkState:
    """Source states plus the index of the slot about to execute (1-based)."""

    params: tuple
    sources: list = field(default_factory=list)
    t: int = 1

    def __len__(self) -> int:
        return len(self.sources)


def init_state(params: Sequence[SourceParams]) -> NetworkState:
    """Fresh network: every source starts with h=1, z=0, a full buffer, zero debt."""
    if len(params) == 0:
        raise ConfigurationError("source list must be non-empty")
    sources = [SourceState(h=1, z=0, l_rem=s.L) for s in params]
    return NetworkState(params=tuple(params), sources=sources, t=1)


def advance_slot(
    state: NetworkState,
    decision: Decision,
    channel_on: bool,
    mode: GenerationMode = GenerationMode.REFRESH,
    q_bar: Optional[Sequence[float]] = None,
):
    """Execute one slot: apply the decision and channel outcome, return
    (next state, delivery events).

    ``channel_on`` is the Bernoulli(p_i) draw for the scheduled source only and
    is ignored when idling. ``q_bar`` is the per-source throughput target fed
    into the debt recursion x' = x + q_bar - d (zeros when omitted).
    """
    n = len(state.sources)
    if not decision.is_idle and not 0 <= decision.source < n:
        raise ConfigurationError(f"scheduled source {decision.source} out of range [0, {n})")
    if q_bar is None:
        q_bar = [0.0] * n
    elif len(q_bar) != n:
        raise ConfigurationError("q_bar length must match the number of sources")

    t = state.t
    hold = mode is GenerationMode.HOLD_UNTIL_DELIVERY
    events = []
    new_sources = []
    for i, (src, prm) in enumerate(zip(state.sources, state.params)):
        delivered = (not decision.is_idle) and decision.source == i and channel_on
        if delivered:
            if src.l_rem == 1:
                events.append(DeliveryEvent(i, t, DeliveryKind.UPDATE_COMPLETE, src.z))
                nxt = SourceState(
                    h=src.z + 1,
                    z=1,
                    l_rem=prm.L,
                    x_debt=src.x_debt,
                    first_delivery_slot=None,
                    last_completion_slot=t,
                )
            else:
                kind = DeliveryKind.FIRST_PACKET if src.l_rem == prm.L else DeliveryKind.MID_PACKET
                events.append(DeliveryEvent(i, t, kind, src.z))
                nxt = SourceState(
                    h=src.h + 1,
                    z=src.z + 1,
                    l_rem=src.l_rem - 1,
                    x_debt=src.x_debt,
                    first_delivery_slot=(t if src.l_rem == prm.L else src.first_delivery_slot),
                    last_completion_slot=src.last_completion_slot,
                )
        else:
            if not hold and src.l_rem == prm.L:
                new_z = 1  # waiting source regenerated this slot
            else:
                new_z = src.z + 1
            nxt = SourceState(
                h=src.h + 1,
                z=new_z,
                l_rem=src.l_rem,
                x_debt=src.x_debt,
                first_delivery_slot=src.first_delivery_slot,
                last_completion_slot=src.last_completion_slot,
            )
        nxt.x_debt = src.x_debt + q_bar[i] - (1.0 if delivered else 0.0)
        new_sources.append(nxt)

    return NetworkState(params=state.params, sources=new_sources, t=t + 1), events


def weighted_aoi(state: NetworkState, params: Sequence[SourceParams]) -> float:
    """Weighted mean age (1/N) * sum_i alpha_i * h_i at the current slot."""
    if len(params) != len(state.sources):
        raise ConfigurationError(
            f"state has {len(state.sources)} sources but params has {len(params)}"
        )
    total = 0.0
    for src, prm in zip(state.sources, params):
        total += prm.alpha * src.h
    return total / len(params)
