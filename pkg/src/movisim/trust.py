"""Server-side trust map built from peer-submitted evaluations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import NodeId
from .errors import InputError


@dataclass(frozen=True)
class TrustEvaluation:
    evaluator: NodeId
    subject: NodeId
    value: float
    at: float = 0.0

    def __post_init__(self):
        if self.evaluator == self.subject:
            raise InputError(f"node {self.evaluator} cannot evaluate itself")
        if not 0.0 <= self.value <= 1.0:
            raise InputError(f"trust value must be in [0, 1], got {self.value}")


@dataclass
class TrustState:
    """Evaluations, their per-subject mean, and the derived blacklist.

    With ``sticky_blacklist`` a node stays excluded once it has dropped
    below the threshold, even if later evaluations raise its mean.
    """

    threshold: float = 0.5
    default_trust: float = 1.0
    sticky_blacklist: bool = False
    evaluations: list[TrustEvaluation] = field(default_factory=list)
    aggregated: dict[NodeId, float] = field(default_factory=dict)
    blacklist: set[NodeId] = field(default_factory=set)
    _values: dict[NodeId, list[float]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise InputError(f"trust threshold must be in [0, 1], got {self.threshold}")
        for ev in list(self.evaluations):
            self._fold(ev)

    def _fold(self, ev: TrustEvaluation) -> None:
        vals = self._values.setdefault(ev.subject, [])
        vals.append(ev.value)
        # fsum keeps the mean independent of arrival order
        mean = math.fsum(vals) / len(vals)
        self.aggregated[ev.subject] = mean
        if mean < self.threshold:
            self.blacklist.add(ev.subject)
        elif not self.sticky_blacklist:
            self.blacklist.discard(ev.subject)

    def record(self, ev: TrustEvaluation) -> TrustState:
        self.evaluations.append(ev)
        self._fold(ev)
        return self

    def trust_of(self, subject: NodeId) -> float:
        return self.aggregated.get(subject, self.default_trust)

    def is_schedulable(self, subject: NodeId) -> bool:
        return subject not in self.blacklist and self.trust_of(subject) >= self.threshold


def record_evaluation(state: TrustState, ev: TrustEvaluation) -> TrustState:
    return state.record(ev)


def trust_of(state: TrustState, subject: NodeId) -> float:
    return state.trust_of(subject)


def is_schedulable(state: TrustState, subject: NodeId) -> bool:
    return state.is_schedulable(subject)
