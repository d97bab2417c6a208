"""Message-level network simulator with per-node communication accounting.

Every transmission in a protocol run is logged as a :class:`Message` carrying
the actual payload arrays, which is what the privacy audit inspects after the
run. Element counting follows the broadcast convention: a node that sends the
same payload to several receivers in one round is charged for one copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAYLOAD_FEATURE_CORES = "feature_cores"
PAYLOAD_GLOBAL_CORES = "global_cores"
PAYLOAD_CONSENSUS_STATE = "consensus_state"
PAYLOAD_PERSONAL_CORE = "personal_core"


@dataclass(frozen=True)
class Message:
    round_index: int
    sender: str
    receiver: str
    kind: str
    payloads: tuple[np.ndarray, ...]

    @property
    def elements(self) -> int:
        return int(sum(p.size for p in self.payloads))


@dataclass
class NetworkSim:
    """Synchronous message log shared by one protocol run."""

    messages: list[Message] = field(default_factory=list)
    rounds: int = 0
    # elements charged to each sender, broadcasts counted once
    sent_elements: dict[str, int] = field(default_factory=dict)

    def begin_round(self) -> int:
        self.rounds += 1
        return self.rounds

    def send(
        self,
        sender: str,
        receivers: str | list[str],
        kind: str,
        payloads: list[np.ndarray] | tuple[np.ndarray, ...],
    ) -> None:
        """Deliver one payload set from ``sender`` to one or more receivers."""
        if isinstance(receivers, str):
            receivers = [receivers]
        if not receivers:
            raise ValueError("a message needs at least one receiver")
        frozen = tuple(np.asarray(p, dtype=float) for p in payloads)
        for receiver in receivers:
            self.messages.append(
                Message(
                    round_index=self.rounds,
                    sender=sender,
                    receiver=receiver,
                    kind=kind,
                    payloads=frozen,
                )
            )
        elements = int(sum(p.size for p in frozen))
        self.sent_elements[sender] = self.sent_elements.get(sender, 0) + elements

    def total_elements(self) -> int:
        return int(sum(self.sent_elements.values()))
