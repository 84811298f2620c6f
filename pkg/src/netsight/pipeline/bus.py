"""In-process topic bus with ordered, exactly-once delivery per subscriber."""

from __future__ import annotations

from collections import deque
from typing import Any, Iterator, NamedTuple


class UnknownTopic(KeyError):
    pass


class Message(NamedTuple):
    topic: str
    seq: int
    global_seq: int
    payload: Any


class Subscription:
    """A subscriber's private queue over one or more topics.

    Iterating drains the queue in global publish order, so a subscriber on
    several topics sees messages interleaved exactly as they were published.
    """

    def __init__(self, topics: tuple[str, ...]):
        self.topics = topics
        self._queue: deque[Message] = deque()
        self.received = 0

    def _deliver(self, msg: Message) -> None:
        self._queue.append(msg)

    def __len__(self) -> int:
        return len(self._queue)

    def __iter__(self) -> Iterator[Message]:
        q = self._queue
        while q:
            self.received += 1
            yield q.popleft()


class TopicBus:
    def __init__(self, topics: tuple[str, ...] | list[str] = ()):
        self._subs: dict[str, list[Subscription]] = {}
        self._seq: dict[str, int] = {}
        self._global = 0
        self.published: dict[str, int] = {}
        for t in topics:
            self.declare(t)

    def declare(self, topic: str) -> None:
        if not topic:
            raise ValueError("topic name must be nonempty")
        self._subs.setdefault(topic, [])
        self._seq.setdefault(topic, 0)
        self.published.setdefault(topic, 0)

    @property
    def topics(self) -> list[str]:
        return sorted(self._subs)

    def publish(self, topic: str, payload: Any) -> int:
        if topic not in self._subs:
            self.declare(topic)
        seq = self._seq[topic]
        self._seq[topic] = seq + 1
        self.published[topic] += 1
        msg = Message(topic, seq, self._global, payload)
        self._global += 1
        for sub in self._subs[topic]:
            sub._deliver(msg)
        return seq

    def subscribe(self, *topics: str) -> Subscription:
        for t in topics:
            if not t or t not in self._subs:
                raise UnknownTopic(t)
        sub = Subscription(tuple(topics))
        for t in topics:
            self._subs[t].append(sub)
        return sub
