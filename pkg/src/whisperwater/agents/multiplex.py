"""Fan-in merge of per-agent event streams.

Each source is drained on its own thread into one queue, so the merged
sequence interleaves sources while preserving each source's own order.
"""

from __future__ import annotations

import queue
import threading
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from ..errors import InvalidInput

T = TypeVar("T")

_DONE = object()


def multiplex(
    sources: Sequence[Iterable[T]],
    on_error: Callable[[int, Exception], T] | None = None,
) -> Iterator[T]:
    """Merge N iterables into one stream; per-source order is preserved.

    A source raising mid-stream contributes an error item (built by
    `on_error`, or re-raised when absent) and the other sources keep going.
    """
    if len(sources) < 1:
        raise InvalidInput("multiplex needs at least one source")
    q: queue.Queue = queue.Queue()

    def drain(idx: int, source: Iterable[T]) -> None:
        try:
            for item in source:
                q.put((idx, item))
        except Exception as exc:  # noqa: BLE001 - forwarded to the consumer
            q.put((idx, exc))
        finally:
            q.put((idx, _DONE))

    threads = [
        threading.Thread(target=drain, args=(i, src), daemon=True)
        for i, src in enumerate(sources)
    ]
    for t in threads:
        t.start()

    remaining = len(sources)
    while remaining:
        idx, item = q.get()
        if item is _DONE:
            remaining -= 1
        elif isinstance(item, Exception):
            if on_error is None:
                raise item
            yield on_error(idx, item)
        else:
            yield item
    for t in threads:
        t.join()
