"""Truth-status partitioned tuple stores with column indexes.

One :class:`IndexedTupleStore` holds the ground tuples of a single
predicate.  Each tuple sits in exactly one of three partitions (true, false,
undefined).  Column indexes are built the first time a column subset is
queried and are kept current on every status change, so a lookup such as
"true ``b`` tuples whose first column is 1" costs the size of the answer.
Inserts and status changes are journaled; :meth:`IndexedTupleStore.undo_to`
rewinds them.
"""

from __future__ import annotations

import enum
from typing import Iterable, Mapping


class Status(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"

    def __str__(self):
        return self.value


TRUE, FALSE, UNDEFINED = Status.TRUE, Status.FALSE, Status.UNDEFINED
ALL_STATUSES = (TRUE, FALSE, UNDEFINED)


class TupleHandle:
    """A ground tuple known to a store; ``status`` follows its partition."""

    __slots__ = ("predicate", "values", "status", "seq", "store", "data")

    def __init__(self, predicate, values, status, seq, store):
        self.predicate = predicate
        self.values = values
        self.status = status
        self.seq = seq
        self.store = store
        self.data = None  # owner payload, e.g. the solver variable

    @property
    def arity(self):
        return len(self.values)

    def get_predicate_name(self) -> str:
        return self.predicate

    def get_term_at(self, i: int):
        if not 0 <= i < len(self.values):
            raise IndexError(f"term index {i} out of range for {self}")
        return self.values[i]

    def __repr__(self):
        return f"<{self} {self.status}>"

    def __str__(self):
        if not self.values:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.values))})"


def get_predicate_name(t: TupleHandle) -> str:
    return t.get_predicate_name()


def get_term_at(t: TupleHandle, i: int):
    return t.get_term_at(i)


class UnknownTupleError(KeyError):
    pass


class IndexedTupleStore:
    def __init__(self, predicate: str, arity: int):
        self.predicate = predicate
        self.arity = arity
        self._handles: dict[tuple, TupleHandle] = {}
        self._partitions = {s: {} for s in ALL_STATUSES}
        # column subset -> key -> status -> {handle: None}
        self._indexes: dict[tuple, dict] = {}
        # (handle, previous status), or (handle, None) for an insert
        self._log: list[tuple[TupleHandle, Status | None]] = []

    def __len__(self):
        return len(self._handles)

    def __iter__(self):
        return iter(self._handles.values())

    def __contains__(self, values):
        return tuple(values) in self._handles

    def insert(self, values: Iterable, status: Status = UNDEFINED) -> TupleHandle:
        values = tuple(values)
        if len(values) != self.arity:
            raise ValueError(f"{self.predicate}/{self.arity}: bad tuple {values}")
        h = self._handles.get(values)
        if h is not None:
            return h
        h = TupleHandle(self.predicate, values, status, len(self._handles), self)
        self._handles[values] = h
        self._partitions[status][h] = None
        for cols, index in self._indexes.items():
            key = tuple(values[c] for c in cols)
            index.setdefault(key, _empty_buckets())[status][h] = None
        self._log.append((h, None))
        return h

    def _remove(self, h):
        del self._handles[h.values]
        del self._partitions[h.status][h]
        for cols, index in self._indexes.items():
            del index[tuple(h.values[c] for c in cols)][h.status][h]
        h.store = None

    def lookup(self, values) -> TupleHandle | None:
        return self._handles.get(tuple(values))

    def handle(self, values) -> TupleHandle:
        h = self._handles.get(tuple(values))
        if h is None:
            raise UnknownTupleError(f"{self.predicate}{tuple(values)} is not in the store")
        return h

    def partition(self, status: Status) -> list[TupleHandle]:
        return _ordered(self._partitions[status])

    def size(self, status: Status) -> int:
        return len(self._partitions[status])

    # -- status changes ---------------------------------------------------
    def set_status(self, t, new_status: Status):
        h = t if isinstance(t, TupleHandle) else self.handle(t)
        if h.store is not self:
            raise UnknownTupleError(f"{h} belongs to another store")
        old = h.status
        if old is new_status:
            return
        self._log.append((h, old))
        self._move(h, old, new_status)

    def _move(self, h, old, new):
        del self._partitions[old][h]
        self._partitions[new][h] = None
        values = h.values
        for cols, index in self._indexes.items():
            buckets = index[tuple(values[c] for c in cols)]
            del buckets[old][h]
            buckets[new][h] = None
        h.status = new

    def mark(self) -> int:
        return len(self._log)

    def undo_to(self, mark: int):
        if mark > len(self._log):
            raise ValueError(f"stale mark {mark} (journal length {len(self._log)})")
        log = self._log
        while len(log) > mark:
            h, old = log.pop()
            if old is None:
                self._remove(h)
            else:
                self._move(h, h.status, old)

    # -- queries ----------------------------------------------------------
    def _index(self, cols: tuple) -> dict:
        index = self._indexes.get(cols)
        if index is None:
            index = {}
            for values, h in self._handles.items():
                key = tuple(values[c] for c in cols)
                index.setdefault(key, _empty_buckets())[h.status][h] = None
            self._indexes[cols] = index
        return index

    def matching(self, cols: tuple, key: tuple, statuses=(TRUE,)) -> list[TupleHandle]:
        """Tuples in ``statuses`` whose columns ``cols`` equal ``key``, in insertion order."""
        if not cols:
            found = [h for s in statuses for h in self._partitions[s]]
        else:
            buckets = self._index(cols).get(key)
            if buckets is None:
                return []
            found = [h for s in statuses for h in buckets[s]]
        if len(found) > 1:
            found.sort(key=_seq)
        return found

    def get_values_matching(self, partition: Status, bound: Mapping[int, object]) -> list[TupleHandle]:
        cols = tuple(sorted(bound))
        for c in cols:
            if not 0 <= c < self.arity:
                raise IndexError(f"column {c} out of range for {self.predicate}/{self.arity}")
        return self.matching(cols, tuple(bound[c] for c in cols), (partition,))


def _empty_buckets():
    return {TRUE: {}, FALSE: {}, UNDEFINED: {}}


def _seq(h):
    return h.seq


def _ordered(d) -> list:
    return sorted(d, key=_seq)


def get_values_matching(store: IndexedTupleStore, partition: Status,
                        bound: Mapping[int, object]) -> list[TupleHandle]:
    return store.get_values_matching(partition, bound)


class TupleDatabase:
    """Stores for several predicates, with a common journal mark."""

    def __init__(self):
        self.stores: dict[str, IndexedTupleStore] = {}

    def store(self, predicate: str, arity: int) -> IndexedTupleStore:
        s = self.stores.get(predicate)
        if s is None:
            s = self.stores[predicate] = IndexedTupleStore(predicate, arity)
        elif s.arity != arity:
            raise ValueError(f"{predicate} has arity {s.arity}, not {arity}")
        return s

    def get(self, predicate: str) -> IndexedTupleStore | None:
        return self.stores.get(predicate)

    def lookup(self, predicate: str, values) -> TupleHandle | None:
        s = self.stores.get(predicate)
        return None if s is None else s.lookup(values)

    def mark(self) -> dict:
        return {p: s.mark() for p, s in self.stores.items()}

    def undo_to(self, mark: dict):
        for p, s in self.stores.items():
            s.undo_to(mark.get(p, 0))

    def total(self) -> int:
        return sum(len(s) for s in self.stores.values())
