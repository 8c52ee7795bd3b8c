"""Term interning with one bijective table per function symbol.

Ground terms are identified by dense integer ``TermId`` handles.  Constants
are interned by value; a function application ``f(t1..tn)`` is interned by the
tuple of its argument ids and receives a fresh id (displayed ``@k``).  Each id
records its nesting level so a ``max_nesting`` bound can be enforced when a new
application is minted.

Insertions can be tentative.  Tentative entries are visible to lookups, are
recorded on a trail, and disappear on :meth:`TermStore.rollback` unless they
were committed first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import NestingExceeded, TermStoreError
from .syntax import Constant, FunctionApp, Term

TermId = int

# Id placeholder for a term that is known not to exist in the store.
ABSENT: TermId = -1


@dataclass(frozen=True)
class TrailMark:
    position: int
    serial: int


@dataclass
class StoreStats:
    invented: int = 0
    committed: int = 0
    rolled_back: int = 0
    nesting_pruned: int = 0


@dataclass
class _Entry:
    symbol: str
    args: tuple
    committed: bool = field(default=True)


class TermStore:
    def __init__(self):
        self._constants: dict[Union[str, int], TermId] = {}
        self._values: dict[TermId, Union[str, int]] = {}
        self._forward: dict[str, dict[tuple, TermId]] = {}
        self._arity: dict[str, int] = {}
        self._reverse: dict[TermId, _Entry] = {}
        self._level: dict[TermId, int] = {}
        self._label: dict[TermId, int] = {}
        self._by_label: dict[int, TermId] = {}
        self._next_id = 0
        self._next_label = 1
        self._trail: list[TermId] = []
        self._open: list[TrailMark] = []
        self._serial = 0
        self.stats = StoreStats()

    # -- constants -------------------------------------------------------

    def intern_constant(self, value: Union[str, int]) -> TermId:
        tid = self._constants.get(value)
        if tid is None:
            tid = self._new_id()
            self._constants[value] = tid
            self._values[tid] = value
            self._level[tid] = 0
        return tid

    # -- function tables -------------------------------------------------

    def _check_arity(self, symbol: str, args: tuple) -> None:
        arity = self._arity.get(symbol)
        if arity is not None and arity != len(args):
            raise TermStoreError(f"function {symbol} has arity {arity}, got {len(args)} arguments")
        if not args:
            raise TermStoreError(f"function {symbol} needs at least one argument")

    def lookup_function(self, symbol: str, args: tuple) -> Optional[TermId]:
        self._check_arity(symbol, args)
        table = self._forward.get(symbol)
        return None if table is None else table.get(tuple(args))

    def insert_function(
        self,
        symbol: str,
        args: tuple,
        max_nesting: Optional[int] = None,
        tentative: bool = False,
    ) -> TermId:
        """Return the id of ``symbol(args)``, minting it if needed.

        Raises :class:`NestingExceeded` when the new term would be deeper than
        ``max_nesting``.  Existing entries are returned as they are, whatever
        the bound.
        """
        args = tuple(args)
        existing = self.lookup_function(symbol, args)
        if existing is not None:
            return existing
        for arg in args:
            if arg not in self._level:
                raise TermStoreError(f"argument id {arg} of {symbol} is not interned")
        level = 1 + max(self._level[arg] for arg in args)
        if max_nesting is not None and level > max_nesting:
            self.stats.nesting_pruned += 1
            raise NestingExceeded(symbol, level, max_nesting)
        tid = self._new_id()
        self._arity.setdefault(symbol, len(args))
        self._forward.setdefault(symbol, {})[args] = tid
        self._reverse[tid] = _Entry(symbol, args, committed=not tentative)
        self._level[tid] = level
        self._label[tid] = self._next_label
        self._by_label[self._next_label] = tid
        self._next_label += 1
        if tentative:
            self._trail.append(tid)
            self.stats.invented += 1
        return tid

    def intern_term(self, term: Term, max_nesting: Optional[int] = None) -> TermId:
        """Intern a ground term inside-to-outside (permanent insertions)."""
        if isinstance(term, Constant):
            return self.intern_constant(term.value)
        if isinstance(term, FunctionApp):
            args = tuple(self.intern_term(arg, max_nesting) for arg in term.args)
            return self.insert_function(term.symbol, args, max_nesting)
        raise TermStoreError(f"cannot intern non-ground term {term}")

    # -- transactions ----------------------------------------------------

    def mark_trail(self) -> TrailMark:
        self._serial += 1
        mark = TrailMark(len(self._trail), self._serial)
        self._open.append(mark)
        return mark

    def _close(self, mark: TrailMark) -> None:
        if not self._open or self._open[-1] != mark:
            raise TermStoreError("trail marks must be released in LIFO order")
        self._open.pop()

    def rollback(self, mark: TrailMark) -> None:
        """Undo every uncommitted insertion made since ``mark``."""
        self._close(mark)
        while len(self._trail) > mark.position:
            tid = self._trail.pop()
            entry = self._reverse[tid]
            if entry.committed:
                continue
            table = self._forward[entry.symbol]
            del table[entry.args]
            if not table:
                del self._forward[entry.symbol]
            del self._reverse[tid]
            del self._level[tid]
            del self._by_label[self._label.pop(tid)]
            self.stats.rolled_back += 1

    def commit(self, mark: TrailMark) -> None:
        """Make the insertions since ``mark`` permanent."""
        self._close(mark)
        self._settle(mark.position)
        del self._trail[mark.position:]

    def commit_pending(self) -> None:
        """Make every tentative insertion permanent without releasing marks.

        Used when a rule instantiation succeeds deep inside nested matching:
        the enclosing marks stay open, but their rollbacks will keep the
        committed entries.
        """
        self._settle(0)

    def _settle(self, start: int) -> None:
        for tid in self._trail[start:]:
            entry = self._reverse[tid]
            if not entry.committed:
                entry.committed = True
                self.stats.committed += 1

    @property
    def pending(self) -> int:
        return sum(1 for tid in self._trail if not self._reverse[tid].committed)

    # -- inspection ------------------------------------------------------

    def _new_id(self) -> TermId:
        tid = self._next_id
        self._next_id += 1
        return tid

    def __contains__(self, tid: TermId) -> bool:
        return tid in self._level

    def nesting_level(self, tid: TermId) -> int:
        try:
            return self._level[tid]
        except KeyError:
            raise TermStoreError(f"unknown term id {tid}") from None

    def is_function(self, tid: TermId) -> bool:
        return tid in self._reverse

    def function_of(self, tid: TermId) -> Optional[tuple[str, tuple]]:
        entry = self._reverse.get(tid)
        return None if entry is None else (entry.symbol, entry.args)

    def label(self, tid: TermId) -> int:
        return self._label[tid]

    def resolve_label(self, label: int) -> TermId:
        try:
            return self._by_label[label]
        except KeyError:
            raise TermStoreError(f"unknown id @{label}") from None

    def symbols(self) -> list[str]:
        return list(self._forward)

    def table(self, symbol: str) -> list[tuple[tuple, TermId]]:
        return list(self._forward.get(symbol, {}).items())

    def function_ids(self) -> Iterator[TermId]:
        """Function ids in creation order (inner terms precede outer ones)."""
        return iter(sorted(self._reverse))

    def to_term(self, tid: TermId) -> Term:
        if tid in self._values:
            return Constant(self._values[tid])
        entry = self._reverse.get(tid)
        if entry is None:
            raise TermStoreError(f"unknown term id {tid}")
        return FunctionApp(entry.symbol, tuple(self.to_term(arg) for arg in entry.args))

    def show(self, tid: TermId) -> str:
        """Render an id in id form: constants by value, applications as ``@k``."""
        if tid in self._values:
            return str(self._values[tid])
        return f"@{self._label[tid]}"

    def snapshot(self) -> tuple:
        """Hashable copy of the table state, for transactionality audits."""
        return (
            tuple(sorted((s, tuple(sorted(t.items()))) for s, t in self._forward.items())),
            tuple(sorted((tid, e.symbol, e.args) for tid, e in self._reverse.items())),
            tuple(sorted(self._level.items())),
        )

    def check_invariants(self) -> None:
        """Assert bijectivity, acyclicity and the nesting recurrence."""
        seen = 0
        for symbol, table in self._forward.items():
            for args, tid in table.items():
                entry = self._reverse[tid]
                assert (entry.symbol, entry.args) == (symbol, args)
                assert all(arg < tid for arg in args)
                assert self._level[tid] == 1 + max(self._level[a] for a in args)
                seen += 1
        assert seen == len(self._reverse)
        for tid in self._values:
            assert self._level[tid] == 0
