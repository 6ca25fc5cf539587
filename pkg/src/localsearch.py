"""Tour improvement for MMAS on the TSP: 2-opt, 2.5-opt and 3-opt.

All three searches use neighbour lists, don't-look bits and
first-improvement acceptance on an array tour with a position index.

The move sets are nested and so are the searches: ``two_half_opt`` starts
from the ``two_opt`` local optimum and adds node insertion, ``three_opt``
starts from the ``two_half_opt`` optimum and adds segment exchange (the
pure 3-opt reconnection that keeps both segments' orientation). A search
only stops after a full sweep with every don't-look bit cleared applies no
move, so its result is a local optimum of the neighbourhood it searched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from src.tsplib import TspInstance, cycle_length


@dataclass(frozen=True)
class Tour:
    """Closed tour over 0-based cities and its length in instance units."""

    order: tuple[int, ...]
    length: int

    @classmethod
    def from_order(cls, instance: TspInstance, order: Sequence[int]) -> "Tour":
        return cls(tuple(int(c) for c in order), cycle_length(instance.rows, order))


class _Work:
    """Mutable tour with positions, successor/predecessor lookup and bits."""

    def __init__(self, order: Sequence[int], rows: list[list[int]]) -> None:
        self.tour = list(order)
        self.n = len(self.tour)
        self.rows = rows
        self.pos = [0] * self.n
        self.set_pos()
        self.active = [True] * self.n

    def set_pos(self) -> None:
        for i, city in enumerate(self.tour):
            self.pos[city] = i

    def next(self, v: int) -> int:
        return self.tour[(self.pos[v] + 1) % self.n]

    def prev(self, v: int) -> int:
        return self.tour[(self.pos[v] - 1) % self.n]

    def activate(self, *cities: int) -> None:
        for city in cities:
            self.active[city] = True

    def reverse(self, first: int, last: int) -> None:
        """Reverse the tour path from city ``first`` forward to city ``last``."""
        i, j = self.pos[first], self.pos[last]
        if i <= j:
            self.tour[i:j + 1] = self.tour[i:j + 1][::-1]
        else:
            # The path wraps; reversing its complement gives the same cycle.
            self.tour[j + 1:i] = self.tour[j + 1:i][::-1]
        self.set_pos()


Move = Callable[[_Work, int, list[list[int]]], bool]


# ---------------------------------------------------------------------------
# Moves (each returns True after applying one improving move around city a)
# ---------------------------------------------------------------------------


def _two_opt_move(work: _Work, a: int, neighbors: list[list[int]]) -> bool:
    d = work.rows
    for c in neighbors[a]:
        # successor direction: drop (a, a+) and (c, c+), add (a, c) and (a+, c+)
        b, e = work.next(a), work.next(c)
        if c != b and e != a:
            delta = d[a][c] + d[b][e] - d[a][b] - d[c][e]
            if delta < 0:
                work.activate(a, b, c, e)
                work.reverse(b, c)
                return True
        # predecessor direction: drop (a-, a) and (c-, c), add (a, c) and (a-, c-)
        b, e = work.prev(a), work.prev(c)
        if c != b and e != a:
            delta = d[a][c] + d[b][e] - d[a][b] - d[c][e]
            if delta < 0:
                work.activate(a, b, c, e)
                work.reverse(c, b)
                return True
    return False


def _insertion_move(work: _Work, a: int, neighbors: list[list[int]]) -> bool:
    d = work.rows
    for c in neighbors[a]:
        p, s = work.prev(c), work.next(c)
        removal = d[p][s] - d[p][c] - d[c][s]
        # place c between a and its successor, then between a and its predecessor
        for b in (work.next(a), work.prev(a)):
            if b == c:
                continue
            delta = removal + d[a][c] + d[c][b] - d[a][b]
            if delta < 0:
                work.activate(a, b, c, p, s)
                work.tour.remove(c)
                anchor = work.tour.index(a)
                at = anchor + 1 if b == work.tour[(anchor + 1) % len(work.tour)] else anchor
                work.tour.insert(at, c)
                work.set_pos()
                return True
    return False


def _segment_exchange_move(work: _Work, a: int, neighbors: list[list[int]]) -> bool:
    """Swap the adjacent segments b..c and d..e following a.

    Tour a b..c d..e f becomes a d..e b..c f; new edges (a, d), (e, b), (c, f).
    Candidates: d in N(a), e in N(b).
    """
    dist = work.rows
    n = work.n
    base = work.pos[a]
    b = work.next(a)

    def offset(city: int) -> int:
        return (work.pos[city] - base) % n

    for d in neighbors[a]:
        off_d = offset(d)
        if off_d < 2:
            continue
        c = work.prev(d)
        for e in neighbors[b]:
            off_e = offset(e)
            if off_e < off_d or off_e > n - 2:
                continue
            f = work.next(e)
            delta = (
                dist[a][d] + dist[e][b] + dist[c][f]
                - dist[a][b] - dist[c][d] - dist[e][f]
            )
            if delta < 0:
                work.activate(a, b, c, d, e, f)
                rotated = work.tour[base:] + work.tour[:base]
                off_c = off_d - 1
                work.tour = (
                    [a]
                    + rotated[off_d:off_e + 1]
                    + rotated[1:off_c + 1]
                    + rotated[off_e + 1:]
                )
                work.set_pos()
                return True
    return False


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _search(order: Sequence[int], instance: TspInstance, neighbors: list[list[int]],
            moves: Sequence[Move]) -> list[int]:
    work = _Work(order, instance.rows)
    while True:
        applied = False
        progress = True
        while progress:
            progress = False
            for a in list(work.tour):
                if not work.active[a]:
                    continue
                if any(move(work, a, neighbors) for move in moves):
                    progress = applied = True
                else:
                    work.active[a] = False
        if not applied:
            return work.tour
        # verification sweep: bits reset, stop only when nothing applies
        work.active = [True] * work.n


def _checked_order(tour: Tour | Sequence[int]) -> list[int]:
    return list(tour.order if isinstance(tour, Tour) else tour)


def two_opt(tour: Tour | Sequence[int], instance: TspInstance,
            neighbors: list[list[int]]) -> Tour:
    """2-opt local search restricted to neighbour lists."""
    order = _search(_checked_order(tour), instance, neighbors, [_two_opt_move])
    return Tour.from_order(instance, order)


def two_half_opt(tour: Tour | Sequence[int], instance: TspInstance,
                 neighbors: list[list[int]]) -> Tour:
    """2-opt followed by 2-opt plus single-node insertion."""
    start = two_opt(tour, instance, neighbors)
    order = _search(start.order, instance, neighbors, [_two_opt_move, _insertion_move])
    return Tour.from_order(instance, order)


def three_opt(tour: Tour | Sequence[int], instance: TspInstance,
              neighbors: list[list[int]]) -> Tour:
    """2.5-opt followed by 2-opt, insertion and segment exchange."""
    start = two_half_opt(tour, instance, neighbors)
    order = _search(
        start.order, instance, neighbors,
        [_two_opt_move, _insertion_move, _segment_exchange_move],
    )
    return Tour.from_order(instance, order)


LOCAL_SEARCHES: dict[str, Callable[[Tour | Sequence[int], TspInstance, list[list[int]]], Tour]] = {
    "2opt": two_opt,
    "2.5opt": two_half_opt,
    "3opt": three_opt,
}
