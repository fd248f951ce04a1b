"""Set partitions of {1..n} and the moment/cumulant combinatorics built on them.

Partitions are produced from restricted growth strings (RGS).  The canonical
order puts partitions with more blocks first and breaks ties by RGS
lexicographic order; inside a partition, blocks are listed largest first and
then by their smallest index.  For n=3 this yields::

    {1}{2}{3}  {1 2}{3}  {1 3}{2}  {2 3}{1}  {1 2 3}
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

from .errors import ConfigurationError, IncompleteInputError

MAX_ORDER = 10


@dataclass(frozen=True)
class Partition:
    """One partition of {1..n}; ``blocks`` hold 1-based sorted indices."""

    blocks: tuple[tuple[int, ...], ...]
    conj_counts: tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def weight(self) -> int:
        """(-1)^(d-1) (d-1)!"""
        return (-1) ** (self.d - 1) * math.factorial(self.d - 1)

    def signatures(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.sizes, self.conj_counts))

    def __str__(self):
        return "".join("{" + " ".join(map(str, b)) + "}" for b in self.blocks)


@dataclass(frozen=True)
class PartitionSet:
    n: int
    q: int
    partitions: tuple[Partition, ...] = field(repr=False)

    def __len__(self):
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)

    def __getitem__(self, i):
        return self.partitions[i]


def restricted_growth_strings(n: int):
    """Yield all RGS of length n in lexicographic order (first entry is 0)."""
    a = [0] * n

    def rec(i, top):
        if i == n:
            yield tuple(a)
            return
        for v in range(top + 2):
            a[i] = v
            yield from rec(i + 1, max(top, v))

    if n == 0:
        return
    a[0] = 0
    yield from rec(1, 0)


def _blocks_from_rgs(rgs) -> tuple[tuple[int, ...], ...]:
    groups: dict[int, list[int]] = {}
    for idx, label in enumerate(rgs, start=1):
        groups.setdefault(label, []).append(idx)
    blocks = [tuple(g) for g in groups.values()]
    blocks.sort(key=lambda b: (-len(b), b))
    return tuple(blocks)


def conjugations_in(block: Sequence[int], q: int) -> int:
    """Number of indices <= q in ``block`` (the first q factors are conjugated)."""
    return sum(1 for i in block if i <= q)


def enumerate_partitions(n: int, q: int = 0, even_only: bool = False) -> PartitionSet:
    """All set partitions of {1..n} in canonical order.

    ``even_only`` drops partitions that contain an odd-sized block; it is an
    optimization for signal classes whose odd-order moments vanish.
    """
    if not isinstance(n, int) or not 1 <= n <= MAX_ORDER:
        raise ConfigurationError(f"partition order n={n!r} outside [1, {MAX_ORDER}]")
    if not 0 <= q <= n:
        raise ConfigurationError(f"conjugation count q={q} outside [0, {n}]")
    keyed = []
    for rgs in restricted_growth_strings(n):
        blocks = _blocks_from_rgs(rgs)
        if even_only and any(len(b) % 2 for b in blocks):
            continue
        keyed.append((-len(blocks), rgs, blocks))
    keyed.sort(key=lambda t: (t[0], t[1]))
    parts = tuple(
        Partition(blocks, tuple(conjugations_in(b, q) for b in blocks))
        for _, _, blocks in keyed
    )
    return PartitionSet(n=n, q=q, partitions=parts)


def bell_number(n: int) -> int:
    """Bell numbers via the Bell triangle."""
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def block_signature(block: Sequence[int], q: int, taus: Sequence[float] | None = None) -> tuple:
    """Key identifying the lag product of one block.

    Without delays this is ``(n_i, q_i)``.  With delays the sorted delays of the
    conjugated and unconjugated factors are appended, since two blocks with the
    same counts and delay multisets form the same lag product.
    """
    n_i = len(block)
    q_i = conjugations_in(block, q)
    if taus is None:
        return (n_i, q_i)
    conj = tuple(sorted(taus[i - 1] for i in block if i <= q))
    plain = tuple(sorted(taus[i - 1] for i in block if i > q))
    return (n_i, q_i, conj, plain)


def moment_to_cumulant(
    moments: Mapping[Hashable, complex] | Callable[[tuple[int, ...]], complex],
    n: int,
    q: int = 0,
    taus: Sequence[float] | None = None,
    by: str = "signature",
    even_only: bool = False,
) -> complex:
    """Sum over D_n of (-1)^(d-1) (d-1)! times the product of block moments.

    ``moments`` is looked up per block either by :func:`block_signature`
    (``by="signature"``) or by the block's index tuple (``by="block"``); a
    callable receiving the block tuple is also accepted.
    """
    if by not in ("signature", "block"):
        raise ConfigurationError(f"unknown lookup mode {by!r}")
    total = 0j
    for part in enumerate_partitions(n, q, even_only=even_only):
        prod = 1 + 0j
        for block in part.blocks:
            if callable(moments):
                val = moments(block)
            else:
                key = block if by == "block" else block_signature(block, q, taus)
                try:
                    val = moments[key]
                except KeyError:
                    raise IncompleteInputError(
                        f"no moment supplied for block {set(block)} (key {key!r})"
                    ) from None
            prod *= val
        total += part.weight * prod
    return complex(total)


def frequency_sum_tuples(
    candidate_freqs_per_block: Sequence[Sequence[float]],
    beta: float,
    tol: float = 0.0,
) -> list[tuple[float, ...]]:
    """Every choice of one frequency per block whose sum is within ``tol`` of ``beta``.

    Exhaustive: all combinations of the leading blocks are walked and the last
    block is matched by binary search over its sorted candidates.
    """
    if tol < 0:
        raise ConfigurationError("tol must be non-negative")
    lists = [list(c) for c in candidate_freqs_per_block]
    if not lists or any(len(c) == 0 for c in lists):
        return []
    head, last = lists[:-1], lists[-1]
    order = sorted(range(len(last)), key=last.__getitem__)
    last_sorted = [last[i] for i in order]
    out = []
    for combo in itertools.product(*head):
        need = beta - math.fsum(combo)
        lo = bisect.bisect_left(last_sorted, need - tol - 1e-12 * (1 + abs(need)))
        hits = []
        for j in range(lo, len(last_sorted)):
            v = last_sorted[j]
            if v > need + tol + 1e-12 * (1 + abs(need)):
                break
            if abs(math.fsum(combo + (v,)) - beta) <= tol:
                hits.append(order[j])
        # keep the caller's candidate order within the last block
        for j in sorted(hits):
            out.append(tuple(combo) + (last[j],))
    return out
