"""Mixing finite-type constraints given by forbidden-word lists.

Only constraints whose forbidden words have length at most 2 are accepted:
these are exactly the memory-one constraints the rest of the pipeline
handles, and they are fully described by a boolean adjacency matrix over
the alphabet (entry (x, y) true iff the 2-word xy is allowed).  Symbols are
single characters so that words are plain strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import Degenerate, EmptyAlphabet, ForeignSymbol, NotMixing, OrderTooHigh


def primitivity_exponent(adjacency: np.ndarray) -> int | None:
    """Smallest e with all entries of A^e positive, or None.

    The search stops at the Wielandt bound (n-1)^2 + 1; a primitive matrix
    always has an exponent at or below it.
    """
    a = np.asarray(adjacency, dtype=bool)
    n = a.shape[0]
    bound = (n - 1) ** 2 + 1
    power = a.copy()
    for e in range(1, bound + 1):
        if power.all():
            return e
        power = (power.astype(np.int64) @ a.astype(np.int64)) > 0
    return None


@dataclass(frozen=True, eq=False)
class Constraint:
    alphabet: tuple[str, ...]
    forbidden: tuple[str, ...]
    adjacency: np.ndarray
    order_bound: int
    mixing: bool
    allowed_pairs: tuple[str, ...]
    primitivity_e: int | None

    def index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise ForeignSymbol(f"symbol {symbol!r} not in alphabet") from None

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)

    @property
    def n_pairs(self) -> int:
        return len(self.allowed_pairs)

    def pair_index(self, pair: str) -> int:
        return self.allowed_pairs.index(pair)

    def is_allowed(self, word: str) -> bool:
        if any(s not in self.alphabet for s in word):
            return False
        live = _live_symbols(self.alphabet, self.forbidden)
        if any(s not in live for s in word):
            return False
        idx = [self.index(s) for s in word]
        return all(self.adjacency[i, j] for i, j in zip(idx, idx[1:]))


def _live_symbols(alphabet: Sequence[str], forbidden: Sequence[str]) -> set[str]:
    dead = {w for w in forbidden if len(w) == 1}
    return {s for s in alphabet if s not in dead}


def build_constraint(alphabet: Sequence[str], forbidden: Sequence[str]) -> Constraint:
    alphabet = tuple(alphabet)
    forbidden = tuple(forbidden)
    if not alphabet:
        raise EmptyAlphabet("alphabet must be non-empty")
    if len(set(alphabet)) != len(alphabet):
        raise ValueError("alphabet symbols must be distinct")
    if any(len(s) != 1 for s in alphabet):
        raise ValueError("symbols must be single characters")
    for w in forbidden:
        if len(w) < 1:
            raise ValueError("forbidden words must have length >= 1")
        for s in w:
            if s not in alphabet:
                raise ForeignSymbol(f"forbidden word {w!r} uses unknown symbol {s!r}")
    max_len = max((len(w) for w in forbidden), default=1)
    if max_len > 2:
        raise OrderTooHigh(
            f"forbidden list has maximal length {max_len} > 2; constraints "
            "needing more than one symbol of memory are out of scope"
        )

    n = len(alphabet)
    live = _live_symbols(alphabet, forbidden)
    blocked_pairs = {w for w in forbidden if len(w) == 2}
    adjacency = np.zeros((n, n), dtype=bool)
    for i, x in enumerate(alphabet):
        for j, y in enumerate(alphabet):
            adjacency[i, j] = x in live and y in live and (x + y) not in blocked_pairs

    # trim symbols with no successor or no predecessor; if nothing is left
    # there is no bi-infinite sequence at all
    keep = np.ones(n, dtype=bool)
    while True:
        sub = adjacency[np.ix_(keep, keep)]
        rows = sub.any(axis=1)
        cols = sub.any(axis=0)
        alive = rows & cols
        if alive.all():
            break
        idx = np.where(keep)[0]
        keep[idx[~alive]] = False
        if not keep.any():
            raise Degenerate("no bi-infinite sequence satisfies the forbidden list")

    allowed_pairs = tuple(
        x + y for i, x in enumerate(alphabet) for j, y in enumerate(alphabet) if adjacency[i, j]
    )
    e = primitivity_exponent(adjacency)
    order_bound = max_len - 1
    return Constraint(
        alphabet=alphabet,
        forbidden=forbidden,
        adjacency=adjacency,
        order_bound=order_bound,
        mixing=e is not None,
        allowed_pairs=allowed_pairs,
        primitivity_e=e,
    )


def rll_constraint(d: int, k: int | float | None = None) -> Constraint:
    """Run-length constraint: runs of zeros between ones have length in [d, k].

    k = None (or inf) means no upper bound.  Forbidden words are
    1 0^l 1 for l < d, plus the (k+1)-zeros word when k is finite.
    """
    if k is None:
        k = float("inf")
    if d < 0:
        raise ValueError("d must be >= 0")
    if not d < k:
        raise NotMixing(f"(d={d}, k={k}) is not mixing; need d < k")
    forbidden = ["1" + "0" * l + "1" for l in range(d)]
    if k != float("inf"):
        forbidden.append("0" * (int(k) + 1))
    return build_constraint(["0", "1"], forbidden)


def enumerate_allowed(c: Constraint, n: int) -> list[str]:
    """All allowed words of length n, in lexicographic alphabet order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    live = _live_symbols(c.alphabet, c.forbidden)
    words: list[str] = []

    def extend(prefix: str, last_idx: int, remaining: int):
        if remaining == 0:
            words.append(prefix)
            return
        for j, y in enumerate(c.alphabet):
            if y not in live:
                continue
            if last_idx >= 0 and not c.adjacency[last_idx, j]:
                continue
            extend(prefix + y, j, remaining - 1)

    extend("", -1, n)
    return words
