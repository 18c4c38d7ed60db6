"""Finite permutation groups and multiplication tables.

Permutations act on {0, ..., n-1} and are stored as tuples: sigma maps j to
sigma[j].  Composition is (a * b)(j) = a(b(j)).  A :class:`FiniteGroup` is an
abstract multiplication table; it is what the dual-group constructor consumes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field


def identity_perm(n: int) -> tuple:
    return tuple(range(n))


def compose(a: tuple, b: tuple) -> tuple:
    """(a compose b)(j) = a(b(j))."""
    return tuple(a[b[j]] for j in range(len(a)))


def invert(a: tuple) -> tuple:
    out = [0] * len(a)
    for j, v in enumerate(a):
        out[v] = j
    return tuple(out)


def perm_order(a: tuple) -> int:
    e = identity_perm(len(a))
    p, k = a, 1
    while p != e:
        p = compose(a, p)
        k += 1
    return k


def from_cycles(n: int, *cycles) -> tuple:
    """Permutation of {0..n-1} from disjoint cycles given in 0-indexed labels."""
    out = list(range(n))
    for cyc in cycles:
        for i in range(len(cyc)):
            out[cyc[i]] = cyc[(i + 1) % len(cyc)]
    return tuple(out)


def closure(gens: list[tuple]) -> list[tuple]:
    """Group generated by the given permutations, identity first."""
    if not gens:
        raise ValueError("need at least one generator")
    n = len(gens[0])
    els = {identity_perm(n)}
    frontier = list(els)
    while frontier:
        new = []
        for a in frontier:
            for g in gens:
                c = compose(a, g)
                if c not in els:
                    els.add(c)
                    new.append(c)
        frontier = new
    rest = sorted(els - {identity_perm(n)})
    return [identity_perm(n)] + rest


def is_closed(perms: list[tuple]) -> bool:
    s = set(perms)
    if identity_perm(len(perms[0])) not in s:
        return False
    return all(compose(a, b) in s for a in s for b in s)


def symmetric_group(n: int) -> list[tuple]:
    e = identity_perm(n)
    return [e] + sorted(set(itertools.permutations(range(n))) - {e})


def fixed_points(a: tuple) -> int:
    return sum(1 for j, v in enumerate(a) if j == v)


@dataclass
class FiniteGroup:
    """Abstract finite group: element labels plus a multiplication table.

    ``table[i, j]`` is the index of element i times element j; index 0 is the
    identity.
    """

    labels: list[str]
    table: list[list[int]]
    perms: list = field(default=None, repr=False)
    _inv: list[int] = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise ValueError("table shape does not match labels")
        if any(self.table[0][j] != j or self.table[j][0] != j for j in range(n)):
            raise ValueError("index 0 must be the identity")
        self._inv = [None] * n
        for i in range(n):
            for j in range(n):
                if self.table[i][j] == 0:
                    self._inv[i] = j
        if any(v is None for v in self._inv):
            raise ValueError("table has no inverses; not a group")

    @property
    def order(self) -> int:
        return len(self.labels)

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inv(self, i: int) -> int:
        return self._inv[i]

    def element_order(self, i: int) -> int:
        k, p = 1, i
        while p != 0:
            p = self.table[p][i]
            k += 1
        return k

    def generated_by(self, gens: list[int]) -> set[int]:
        got = {0}
        frontier = [0]
        while frontier:
            new = []
            for a in frontier:
                for g in gens:
                    c = self.table[a][g]
                    if c not in got:
                        got.add(c)
                        new.append(c)
            frontier = new
        return got

    def generates(self, gens: list[int]) -> bool:
        return len(self.generated_by(gens)) == self.order

    def subgroups(self) -> list[frozenset]:
        """All subgroups, via closures of generator pairs.

        Every subgroup of the groups handled here (order <= 24) is generated
        by at most two elements, which a rank saturation pass confirms: the
        enumeration is repeated with triples if new subgroups keep appearing.
        """
        found = {frozenset(self.generated_by([g])) for g in range(self.order)}
        found.add(frozenset({0}))
        for r in (2, 3):
            prev = len(found)
            for gens in itertools.combinations(range(1, self.order), r):
                found.add(frozenset(self.generated_by(list(gens))))
            if len(found) == prev and r >= 2:
                break
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def is_subgroup(self, subset) -> bool:
        s = set(subset)
        if 0 not in s:
            return False
        return all(self.table[a][b] in s for a in s for b in s)

    def is_normal(self, subset) -> bool:
        s = set(subset)
        if not self.is_subgroup(s):
            return False
        for g in range(self.order):
            gi = self.inv(g)
            for a in s:
                if self.table[self.table[g][a]][gi] not in s:
                    return False
        return True

    @classmethod
    def from_permutations(cls, perms: list[tuple], labels=None) -> "FiniteGroup":
        if not is_closed(perms):
            raise ValueError("permutation list is not closed under composition")
        order = [identity_perm(len(perms[0]))] + sorted(set(perms) - {identity_perm(len(perms[0]))})
        idx = {p: i for i, p in enumerate(order)}
        table = [[idx[compose(a, b)] for b in order] for a in order]
        if labels is None:
            labels = [perm_label(p) for p in order]
        return cls(labels, table, perms=order)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        table = [[(i + j) % n for j in range(n)] for i in range(n)]
        return cls([f"g{i}" for i in range(n)], table)

    @classmethod
    def dihedral(cls, m: int) -> "FiniteGroup":
        """Dihedral group of order 2m generated by two reflections a, b.

        Elements are words r^k and r^k a with r = ab of order m; labels record
        the normal form.  a is index 1, b = r a is the element with r-power 1.
        """
        n = 2 * m

        def key(k, f):  # rotation r^k, optional reflection flag
            return k % m + (m if f else 0)

        def mul(x, y):
            kx, fx = x % m, x >= m
            ky, fy = y % m, y >= m
            # (r^kx a^fx)(r^ky a^fy): a r^k = r^{-k} a
            if fx:
                return key(kx - ky, not fy)
            return key(kx + ky, fy)

        table = [[mul(i, j) for j in range(n)] for i in range(n)]
        labels = [f"r{k}" for k in range(m)] + [f"r{k}a" for k in range(m)]
        return cls(labels, table)

    def dihedral_reflections(self) -> tuple[int, int]:
        """Indices of the two standard reflection generators a and b = r a."""
        m = self.order // 2
        return m, m + 1


def perm_label(p: tuple) -> str:
    """Cycle-notation label, 1-indexed, 'e' for the identity."""
    n = len(p)
    seen = [False] * n
    parts = []
    for start in range(n):
        if seen[start] or p[start] == start:
            seen[start] = True
            continue
        cyc = [start]
        seen[start] = True
        nxt = p[start]
        while nxt != start:
            cyc.append(nxt)
            seen[nxt] = True
            nxt = p[nxt]
        parts.append("(" + " ".join(str(c + 1) for c in cyc) + ")")
    return "".join(parts) if parts else "e"


def klein_four() -> list[tuple]:
    """The normal Klein four-group inside S_4 (identity and double transpositions)."""
    e = identity_perm(4)
    return [e, (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]
