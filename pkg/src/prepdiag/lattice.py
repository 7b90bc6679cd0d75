"""Semi-partitioned type lattice.

Types live in a forest whose roots are the partitions (physical, temporal,
abstract_set, information).  Two types are compatible exactly when they
hang under the same root; no finer relation is needed, and the lattice
makes no claim about how many views exist.
"""

from __future__ import annotations

from .errors import KbError, UnknownTypeError

BUILTIN_PARTITIONS = ("physical", "temporal", "abstract_set", "information")


class TypeLattice:
    def __init__(self) -> None:
        self._parent: dict[str, str | None] = {}
        self._root: dict[str, str] = {}

    @property
    def partitions(self) -> list[str]:
        return [t for t, p in self._parent.items() if p is None]

    @property
    def types(self) -> list[str]:
        return list(self._parent)

    def add_partition(self, name: str) -> None:
        if name in self._parent:
            raise KbError(f"type {name!r} already registered")
        self._parent[name] = None
        self._root[name] = name

    def add_subtype(self, child: str, parent: str) -> None:
        if parent not in self._parent:
            raise KbError(f"unknown parent type {parent!r}")
        if child in self._parent:
            raise KbError(f"type {child!r} already registered")
        self._parent[child] = parent
        self._root[child] = self._root[parent]

    def root(self, name: str) -> str:
        try:
            return self._root[name]
        except KeyError:
            raise UnknownTypeError(f"unknown type {name!r}") from None

    def knows(self, name: str) -> bool:
        return name in self._parent

    def compatible(self, t1: str, t2: str) -> bool:
        return self.root(t1) == self.root(t2)


def builtin_lattice() -> TypeLattice:
    lat = TypeLattice()
    for p in BUILTIN_PARTITIONS:
        lat.add_partition(p)
    lat.add_subtype("human", "physical")
    return lat
