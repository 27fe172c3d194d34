"""Color sets, token values, multisets and markings.

Everything here is immutable once built, so markings can be shared freely
between exploration workers and stored as graph nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Tuple, Union

# Token counts are 64-bit; anything larger is reported, never wrapped.
MAX_COUNT = 2**63 - 1

KINDS = ("unit", "bool", "int", "string", "product")

Value = Union[None, bool, int, str, tuple]
UNIT = ()


class KernelError(Exception):
    pass


class ColorSetMismatch(KernelError, TypeError):
    pass


class MultisetUnderflow(KernelError, ValueError):
    """Raised when removing more tokens than a multiset holds."""


class CountOverflow(KernelError, OverflowError):
    pass


@dataclass(frozen=True)
class ColorSet:
    name: str
    kind: str
    components: Tuple["ColorSet", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown color set kind {self.kind!r}")
        if self.kind == "product":
            if len(self.components) < 2:
                raise ValueError(f"product color set {self.name} needs at least two components")
        elif self.components:
            raise ValueError(f"color set {self.name} of kind {self.kind} takes no components")

    @property
    def shape(self):
        return shape_of(self)

    def __str__(self):
        if self.kind == "product":
            return f"{self.name} = product " + " * ".join(c.name for c in self.components)
        return f"{self.name} = {self.kind}"


def shape_of(cs: ColorSet):
    """Structural type of a color set: a kind name, or a tuple of component shapes."""
    if cs.kind == "product":
        return tuple(shape_of(c) for c in cs.components)
    return cs.kind


def shape_of_value(v: Value):
    if v == () and isinstance(v, tuple):
        return "unit"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "string"
    if isinstance(v, tuple):
        return tuple(shape_of_value(c) for c in v)
    raise TypeError(f"not a token value: {v!r}")


def typecheck_value(v: Value, cs: ColorSet) -> bool:
    """True iff ``v`` has the shape of ``cs``, checked recursively."""
    kind = cs.kind
    if kind == "unit":
        return isinstance(v, tuple) and v == ()
    if kind == "bool":
        return isinstance(v, bool)
    if kind == "int":
        return isinstance(v, int) and not isinstance(v, bool) and -(2**63) <= v < 2**63
    if kind == "string":
        return isinstance(v, str)
    return (
        isinstance(v, tuple)
        and len(v) == len(cs.components)
        and all(typecheck_value(x, c) for x, c in zip(v, cs.components))
    )


def value_key(v: Value):
    """Sort key implementing the total order on values of one color set.

    bool: false < true; int: numeric; string: bytewise on UTF-8;
    tuple: lexicographic by component.
    """
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    if isinstance(v, str):
        return (2, v.encode("utf-8"))
    if isinstance(v, tuple):
        if not v:
            return (4,)
        return (3, tuple(value_key(c) for c in v))
    raise TypeError(f"not a token value: {v!r}")


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, tuple):
        return "(" + ",".join(format_value(c) for c in v) + ")"
    raise TypeError(f"not a token value: {v!r}")


def encode_value(v: Value) -> bytes:
    """Injective, self-delimiting byte encoding of a value."""
    if isinstance(v, bool):
        return b"b1" if v else b"b0"
    if isinstance(v, int):
        return b"i" + str(v).encode() + b";"
    if isinstance(v, str):
        raw = v.encode("utf-8")
        return b"s" + str(len(raw)).encode() + b":" + raw
    if isinstance(v, tuple):
        if not v:
            return b"u"
        return b"t" + str(len(v)).encode() + b"(" + b"".join(encode_value(c) for c in v) + b")"
    raise TypeError(f"not a token value: {v!r}")


class Multiset:
    """Finite map from values to positive counts.

    ``colorset`` is the name of the color set the members belong to, or
    None for an untyped multiset (which combines with anything).
    """

    __slots__ = ("_counts", "colorset", "_hash", "_sorted")

    def __init__(self, entries: Union[Mapping[Value, int], Iterable[Tuple[Value, int]]] = (),
                 colorset: str | None = None):
        items = entries.items() if isinstance(entries, Mapping) else entries
        counts: dict = {}
        for v, n in items:
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise ValueError(f"invalid count {n!r} for {v!r}")
            if n == 0:
                continue
            total = counts.get(v, 0) + n
            if total > MAX_COUNT:
                raise CountOverflow(f"token count for {format_value(v)} exceeds 64 bits")
            counts[v] = total
        self._counts = counts
        self.colorset = colorset
        self._hash = None
        self._sorted = None

    @classmethod
    def of(cls, *values: Value, colorset: str | None = None) -> "Multiset":
        """Multiset with one token per argument (repeats add up)."""
        return cls(((v, 1) for v in values), colorset)

    def count(self, v: Value) -> int:
        return self._counts.get(v, 0)

    def items(self) -> Tuple[Tuple[Value, int], ...]:
        """Entries in value order."""
        if self._sorted is None:
            self._sorted = tuple(sorted(self._counts.items(), key=lambda kv: value_key(kv[0])))
        return self._sorted

    def support(self) -> Tuple[Value, ...]:
        return tuple(v for v, _ in self.items())

    def size(self) -> int:
        return sum(self._counts.values())

    def __iter__(self) -> Iterator[Value]:
        for v, n in self.items():
            for _ in range(n):
                yield v

    def __len__(self) -> int:
        return len(self._counts)

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __contains__(self, v) -> bool:
        return v in self._counts

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __add__(self, other: "Multiset") -> "Multiset":
        return ms_union(self, other)

    def __sub__(self, other: "Multiset") -> "Multiset":
        return ms_diff(self, other)

    def __le__(self, other: "Multiset") -> bool:
        return ms_leq(self, other)

    def __repr__(self) -> str:
        return f"Multiset({format_multiset(self)})"

    def encode(self) -> bytes:
        return b"{" + b"".join(encode_value(v) + str(n).encode() + b";" for v, n in self.items()) + b"}"


EMPTY = Multiset()


def format_multiset(m: Multiset) -> str:
    if not m:
        return "empty"
    return " ++ ".join(f"{n}`{format_value(v)}" for v, n in m.items())


def _common_colorset(a: Multiset, b: Multiset) -> str | None:
    if a.colorset and b.colorset and a.colorset != b.colorset:
        raise ColorSetMismatch(f"multisets over {a.colorset} and {b.colorset} cannot be combined")
    return a.colorset or b.colorset


def ms_union(a: Multiset, b: Multiset) -> Multiset:
    cs = _common_colorset(a, b)
    if not b:
        return a if a.colorset == cs else Multiset(a._counts, cs)
    if not a:
        return b if b.colorset == cs else Multiset(b._counts, cs)
    counts = dict(a._counts)
    for v, n in b._counts.items():
        total = counts.get(v, 0) + n
        if total > MAX_COUNT:
            raise CountOverflow(f"token count for {format_value(v)} exceeds 64 bits")
        counts[v] = total
    out = Multiset((), cs)
    out._counts = counts
    return out


def ms_diff(a: Multiset, b: Multiset) -> Multiset:
    cs = _common_colorset(a, b)
    counts = dict(a._counts)
    for v, n in b._counts.items():
        have = counts.get(v, 0)
        if have < n:
            raise MultisetUnderflow(
                f"cannot remove {n}`{format_value(v)}: only {have} present")
        if have == n:
            del counts[v]
        else:
            counts[v] = have - n
    out = Multiset((), cs)
    out._counts = counts
    return out


def ms_leq(a: Multiset, b: Multiset) -> bool:
    _common_colorset(a, b)
    bc = b._counts
    return all(bc.get(v, 0) >= n for v, n in a._counts.items())


@lru_cache(maxsize=None)
def _place_index(places: Tuple[str, ...]) -> Mapping[str, int]:
    return {p: i for i, p in enumerate(places)}


class Marking:
    """Total assignment of a multiset to every place of a net.

    Places are kept sorted by id so that two markings of the same net line
    up position by position.
    """

    __slots__ = ("places", "tokens", "_hash")

    def __init__(self, assignment: Mapping[str, Multiset], places: Iterable[str] | None = None):
        if places is None:
            places = assignment.keys()
        self.places = tuple(sorted(places))
        unknown = set(assignment) - set(self.places)
        if unknown:
            raise KeyError(f"marking mentions unknown places: {sorted(unknown)}")
        self.tokens = tuple(assignment.get(p, EMPTY) for p in self.places)
        self._hash = None

    @classmethod
    def from_tokens(cls, places: Tuple[str, ...], tokens: Tuple[Multiset, ...]) -> "Marking":
        m = cls.__new__(cls)
        m.places = places
        m.tokens = tokens
        m._hash = None
        return m

    def index(self, place: str) -> int:
        return _place_index(self.places)[place]

    def __getitem__(self, place: str) -> Multiset:
        return self.tokens[_place_index(self.places)[place]]

    def get(self, place: str, default=None):
        i = _place_index(self.places).get(place)
        return default if i is None else self.tokens[i]

    def items(self):
        return zip(self.places, self.tokens)

    def marked(self):
        """(place, multiset) pairs for non-empty places only."""
        return [(p, ms) for p, ms in zip(self.places, self.tokens) if ms]

    def replace(self, changes: Mapping[str, Multiset]) -> "Marking":
        idx = _place_index(self.places)
        tokens = list(self.tokens)
        for p, ms in changes.items():
            tokens[idx[p]] = ms
        return Marking.from_tokens(self.places, tuple(tokens))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Marking):
            return NotImplemented
        return self.places == other.places and self.tokens == other.tokens

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.places, self.tokens))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{p}: {format_multiset(ms)}" for p, ms in self.marked())
        return f"Marking({body})"


def canonical_key(m: Marking) -> bytes:
    """Byte string equal for two markings iff they are equal.

    Places are serialized in id order, each multiset in value order.
    """
    parts = []
    for p, ms in zip(m.places, m.tokens):
        raw = p.encode("utf-8")
        parts.append(str(len(raw)).encode() + b":" + raw + ms.encode())
    return b"".join(parts)
