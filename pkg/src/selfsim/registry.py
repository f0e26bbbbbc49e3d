"""Builtin example groups, stored as DSL files under ``selfsim/data``."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .dsl import GroupDef, parse_group


class UnknownKey(KeyError):
    pass


@dataclass(frozen=True)
class BuiltinEntry:
    key: str
    group: GroupDef
    provenance: str
    basis: tuple[str, ...] = ()
    tiles: tuple[str, str] | None = None
    measure: tuple[str, ...] = ()
    notes: dict = field(default_factory=dict)

    @property
    def text(self) -> str:
        return _read(self.key)


# key -> (provenance, default Thurston basis, default disjoint tile suffixes,
#         generators carrying the default uniform measure, flags)
_META = {
    "odometer": (
        "adding machine; worked example for the Thurston p-map",
        ("a",), ("000", "010"), (), {"contracting": True},
    ),
    "grigorchuk": (
        "standard literature recursion (first Grigorchuk group)",
        (), ("000", "011"), (), {"contracting": True},
    ),
    "basilica": (
        "standard literature recursion (iterated monodromy group of z^2-1)",
        (), ("000", "011"), (), {"contracting": True},
    ),
    "img_z2_minus_1_16z2": (
        "iterated monodromy group of z^2-1/(16z^2), letters 1..4 shifted to 0..3",
        (), ("000", "022"), (), {"contracting": True},
    ),
    "shishikura_tan_mating": (
        "obstructed mating of two cubic polynomials, letters 1..3 shifted to 0..2",
        ("b1^-1*a1", "a1^-1*b1", "b3*a3^-1", "a3*b3^-1"), ("00", "01"), (), {"contracting": True},
    ),
    "sierpinski_carpet": (
        "group acting on the Sierpinski carpet, letters 1..8 shifted to 0..7",
        ("a*c", "c*a"), ("000", "011"), (), {"contracting": True},
    ),
    "nonliouville_fragmented": (
        "affine group on Z_2^3 with a0 fragmented into b*c; measure on a1..a7, b, c",
        (), ("00", "12"), ("a1", "a2", "a3", "a4", "a5", "a6", "a7", "b", "c"), {"contracting": True},
    ),
}

KEYS = tuple(_META)


def _read(key: str) -> str:
    return resources.files(__package__).joinpath("data", f"{key}.ssg").read_text()


def list_keys() -> list[str]:
    return list(KEYS)


@lru_cache(maxsize=None)
def get(key: str) -> BuiltinEntry:
    if key not in _META:
        raise UnknownKey(f"unknown builtin {key!r}; choose from {', '.join(KEYS)}")
    provenance, basis, tiles, measure, flags = _META[key]
    return BuiltinEntry(key, parse_group(_read(key)), provenance, basis, tiles, measure, dict(flags))
