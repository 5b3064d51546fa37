"""Observation/action space descriptions and value validation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

DISCRETE = "discrete"
BOX = "box"


@dataclass(frozen=True)
class SpaceSpec:
    """Description of one agent's observation or action space.

    Discrete spaces carry ``n`` (values are integers in [0, n)); box spaces
    carry per-component ``low``/``high`` bounds over float vectors.
    """

    kind: str
    n: int | None = None
    low: tuple[float, ...] | None = None
    high: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == DISCRETE:
            if self.n is None or self.n < 1:
                raise ValueError(f"discrete space needs n >= 1, got {self.n}")
            if self.low is not None or self.high is not None:
                raise ValueError("discrete space must not carry bounds")
        elif self.kind == BOX:
            if self.n is not None:
                raise ValueError("box space must not carry n")
            if not self.low or not self.high:
                raise ValueError("box space needs non-empty bounds")
            if len(self.low) != len(self.high):
                raise ValueError("low/high lengths differ")
            for lo, hi in zip(self.low, self.high):
                if not (lo <= hi):
                    raise ValueError(f"bound low={lo} > high={hi}")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @staticmethod
    def discrete(n: int) -> "SpaceSpec":
        return SpaceSpec(kind=DISCRETE, n=n)

    @staticmethod
    def box(low, high) -> "SpaceSpec":
        return SpaceSpec(
            kind=BOX,
            low=tuple(float(x) for x in low),
            high=tuple(float(x) for x in high),
        )

    @property
    def dim(self) -> int:
        """Flat input width: n for one-hot discrete, vector length for box."""
        return self.n if self.kind == DISCRETE else len(self.low)

    def as_dict(self) -> dict:
        if self.kind == DISCRETE:
            return {"kind": DISCRETE, "n": self.n}
        return {"kind": BOX, "low": list(self.low), "high": list(self.high)}

    @staticmethod
    def from_dict(d: dict) -> "SpaceSpec":
        if d.get("kind") == DISCRETE:
            return SpaceSpec.discrete(int(d["n"]))
        if d.get("kind") == BOX:
            return SpaceSpec.box(d["low"], d["high"])
        raise ValueError(f"unknown space kind {d.get('kind')!r}")


def validate(space: SpaceSpec, value: Any) -> bool:
    """True iff ``value`` conforms to ``space``."""
    if space.kind == DISCRETE:
        if isinstance(value, bool):
            return False
        if not isinstance(value, (int, np.integer)):
            return False
        return 0 <= int(value) < space.n
    try:
        seq = [float(x) for x in value]
    except (TypeError, ValueError):
        return False
    if len(seq) != len(space.low):
        return False
    return all(lo <= x <= hi for x, lo, hi in zip(seq, space.low, space.high))
