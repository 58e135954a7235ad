"""Keyed, counter-style random draws.

Every random decision in the simulator is a pure function of the master
seed and a structured integer key: a purpose code plus context values
such as day, hour, and agent id. There are no sequential streams, so
results cannot depend on evaluation order, chunking, or worker count.

The mixing function is the splitmix64 finalizer, applied once per key
part. Scalar draws run on Python integers, vectorized draws on uint64
arrays; both produce bit-identical values for the same key.
"""

from __future__ import annotations

import math
from enum import IntEnum

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


class Purpose(IntEnum):
    """First key part of every draw; keeps key spaces disjoint."""

    INITIAL_CASE = 1
    INFECTION = 2
    VISIT = 3
    VISIT_ORDER = 4
    COURSE_BRANCH = 5
    COURSE_EXPOSED_DAYS = 6
    COURSE_SYMPTOMATIC_DAYS = 7
    COURSE_OUTCOME = 8

    COORDINATE = 20
    AGE = 21
    SEX = 22
    BODY = 23
    CHILD_HOME = 24
    WORKPLACE = 25
    VACCINATION = 26
    STATUS_NOISE = 27

    SURVEY_WEIGHT = 40
    SURVEY_SYMPTOM_DAYS = 41
    SURVEY_OMIT = 42


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


class KeyedRng:
    """Stateless uniform generator addressed by nonnegative integer keys."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._base = _mix(self.seed ^ _GOLDEN)

    def bits(self, *parts: int) -> int:
        """64 mixed bits for the key. Parts must be nonnegative ints."""
        h = self._base
        for p in parts:
            h = _mix(h ^ ((int(p) * _GOLDEN) & _MASK))
        return h

    def draw(self, *parts: int) -> float:
        """Uniform float in [0, 1)."""
        return (self.bits(*parts) >> 11) * _INV53

    def draw_int(self, lo: int, hi: int, *parts: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + int(self.draw(*parts) * (hi - lo + 1))

    def draw_array(self, *parts) -> np.ndarray:
        """Vectorized draw. Any part may be an array; parts broadcast.

        Returns float64 uniforms in [0, 1) with the same broadcast shape.
        A key made of scalars yields a 0-d array equal to draw(*parts).
        """
        with np.errstate(over="ignore"):
            h = np.uint64(self._base)
            for p in parts:
                pa = np.asarray(p, dtype=np.uint64)
                h = _mix_array(h ^ (pa * np.uint64(_GOLDEN)))
        return (h >> np.uint64(11)).astype(np.float64) * _INV53

    def draw_int_array(self, lo: int, hi: int, *parts) -> np.ndarray:
        """Vectorized uniform integers in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        u = self.draw_array(*parts)
        # truncate the nonnegative product before shifting, so negative
        # lo still floors instead of rounding toward zero
        return lo + (u * (hi - lo + 1)).astype(np.int64)

    def draw_normal_array(self, mean: float, sd: float, *parts) -> np.ndarray:
        """Vectorized normal draws via Box-Muller on two keyed uniforms.

        The key is extended with a trailing 0/1 axis part, so callers
        must not use keys that differ only in a trailing 0 or 1.
        """
        u1 = self.draw_array(*parts, 0)
        u2 = self.draw_array(*parts, 1)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        return mean + sd * r * np.cos(2.0 * math.pi * u2)
