# src/fractalmeter/engine/schedule.py

"""
Scale schedules 0 = m_0 <= m_1 <= ... <= m_k.

The hyperdyadic schedule m_j = floor((1 + eps)**j) has gaps growing
geometrically; duplicates at small j are allowed.
"""

from dataclasses import dataclass
from math import floor
from typing import Final

from .model import ScheduleError


DEFAULT_T: Final[int] = 1


@dataclass(frozen=True, slots=True)
class ScaleSchedule:
    """
    Notes:
    - `values` starts at 0 and is non-decreasing.
    - `T` is the constant in the linearization condition d_j <= m_j + T.
    - `eps` is None for hand-written schedules.
    """

    values: tuple[int, ...]
    eps: float | None = None
    T: int = DEFAULT_T

    def __post_init__(self) -> None:
        if not self.values or self.values[0] != 0:
            raise ScheduleError("a schedule must start at level 0")
        for a, b in zip(self.values, self.values[1:]):
            if b < a:
                raise ScheduleError(f"schedule must be non-decreasing: {self.values}")
        if self.T < 1:
            raise ScheduleError("linearization constant T must be >= 1")

    # -----------------------------------------------------------------
    # Constructors
    # -----------------------------------------------------------------

    @classmethod
    def hyperdyadic(cls, eps: float, max_level: int, T: int = DEFAULT_T) -> "ScaleSchedule":
        """m_0 = 0, m_j = floor((1 + eps)**j) for as long as m_j <= max_level."""
        if eps <= 0:
            raise ScheduleError("eps must be positive")
        values = [0]
        j = 1
        while True:
            m = floor((1.0 + eps) ** j)
            if m > max_level:
                break
            values.append(m)
            j += 1
        return cls(values=tuple(values), eps=eps, T=T)

    @classmethod
    def from_values(cls, values, T: int = DEFAULT_T) -> "ScaleSchedule":
        return cls(values=tuple(int(v) for v in values), eps=None, T=T)

    # -----------------------------------------------------------------
    # Derived quantities
    # -----------------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.values) - 1

    @property
    def last(self) -> int:
        return self.values[-1]

    @property
    def gaps(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.values, self.values[1:]))

    @property
    def linearization_admissible(self) -> bool:
        return all(d <= m + self.T for m, d in zip(self.values, self.gaps))

    @property
    def vantage_j1(self) -> int:
        """Smallest j1 with m_j + j <= m_{j+1} for every j1 <= j < k."""
        j1 = self.k
        for j in range(self.k - 1, -1, -1):
            if self.values[j] + j <= self.values[j + 1]:
                j1 = j
            else:
                break
        return j1

    def vantage_admissible(self, j0: int) -> bool:
        return j0 >= self.vantage_j1

    def default_j0(self) -> int:
        """Start of the upper half of the schedule."""
        return (self.k + 1) // 2

    def require_within(self, depth: int) -> None:
        if self.last > depth:
            raise ScheduleError(f"schedule reaches level {self.last} beyond depth {depth}")

    def require_linearizable(self) -> None:
        if not self.linearization_admissible:
            raise ScheduleError(f"gaps {self.gaps} violate d_j <= m_j + {self.T}")
