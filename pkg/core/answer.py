"""Result value shared by the oracle and the solver"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional, Union

Value = Union[int, Fraction]


@dataclass(frozen=True)
class Answer:
    """A minimum cardinality or density; value None means infeasible"""

    value: Optional[Value]
    certificate: Dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def infeasible(cls, **certificate: Any) -> "Answer":
        return cls(None, dict(certificate))

    @property
    def is_feasible(self) -> bool:
        return self.value is not None

    def render(self) -> str:
        if self.value is None:
            return "infeasible"
        if isinstance(self.value, Fraction):
            return format_fraction(self.value)
        return str(self.value)


def format_fraction(q: Fraction) -> str:
    """Always `a/b` in lowest terms, `a/1` included"""
    return f"{q.numerator}/{q.denominator}"
