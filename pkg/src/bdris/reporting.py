"""Solver diagnostics shared by every optimizer in the package."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class SolveReport:
    """What a solver did and how well.

    ``objective`` is the achieved value of tr(Omega^H E_b Omega M),
    ``bound`` the Von Neumann upper bound for the instance, ``cost_trace``
    the accepted objective values in order, ``constraint_values`` named
    scalars (Eve trace, violations, step counts) and ``violation_trace``
    the equality-violation history of penalty solvers.
    """

    objective: float
    bound: float
    iterations: int
    cost_trace: list = field(default_factory=list)
    converged: bool = True
    constraint_values: dict = field(default_factory=dict)
    violation_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "bound": self.bound,
            "iterations": self.iterations,
            "cost_trace": list(self.cost_trace),
            "converged": self.converged,
            "constraint_values": dict(self.constraint_values),
            "violation_trace": list(self.violation_trace),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)
