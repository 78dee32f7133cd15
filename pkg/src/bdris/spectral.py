"""Unconstrained designs: closed-form unitary optimum and symmetric-unitary ascent.

Without a leakage constraint the best unconstrained unitary response is
closed form: align the eigenbases of the receiver form E_b and the source
Gram matrix M, which attains the Von Neumann trace bound sum_i d_E,i d_M,i.
The reciprocal (symmetric unitary) case has no closed form; it is solved
by manifold ascent over U with Omega = U U^T, initialized at the
symmetric-unitary matrix closest to the unconstrained optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .kernels import expm_skew, hermitian_eig, takagi
from .model import (
    ARCH_NONRECIPROCAL,
    ARCH_RECIPROCAL,
    QuadraticForms,
    RisMatrix,
    quad_objective,
)
from .reporting import SolveReport

__all__ = [
    "AoSettings",
    "solve_nonreciprocal",
    "von_neumann_bound",
    "solve_reciprocal_ao",
]

# Step sizes below this are treated as a stalled line search: the current
# iterate is a numerical critical point and the run counts as converged.
_MU_FLOOR = 1e-14


@dataclass
class AoSettings:
    """Knobs of the alternating ascent for the reciprocal architecture."""

    epsilon_conv: float = 1e-8   # relative cost improvement that counts as done
    mu0: float = 1e-2            # initial retraction step
    mu_up: float = 2.0           # step growth on accepted moves
    mu_down: float = 0.5         # step shrink on rejected moves
    max_iters: int = 5000

    def __post_init__(self):
        if min(self.epsilon_conv, self.mu0, self.mu_up, self.mu_down) <= 0:
            raise ValueError("all AoSettings values must be positive")
        if not (self.mu_down < 1.0 < self.mu_up):
            raise ValueError("need mu_down < 1 < mu_up")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def _check_forms(forms: QuadraticForms) -> None:
    if forms.e_b.shape != forms.m.shape or forms.e_b.shape[0] != forms.e_b.shape[1]:
        raise DimensionError("e_b and m must be square matrices of equal size")


def von_neumann_bound(forms: QuadraticForms, target: str = "bob") -> float:
    """Upper bound sum_i d_E,i d_M,i on tr(Omega^H E Omega M) over unitaries.

    Both spectra are sorted descending; by Von Neumann's trace inequality
    no unitary response can exceed this value.
    """
    _check_forms(forms)
    e = forms.e_b if target == "bob" else None
    if target == "eve":
        if forms.e_e is None:
            raise ValueError("eavesdropper forms are absent")
        e = forms.e_e
    elif target != "bob":
        raise ValueError(f"target must be 'bob' or 'eve', got {target!r}")
    d_e = hermitian_eig(e).values
    d_m = hermitian_eig(forms.m).values
    return float(d_e @ d_m)


def solve_nonreciprocal(forms: QuadraticForms) -> tuple[RisMatrix, SolveReport]:
    """Closed-form optimal unitary response Omega = V_E V_M^H.

    V_E and V_M hold the eigenvectors of E_b and M sorted by descending
    eigenvalue; the achieved objective equals the Von Neumann bound, so
    the returned report always has objective == bound (up to rounding).
    """
    _check_forms(forms)
    eig_e = hermitian_eig(forms.e_b)
    eig_m = hermitian_eig(forms.m)
    omega = eig_e.vectors @ eig_m.vectors.conj().T
    objective = quad_objective(omega, forms.e_b, forms.m)
    bound = float(eig_e.values @ eig_m.values)
    report = SolveReport(
        objective=objective,
        bound=bound,
        iterations=0,
        cost_trace=[objective],
        converged=True,
    )
    return RisMatrix(omega, ARCH_NONRECIPROCAL), report


def _ao_cost(u: np.ndarray, e_b: np.ndarray, m: np.ndarray) -> float:
    omega = u @ u.T
    return quad_objective(omega, e_b, m)


def solve_reciprocal_ao(
    forms: QuadraticForms, settings: AoSettings | None = None
) -> tuple[RisMatrix, SolveReport]:
    """Symmetric-unitary design Omega = U U^T by retraction ascent.

    Starts from the symmetric-unitary matrix nearest the unconstrained
    optimum: U0 from the Takagi factorization of V_E V_M^H + V_M^* V_E^T.
    Each iteration forms the ascent matrix Z = E_b U U^T M U^*, projects
    it to the skew step S = (U^H Z - Z^H U)/2 and retracts along
    U exp(mu S).  Steps are accepted only on cost improvement; mu grows by
    mu_up on acceptance and shrinks by mu_down on rejection.  Stops when
    an accepted relative improvement falls below epsilon_conv or the step
    stalls at the floor; hitting max_iters flags converged=False.
    """
    settings = settings or AoSettings()
    _check_forms(forms)
    e_b, m = forms.e_b, forms.m
    eig_e = hermitian_eig(e_b)
    eig_m = hermitian_eig(m)
    aligned = eig_e.vectors @ eig_m.vectors.conj().T
    u = takagi(aligned + aligned.T).u
    bound = float(eig_e.values @ eig_m.values)

    cost = _ao_cost(u, e_b, m)
    trace = [cost]
    mu = settings.mu0
    converged = False
    iterations = 0
    for iterations in range(1, settings.max_iters + 1):
        z = e_b @ u @ (u.T @ (m @ u.conj()))
        skew = 0.5 * (u.conj().T @ z - z.conj().T @ u)
        candidate = u @ expm_skew(skew, mu)
        cand_cost = _ao_cost(candidate, e_b, m)
        if cand_cost > cost:
            improvement = (cand_cost - cost) / max(abs(cost), 1e-300)
            u = candidate
            cost = cand_cost
            trace.append(cost)
            mu *= settings.mu_up
            if improvement < settings.epsilon_conv:
                converged = True
                break
        else:
            mu *= settings.mu_down
            if mu < _MU_FLOOR:
                converged = True  # no ascent direction at float resolution
                break

    omega = u @ u.T
    omega = 0.5 * (omega + omega.T)
    objective = quad_objective(omega, e_b, m)
    report = SolveReport(
        objective=objective,
        bound=bound,
        iterations=iterations,
        cost_trace=trace,
        converged=converged,
        constraint_values={"final_step": mu},
    )
    return RisMatrix(omega, ARCH_RECIPROCAL), report
