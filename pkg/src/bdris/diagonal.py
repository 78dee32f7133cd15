"""Diagonal-RIS baseline: local-search heuristics on the Hadamard-product form.

For a diagonal response Omega = diag(omega) the trace objective collapses to

    tr(Omega^H E Omega M) = omega^H (E o M^T) omega,

with o the elementwise product, so both the intended-receiver objective and
the leakage constraint become r-dimensional quadratic forms.  The
unconstrained unit-modulus problem is attacked by coordinate ascent over
phases; the leakage-capped problem relaxes the magnitudes to |omega_i| <= 1
and runs projected gradient ascent with an adaptive penalty on the cap.
Both are multi-start heuristics, not certified global optimizers: they give
a lower estimate of the diagonal baseline, which is all the architecture
comparisons need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import ContractViolationError
from .model import ARCH_DIAGONAL, QuadraticForms, RisMatrix
from .reporting import SolveReport

__all__ = [
    "DiagForms",
    "DiagSettings",
    "diag_forms",
    "solve_diagonal_unconstrained",
    "solve_diagonal_constrained",
]

_HADAMARD_TOL = 1e-10
_STEP_FLOOR = 1e-12


@dataclass
class DiagForms:
    """Hadamard-reduced quadratic forms c_b = E_b o M^T and c_e = E_e o M^T."""

    c_b: np.ndarray
    c_e: np.ndarray | None = None

    def __post_init__(self):
        self.c_b = np.asarray(self.c_b, dtype=complex)
        _check_psd(self.c_b, "c_b")
        if self.c_e is not None:
            self.c_e = np.asarray(self.c_e, dtype=complex)
            if self.c_e.shape != self.c_b.shape:
                raise ContractViolationError("c_e shape differs from c_b")
            _check_psd(self.c_e, "c_e")

    @property
    def r(self) -> int:
        return self.c_b.shape[0]


@dataclass
class DiagSettings:
    """Knobs of the relaxed leakage-capped solver."""

    restarts: int = 20
    step0: float = 0.1          # initial gradient step (unit-scaled forms)
    step_up: float = 1.2
    step_down: float = 0.5
    penalty0: float = 1.0
    penalty_growth: float = 10.0
    max_penalty_rounds: int = 8
    feas_tol: float = 1e-6      # relative cap slack accepted as feasible
    stat_tol: float = 1e-9      # relative stationarity of an accepted step
    max_iters: int = 2000       # per penalty round
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_penalty_rounds < 1 or self.max_iters < 1:
            raise ValueError("counts must be at least 1")
        if not (0 < self.step_down < 1 < self.step_up):
            raise ValueError("need step_down < 1 < step_up")
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")


def _check_psd(c: np.ndarray, name: str) -> None:
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ContractViolationError(f"{name} must be square")
    scale = max(1.0, float(np.abs(c).max()))
    if np.abs(c - c.conj().T).max() > _HADAMARD_TOL * scale:
        raise ContractViolationError(f"{name} not Hermitian within {_HADAMARD_TOL}")
    w = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    if w.size and w.min() < -_HADAMARD_TOL * max(1.0, float(w.max())):
        raise ContractViolationError(f"{name} not PSD (min eigenvalue {w.min():.3e})")


def diag_forms(forms: QuadraticForms) -> DiagForms:
    """Reduce full quadratic forms to their diagonal-response counterparts."""
    c_b = forms.e_b * forms.m.T
    c_e = forms.e_e * forms.m.T if forms.e_e is not None else None
    return DiagForms(c_b=c_b, c_e=c_e)


def _quad(c: np.ndarray, omega: np.ndarray) -> float:
    return float(np.real(np.vdot(omega, c @ omega)))


def _coordinate_ascent(c: np.ndarray, omega: np.ndarray,
                       max_passes: int = 500, rel_tol: float = 1e-12):
    """Unit-modulus Gauss-Seidel: omega_i <- c_i/|c_i|, c_i = sum_{j!=i} C_ij omega_j.

    Each update maximizes the objective over omega_i alone, so the trace is
    non-decreasing.  A zero c_i leaves omega_i unchanged (any phase is
    equally good there).
    """
    n = omega.size
    trace = [_quad(c, omega)]
    converged = False
    passes = 0
    for passes in range(1, max_passes + 1):
        for i in range(n):
            ci = c[i] @ omega - c[i, i] * omega[i]
            mag = abs(ci)
            if mag > 0.0:
                omega[i] = ci / mag
        trace.append(_quad(c, omega))
        if trace[-1] - trace[-2] <= rel_tol * max(1.0, abs(trace[-1])):
            converged = True
            break
    return omega, trace, passes, converged


def solve_diagonal_unconstrained(dforms: DiagForms, restarts: int = 20,
                                 seed: int = 0) -> tuple[RisMatrix, SolveReport]:
    """Best unit-modulus diagonal response by multi-start coordinate ascent.

    Restart 0 starts from the all-ones phase vector; the rest draw phases
    uniformly on [0, 2pi).  The reported bound is lam_max(c_b) * r, the
    Rayleigh bound over the relaxed ball.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    c = dforms.c_b
    n = dforms.r
    rng = np.random.default_rng(seed)
    best = None
    for start in range(restarts):
        if start == 0:
            omega0 = np.ones(n, dtype=complex)
        else:
            omega0 = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n))
        omega, trace, passes, conv = _coordinate_ascent(c, omega0)
        if best is None or trace[-1] > best[1][-1]:
            best = (omega, trace, passes, conv)
    omega, trace, passes, conv = best
    bound = float(np.linalg.eigvalsh(c).max() * n)
    report = SolveReport(
        objective=trace[-1],
        bound=bound,
        iterations=passes,
        cost_trace=[float(v) for v in trace],
        converged=conv,
    )
    return RisMatrix(np.diag(omega), ARCH_DIAGONAL), report


def _box(omega: np.ndarray) -> np.ndarray:
    mags = np.abs(omega)
    scale = np.where(mags > 1.0, mags, 1.0)
    return omega / scale


def _penalized(c_b: np.ndarray, c_e: np.ndarray, eps: float, tau: float,
               omega: np.ndarray) -> float:
    gap = max(0.0, _quad(c_e, omega) - eps)
    return _quad(c_b, omega) - tau * gap * gap


def _projected_ascent(c_b: np.ndarray, c_e: np.ndarray, eps: float, tau: float,
                      omega: np.ndarray, settings: DiagSettings):
    """Adaptive-step projected gradient ascent on the penalized objective."""
    step = settings.step0
    value = _penalized(c_b, c_e, eps, tau, omega)
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        gap = max(0.0, _quad(c_e, omega) - eps)
        grad = c_b @ omega - (2.0 * tau * gap) * (c_e @ omega)
        cand = _box(omega + step * grad)
        cand_value = _penalized(c_b, c_e, eps, tau, cand)
        if cand_value > value:
            improved = cand_value - value
            omega, value = cand, cand_value
            step *= settings.step_up
            if improved <= settings.stat_tol * max(1.0, abs(value)):
                return omega, value, iters, True
        else:
            step *= settings.step_down
            if step < _STEP_FLOOR:
                return omega, value, iters, True
    return omega, value, iters, False


def solve_diagonal_constrained(dforms: DiagForms, epsilon_eve: float,
                               settings: DiagSettings | None = None,
                               ) -> tuple[RisMatrix, SolveReport]:
    """Leakage-capped diagonal response over the magnitude-relaxed set.

    Maximizes omega^H c_b omega subject to omega^H c_e omega <= eps and
    |omega_i| <= 1.  If the unconstrained coordinate-ascent optimum already
    meets the cap it is returned directly.  Otherwise each restart runs
    penalty rounds of box-projected gradient ascent, growing the penalty
    until the cap holds; the final iterate is rescaled onto the cap if a
    residual violation remains, entries with |omega_i| > 1 are clipped to
    unit modulus, and both pre- and post-clip values are reported.
    """
    if dforms.c_e is None:
        raise ValueError("constrained solve needs c_e")
    if epsilon_eve <= 0:
        raise ValueError("epsilon_eve must be positive")
    settings = settings if settings is not None else DiagSettings()

    ris0, rep0 = solve_diagonal_unconstrained(
        dforms, restarts=settings.restarts, seed=settings.seed)
    omega0 = np.diag(ris0.matrix).copy()
    eve0 = _quad(dforms.c_e, omega0)
    if eve0 <= epsilon_eve:
        rep0.constraint_values = {
            "epsilon_eve": float(epsilon_eve),
            "eve_value": eve0,
            "pre_clip_objective": rep0.objective,
            "post_clip_objective": rep0.objective,
            "pre_clip_eve": eve0,
            "post_clip_eve": eve0,
            "constraint_active": 0.0,
        }
        return ris0, rep0

    # Unit-scale the forms so the step/penalty defaults are magnitude-free.
    s_b = float(np.linalg.eigvalsh(dforms.c_b).max()) or 1.0
    s_e = float(np.linalg.eigvalsh(dforms.c_e).max()) or 1.0
    cb, ce, eps = dforms.c_b / s_b, dforms.c_e / s_e, epsilon_eve / s_e

    rng = np.random.default_rng(settings.seed)
    n = dforms.r
    best_omega = None
    best_value = -np.inf
    best_stalled = False
    total_iters = 0
    for start in range(settings.restarts):
        if start == 0:
            omega = omega0.copy()
        else:
            omega = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n))
        # Scale into the cap so every restart begins feasible.
        g = _quad(ce, omega)
        if g > eps:
            omega = omega * np.sqrt(eps / g)
        tau = settings.penalty0
        stalled = False
        for _ in range(settings.max_penalty_rounds):
            omega, _val, iters, finished = _projected_ascent(
                cb, ce, eps, tau, omega, settings)
            total_iters += iters
            stalled = not finished
            if _quad(ce, omega) <= eps * (1.0 + settings.feas_tol):
                break
            tau *= settings.penalty_growth
        g = _quad(ce, omega)
        if g > eps:
            omega = omega * np.sqrt(eps / g)
        value = _quad(cb, omega)
        if value > best_value:
            best_value = value
            best_omega = omega
            best_stalled = stalled
    omega = best_omega

    pre_obj = _quad(dforms.c_b, omega)
    pre_eve = _quad(dforms.c_e, omega)
    mags = np.abs(omega)
    omega = np.where(mags > 1.0, omega / np.where(mags > 0, mags, 1.0), omega)
    post_obj = _quad(dforms.c_b, omega)
    post_eve = _quad(dforms.c_e, omega)
    report = SolveReport(
        objective=post_obj,
        bound=float(np.linalg.eigvalsh(dforms.c_b).max() * n),
        iterations=total_iters,
        converged=not best_stalled,
        constraint_values={
            "epsilon_eve": float(epsilon_eve),
            "eve_value": post_eve,
            "pre_clip_objective": pre_obj,
            "post_clip_objective": post_obj,
            "pre_clip_eve": pre_eve,
            "post_clip_eve": post_eve,
            "constraint_active": 1.0,
        },
    )
    return RisMatrix(np.diag(omega), ARCH_DIAGONAL), report
