"""Physical layer: channels, quadratic forms, Fisher information, CRB, MLE.

The measurement at a receiver with output channel H_out is

    y = (H_out Omega H_ar P) theta + eta,      eta ~ CN(0, Sigma),

where Omega is the surface response matrix and P the source amplitude
matrix.  The average Fisher information about theta reduces to the
quadratic form tr(Omega^H E Omega M) with E = H_out^H Sigma^{-1} H_out
and M = H H^H, H = H_ar P.  This module owns those objects plus the CRB
and a Monte-Carlo maximum-likelihood check.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from . import tolerances as tol
from .errors import (
    ContractViolationError,
    DimensionError,
    EstimationIllPosedError,
    NotPositiveDefiniteError,
    NumericalConsistencyError,
)

__all__ = [
    "ARCH_NONRECIPROCAL",
    "ARCH_RECIPROCAL",
    "ARCH_DIAGONAL",
    "ARCHITECTURES",
    "SystemConfig",
    "ChannelSet",
    "QuadraticForms",
    "RisMatrix",
    "generate_channels",
    "build_forms",
    "quad_objective",
    "trace_fim",
    "fim_matrix",
    "crb_trace",
    "simulate_mle_mse",
    "save_channels",
    "load_channels",
]

ARCH_NONRECIPROCAL = "non-reciprocal"
ARCH_RECIPROCAL = "reciprocal"
ARCH_DIAGONAL = "diagonal"
ARCHITECTURES = (ARCH_NONRECIPROCAL, ARCH_RECIPROCAL, ARCH_DIAGONAL)


@dataclass
class SystemConfig:
    """Dimensions and physical constants of one scenario.

    ``eve_present`` defaults to ``n_e > 0``; pass it explicitly to keep an
    unintended-receiver antenna count around without drawing its channel.
    """

    k: int
    r: int
    n_b: int
    n_e: int = 0
    total_power: float = 30.0
    noise_variance: float = 1e-5
    seed: int = 0
    eve_present: bool | None = None

    def __post_init__(self):
        if self.eve_present is None:
            self.eve_present = self.n_e > 0
        if self.k < 1 or self.r < 1 or self.n_b < 1:
            raise ValueError("k, r and n_b must all be at least 1")
        if self.eve_present and self.n_e < 1:
            raise ValueError("eve_present requires n_e >= 1")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")


def _check_covariance(sigma: np.ndarray, n: int, name: str) -> np.ndarray:
    sigma = np.asarray(sigma)
    if sigma.shape != (n, n):
        raise DimensionError(f"{name} must have shape {(n, n)}, got {sigma.shape}")
    try:
        np.linalg.cholesky(0.5 * (sigma + sigma.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from exc
    return sigma


@dataclass
class ChannelSet:
    """One realization of all propagation channels plus noise and power."""

    h_ar: np.ndarray                 # (r, k) source-to-surface
    h_rb: np.ndarray                 # (n_b, r) surface-to-intended-receiver
    sigma_b: np.ndarray              # (n_b, n_b) positive definite
    p: np.ndarray                    # (k, k) diagonal, non-negative
    h_re: np.ndarray | None = None   # (n_e, r) surface-to-eavesdropper
    sigma_e: np.ndarray | None = None

    def __post_init__(self):
        self.h_ar = np.asarray(self.h_ar, dtype=complex)
        self.h_rb = np.asarray(self.h_rb, dtype=complex)
        if self.h_ar.ndim != 2 or self.h_rb.ndim != 2:
            raise DimensionError("h_ar and h_rb must be matrices")
        r, _k = self.h_ar.shape
        if self.h_rb.shape[1] != r:
            raise DimensionError(
                f"h_rb has {self.h_rb.shape[1]} columns but the surface has {r} elements"
            )
        self.sigma_b = _check_covariance(self.sigma_b, self.h_rb.shape[0], "sigma_b")
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != (self.k, self.k):
            raise DimensionError(f"p must have shape {(self.k, self.k)}")
        if np.any(self.p != np.diag(np.diag(self.p))) or np.any(np.diag(self.p) < 0):
            raise ContractViolationError("p must be diagonal with non-negative entries")
        if (self.h_re is None) != (self.sigma_e is None):
            raise ContractViolationError("h_re and sigma_e must be provided together")
        if self.h_re is not None:
            self.h_re = np.asarray(self.h_re, dtype=complex)
            if self.h_re.ndim != 2 or self.h_re.shape[1] != r:
                raise DimensionError("h_re must have r columns")
            self.sigma_e = _check_covariance(self.sigma_e, self.h_re.shape[0], "sigma_e")

    @property
    def r(self) -> int:
        return self.h_ar.shape[0]

    @property
    def k(self) -> int:
        return self.h_ar.shape[1]


@dataclass
class QuadraticForms:
    """Quadratic forms entering the trace objective tr(Omega^H E Omega M)."""

    e_b: np.ndarray                  # (r, r) Hermitian PSD
    m: np.ndarray                    # (r, r) Hermitian PSD, equal to h h^H
    h: np.ndarray                    # (r, k) effective source matrix H_ar P
    e_e: np.ndarray | None = None    # (r, r) Hermitian PSD, eavesdropper side

    @property
    def r(self) -> int:
        return self.e_b.shape[0]


@dataclass
class RisMatrix:
    """Surface response matrix tagged with its hardware class."""

    matrix: np.ndarray
    architecture: str

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("response matrix must be square")
        self.matrix = m
        r = m.shape[0]
        if self.architecture == ARCH_DIAGONAL:
            if np.any(m[~np.eye(r, dtype=bool)] != 0):
                raise ContractViolationError(
                    "diagonal architecture requires exactly zero off-diagonal entries"
                )
            if np.max(np.abs(np.diag(m))) > 1.0 + tol.ARCH_CHECK_TOL:
                raise ContractViolationError("diagonal magnitudes must not exceed 1")
        else:
            resid = np.max(np.abs(m.conj().T @ m - np.eye(r)))
            if resid > tol.ARCH_CHECK_TOL:
                raise ContractViolationError(
                    f"{self.architecture} response must be unitary "
                    f"(residual {resid:.3e})"
                )
            if self.architecture == ARCH_RECIPROCAL:
                dev = np.max(np.abs(m - m.T))
                if dev > tol.ARCH_CHECK_TOL:
                    raise ContractViolationError(
                        f"reciprocal response must be symmetric (deviation {dev:.3e})"
                    )

    @property
    def r(self) -> int:
        return self.matrix.shape[0]


def generate_channels(cfg: SystemConfig) -> ChannelSet:
    """Draw one seeded channel realization.

    Real and imaginary parts of every channel entry are i.i.d. uniform on
    [-0.1, 0.1].  The stream is a PCG64 generator seeded with
    ``cfg.seed``; entries are consumed real part first, row major, in the
    order h_ar, h_rb, h_re, so realizations are reproducible across
    implementations.  Noise covariances are ``noise_variance * I`` and the
    amplitude matrix is ``sqrt(total_power / k) * I`` (equal allocation).
    """
    rng = np.random.default_rng(cfg.seed)

    def draw(rows: int, cols: int) -> np.ndarray:
        parts = rng.uniform(-0.1, 0.1, size=(rows, cols, 2))
        return parts[..., 0] + 1j * parts[..., 1]

    h_ar = draw(cfg.r, cfg.k)
    h_rb = draw(cfg.n_b, cfg.r)
    h_re = draw(cfg.n_e, cfg.r) if cfg.eve_present else None
    sigma_b = cfg.noise_variance * np.eye(cfg.n_b)
    sigma_e = cfg.noise_variance * np.eye(cfg.n_e) if cfg.eve_present else None
    p = np.sqrt(cfg.total_power / cfg.k) * np.eye(cfg.k)
    return ChannelSet(h_ar=h_ar, h_rb=h_rb, sigma_b=sigma_b, p=p,
                      h_re=h_re, sigma_e=sigma_e)


def _cho(sigma: np.ndarray, name: str):
    try:
        return cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from exc


def build_forms(ch: ChannelSet) -> QuadraticForms:
    """Assemble the quadratic forms E = H_out^H Sigma^{-1} H_out and M = H H^H.

    Covariance inverses are applied through Cholesky solves; no explicit
    inverse is ever formed (the noise floor makes Sigma badly scaled).
    """
    def receiver_form(h_out, sigma, name):
        solved = cho_solve(_cho(sigma, name), h_out)
        e = h_out.conj().T @ solved
        return 0.5 * (e + e.conj().T)

    e_b = receiver_form(ch.h_rb, ch.sigma_b, "sigma_b")
    e_e = None
    if ch.h_re is not None:
        e_e = receiver_form(ch.h_re, ch.sigma_e, "sigma_e")
    h = ch.h_ar @ ch.p
    m = h @ h.conj().T
    m = 0.5 * (m + m.conj().T)
    return QuadraticForms(e_b=e_b, m=m, h=h, e_e=e_e)


def quad_objective(omega: np.ndarray, e: np.ndarray, m: np.ndarray) -> float:
    """Real trace tr(Omega^H E Omega M) for Hermitian PSD E and M.

    The imaginary residue must stay below IMAG_RESIDUE_TOL (relative);
    anything larger means corrupted inputs and raises.  Tiny negative
    values from rounding are clamped to zero.
    """
    val = complex(np.vdot(omega, e @ (omega @ m)))
    ref = max(1.0, abs(val.real))
    if abs(val.imag) > tol.IMAG_RESIDUE_TOL * ref:
        raise NumericalConsistencyError(
            f"trace has imaginary residue {val.imag:.3e} (value {val.real:.6e})"
        )
    if val.real < -tol.IMAG_RESIDUE_TOL * ref:
        raise NumericalConsistencyError(f"trace is negative: {val.real:.3e}")
    return max(val.real, 0.0)


def _target_form(forms: QuadraticForms, target: str) -> np.ndarray:
    if target == "bob":
        return forms.e_b
    if target == "eve":
        if forms.e_e is None:
            raise ValueError("eavesdropper forms are absent from this QuadraticForms")
        return forms.e_e
    raise ValueError(f"target must be 'bob' or 'eve', got {target!r}")


def trace_fim(forms: QuadraticForms, ris: RisMatrix, target: str = "bob") -> float:
    """Average Fisher information tr(Omega^H E Omega M) at the chosen receiver."""
    e = _target_form(forms, target)
    if ris.matrix.shape != e.shape:
        raise DimensionError(
            f"response matrix is {ris.matrix.shape}, forms are {e.shape}"
        )
    return quad_objective(ris.matrix, e, forms.m)


def _effective_matrix(ch: ChannelSet, ris: RisMatrix, target: str):
    if target == "bob":
        h_out, sigma, name = ch.h_rb, ch.sigma_b, "sigma_b"
    elif target == "eve":
        if ch.h_re is None:
            raise ValueError("this ChannelSet has no eavesdropper channel")
        h_out, sigma, name = ch.h_re, ch.sigma_e, "sigma_e"
    else:
        raise ValueError(f"target must be 'bob' or 'eve', got {target!r}")
    if ris.r != ch.r:
        raise DimensionError("response matrix size does not match the channels")
    return h_out @ ris.matrix @ ch.h_ar @ ch.p, sigma, name


def fim_matrix(ch: ChannelSet, ris: RisMatrix, target: str = "bob") -> np.ndarray:
    """Hermitian k-by-k Fisher information matrix G^H Sigma^{-1} G."""
    g, sigma, name = _effective_matrix(ch, ris, target)
    f = g.conj().T @ cho_solve(_cho(sigma, name), g)
    return 0.5 * (f + f.conj().T)


def crb_trace(fim: np.ndarray) -> float:
    """Trace of the inverse Fisher information matrix.

    Returns +inf (with a warning) when the matrix is numerically singular:
    Cholesky failure or condition number beyond COND_LIMIT.
    """
    fim = np.asarray(fim)
    if fim.ndim != 2 or fim.shape[0] != fim.shape[1]:
        raise DimensionError("fim must be square")
    scale = float(np.max(np.abs(fim))) or 1.0
    if np.max(np.abs(fim - fim.conj().T)) > tol.HERMITIAN_INPUT_TOL * scale:
        raise ContractViolationError("fim must be Hermitian")
    try:
        low = np.linalg.cholesky(0.5 * (fim + fim.conj().T))
    except np.linalg.LinAlgError:
        warnings.warn("singular information matrix; CRB reported as inf",
                      RuntimeWarning, stacklevel=2)
        return float("inf")
    s = np.linalg.svd(low, compute_uv=False)
    if (s[0] / s[-1]) ** 2 > tol.COND_LIMIT:
        warnings.warn("information matrix condition number exceeds limit; "
                      "CRB reported as inf", RuntimeWarning, stacklevel=2)
        return float("inf")
    inv_low = solve_triangular(low, np.eye(fim.shape[0]), lower=True)
    return float(np.sum(np.abs(inv_low) ** 2))


def simulate_mle_mse(ch: ChannelSet, ris: RisMatrix, theta: np.ndarray | None = None,
                     trials: int = 10_000, seed: int = 0, streams: int = 1) -> float:
    """Monte-Carlo mean-squared error of the weighted least-squares MLE.

    Each trial draws eta ~ CN(0, Sigma_b), forms y = G theta + eta and
    solves the weighted least-squares problem for theta-hat.  theta
    defaults to the all-ones vector (the information matrix does not
    depend on it).  Trials can be split across ``streams`` independent
    child generators; the result is deterministic for a given
    (seed, streams) pair and merged by summation.
    """
    g, sigma, name = _effective_matrix(ch, ris, "bob")
    n_b, k = g.shape
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= max(g.shape) * np.finfo(float).eps * sv[0]:
        raise EstimationIllPosedError(
            "effective matrix G = H_rb Omega H_ar P is rank deficient"
        )
    if theta is None:
        theta = np.ones(k, dtype=complex)
    theta = np.asarray(theta, dtype=complex).reshape(k)
    if trials < 1:
        raise ValueError("trials must be at least 1")

    low = np.linalg.cholesky(0.5 * (sigma + sigma.conj().T)).astype(complex)
    weighted = cho_solve(_cho(sigma, name), g)        # Sigma^{-1} G
    f = g.conj().T @ weighted
    f_cho = cho_factor(0.5 * (f + f.conj().T), lower=True)

    counts = np.full(streams, trials // streams)
    counts[: trials % streams] += 1
    total = 0.0
    signal = g @ theta
    for child, count in zip(np.random.SeedSequence(seed).spawn(streams), counts):
        if count == 0:
            continue
        rng = np.random.default_rng(child)
        z = rng.standard_normal((count, n_b)) + 1j * rng.standard_normal((count, n_b))
        eta = (np.sqrt(0.5) * z) @ low.T
        y = signal[None, :] + eta
        rhs = y @ np.conj(weighted)                   # rows of G^H Sigma^{-1} y
        theta_hat = cho_solve(f_cho, rhs.T).T
        total += float(np.sum(np.abs(theta_hat - theta[None, :]) ** 2))
    return total / trials


# ---------------------------------------------------------------------------
# Channel-set container (JSON): a dimensions header plus each matrix as a
# row-major list of [re, im] pairs, for cross-language regression fixtures.

def _pairs(a: np.ndarray) -> list:
    flat = np.asarray(a, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in flat]


def _unpairs(data: list, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != (rows * cols, 2):
        raise ValueError(f"{name}: expected {rows * cols} [re, im] pairs, "
                         f"got shape {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)


def save_channels(ch: ChannelSet, path) -> None:
    """Serialize a ChannelSet to the documented JSON container."""
    n_e = 0 if ch.h_re is None else ch.h_re.shape[0]
    doc = {
        "format": "bdris-channels",
        "version": 1,
        "r": ch.r,
        "k": ch.k,
        "n_b": ch.h_rb.shape[0],
        "n_e": n_e,
        "h_ar": _pairs(ch.h_ar),
        "h_rb": _pairs(ch.h_rb),
        "sigma_b": _pairs(ch.sigma_b),
        "p": _pairs(ch.p),
        "h_re": None if ch.h_re is None else _pairs(ch.h_re),
        "sigma_e": None if ch.sigma_e is None else _pairs(ch.sigma_e),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_channels(path) -> ChannelSet:
    """Load a ChannelSet from the documented JSON container."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "bdris-channels":
        raise ValueError("not a channel-set container")
    r, k, n_b, n_e = doc["r"], doc["k"], doc["n_b"], doc["n_e"]
    h_re = sigma_e = None
    if n_e:
        h_re = _unpairs(doc["h_re"], n_e, r, "h_re")
        sigma_e = _unpairs(doc["sigma_e"], n_e, n_e, "sigma_e")
    return ChannelSet(
        h_ar=_unpairs(doc["h_ar"], r, k, "h_ar"),
        h_rb=_unpairs(doc["h_rb"], n_b, r, "h_rb"),
        sigma_b=_unpairs(doc["sigma_b"], n_b, n_b, "sigma_b"),
        p=_unpairs(doc["p"], k, k, "p").real,
        h_re=h_re,
        sigma_e=sigma_e,
    )
