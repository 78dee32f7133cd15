"""System model: channel generation, quadratic forms, FIM/CRB, simulation.

Ground truths:
- frozen first/last channel entries reconstructed independently from the
  documented draw contract (PCG64, uniform [-0.1, 0.1], real part first,
  row-major, draw order h_ar then h_rb then h_re),
- the direct formula E = H^H (sigma^-1) H via numpy.linalg.inv,
- a from-scratch trace of the information matrix of the linear Gaussian
  model y = A theta + noise, A = H_rb Omega H_ar P,
- the spectral identity tr(F^-1) = sum(1/eig(F)).
"""
import json

import numpy as np
import pytest

from bdris.errors import (
    ContractViolationError,
    DimensionError,
    EstimationIllPosedError,
    NotPositiveDefiniteError,
)
from bdris.model import (
    ARCH_DIAGONAL,
    ARCH_NONRECIPROCAL,
    ARCH_RECIPROCAL,
    ChannelSet,
    RisMatrix,
    SystemConfig,
    build_forms,
    crb_trace,
    fim_matrix,
    generate_channels,
    load_channels,
    quad_objective,
    save_channels,
    simulate_mle_mse,
    trace_fim,
)


def rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def haar_unitary(rng, n):
    q, r = np.linalg.qr(rand_complex(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def make_channels(rng, r=5, k=3, n_b=4, n_e=0, noise=0.1):
    ch = ChannelSet(
        h_ar=rand_complex(rng, r, k),
        h_rb=rand_complex(rng, n_b, r),
        sigma_b=noise * np.eye(n_b),
        p=np.sqrt(2.0) * np.eye(k),
        h_re=rand_complex(rng, n_e, r) if n_e else None,
        sigma_e=noise * np.eye(n_e) if n_e else None,
    )
    return ch


# ------------------------------------------------------------------ generation

class TestGenerateChannels:
    def test_frozen_seed_zero_entries(self):
        cfg = SystemConfig(k=2, r=4, n_b=3, n_e=3, seed=0)
        ch = generate_channels(cfg)
        # Values frozen from an independent PCG64 reconstruction.
        assert ch.h_ar[0, 0] == pytest.approx(
            0.027392337464290872 - 0.04604265724722594j, abs=0)
        assert ch.h_ar[-1, -1] == pytest.approx(
            0.045931089285988824 - 0.0648688758794882j, abs=0)
        assert ch.h_rb[0, 0] == pytest.approx(
            0.07263578446997732 + 0.008292244049818348j, abs=0)
        assert ch.h_re[-1, -1] == pytest.approx(
            -0.08184939087617563 + 0.01606647719737013j, abs=0)

    def test_shapes_and_static_matrices(self):
        cfg = SystemConfig(k=3, r=6, n_b=5, n_e=4, seed=1,
                           total_power=12.0, noise_variance=0.5)
        ch = generate_channels(cfg)
        assert ch.h_ar.shape == (6, 3)
        assert ch.h_rb.shape == (5, 6)
        assert ch.h_re.shape == (4, 6)
        np.testing.assert_allclose(ch.p, np.sqrt(12.0 / 3) * np.eye(3))
        np.testing.assert_allclose(ch.sigma_b, 0.5 * np.eye(5))
        np.testing.assert_allclose(ch.sigma_e, 0.5 * np.eye(4))

    def test_no_eve(self):
        ch = generate_channels(SystemConfig(k=2, r=4, n_b=3, n_e=0, seed=0))
        assert ch.h_re is None and ch.sigma_e is None

    def test_deterministic(self):
        cfg = SystemConfig(k=3, r=8, n_b=6, n_e=6, seed=5)
        a, b = generate_channels(cfg), generate_channels(cfg)
        np.testing.assert_array_equal(a.h_ar, b.h_ar)
        np.testing.assert_array_equal(a.h_re, b.h_re)

    def test_entry_distribution(self):
        # Parts live in [-0.1, 0.1] with mean ~0 (1e6-sample check).
        ch = generate_channels(SystemConfig(k=500, r=1000, n_b=2, n_e=0, seed=9))
        parts = np.concatenate([ch.h_ar.real.ravel(), ch.h_ar.imag.ravel()])
        assert parts.max() <= 0.1 and parts.min() >= -0.1
        assert abs(parts.mean()) < 3 * 0.1 / np.sqrt(3 * parts.size)


# ----------------------------------------------------------------- validation

class TestValidation:
    def test_config_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            SystemConfig(k=0, r=4, n_b=2)
        with pytest.raises(ValueError):
            SystemConfig(k=2, r=4, n_b=2, noise_variance=0.0)

    def test_channelset_shape_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DimensionError):
            ChannelSet(h_ar=rand_complex(rng, 4, 2),
                       h_rb=rand_complex(rng, 3, 5),   # r mismatch
                       sigma_b=np.eye(3), p=np.eye(2))

    def test_covariance_must_be_pd(self):
        rng = np.random.default_rng(0)
        with pytest.raises(NotPositiveDefiniteError):
            ChannelSet(h_ar=rand_complex(rng, 4, 2),
                       h_rb=rand_complex(rng, 3, 4),
                       sigma_b=np.diag([1.0, -1.0, 1.0]), p=np.eye(2))

    def test_ris_matrix_classes(self):
        rng = np.random.default_rng(2)
        u = haar_unitary(rng, 4)
        RisMatrix(u, ARCH_NONRECIPROCAL)
        with pytest.raises(ContractViolationError):
            RisMatrix(0.5 * u, ARCH_NONRECIPROCAL)
        with pytest.raises(ContractViolationError):
            RisMatrix(u, ARCH_RECIPROCAL)  # generic unitary is not symmetric
        sym = u @ u.T
        RisMatrix(sym, ARCH_RECIPROCAL)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        RisMatrix(np.diag(phases), ARCH_DIAGONAL)
        off = np.diag(phases)
        off[0, 1] = 1e-12   # off-diagonal must be exactly zero
        with pytest.raises(ContractViolationError):
            RisMatrix(off, ARCH_DIAGONAL)
        with pytest.raises(ContractViolationError):
            RisMatrix(np.diag([1.5, 1.0, 1.0, 1.0]).astype(complex), ARCH_DIAGONAL)
        # magnitudes below one are allowed for the relaxed diagonal outputs
        RisMatrix(np.diag([0.5 * p for p in phases]), ARCH_DIAGONAL)


# ---------------------------------------------------------------- forms / trace

class TestForms:
    def test_matches_direct_inverse(self):
        rng = np.random.default_rng(4)
        ch = make_channels(rng, n_e=4)
        forms = build_forms(ch)
        h = ch.h_ar @ ch.p
        e_direct = ch.h_rb.conj().T @ np.linalg.inv(ch.sigma_b) @ ch.h_rb
        np.testing.assert_allclose(forms.e_b, e_direct, atol=1e-10)
        np.testing.assert_allclose(forms.m, h @ h.conj().T, atol=1e-12)
        e_eve = ch.h_re.conj().T @ np.linalg.inv(ch.sigma_e) @ ch.h_re
        np.testing.assert_allclose(forms.e_e, e_eve, atol=1e-10)

    def test_trace_fim_against_scratch_oracle(self):
        # Information matrix of y = A theta + eta, eta ~ CN(0, Sigma):
        # F = A^H Sigma^-1 A; its trace must match the quadratic form.
        rng = np.random.default_rng(8)
        for target in ("bob", "eve"):
            ch = make_channels(rng, n_e=4)
            forms = build_forms(ch)
            omega = haar_unitary(rng, 5)
            ris = RisMatrix(omega, ARCH_NONRECIPROCAL)
            h_out = ch.h_rb if target == "bob" else ch.h_re
            sig = ch.sigma_b if target == "bob" else ch.sigma_e
            a = h_out @ omega @ ch.h_ar @ ch.p
            f = a.conj().T @ np.linalg.inv(sig) @ a
            ours = trace_fim(forms, ris, target)
            assert ours == pytest.approx(np.trace(f).real, rel=1e-10)
            np.testing.assert_allclose(fim_matrix(ch, ris, target), f, atol=1e-8)

    def test_quad_objective_unitary_invariance(self):
        # E = I makes the objective tr(M), independent of Omega.
        rng = np.random.default_rng(12)
        m = rand_complex(rng, 5, 2)
        m = m @ m.conj().T
        for _ in range(5):
            val = quad_objective(haar_unitary(rng, 5), np.eye(5), m)
            assert val == pytest.approx(np.trace(m).real, rel=1e-12)

    def test_quad_objective_rejects_complex_residue(self):
        from bdris.errors import NumericalConsistencyError
        with pytest.raises(NumericalConsistencyError):
            # Anti-Hermitian "form" makes the value purely imaginary.
            quad_objective(np.eye(2), 1j * np.eye(2), np.eye(2))


# ------------------------------------------------------------------- crb / mle

class TestCrbAndMle:
    def test_crb_spectral_oracle(self):
        rng = np.random.default_rng(16)
        a = rand_complex(rng, 6, 3)
        f = a.conj().T @ a
        w = np.linalg.eigvalsh(f)
        assert crb_trace(f) == pytest.approx(float(np.sum(1.0 / w)), rel=1e-10)

    def test_singular_fim_is_inf(self):
        with pytest.warns(RuntimeWarning):
            assert crb_trace(np.zeros((2, 2))) == np.inf

    def test_scalar_closed_form(self):
        # k=1: CRB = sigma^2-weighted 1/||a||^2; MC-MSE of the exact MLE
        # matches within sampling noise.
        rng = np.random.default_rng(20)
        ch = make_channels(rng, r=4, k=1, n_b=3, noise=0.05)
        omega = haar_unitary(rng, 4)
        ris = RisMatrix(omega, ARCH_NONRECIPROCAL)
        a = ch.h_rb @ omega @ ch.h_ar @ ch.p
        crb = crb_trace(fim_matrix(ch, ris, "bob"))
        assert crb == pytest.approx(0.05 / np.linalg.norm(a) ** 2, rel=1e-9)
        mse = simulate_mle_mse(ch, ris, trials=4000, seed=3)
        assert mse == pytest.approx(crb, rel=0.1)

    def test_mse_tracks_crb(self):
        rng = np.random.default_rng(24)
        ch = make_channels(rng, r=6, k=3, n_b=5, noise=0.2)
        ris = RisMatrix(haar_unitary(rng, 6), ARCH_NONRECIPROCAL)
        crb = crb_trace(fim_matrix(ch, ris, "bob"))
        mse = simulate_mle_mse(ch, ris, trials=6000, seed=1)
        assert mse == pytest.approx(crb, rel=0.08)

    def test_mse_scales_with_noise(self):
        # Same seed, noise halved: the whitened errors are identical draws,
        # so the MSE scales exactly by the noise ratio.
        rng = np.random.default_rng(28)
        base = make_channels(rng, noise=0.2)
        half = ChannelSet(h_ar=base.h_ar, h_rb=base.h_rb,
                          sigma_b=0.1 * np.eye(4), p=base.p)
        ris = RisMatrix(haar_unitary(rng, 5), ARCH_NONRECIPROCAL)
        m1 = simulate_mle_mse(base, ris, trials=500, seed=11)
        m2 = simulate_mle_mse(half, ris, trials=500, seed=11)
        assert m2 / m1 == pytest.approx(0.5, rel=1e-9)

    def test_rank_deficient_design_raises(self):
        rng = np.random.default_rng(32)
        ch = ChannelSet(h_ar=np.zeros((4, 2), dtype=complex),
                        h_rb=rand_complex(rng, 3, 4),
                        sigma_b=np.eye(3), p=np.eye(2))
        ris = RisMatrix(haar_unitary(rng, 4), ARCH_NONRECIPROCAL)
        with pytest.raises(EstimationIllPosedError):
            simulate_mle_mse(ch, ris, trials=10, seed=0)


# --------------------------------------------------------------- serialization

class TestSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(36)
        ch = make_channels(rng, n_e=4)
        path = tmp_path / "ch.json"
        save_channels(ch, path)
        back = load_channels(path)
        np.testing.assert_array_equal(back.h_ar, ch.h_ar)
        np.testing.assert_array_equal(back.h_rb, ch.h_rb)
        np.testing.assert_array_equal(back.h_re, ch.h_re)
        np.testing.assert_array_equal(back.sigma_b, ch.sigma_b)
        np.testing.assert_array_equal(back.p, ch.p)

    def test_roundtrip_no_eve_and_format_tag(self, tmp_path):
        rng = np.random.default_rng(40)
        ch = make_channels(rng)
        path = tmp_path / "ch.json"
        save_channels(ch, path)
        doc = json.loads(path.read_text())
        assert doc["format"] == "bdris-channels"
        back = load_channels(path)
        assert back.h_re is None

    def test_rejects_wrong_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(ValueError):
            load_channels(path)
