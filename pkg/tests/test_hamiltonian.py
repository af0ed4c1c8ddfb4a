import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmfsearch import hamiltonian as hc
from vmfsearch.errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    NonHermitian,
    PermissiveWindowWarning,
    WindowInvalid,
    WindowViolation,
)

from conftest import random_prepared, random_unit


def quadratic_form_oracle(spectrum, phases, psi_real):
    """sum_n cos(phase_n) |<h_n|psi>|^2 evaluated in complex arithmetic."""
    psi = psi_real[..., 0::2] + 1j * psi_real[..., 1::2]
    overlaps = psi @ spectrum.eigenvectors.conj()
    return (np.abs(overlaps) ** 2) @ np.cos(phases)


class TestEigendecompose:
    def test_one_by_one(self):
        spec = hc.eigendecompose([[2.0]])
        assert spec.eigenvalues.tolist() == [2.0]
        assert abs(spec.eigenvectors[0, 0]) == pytest.approx(1.0)

    def test_diagonal_sorted(self):
        spec = hc.eigendecompose(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(spec.eigenvalues, [1.0, 3.0])
        assert abs(spec.eigenvectors[1, 0]) == pytest.approx(1.0)
        assert abs(spec.eigenvectors[0, 1]) == pytest.approx(1.0)

    def test_pauli_y_matches_characteristic_polynomial(self):
        Y = np.array([[0, -1j], [1j, 0]])
        # det(Y - l I) = l^2 - (0*0 - (-i)(i)) = l^2 - 1
        roots = np.sort(np.roots([1.0, 0.0, -1.0]).real)
        spec = hc.eigendecompose(Y)
        np.testing.assert_allclose(spec.eigenvalues, roots, atol=1e-14)
        v0 = spec.eigenvectors[:, 0]
        # (1, -i)/sqrt2 up to phase for eigenvalue -1
        assert abs(np.vdot(np.array([1, -1j]) / math.sqrt(2), v0)) == pytest.approx(1.0)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NonHermitian):
            hc.eigendecompose([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NonHermitian):
            hc.eigendecompose(np.ones((2, 3)))

    @pytest.mark.parametrize("d", [1, 2, 5, 16])
    def test_orthonormal_and_reconstructs(self, d):
        rng = np.random.default_rng(d)
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        H = (G + G.conj().T) / 2
        spec = hc.eigendecompose(H)
        V = spec.eigenvectors
        assert np.max(np.abs(V.conj().T @ V - np.eye(d))) <= 1e-10
        assert np.max(np.abs(spec.reconstruct() - H)) <= 1e-10 * np.max(np.abs(H))
        assert np.all(np.diff(spec.eigenvalues) >= 0)


class TestScaleToWindow:
    def test_affine_coefficients(self):
        spec = hc.Spectrum(np.array([-1.0, 1.0]), np.eye(2, dtype=complex))
        scaled = hc.scale_to_window(spec, (0.1, math.pi / 2))
        assert scaled.scale == pytest.approx(0.7354, abs=1e-4)
        assert scaled.shift == pytest.approx(0.8354, abs=1e-4)
        assert scaled.phases[1] == pytest.approx(1.5708, abs=1e-4)
        assert scaled.time == 1.0

    def test_endpoints_map_to_window(self):
        spec = hc.eigendecompose(np.diag([1.0, 3.0]))
        scaled = hc.scale_to_window(spec, (0.1, math.pi / 2))
        np.testing.assert_allclose(scaled.phases, [0.1, math.pi / 2], atol=1e-15)

    def test_degenerate(self):
        spec = hc.eigendecompose(0.1 * np.eye(3))
        with pytest.raises(DegenerateSpectrum) as info:
            hc.scale_to_window(spec)
        assert info.value.value == pytest.approx(0.1)

    @pytest.mark.parametrize("window", [(0.0, 1.0), (1.0, 0.5), (0.1, 4.0), (-0.1, 1.0)])
    def test_invalid_window(self, window):
        spec = hc.eigendecompose(np.diag([1.0, 3.0]))
        with pytest.raises(WindowInvalid):
            hc.scale_to_window(spec, window)

    def test_bounds_override(self):
        spec = hc.eigendecompose(np.diag([1.0, 3.0]))
        scaled = hc.scale_to_window(spec, (0.1, 1.1), bounds=(0.0, 4.0))
        np.testing.assert_allclose(scaled.phases, [0.35, 0.85])
        with pytest.raises(WindowInvalid):
            hc.scale_to_window(spec, (0.1, 1.1), bounds=(2.0, 4.0))

    def test_permissive_window_warns(self):
        spec = hc.eigendecompose(np.diag([1.0, 3.0]))
        with pytest.warns(PermissiveWindowWarning):
            hc.scale_to_window(spec, (0.1, math.pi))

    @given(st.integers(0, 10_000), st.integers(2, 6))
    @settings(max_examples=40, deadline=None)
    def test_preserves_argmin(self, seed, d):
        rng = np.random.default_rng(seed)
        evals = rng.normal(size=d) * rng.uniform(0.1, 100)
        spec = hc.Spectrum(np.sort(evals), np.eye(d, dtype=complex))
        scaled = hc.scale_to_window(spec)
        assert np.argmin(scaled.phases) == np.argmin(spec.eigenvalues)
        assert scaled.phases.min() >= 0.1 - 1e-12
        assert scaled.phases.max() <= math.pi / 2 + 1e-12


class TestRealEmbed:
    def test_real_basis(self):
        h, hs = hc.real_embed([1, 0])
        assert h.tolist() == [1, 0, 0, 0]
        assert hs.tolist() == [0, 1, 0, 0]

    def test_imaginary_basis(self):
        h, hs = hc.real_embed([0, 1j])
        assert h.tolist() == [0, 0, 0, 1]
        assert hs.tolist() == [0, 0, -1, 0]

    def test_superposition(self):
        h, hs = hc.real_embed(np.array([1, 1j]) / math.sqrt(2))
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(h, [r, 0, 0, r])
        np.testing.assert_allclose(hs, [0, r, -r, 0])
        assert math.fsum(h * hs) == 0.0

    @given(st.integers(0, 10_000), st.integers(1, 8))
    @settings(max_examples=50, deadline=None)
    def test_overlap_identity(self, seed, d):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        h, hs = hc.real_embed(v)
        psi_r, _ = hc.real_embed(psi)
        assert math.fsum(h * hs) == 0.0
        assert np.linalg.norm(h) == pytest.approx(np.linalg.norm(v))
        assert np.linalg.norm(hs) == pytest.approx(np.linalg.norm(v))
        ov = np.vdot(v, psi)
        assert (h @ psi_r) ** 2 + (hs @ psi_r) ** 2 == pytest.approx(abs(ov) ** 2, rel=1e-12)
        assert h @ psi_r == pytest.approx(ov.real)
        assert hs @ psi_r == pytest.approx(ov.imag)


class TestBuildW:
    def test_single_level(self):
        spec = hc.eigendecompose([[1.0]])
        scaled = hc.ScaledHamiltonian(spec, math.pi / 3, 0.0, 1.0, (0.1, math.pi / 2))
        W = hc.build_w(scaled)
        np.testing.assert_allclose(W.matrix, 0.5 * np.eye(2), atol=1e-15)
        assert W.ground_cosine == pytest.approx(0.5)

    def test_diagonal_two_level(self, worked_w):
        c = math.sqrt(3) / 2
        np.testing.assert_allclose(worked_w.matrix, np.diag([c, c, 0, 0]), atol=1e-15)
        np.testing.assert_allclose(worked_w.ground_projector, np.diag([1.0, 1, 0, 0]), atol=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 4, 8])
    def test_quadratic_form_matches_complex_oracle(self, d):
        _, scaled, W = random_prepared(d, 100 + d)
        psi = random_unit(np.random.default_rng(d), 2 * d, 1000)
        lhs = np.einsum("ni,ij,nj->n", psi, W.matrix, psi)
        rhs = quadratic_form_oracle(scaled.spectrum, scaled.phases, psi)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_matches_realified_operator(self):
        # W equals the real form of V = sum_n c_n |h_n><h_n| in the interleaved layout
        _, scaled, W = random_prepared(3, 7)
        V = scaled.spectrum.eigenvectors
        Vop = (V * scaled.cosines) @ V.conj().T
        R = np.empty((6, 6))
        R[0::2, 0::2] = Vop.real
        R[1::2, 1::2] = Vop.real
        R[0::2, 1::2] = -Vop.imag
        R[1::2, 0::2] = Vop.imag
        np.testing.assert_allclose(W.matrix, R, atol=1e-14)

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_even_multiplicities_and_top_eigenvalue(self, d):
        _, scaled, W = random_prepared(d, d)
        ev = np.linalg.eigvalsh(W.matrix)
        np.testing.assert_allclose(np.sort(ev), np.sort(np.repeat(scaled.cosines, 2)), atol=1e-12)
        assert ev.max() == pytest.approx(W.ground_cosine, abs=1e-12)
        assert np.max(np.abs(W.matrix - W.matrix.T)) <= 1e-12

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_spectral_bound(self, d):
        _, _, W = random_prepared(d, 50 + d)
        psi = random_unit(np.random.default_rng(0), 2 * d, 100_000)
        Wpsi = psi @ W.matrix
        assert np.max(np.einsum("ni,ni->n", psi, Wpsi)) <= W.ground_cosine + 1e-12
        assert np.max(np.linalg.norm(Wpsi, axis=1)) <= W.ground_cosine + 1e-12

    def test_projector_properties(self):
        H = np.diag([0.0, 0.0, 1.0, 2.0])  # doubly degenerate ground level
        scaled, W = hc.prepare(H)
        P = W.ground_projector
        np.testing.assert_allclose(P @ P, P, atol=1e-14)
        np.testing.assert_allclose(P, P.T)
        assert np.trace(P) == pytest.approx(4.0)
        assert W.ground_multiplicity == 2

    def test_strict_mode_rejects_negative_cosines(self):
        spec = hc.eigendecompose(np.diag([1.0, 3.0]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PermissiveWindowWarning)
            scaled = hc.scale_to_window(spec, (0.1, 3.0))
        with pytest.raises(WindowViolation):
            hc.build_w(scaled)
        W = hc.build_w(scaled, strict=False)
        assert W.cosines[1] < 0


class TestFidelity:
    def test_ground_and_phase_invariance(self):
        _, scaled, W = random_prepared(4, 3)
        h, hs = hc.real_embed(scaled.spectrum.eigenvectors[:, 0])
        assert hc.fidelity(h, W) == pytest.approx(1.0)
        g = 0.7
        assert hc.fidelity(math.cos(g) * h + math.sin(g) * hs, W) == pytest.approx(1.0)

    def test_equal_superposition(self):
        _, scaled, W = random_prepared(4, 3)
        h0, _ = hc.real_embed(scaled.spectrum.eigenvectors[:, 0])
        h1, _ = hc.real_embed(scaled.spectrum.eigenvectors[:, 1])
        assert hc.fidelity((h0 + h1) / math.sqrt(2), W) == pytest.approx(0.5)

    def test_leakage_complements_fidelity(self):
        _, _, W = random_prepared(4, 3)
        psi = random_unit(np.random.default_rng(1), 8)
        assert hc.fidelity(psi, W) + hc.leakage(psi, W) ** 2 == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        _, _, W = random_prepared(2, 3)
        with pytest.raises(DimensionMismatch):
            hc.fidelity(np.ones(3) / math.sqrt(3), W)


class TestFileFormats:
    def test_pauli_z(self):
        np.testing.assert_allclose(hc.parse_pauli_sum("1.0 Z"), np.diag([1, -1]))

    def test_pauli_two_qubit(self):
        H = hc.parse_pauli_sum("0.5 XZ\n# comment\n\n-0.25 II")
        X = np.array([[0, 1], [1, 0]])
        Z = np.diag([1, -1])
        np.testing.assert_allclose(H, 0.5 * np.kron(X, Z) - 0.25 * np.eye(4))

    def test_pauli_y_is_hermitian(self):
        H = hc.parse_pauli_sum("1 YY\n0.3 ZY")
        hc.check_hermitian(H)

    @pytest.mark.parametrize("text", ["", "1.0", "x Z", "1.0 ZQ", "1 Z\n1 ZZ"])
    def test_pauli_errors(self, text):
        with pytest.raises(ValueError):
            hc.parse_pauli_sum(text)

    def test_json_round_trip(self, tmp_path):
        H = np.array([[1.0, 2 - 1j], [2 + 1j, -3.0]])
        path = tmp_path / "h.json"
        path.write_text(json.dumps(hc.hamiltonian_to_json(H)))
        np.testing.assert_array_equal(hc.load_hamiltonian(path), H)

    def test_json_non_hermitian(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"dim": 2, "re": [[1, 2], [3, 4]], "im": [[0, 0], [0, 0]]}))
        with pytest.raises(NonHermitian):
            hc.load_hamiltonian(path)

    def test_pauli_file(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("1.0 Z\n")
        np.testing.assert_allclose(hc.load_hamiltonian(path), np.diag([1, -1]))
