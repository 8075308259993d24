"""Tests for swingmor.sysops"""

import io

import numpy as np
import pytest
import scipy.linalg as la
from swingmor.config import FrequencyGrid
from swingmor.errors import ModelError, ResidueMismatchError, SingularPencilError, UnstableSystemError
from swingmor.netmodel import NetworkModel, ParameterSpace, SecondOrderModel, generate_network
from swingmor.sysops import (
    FirstOrderRealization,
    companion_form,
    deflate_zero_mode,
    error_split,
    eval_transfer,
    frequency_response,
    h2_error,
    h2_norm,
    h2_norm_quadrature,
    hinf_norm,
    solve_pencil,
    spectral_split,
    system_residue,
    write_frequency_csv,
    zero_residue,
)
from swingmor.utils import relative_error

PATH3_L = np.array([[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 2.0]])


def path3_model(damping=(1.0, 1.0, 1.0), nu=1) -> SecondOrderModel:
    net = NetworkModel(3, ((0, 1, 1.0), (1, 2, 2.0)), np.array([1.0, 2.0, 3.0]), np.array(damping), np.eye(3)[:, :1], np.eye(3)[:1])
    return SecondOrderModel.from_network(net, ParameterSpace.uniform_blocks(3, nu))


def random_model(n=20, nu=2, seed=11, inputs=(0,)) -> SecondOrderModel:
    net = generate_network("random_connected", n, seed=seed, inputs=inputs)
    return SecondOrderModel.from_network(net, ParameterSpace.uniform_blocks(n, nu))


def random_stable(order: int, seed: int) -> FirstOrderRealization:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(order, order)) / np.sqrt(order)
    A -= (np.max(la.eigvals(A).real) + 0.5) * np.eye(order)
    return FirstOrderRealization(A, rng.normal(size=(order, 2)), rng.normal(size=(2, order)))


class TestEvalTransfer:
    """Tests for eval_transfer and solve_pencil."""

    def test_real_frequency(self):
        model = path3_model()
        H = eval_transfer(model, 1.0, [1.0])
        expected = np.linalg.solve(np.diag([2.0, 3.0, 4.0]) + PATH3_L, np.eye(3)[:, :1])[:1]
        assert np.isrealobj(H)
        assert np.allclose(H, expected, rtol=1e-13, atol=0)

    def test_complex_frequency(self):
        model = path3_model()
        s = 0.2 + 1.5j
        K = s * s * np.diag([1.0, 2.0, 3.0]) + s * np.eye(3) + PATH3_L
        expected = np.linalg.solve(K, np.eye(3)[:, :1])[:1]
        assert relative_error(eval_transfer(model, s, [1.0]), expected) <= 1e-13

    def test_singular_at_zero(self):
        with pytest.raises(SingularPencilError) as info:
            eval_transfer(path3_model(), 0.0, [1.0])
        assert info.value.s == 0.0
        assert info.value.rcond is not None
        assert info.value.rcond < 1e-12

    def test_exactly_singular_reports_zero_rcond(self):
        with pytest.raises(SingularPencilError) as info:
            solve_pencil(np.zeros((2, 2)), np.eye(2), 1j)
        assert info.value.rcond == 0.0
        assert "estimate 0.000e+00" in str(info.value)

    def test_frequency_response_shape(self):
        model = random_model(inputs=(0, 3))
        responses = frequency_response(model, np.array([0.1, 1.0, 10.0]), [1.0, 1.0])
        assert responses.shape == (3, 2, 2)


class TestCompanionForm:
    """Tests for companion_form function."""

    def test_spectrum(self):
        real = companion_form(path3_model(), [1.0])
        poles = real.poles()
        order = np.argsort(np.abs(poles))
        assert abs(poles[order[0]]) <= 1e-12
        assert np.all(poles[order[1:]].real < 0)

    def test_transfer_matches(self):
        model = random_model()
        p = [0.9, 1.1]
        real = companion_form(model, p)
        for s in (0.5 + 1.0j, 2.0, 0.01j):
            assert relative_error(real.transfer(s), eval_transfer(model, s, p)) <= 1e-10


class TestZeroResidue:
    """Tests for zero_residue and system_residue."""

    def test_formula(self):
        residue = zero_residue(np.eye(3)[:1], np.eye(3)[:, :1], np.ones(3), np.ones(3))
        assert residue.alpha_D == 3.0
        assert residue.phi0 == pytest.approx(np.array([[1.0 / 3.0]]))

    def test_scale_invariant(self):
        D = np.array([1.0, 2.0, 0.5])
        upsilon = np.array([1.0, 0.9, 1.2])
        a = zero_residue(np.eye(3), np.eye(3), D, upsilon).phi0
        b = zero_residue(np.eye(3), np.eye(3), np.diag(D), -4.0 * upsilon).phi0
        assert np.allclose(a, b, rtol=1e-15, atol=1e-16)

    def test_zero_vector(self):
        with pytest.raises(ModelError, match="nonzero null vector"):
            zero_residue(np.eye(2), np.eye(2), np.ones(2), np.zeros(2))

    def test_partial_fraction_oracle(self):
        model = random_model(n=6, nu=2, seed=2, inputs=(0, 4))
        p = [0.95, 1.08]
        real = companion_form(model, p)
        lam, left, right = la.eig(real.A, left=True, right=True)
        k = int(np.argmin(np.abs(lam)))
        oracle = np.outer(real.C @ right[:, k], left[:, k].conj() @ real.B) / (left[:, k].conj() @ right[:, k])
        assert relative_error(system_residue(model, p).phi0, oracle.real) <= 1e-10
        assert np.linalg.norm(oracle.imag) <= 1e-10 * np.linalg.norm(oracle)

    def test_zero_eigenvectors(self):
        model = random_model(n=8, nu=2, seed=3, inputs=(0, 5))
        p = [0.9, 1.12]
        A = companion_form(model, p).A
        q1, q1_left = system_residue(model, p).eigenvectors(model.mass_matrix, model.damping_matrix)
        scale = np.linalg.norm(A) * np.linalg.norm(q1)
        assert np.linalg.norm(A @ q1) <= 1e-12 * scale
        assert np.linalg.norm(A.T @ q1_left) <= 1e-12 * np.linalg.norm(A) * np.linalg.norm(q1_left)
        assert q1_left @ q1 == pytest.approx(1.0, abs=1e-13)

    def test_limit(self):
        model = path3_model()
        s = 1e-7
        assert relative_error(s * eval_transfer(model, s, [1.0]), system_residue(model, [1.0]).phi0) <= 1e-5

    def test_no_zero_pole(self):
        model = SecondOrderModel(PATH3_L + np.eye(3), np.ones(3), np.ones(3), np.eye(3), np.eye(3), ParameterSpace.full(3))
        assert system_residue(model, [1.0, 1.0, 1.0]) is None


class TestSpectralSplit:
    """Tests for spectral_split and deflate_zero_mode."""

    def test_recombination(self):
        model = random_model()
        p = [1.05, 0.9]
        split = spectral_split(model, p)
        for s in (1j, 0.3 + 0.2j, 5.0):
            assert relative_error(split.transfer(s), eval_transfer(model, s, p)) <= 1e-9

    def test_stable_part(self):
        split = spectral_split(path3_model(), [1.0])
        assert split.stable.order == 5
        assert np.all(split.stable_poles.real < 0)
        assert split.phi0 == pytest.approx(np.array([[1.0 / 3.0]]))

    def test_without_zero_pole(self):
        model = SecondOrderModel(PATH3_L + np.eye(3), np.ones(3), np.ones(3), np.eye(3), np.eye(3), ParameterSpace.full(3))
        split = spectral_split(model, [1.0, 1.0, 1.0])
        assert split.residue is None
        assert split.stable.order == 6
        assert np.array_equal(split.phi0, np.zeros((3, 3)))

    def test_residue_without_zero_eigenvalue(self):
        model = path3_model()
        real = companion_form(SecondOrderModel(PATH3_L + np.eye(3), np.ones(3), np.ones(3), np.eye(3)[:, :1], np.eye(3)[:1], ParameterSpace.full(3)), [1.0] * 3)
        with pytest.raises(ModelError, match="no eigenvalue"):
            deflate_zero_mode(real, system_residue(model, [1.0]))

    def test_multiple_zero_eigenvalues(self):
        real = FirstOrderRealization(np.zeros((2, 2)), np.ones((2, 1)), np.ones((1, 2)), np.eye(1), np.eye(1))
        residue = zero_residue(np.ones((1, 1)), np.ones((1, 1)), np.ones(1), np.ones(1))
        with pytest.raises(ModelError, match="multiple near-zero"):
            deflate_zero_mode(real, residue)


class TestH2Norm:
    """Tests for the H2 norm and error."""

    def test_first_order_oracle(self):
        real = FirstOrderRealization(np.array([[-2.0]]), np.array([[1.0]]), np.array([[1.0]]))
        assert h2_norm(real) == pytest.approx(0.5, rel=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_quadrature_agreement(self, seed):
        real = random_stable(order=5 + 4 * seed, seed=seed)
        assert h2_norm_quadrature(real) == pytest.approx(h2_norm(real), rel=1e-2)

    def test_deflated_quadrature_agreement(self):
        split = spectral_split(random_model(), [0.9, 1.1])
        assert h2_norm_quadrature(split) == pytest.approx(h2_norm(split), rel=1e-2)

    def test_unstable(self):
        real = FirstOrderRealization(np.array([[0.5]]), np.array([[1.0]]), np.array([[1.0]]))
        with pytest.raises(UnstableSystemError):
            h2_norm(real)

    def test_error_with_itself(self):
        model = random_model()
        split = spectral_split(model, [1.0, 1.0])
        assert h2_error(split, split) <= 1e-4 * h2_norm(split)

    def test_error_refuses_mismatched_residues(self):
        full = spectral_split(path3_model(), [1.0])
        other = spectral_split(path3_model(damping=(1.0, 2.0, 1.0)), [1.0])
        with pytest.raises(ResidueMismatchError) as info:
            error_split(full, other)
        assert info.value.deviation == pytest.approx(0.25)


class TestHinfNorm:
    """Tests for hinf_norm function."""

    def test_lowpass(self):
        real = FirstOrderRealization(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]))
        value, omega = hinf_norm(real.transfer)
        assert value == pytest.approx(1.0, abs=1e-6)
        assert omega <= 1e-3

    def test_resonance_peak(self):
        zeta = 0.1
        real = FirstOrderRealization(np.array([[0.0, 1.0], [-1.0, -2 * zeta]]), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))
        value, omega = hinf_norm(real.transfer, FrequencyGrid(1e-2, 1e2, 200))
        assert value == pytest.approx(1 / (2 * zeta * np.sqrt(1 - zeta**2)), rel=1e-6)
        assert omega == pytest.approx(np.sqrt(1 - 2 * zeta**2), rel=1e-3)

    def test_grid_value_is_lower_bound(self):
        real = FirstOrderRealization(np.array([[0.0, 1.0], [-1.0, -0.05]]), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))
        coarse, _ = hinf_norm(real.transfer, FrequencyGrid(1e-2, 1e2, 30, refine=False))
        refined, _ = hinf_norm(real.transfer, FrequencyGrid(1e-2, 1e2, 30))
        assert coarse <= refined

    def test_precomputed_samples(self):
        real = random_stable(6, seed=3)
        grid = FrequencyGrid(1e-2, 1e2, 50, refine=False)
        omegas = np.logspace(-2, 2, 50)
        samples = np.array([real.transfer(1j * w) for w in omegas])
        assert hinf_norm(real.transfer, grid, samples) == hinf_norm(real.transfer, grid)


class TestFrequencyCsv:
    """Tests for write_frequency_csv function."""

    def test_columns(self):
        responses = np.array([[[1.0 + 1.0j]], [[0.5 - 0.5j]]])
        stream = io.StringIO()
        write_frequency_csv(stream, np.array([1.0, 2.0]), responses, entries=True)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "omega,sigma_max_H,fro_H,re_H_0_0,im_H_0_0"
        assert len(lines) == 3
        assert lines[2].split(",")[3:] == ["0.5", "-0.5"]
