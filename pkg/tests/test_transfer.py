import math

import numpy as np
import pytest

from schottkyflow import fixtures
from schottkyflow.coding import CapacityExceeded, CylinderTower
from schottkyflow.transfer import (
    BracketFailure,
    NormalizedWeights,
    PressureCurve,
    TwistParams,
    assemble,
    dimension,
    iterate_decay,
    normalize,
    nu_norm,
    pressure,
    rpf,
)

LOG3 = math.log(3.0)


@pytest.fixture(scope="module")
def fix_a():
    return fixtures.fuchsian_pair()


@pytest.fixture(scope="module")
def fix_b():
    return fixtures.twisted_pair()


@pytest.fixture(scope="module")
def weights_b6(fix_b):
    return normalize(fix_b, 6)


@pytest.fixture(scope="module")
def weights_b8(fix_b):
    return normalize(fix_b, 8)


def fitted_slope(norms, start, stop):
    js = np.arange(start, stop + 1)
    slope, _ = np.polyfit(js, np.log(norms[js]), 1)
    return slope


class TestAssemble:
    def test_depth_one_structure(self, fix_a):
        m = assemble(fix_a, 1, "raw", TwistParams(a=0.0))
        dense = m.dense()
        assert dense.shape == (4, 4)
        assert np.count_nonzero(dense) == 12
        assert all(np.count_nonzero(dense[i]) == 3 for i in range(4))

    def test_shift_compatibility_pattern(self, fix_b):
        depth = 3
        m = assemble(fix_b, depth, "raw", TwistParams(a=0.5))
        dense = m.dense()
        words = fix_b.tower(depth).words(depth)
        rows, cols = np.nonzero(dense)
        for r, c in zip(rows, cols):
            # the source word shifted by one equals the target word truncated
            assert np.array_equal(words[c][1:], words[r][: depth - 1])
        # and vice versa: every admissible pair appears
        assert rows.size == m.nnz

    def test_twisted_moduli_match_untwisted(self, fix_b):
        base = assemble(fix_b, 4, "raw", TwistParams(a=0.7)).dense()
        for b, k in [(3.0, 0), (0.0, 2), (-5.0, 1)]:
            tw = assemble(fix_b, 4, "raw", TwistParams(0.7, b, k)).dense()
            assert np.allclose(np.abs(tw), np.abs(base), rtol=0, atol=1e-14)

    def test_capacity(self, fix_a):
        with pytest.raises(CapacityExceeded):
            assemble(fix_a, 12, "raw", capacity=10**4)


class TestRpf:
    def test_mock_constant_weight(self):
        mock = CylinderTower.constant_tau(4, 1.3, depth=4)
        for s in (0.0, 0.7, 2.1):
            data = rpf(assemble(mock, 4, "raw", TwistParams(a=s)))
            assert abs(data.lam - 3.0 * math.exp(-s * 1.3)) < 1e-12

    def test_fix_a_row_sums_at_zero(self, fix_a):
        data = rpf(assemble(fix_a, 8, "raw", TwistParams(a=0.0)))
        assert abs(data.lam - 3.0) < 1e-10

    def test_residuals_and_normalization(self, fix_b):
        data = rpf(assemble(fix_b, 8, "raw", TwistParams(a=0.3)))
        assert data.residual_right <= 1e-10
        assert data.residual_left <= 1e-10
        assert data.duality_gap < 1e-10
        assert np.all(data.h > 0) and np.all(data.nu > 0)
        assert abs(data.nu.sum() - 1.0) < 1e-12
        assert abs(float(data.nu @ data.h) - 1.0) < 1e-12

    def test_self_consistency_at_dimension(self, fix_a):
        delta = dimension(fix_a, 8)
        data = rpf(assemble(fix_a, 8, "raw", TwistParams(a=delta)))
        assert abs(data.lam - 1.0) < 1e-6

    def test_twisted_rejected(self, fix_a):
        with pytest.raises(ValueError):
            rpf(assemble(fix_a, 4, "raw", TwistParams(0.0, 1.0, 0)))

    def test_leading_eigenvalue_simple(self, fix_b):
        # deflated power iteration: project out the leading pair and confirm
        # the remainder contracts strictly slower than lambda
        m = assemble(fix_b, 6, "raw", TwistParams(a=0.3))
        data = rpf(m)
        rng = np.random.default_rng(3)
        v = rng.standard_normal(m.n)
        v -= data.h * float(data.nu @ v)
        growth = []
        for _ in range(60):
            v = np.real(m.matvec(v))
            v -= data.h * float(data.nu @ v)
            growth.append(np.linalg.norm(v))
            v /= growth[-1]
        second = np.exp(np.mean(np.log(growth[30:])))
        assert second < 0.75 * data.lam
        # dense oracle agrees on the subleading modulus
        ev = np.sort(np.abs(np.linalg.eigvals(m.dense())))[::-1]
        assert abs(ev[0] - data.lam) < 1e-10
        assert abs(ev[1] - second) < 0.05 * ev[1]


class TestPressure:
    def test_mock_line(self):
        c = 0.9
        mock = CylinderTower.constant_tau(4, c, depth=5)
        for s in (0.0, 0.4, 1.3, 2.0):
            assert abs(pressure(mock, 5, s) - (LOG3 - s * c)) < 1e-12

    @pytest.mark.parametrize("name", ["fix-a", "fix-b"])
    def test_decreasing_and_convex(self, name, fix_a, fix_b):
        scheme = fix_a if name == "fix-a" else fix_b
        curve = PressureCurve(scheme, 6)
        grid = np.linspace(0.0, 2.0, 20)
        values = np.array([curve.pressure(s) for s in grid])
        assert np.all(np.diff(values) < 0)
        assert np.all(np.diff(values, 2) >= -1e-9)


class TestDimension:
    def test_mock_exact(self):
        mock = CylinderTower.constant_tau(4, LOG3, depth=5)
        assert abs(dimension(mock, 5) - 1.0) < 1e-10

    def test_depth_refinement(self, fix_a):
        d8 = dimension(fix_a, 8)
        d10 = dimension(fix_a, 10)
        assert abs(d8 - d10) < 1e-3

    def test_bracket_failure(self):
        mock = CylinderTower.constant_tau(4, LOG3, depth=4)
        with pytest.raises(BracketFailure):
            dimension(mock, 4, bracket=(1.5, 2.0))

    def test_root_property(self, fix_b):
        delta = dimension(fix_b, 8)
        assert 0.0 < delta <= 2.0
        assert abs(pressure(fix_b, 8, delta)) < 1e-12


class TestNormalize:
    def test_unit_eigenvalue_at_zero(self, fix_b, weights_b8):
        m = assemble(fix_b, 8, "normalized", TwistParams(), weights=weights_b8)
        data = rpf(m)
        assert abs(data.lam - 1.0) <= 1e-8
        # normalized eigenvector is the constant function
        assert np.ptp(data.h) <= 1e-8 * np.max(data.h)

    def test_dual_fixes_equilibrium_weights(self, fix_b, weights_b8):
        m = assemble(fix_b, 8, "normalized", TwistParams(), weights=weights_b8)
        image = np.real(m.rmatvec(weights_b8.nu_U))
        assert np.abs(image - weights_b8.nu_U).sum() <= 1e-8

    def test_unit_eigenvalue_at_offset(self, fix_b):
        w = normalize(fix_b, 6, a=0.07)
        m = assemble(fix_b, 6, "normalized", TwistParams(a=0.07), weights=w)
        data = rpf(m)
        assert abs(data.lam - 1.0) <= 1e-8

    def test_f_entries_reproduce_matrix(self, fix_b, weights_b6):
        w = weights_b6
        m = assemble(fix_b, 6, "normalized", TwistParams(), weights=w)
        rows, cols, f = w.f_entries(m)
        dense = np.real(m.dense())
        assert np.allclose(dense[rows, cols], np.exp(f), rtol=1e-12, atol=0)

    def test_depth_mismatch_rejected(self, fix_b, weights_b6):
        with pytest.raises(ValueError):
            assemble(fix_b, 8, "normalized", TwistParams(), weights=weights_b6)


class TestIterateDecay:
    def test_eigenvector_gives_constant_sequence(self, fix_b, weights_b8):
        h = np.ones(weights_b8.nu_U.size)
        norms = iterate_decay(fix_b, 8, TwistParams(), h, 40, weights=weights_b8)
        assert np.max(np.abs(norms / norms[0] - 1.0)) < 1e-9

    def test_zero_mean_decays_at_subleading_rate(self, fix_b, weights_b6):
        m = assemble(fix_b, 6, "normalized", TwistParams(), weights=weights_b6)
        ev = np.sort(np.abs(np.linalg.eigvals(m.dense())))[::-1]
        rng = np.random.default_rng(9)
        H0 = rng.standard_normal(m.n)
        H0 -= float(weights_b6.nu_U @ H0)
        norms = iterate_decay(fix_b, 6, TwistParams(), H0, 25, weights=weights_b6)
        eta = -fitted_slope(norms, 6, 25)
        assert abs(eta - (-math.log(ev[1]))) < 0.05 * (-math.log(ev[1]))

    def test_pointwise_dominance_of_iterate_norms(self, fix_b, weights_b8):
        params = TwistParams(0.0, 7.0, 2)
        rng = np.random.default_rng(21)
        H0 = rng.standard_normal(weights_b8.nu_U.size) \
            + 1j * rng.standard_normal(weights_b8.nu_U.size)
        twisted = iterate_decay(fix_b, 8, params, H0, 30, weights=weights_b8)
        plain = iterate_decay(fix_b, 8, TwistParams(), np.abs(H0), 30,
                              weights=weights_b8)
        assert np.all(twisted <= plain * (1 + 1e-9))


class TestDominance:
    def test_entrywise(self, fix_b, weights_b8):
        m = assemble(fix_b, 8, "normalized", TwistParams(0.0, 5.0, 1),
                     weights=weights_b8)
        comparison = m.modulus()
        rng = np.random.default_rng(5)
        for _ in range(10):
            H = rng.standard_normal(m.n) + 1j * rng.standard_normal(m.n)
            lhs = np.abs(m.matvec(H))
            rhs = np.real(comparison.matvec(np.abs(H)))
            assert np.all(lhs <= rhs * (1 + 1e-9))


class TestGaugeInvariance:
    def test_decay_rate_invariant_under_regauge(self, fix_b, weights_b8):
        params = TwistParams(0.0, 5.0, 1)
        rng = np.random.default_rng(123)
        H0 = rng.standard_normal(weights_b8.nu_U.size)
        H0 /= nu_norm(H0, weights_b8.nu_U)
        phi = np.random.default_rng(77).uniform(-0.3, 0.3, fix_b.tower(8).level(7).n)
        n = 120
        base = -fitted_slope(
            iterate_decay(fix_b, 8, params, H0, n, weights=weights_b8), n // 2, n)
        regauged = -fitted_slope(
            iterate_decay(fix_b, 8, params, H0, n, weights=weights_b8, regauge=phi),
            n // 2, n)
        assert abs(base - regauged) < 1e-6

    def test_regauge_is_diagonal_conjugation(self, fix_b):
        depth = 3
        tower = fix_b.tower(depth)
        phi = np.random.default_rng(4).uniform(-1, 1, tower.level(depth - 1).n)
        params = TwistParams(0.0, 0.0, 1)
        w = normalize(fix_b, depth)
        plain = assemble(fix_b, depth, "normalized", params, weights=w).dense()
        gauged = assemble(fix_b, depth, "normalized", params, weights=w,
                          regauge=phi).dense()
        _, _, prefix_idx = tower.transfer_indices(depth)
        # with phi constant on depth-(k-1) cylinders the conjugating diagonal
        # acts through the truncation on rows and the shift on columns
        lv = tower.level(depth)
        d_row = np.exp(-1j * params.k_rep * phi[prefix_idx])
        rows, cols = np.nonzero(plain)
        expect = plain[rows, cols] * np.exp(
            -1j * params.k_rep * (phi[lv.parent[cols]] - phi[prefix_idx[cols]]))
        assert np.allclose(gauged[rows, cols], expect, atol=1e-14)
        # spectra agree exactly up to roundoff
        ev_plain = np.sort(np.abs(np.linalg.eigvals(plain)))
        ev_gauged = np.sort(np.abs(np.linalg.eigvals(gauged)))
        assert np.allclose(ev_plain, ev_gauged, rtol=1e-10, atol=1e-12)


class TestLogRegularity:
    def log_h_oscillation(self, scheme, depth):
        w = normalize(scheme, depth)
        tower = scheme.tower(depth)
        logh = np.log(w.h0)
        # group cylinders one level coarser than the resolved scale: the
        # collocation image is constant on groups sharing a truncation, so
        # the finest informative grouping shares the first depth-2 symbols
        enc = tower.level(depth).enc // (tower.n_symbols ** 2)
        order = np.argsort(enc, kind="stable")
        groups = np.split(order, np.nonzero(np.diff(enc[order]))[0] + 1)
        return max(logh[g].max() - logh[g].min() for g in groups)

    @pytest.mark.parametrize("name", ["fix-a", "fix-b"])
    def test_oscillation_non_increasing_in_depth(self, name, fix_a, fix_b):
        scheme = fix_a if name == "fix-a" else fix_b
        shallow = self.log_h_oscillation(scheme, 6)
        deep = self.log_h_oscillation(scheme, 10)
        assert deep <= 1.1 * shallow
        assert shallow < 0.1
