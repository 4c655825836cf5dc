import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import quadrature_l2_sq
from hfns import (
    Forcing,
    SimParams,
    SpectralVectorField,
    Trajectory,
    check_decay_bound,
    check_dissipation_bound,
    check_energy_identity,
    check_h2_bound,
    compute_constants,
    make_grid,
    random_solenoidal,
    simulate,
    single_mode,
    taylor_green,
)
from hfns.estimates import (
    BoundReport,
    Constants,
    calibrate_h2_constant,
    cumulative_trapezoid,
    gronwall_entry_time,
    gronwall_envelope,
    k0,
    k1,
    k2,
    k3,
    k4,
)
from hfns.exceptions import HorizontalMeanError, OffLatticeError

PI3 = math.pi**3


def zero_traj(n=8, T=2.0, sample_dt=0.1, alpha=0.1):
    p = SimParams(nu=0.1, alpha=alpha, n=n, dt=sample_dt, T=T)
    g = p.grid
    return Trajectory.constant(p, SpectralVectorField.zeros(g), p.n_samples)


def decay_run(nu=0.1, dt=0.01, T=2.0, sample_dt=None, n=8):
    p = SimParams(nu=nu, alpha=0.3, n=n, dt=dt, T=T, sample_dt=sample_dt)
    w0 = single_mode(p.grid, (0, 0, 1), 1.0, (1, 0, 0))
    return simulate(w0, None, p)


def three_d_taylor_green(grid):
    x1, x2, x3 = grid.coordinates
    shape = (grid.n,) * 3
    u = np.zeros((3,) + shape)
    u[0] = np.broadcast_to(np.sin(x1) * np.cos(x2) * np.cos(x3), shape)
    u[1] = np.broadcast_to(-np.cos(x1) * np.sin(x2) * np.cos(x3), shape)
    return SpectralVectorField.from_physical(grid, u)


class TestConstants:
    def test_zero_forcing(self, grid8):
        p = SimParams(nu=0.1, alpha=0.5, n=8)
        c = compute_constants(Forcing.zero(grid8), p)
        assert (c.K1, c.K1_literal, c.K2) == (0.0, 0.0, 0.0)
        assert c.lambda1 == 1.0

    def test_unit_horizontal_mode(self, grid8):
        p = SimParams(nu=0.1, alpha=1.0, n=8)
        f = single_mode(grid8, (1, 0, 0), 0.7, (0, 1, 0))
        f_sq = quadrature_l2_sq(f.physical())
        c = compute_constants(Forcing(f), p)
        assert c.K1 == pytest.approx(f_sq / 0.1, rel=1e-12)
        assert c.K1_literal == pytest.approx(f_sq, rel=1e-12)
        assert c.K2 == pytest.approx(3 / 0.1 * f_sq, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_second_horizontal_mode(self, grid8, alpha):
        p = SimParams(nu=0.1, alpha=alpha, n=8)
        f = single_mode(grid8, (2, 0, 0), 1.0, (0, 1, 0))
        f_sq = quadrature_l2_sq(f.physical())
        c = compute_constants(Forcing(f), p)
        branch_a = f_sq / 16 / (0.1 * alpha**2)
        branch_b = f_sq / 4 / 0.1
        assert c.K1 == pytest.approx(min(branch_a, branch_b), rel=1e-12)
        assert c.K1_literal == pytest.approx(min(f_sq / 4, f_sq / 2), rel=1e-12)
        assert c.K2 == pytest.approx(30 * min(f_sq / 4 / alpha**2, f_sq), rel=1e-12)

    def test_alpha_zero_uses_second_branch(self, grid8):
        p = SimParams(nu=0.2, alpha=0.0, n=8)
        f = single_mode(grid8, (1, 1, 0), 1.0, (1, -1, 0))
        c = compute_constants(Forcing(f), p)
        f_sq = quadrature_l2_sq(f.physical())
        assert c.K1 == pytest.approx(f_sq / 2 / 0.2, rel=1e-12)
        assert c.K2 == pytest.approx(3 / 0.2 * f_sq, rel=1e-12)

    def test_obstruction_on_raw_field(self, grid8):
        p = SimParams(nu=0.1, alpha=0.5, n=8)
        with pytest.raises(HorizontalMeanError):
            compute_constants(single_mode(grid8, (0, 0, 1), 1.0, (0, 1, 0)), p)

    def test_negative_c_rejected(self, grid8):
        with pytest.raises(ValueError):
            compute_constants(Forcing.zero(grid8), SimParams(nu=0.1, alpha=0.1, n=8), C_h2=-1.0)

    @settings(max_examples=20, deadline=None)
    @given(scale=st.floats(1.0, 100.0), alpha=st.floats(0.0, 2.0))
    def test_quadratic_scaling(self, scale, alpha):
        g = make_grid(8)
        p = SimParams(nu=0.1, alpha=alpha, n=8)
        f = single_mode(g, (1, 2, 1), 1.0, (2, -1, 0)) + single_mode(g, (3, 0, 0), 0.5, (0, 0, 1))
        a = compute_constants(Forcing(f), p)
        b = compute_constants(Forcing(f * scale), p)
        assert b.K1 == pytest.approx(scale**2 * a.K1, rel=1e-12)
        assert b.K1_literal == pytest.approx(scale**2 * a.K1_literal, rel=1e-12)
        assert b.K2 == pytest.approx(scale**2 * a.K2, rel=1e-12)


class TestUtilityFunctions:
    def test_zero_trajectory(self):
        tr = zero_traj()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        assert k0(tr, 0.5) == k1(tr, 0.5, None, c) == k2(tr, 0.5) == 0.0
        assert k3(0.5, tr.params, c, tr) == 0.0
        assert k4(tr, 0.5, None, c) == 0.0

    def test_single_mode_k0(self):
        tr = decay_run(T=0.1)
        assert k0(tr, 0.0) == pytest.approx(4 * PI3, rel=1e-14)

    def test_taylor_green_k0(self, grid8):
        p = SimParams(nu=0.1, alpha=0.1, n=8, T=0.0)
        tr = Trajectory.constant(p, taylor_green(grid8), 1)
        assert k0(tr, 0.0) == pytest.approx(4 * PI3 + 0.01 * 8 * PI3, rel=1e-14)

    def test_k1_to_k4_formulas(self, grid8):
        p = SimParams(nu=0.2, alpha=0.5, n=8, dt=0.1, T=0.0)
        tr = Trajectory.constant(p, taylor_green(grid8), 1)
        f = Forcing(single_mode(grid8, (1, 0, 0), 1.0, (0, 1, 0)))
        c = compute_constants(f, p, C_h2=0.3)
        K1, K2, a, nu = c.K1, c.K2, 0.5, 0.2
        k1v = k0(tr, 0) + K1 / nu
        assert k1(tr, 0, p, c) == pytest.approx(k1v, rel=1e-14)
        k3v = K2 + 0.3 * k1v**3 / (a**8 * nu**3) * (1 / a**4 + k1v**2 / nu**4)
        assert k3(0, p, c, tr) == pytest.approx(k3v, rel=1e-13)
        assert k4(tr, 0, p, c) == pytest.approx(k2(tr, 0) + k3v / nu, rel=1e-13)

    def test_k3_without_trajectory(self):
        p = SimParams(nu=0.1, alpha=0.1, n=8)
        assert k3(0, p, Constants(1.0, 0.0, 0.0, 2.0, C_h2=0.0)) == 2.0
        with pytest.raises(ValueError):
            k3(0, p, Constants(1.0, 0.0, 0.0, 2.0, C_h2=1.0))

    def test_off_lattice(self):
        tr = zero_traj()
        with pytest.raises(OffLatticeError):
            k0(tr, 0.05)
        with pytest.raises(OffLatticeError):
            k0(tr, 2.1)

    @settings(max_examples=50, deadline=None)
    @given(
        y0=st.floats(0, 1e6),
        source=st.floats(0, 1e6),
        rate=st.floats(1e-3, 10),
        s=st.floats(0, 1e3),
    )
    def test_envelope_below_k1(self, y0, source, rate, s):
        env = float(gronwall_envelope(y0, source, rate, s))
        assert env <= (y0 + source / rate) * (1 + 1e-12)

    def test_entry_time(self):
        p = SimParams(nu=0.1, alpha=0.1, n=8)
        c = Constants(1.0, 1.0, 1.0, 0.0)
        assert gronwall_entry_time(5.0, c, p) == 0.0
        assert gronwall_entry_time(100.0, c, p) == pytest.approx(math.log(10.0) / 0.1)
        assert gronwall_entry_time(1.0, Constants(1.0, 0.0, 0.0, 0.0), p) == math.inf

    def test_cumulative_trapezoid(self):
        y = np.array([0.0, 1.0, 4.0, 9.0])
        np.testing.assert_allclose(cumulative_trapezoid(y, 0.5), [0, 0.25, 1.5, 4.75])


class TestBoundReport:
    def test_satisfied_iff_within_tolerance(self):
        t = np.arange(3.0)
        rep = BoundReport("x", t, np.array([1.0, 2.0, 3.0]), np.array([1.5, 2.0, 2.5]), np.zeros(3))
        assert rep.worst_violation == 0.5
        assert not rep.satisfied
        rep.tolerance = 0.5
        assert rep.satisfied
        np.testing.assert_array_equal(rep.margin, [0.5, 0.0, -0.5])
        assert rep.worst_margin == -0.5

    def test_slack_absorbs(self):
        rep = BoundReport("x", np.zeros(1), np.array([1.0 + 1e-9]), np.array([1.0]), np.array([2e-9]))
        assert rep.satisfied

    def test_csv(self, tmp_path):
        rep = BoundReport(
            "x", np.array([0.0, 0.1]), np.array([1.0, 2.0]), np.array([3.0, 1 / 3]), np.zeros(2),
            columns={"k1": np.array([5.0, 5.0])},
        )
        path = tmp_path / "r.csv"
        rep.to_csv(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["t", "lhs", "rhs", "margin", "k1"]
        assert float(rows[2][2]) == 1 / 3  # repr floats round-trip exactly


class TestEnergyIdentity:
    def test_zero(self):
        tr = zero_traj()
        rep = check_energy_identity(tr, Forcing.zero(tr.params.grid))
        assert rep.worst_violation == 0.0
        assert rep.satisfied

    def test_exact_decay_tight(self):
        tr = decay_run(dt=2e-4, T=1.0)
        rep = check_energy_identity(tr, Forcing.zero(tr.params.grid))
        assert rep.worst_violation <= 1e-10

    def test_quadrature_convergence(self):
        res = []
        for h in (0.1, 0.05, 0.025):
            tr = decay_run(dt=h, T=2.0)
            res.append(check_energy_identity(tr, Forcing.zero(tr.params.grid)).worst_violation)
        assert 3 <= res[0] / res[1] <= 5
        assert 3 <= res[1] / res[2] <= 5

    def test_forced_sign_diagnostic(self, grid8):
        p = SimParams(nu=0.1, alpha=0.5, n=8, dt=1e-2, T=1.0)
        f = Forcing(single_mode(grid8, (1, 0, 0), 2.0, (0, 1, 0)))
        tr = simulate(taylor_green(grid8), f, p)
        rep = check_energy_identity(tr, f)
        assert rep.notes["sign_supported"] == "+<f,w>"
        assert rep.notes["residual_alternative_sign"] > 100 * rep.worst_violation
        assert rep.satisfied

    def test_unforced_sign_note(self):
        tr = zero_traj()
        rep = check_energy_identity(tr, Forcing.zero(tr.params.grid))
        assert "indistinguishable" in rep.notes["sign_supported"]


class TestDecayBound:
    def test_exact_decay_strict_margin(self):
        tr = decay_run()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        rep = check_decay_bound(tr, c)
        assert rep.satisfied
        assert np.all(rep.margin > 0)
        y0 = 4 * PI3
        np.testing.assert_allclose(rep.lhs, y0 * np.exp(-0.2 * rep.times), rtol=1e-12)
        np.testing.assert_allclose(rep.rhs, y0 * np.exp(-0.1 * rep.times), rtol=1e-12)

    def test_zero_trajectory(self):
        tr = zero_traj()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        assert check_decay_bound(tr, c).satisfied

    def test_windows_from_later_start(self):
        tr = decay_run()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        for origin in (True, False):
            rep = check_decay_bound(tr, c, t=0.5, r=[0.5, 1.0], from_origin=origin)
            assert rep.satisfied
            np.testing.assert_allclose(rep.times, [1.0, 1.5])
        assert rep.notes["envelope_below_k1"]

    def test_printed_exponent_fails_for_later_start(self):
        """Decaying from time 0 understates the envelope once t > 0 and must be allowed to fail."""
        p = SimParams(nu=0.5, alpha=0.1, n=8, dt=0.05, T=4.0)
        w0 = single_mode(p.grid, (0, 0, 1), 1.0, (1, 0, 0))
        # a state whose V_h energy is *constant*: frozen samples (not a solution)
        tr = Trajectory.constant(p, w0, p.n_samples)
        c = compute_constants(Forcing.zero(p.grid), p)
        assert not check_decay_bound(tr, c, t=2.0, r=1.0, from_origin=True).satisfied
        assert not check_decay_bound(tr, c, t=2.0, r=1.0, from_origin=False).satisfied

    def test_bad_arguments(self):
        tr = decay_run()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        with pytest.raises(ValueError):
            check_decay_bound(tr, c, r=-1.0)
        with pytest.raises(OffLatticeError):
            check_decay_bound(tr, c, t=0.005)


class TestDissipationBound:
    def test_zero_trajectory(self):
        tr = zero_traj()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        rep = check_dissipation_bound(tr, c, r=1.0)
        assert rep.satisfied
        assert np.all(rep.lhs == 0)

    def test_closed_form_exact_decay(self):
        tr = decay_run(dt=1e-3, T=2.0, sample_dt=1e-2)
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        y0 = 4 * PI3
        for r in (0.5, 1.0):
            rep = check_dissipation_bound(tr, c, t=0.0, r=r)
            closed = y0 * (1 - math.exp(-0.2 * r)) / 2
            assert rep.lhs[0] == pytest.approx(closed, rel=1e-5)
            assert rep.rhs[0] == pytest.approx(y0, rel=1e-12)
            assert rep.satisfied

    def test_all_starts(self):
        tr = decay_run(T=2.0, dt=0.05)
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        rep = check_dissipation_bound(tr, c, r=0.5)
        assert len(rep.times) == len(tr) - 10
        assert rep.satisfied

    def test_consequence_of_energy_identity(self, grid16):
        p = SimParams(nu=0.05, alpha=0.2, n=16, dt=5e-3, T=1.0, sample_dt=0.05)
        tr = simulate(random_solenoidal(grid16, 6, amplitude=4.0), None, p)
        eps = check_energy_identity(tr, Forcing.zero(grid16)).worst_violation
        c = compute_constants(Forcing.zero(grid16), p)
        rep = check_dissipation_bound(tr, c, r=0.5)
        assert rep.worst_margin >= -eps * rep.rhs.max()
        assert rep.satisfied


class TestH2Bound:
    def test_zero_trajectory_any_constant(self):
        tr = zero_traj()
        for C in (0.0, 1.0, 1e6):
            c = compute_constants(Forcing.zero(tr.params.grid), tr.params, C_h2=C)
            assert check_h2_bound(tr, c).satisfied

    def test_exact_decay_with_zero_constant(self):
        tr = decay_run()
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params, C_h2=0.0)
        rep = check_h2_bound(tr, c)
        assert rep.satisfied
        assert rep.notes["calibrated_C_h2"] == 0.0

    @pytest.fixture(scope="class")
    @classmethod
    def stretching_run(cls):
        """Unforced 3D Taylor-Green at low viscosity: ||grad w|| grows, so C must be positive."""
        p = SimParams(nu=0.02, alpha=0.1, n=16, dt=2e-3, T=2.0, sample_dt=2e-2)
        return simulate(three_d_taylor_green(p.grid), None, p)

    def test_calibration_finite_and_positive(self, stretching_run):
        tr = stretching_run
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params, C_h2=0.0)
        assert not check_h2_bound(tr, c).satisfied
        C = calibrate_h2_constant(tr, c)
        assert 0 < C < math.inf
        from dataclasses import replace

        assert check_h2_bound(tr, replace(c, C_h2=C)).satisfied
        assert not check_h2_bound(tr, replace(c, C_h2=0.5 * C)).satisfied

    def test_monotone_in_constant(self, stretching_run):
        from dataclasses import replace

        tr = stretching_run
        c = compute_constants(Forcing.zero(tr.params.grid), tr.params)
        C = calibrate_h2_constant(tr, c)
        flags = [check_h2_bound(tr, replace(c, C_h2=s * C)).satisfied for s in np.geomspace(1e-3, 1e3, 13)]
        # once satisfied, always satisfied for larger constants
        first = flags.index(True)
        assert all(flags[first:]) and not any(flags[:first])

    def test_alpha_zero_calibration(self, grid8):
        p = SimParams(nu=0.02, alpha=0.0, n=8, dt=1e-2, T=1.0)
        tr = simulate(three_d_taylor_green(grid8), None, p)
        c = compute_constants(Forcing.zero(grid8), p)
        C = calibrate_h2_constant(tr, c)
        assert C >= 0 and math.isfinite(C)
