"""Relative energy: coercivity, the remainder identity, restriction,
differenced references, and the two-trajectory audit."""

import numpy as np
import pytest

from chemoflow.dynamics import SchemeSettings, run
from chemoflow.fields import (
    PhysParams,
    ScalarField,
    State,
    VectorField,
    make_grid,
)
from chemoflow.operators import StencilOps
from chemoflow.relenergy import (
    RefState,
    j_term_breakdown,
    reference_series,
    relative_ledger,
    relenergy_audit,
    residual_f,
    residual_g,
    residual_h,
    restrict_array,
    restrict_state,
    weak_strong_diagnostic,
)
from chemoflow.synth import gaussian_blob, random_trig_scalar


def _random_pair(grid, seed):
    """A weak-side state and a positive reference on the same grid."""
    rng = np.random.default_rng(seed)
    base = ScalarField.from_callable(grid, random_trig_scalar(rng, kmax=2, amplitude=0.2))
    rho = ScalarField(grid, 1.0 + np.abs(base.data))
    v = VectorField(grid, 0.2 * rng.normal(size=(grid.dim,) + grid.shape))
    c = ScalarField(grid, 0.5 + 0.1 * rng.random(grid.shape))
    state = State(0.0, rho, v, c)
    r = ScalarField(grid, 1.0 + 0.3 * rng.random(grid.shape))
    u = VectorField(grid, 0.2 * rng.normal(size=(grid.dim,) + grid.shape))
    z = ScalarField(grid, 0.4 + 0.2 * rng.random(grid.shape))
    ref = RefState(t=0.0, r=r, u=u, z=z)
    return state, ref


class TestCoercivity:
    def test_distance_to_self_is_zero(self):
        g = make_grid(2, 16, 16)
        state, _ = _random_pair(g, 0)
        ref = RefState(t=0.0, r=state.rho, u=state.v, z=state.c)
        led = relative_ledger(state, ref, PhysParams())
        assert led.rel_E == 0.0
        assert led.rel_H == 0.0
        assert led.rel_internal == 0.0
        assert led.rel_kin == 0.0
        assert led.rel_chem == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_coercive_parts_nonnegative(self, seed):
        g = make_grid(2, 16, 16)
        state, ref = _random_pair(g, seed)
        led = relative_ledger(state, ref, PhysParams(gamma=1.7))
        assert led.rel_internal >= 0.0
        assert led.rel_kin >= 0.0
        assert led.rel_chem >= 0.0
        assert led.rel_H >= 0.0

    def test_reference_must_be_positive(self):
        g = make_grid(2, 8, 8)
        state, _ = _random_pair(g, 1)
        with pytest.raises(ValueError):
            RefState(
                t=0.0,
                r=ScalarField.zeros(g),
                u=VectorField.zeros(g),
                z=ScalarField.zeros(g),
            )

    def test_grid_mismatch_rejected(self):
        state, _ = _random_pair(make_grid(2, 16, 16), 2)
        _, ref = _random_pair(make_grid(2, 8, 8), 2)
        with pytest.raises(ValueError):
            relative_ledger(state, ref, PhysParams())


class TestRemainderIdentity:
    @pytest.mark.parametrize("seed", range(8))
    def test_jsum_equals_remainder_without_residuals(self, seed):
        # For a reference carrying no time derivatives the residual
        # terms drop and the remainder must equal the five J integrals
        # computed by independent code.
        g = make_grid(2, 16, 16)
        state, ref = _random_pair(g, seed)
        params = PhysParams(gamma=2.0, mu=0.2, lam=0.1)
        led = relative_ledger(state, ref, params)
        js = j_term_breakdown(state, ref, params)
        scale = max(1.0, sum(abs(t) for t in led.remainder_terms))
        assert abs(js.total - led.remainder_R) <= 1e-12 * scale
        assert js.j4 <= 0.0

    def test_relative_drag_matches_term(self):
        g = make_grid(2, 16, 16)
        state, ref = _random_pair(g, 3)
        params = PhysParams(zeta=2.5)
        led = relative_ledger(state, ref, params)
        js = j_term_breakdown(state, ref, params)
        assert led.remainder_terms[6] == pytest.approx(js.j4, rel=1e-13)


class TestResiduals:
    def test_constant_equilibrium_has_zero_residuals(self):
        g = make_grid(2, 16, 16)
        r = ScalarField.full(g, 0.9)
        ref = RefState(
            t=0.0,
            r=r,
            u=VectorField.zeros(g),
            z=r.copy(),
            dr_dt=ScalarField.zeros(g),
            du_dt=VectorField.zeros(g),
            dz_dt=ScalarField.zeros(g),
        )
        params = PhysParams()
        np.testing.assert_allclose(residual_g(ref, eps=params.eps).data, 0.0, atol=1e-14)
        np.testing.assert_allclose(residual_f(ref, params).data, 0.0, atol=1e-14)
        np.testing.assert_allclose(residual_h(ref).data, 0.0, atol=1e-14)

    def test_residuals_require_derivatives(self):
        g = make_grid(2, 8, 8)
        _, ref = _random_pair(g, 4)
        with pytest.raises(ValueError):
            residual_g(ref)


class TestRestriction:
    def test_block_average_hand_case(self):
        data = np.arange(16.0).reshape(4, 4)
        out = restrict_array(data, 2, 2)
        np.testing.assert_allclose(out, [[2.5, 4.5], [10.5, 12.5]])

    def test_restrict_preserves_means(self):
        fine = make_grid(2, 32, 32)
        coarse = make_grid(2, 8, 8)
        state, _ = _random_pair(fine, 5)
        out = restrict_state(state, coarse)
        assert out.rho.data.mean() == pytest.approx(state.rho.data.mean(), rel=1e-13)
        assert out.t == state.t

    def test_incompatible_grids_rejected(self):
        state, _ = _random_pair(make_grid(2, 32, 32), 6)
        with pytest.raises(ValueError):
            restrict_state(state, make_grid(2, 12, 12))
        with pytest.raises(ValueError):
            restrict_state(state, make_grid(2, 8, 8, lx=2.0, ly=2.0))


class TestReferenceSeries:
    def test_quadratic_in_time_is_differenced_exactly(self):
        # Three-point differencing is exact on quadratics, including
        # at the one-sided endpoints.
        g = make_grid(2, 8, 8)
        X, Y = g.cell_centers
        base = 1.0 + 0.1 * np.sin(2 * np.pi * X)

        def state_at(t):
            rho = ScalarField(g, base * (1.0 + 0.5 * t + 0.25 * t * t))
            v = VectorField(g, np.stack([0.3 * t * base, 0.1 * t * t * base]))
            c = ScalarField(g, base + t * base)
            return State(t, rho, v, c)

        times = [0.0, 0.1, 0.25, 0.4]
        refs = reference_series([state_at(t) for t in times])
        for t, ref in zip(times, refs):
            exact_dr = base * (0.5 + 0.5 * t)
            np.testing.assert_allclose(ref.dr_dt.data, exact_dr, atol=1e-12)
            np.testing.assert_allclose(ref.du_dt.data[0], 0.3 * base, atol=1e-12)
            np.testing.assert_allclose(ref.du_dt.data[1], 0.2 * t * base, atol=1e-12)
            np.testing.assert_allclose(ref.dz_dt.data, base, atol=1e-12)

    def test_needs_three_snapshots(self):
        g = make_grid(2, 8, 8)
        state, _ = _random_pair(g, 7)
        with pytest.raises(ValueError):
            reference_series([state, state])


def _blob_initial(grid):
    rho = ScalarField.from_callable(
        grid, gaussian_blob(background=0.5, amplitude=0.4, width=0.15)
    )
    c = ScalarField.from_callable(
        grid, gaussian_blob(background=0.3, amplitude=0.2, width=0.2)
    )
    return State(0.0, rho, VectorField.zeros(grid), c)


class TestAudit:
    def test_two_grid_audit_passes(self):
        params = PhysParams()
        settings = SchemeSettings(cfl_diff=0.8, t_end=0.03, snap_dt=0.01)
        fine = run(_blob_initial(make_grid(2, 32, 32)), params, settings)
        weak = run(_blob_initial(make_grid(2, 16, 16)), params, settings)
        rep = relenergy_audit(weak, fine, params)
        assert rep.passed
        assert np.all(rep.defects <= rep.tolerances)
        assert rep.rel_E[0] >= 0.0

    def test_misaligned_snapshots_rejected(self):
        params = PhysParams()
        fine = run(
            _blob_initial(make_grid(2, 32, 32)),
            params,
            SchemeSettings(cfl_diff=0.8, t_end=0.02, snap_dt=0.01),
        )
        weak = run(
            _blob_initial(make_grid(2, 16, 16)),
            params,
            SchemeSettings(cfl_diff=0.8, t_end=0.02, snap_dt=0.005),
        )
        with pytest.raises(ValueError):
            relenergy_audit(weak, fine, params)

    def test_weak_strong_contraction_small(self):
        params = PhysParams()
        settings = SchemeSettings(cfl_diff=0.8, t_end=0.03, snap_dt=0.01)
        rep = weak_strong_diagnostic(
            _blob_initial, params, (8, 16), 32, settings
        )
        assert rep.passed
        assert rep.min_ratio >= 1.5
        assert len(rep.sup_rel_H) == 2

    def test_weak_strong_requires_alignment_interval(self):
        with pytest.raises(ValueError, match="snap_dt"):
            weak_strong_diagnostic(
                _blob_initial,
                PhysParams(),
                (8,),
                16,
                SchemeSettings(t_end=0.01),
            )
