"""Grids, fields, state validation, parameters, and trajectories."""

import numpy as np
import pytest

from chemoflow.fields import (
    BCKind,
    Grid,
    PhysParams,
    ScalarField,
    State,
    Trajectory,
    VectorField,
    integrate_cellwise,
    make_grid,
)


class TestGrid:
    def test_make_grid_2d_defaults(self):
        g = make_grid(2, 8, 8)
        assert g.dim == 2
        assert g.shape == (8, 8)
        assert g.hx == pytest.approx(1.0 / 8)
        assert g.lx == pytest.approx(1.0)
        assert g.bc is BCKind.PERIODIC_ALL

    def test_make_grid_1d_collapses_y(self):
        g = make_grid(1, 16, ny=64, ly=7.0)
        assert g.shape == (1, 16)
        assert g.hy == 1.0

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            make_grid(3, 8, 8)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            make_grid(2, 3, 8)
        with pytest.raises(ValueError):
            make_grid(2, 8, 3)

    def test_rejects_inconsistent_1d_shape(self):
        with pytest.raises(ValueError):
            Grid(dim=1, nx=8, ny=4, hx=0.125, hy=1.0, bc=BCKind.PERIODIC_ALL)

    def test_cell_centers_are_midpoints(self):
        g = make_grid(2, 4, 4, lx=2.0, ly=2.0)
        X, Y = g.cell_centers
        assert X[0, 0] == pytest.approx(0.25)
        assert X[0, -1] == pytest.approx(1.75)
        assert Y[-1, 0] == pytest.approx(1.75)
        assert X.shape == (4, 4)

    def test_anisotropic_spacing(self):
        g = make_grid(2, 8, 4, lx=2.0, ly=1.0)
        assert g.hx == pytest.approx(0.25)
        assert g.hy == pytest.approx(0.25)


class TestFields:
    def test_from_callable_samples_cell_centers(self):
        g = make_grid(2, 8, 8)
        f = ScalarField.from_callable(g, lambda X, Y: X + 2.0 * Y)
        X, Y = g.cell_centers
        np.testing.assert_allclose(f.data, X + 2.0 * Y)

    def test_scalar_shape_mismatch_rejected(self):
        g = make_grid(2, 8, 8)
        with pytest.raises(ValueError):
            ScalarField(g, np.zeros((8, 4)))

    def test_vector_shape_mismatch_rejected(self):
        g = make_grid(2, 8, 8)
        with pytest.raises(ValueError):
            VectorField(g, np.zeros((3, 8, 8)))

    def test_copy_is_deep(self):
        g = make_grid(2, 4, 4)
        f = ScalarField.full(g, 1.0)
        f2 = f.copy()
        f2.data[0, 0] = 9.0
        assert f.data[0, 0] == 1.0

    def test_integrate_cellwise_constant(self):
        g = make_grid(2, 8, 8, lx=2.0, ly=3.0)
        assert integrate_cellwise(ScalarField.full(g, 1.0)) == pytest.approx(6.0)

    def test_integrate_cellwise_rejects_nan(self):
        g = make_grid(2, 4, 4)
        f = ScalarField.zeros(g)
        f.data[1, 2] = np.nan
        with pytest.raises(ValueError):
            integrate_cellwise(f)

    def test_integrate_is_deterministic(self):
        g = make_grid(2, 32, 32)
        rng = np.random.default_rng(0)
        f = ScalarField(g, rng.normal(size=(32, 32)))
        vals = {integrate_cellwise(f) for _ in range(5)}
        assert len(vals) == 1


class TestState:
    def _state(self, g):
        return State(
            0.0, ScalarField.full(g, 1.0), VectorField.zeros(g), ScalarField.zeros(g)
        )

    def test_fields_must_share_grid(self):
        g1, g2 = make_grid(2, 4, 4), make_grid(2, 8, 8)
        with pytest.raises(ValueError):
            State(0.0, ScalarField.zeros(g1), VectorField.zeros(g2), ScalarField.zeros(g1))

    def test_validate_accepts_roundoff_undershoot(self):
        g = make_grid(2, 4, 4)
        st = self._state(g)
        st.rho.data[0, 0] = -1e-15
        st.validate()

    def test_validate_rejects_real_negativity(self):
        g = make_grid(2, 4, 4)
        st = self._state(g)
        st.rho.data[0, 0] = -1e-6
        with pytest.raises(ValueError, match="negative"):
            st.validate()

    def test_validate_rejects_nan_with_location(self):
        g = make_grid(2, 4, 4)
        st = self._state(g)
        st.c.data[2, 3] = np.inf
        with pytest.raises(ValueError, match="flat index 11"):
            st.validate()


class TestPhysParams:
    def test_defaults_valid(self):
        p = PhysParams()
        assert p.gamma == 2.0 and p.eps == 0.0 and p.delta == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 1.0},
            {"gamma": 0.5},
            {"mu": 0.0},
            {"mu": -1.0},
            {"zeta": 0.0},
            {"eps": -1e-3},
            {"delta": -1e-4},
            {"delta": 1e-4, "beta": 4.0},
            {"lam": -1.0, "mu": 0.1},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PhysParams(**kwargs)

    def test_bulk_viscosity_constraint_is_combined(self):
        # lam may be negative as long as 3 lam + 2 mu stays positive.
        PhysParams(lam=-0.05, mu=0.1)


class TestTrajectory:
    def test_append_requires_increasing_time(self):
        g = make_grid(2, 4, 4)
        traj = Trajectory(grid=g, params=PhysParams())
        mk = lambda t: State(
            t, ScalarField.full(g, 1.0), VectorField.zeros(g), ScalarField.zeros(g)
        )
        traj.append(mk(0.0))
        traj.append(mk(0.5))
        with pytest.raises(ValueError, match="increase"):
            traj.append(mk(0.5))
        assert len(traj) == 2
        assert traj[1].t == 0.5
        assert [s.t for s in traj] == [0.0, 0.5]

    def test_append_rejects_wrong_grid(self):
        g, g2 = make_grid(2, 4, 4), make_grid(2, 8, 8)
        traj = Trajectory(grid=g, params=PhysParams())
        st = State(
            0.0, ScalarField.full(g2, 1.0), VectorField.zeros(g2), ScalarField.zeros(g2)
        )
        with pytest.raises(ValueError):
            traj.append(st)
