"""Energy ledger integrals, inequality audits, the coupling-term
interpolation scan, and the chemical mass bound."""

import numpy as np
import pytest

from chemoflow.dynamics import Forcing, SchemeSettings, run
from chemoflow.energetics import (
    CSV_COLUMNS,
    c_l1_audit,
    coupling_bound_series,
    energy_audit,
    energy_audit_sweep,
    energy_csv_text,
    energy_ledger,
    ledger_series,
    sugiyama_ensemble_audit,
    sugiyama_required_c1,
)
from chemoflow.fields import (
    BCKind,
    PhysParams,
    ScalarField,
    State,
    VectorField,
    integrate_cellwise,
    make_grid,
)
from chemoflow.operators import StencilOps
from chemoflow.synth import gaussian_blob
from chemoflow.thermo import PressureLaw, internal_energy


def _blob_state(grid, v_scale=0.0, seed=0):
    rho = ScalarField.from_callable(
        grid, gaussian_blob(background=0.5, amplitude=0.4, width=0.15)
    )
    c = ScalarField.from_callable(
        grid, gaussian_blob(background=0.3, amplitude=0.2, width=0.2)
    )
    rng = np.random.default_rng(seed)
    v = VectorField(grid, v_scale * rng.normal(size=(grid.dim,) + grid.shape))
    return State(0.0, rho, v, c)


class TestLedger:
    def test_energy_matches_direct_quadrature(self):
        g = make_grid(2, 24, 24)
        params = PhysParams(gamma=1.8)
        st = _blob_state(g, v_scale=0.2)
        led = energy_ledger(st, params)

        law = PressureLaw(params.gamma)
        ops = StencilOps(g)
        psi = internal_energy(st.rho.data, law)
        kin = 0.5 * st.rho.data * np.sum(st.v.data**2, axis=0)
        gc = ops.grad(st.c).data
        chem = 0.5 * (np.sum(gc * gc, axis=0) + st.c.data**2)
        coup = st.rho.data * st.c.data
        e_direct = integrate_cellwise(ScalarField(g, psi + kin + chem - coup))
        assert led.E == pytest.approx(e_direct, rel=1e-13)

        h_direct = integrate_cellwise(
            ScalarField(
                g,
                0.5 * psi + kin + 0.25 * np.sum(gc * gc, axis=0) + 0.5 * st.c.data**2,
            )
        )
        assert led.H == pytest.approx(h_direct, rel=1e-13)

    def test_dissipations_are_nonnegative(self):
        g = make_grid(2, 16, 16)
        params = PhysParams(eps=1e-3, delta=1e-4, beta=4.5)
        led = energy_ledger(_blob_state(g, v_scale=0.3), params)
        assert led.diss_visc >= 0.0
        assert led.diss_dtc >= 0.0
        assert led.diss_drag >= 0.0
        assert led.diss_eps_gamma >= 0.0
        assert led.diss_delta >= 0.0
        assert led.art_pressure >= 0.0

    def test_chemical_time_derivative_uses_discrete_rhs(self):
        # diss_dtc is |lap c - c + rho|^2 integrated; for the constant
        # equilibrium c = rho it vanishes identically.
        g = make_grid(2, 16, 16)
        st = State(
            0.0,
            ScalarField.full(g, 0.7),
            VectorField.zeros(g),
            ScalarField.full(g, 0.7),
        )
        led = energy_ledger(st, PhysParams())
        assert led.diss_dtc == 0.0

    def test_mass_and_c_l1_columns(self):
        g = make_grid(2, 16, 16)
        st = _blob_state(g)
        led = energy_ledger(st, PhysParams())
        assert led.mass == pytest.approx(integrate_cellwise(st.rho), rel=1e-14)
        assert led.c_l1 == pytest.approx(integrate_cellwise(st.c), rel=1e-14)


class TestCsv:
    def test_header_matches_column_order(self):
        g = make_grid(2, 8, 8)
        led = energy_ledger(_blob_state(g), PhysParams())
        text = energy_csv_text([led])
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 2
        assert len(lines[1].split(",")) == len(CSV_COLUMNS)

    def test_serialization_is_deterministic(self):
        g = make_grid(2, 8, 8)
        params = PhysParams()
        texts = set()
        for _ in range(3):
            led = energy_ledger(_blob_state(g), params)
            texts.add(energy_csv_text([led]))
        assert len(texts) == 1

    def test_values_round_trip_through_repr(self):
        g = make_grid(2, 8, 8)
        led = energy_ledger(_blob_state(g), PhysParams())
        line = energy_csv_text([led]).strip().split("\n")[1]
        parsed = [float(tok) for tok in line.split(",")]
        assert parsed[CSV_COLUMNS.index("E")] == led.E


class TestEnergyAudit:
    def test_physical_form_passes_on_diffusive_run(self):
        g = make_grid(2, 16, 16)
        traj = run(_blob_state(g), PhysParams(), SchemeSettings(t_end=0.02))
        rep = energy_audit(traj)
        assert rep.form == "physical"
        assert rep.passed
        assert rep.e_final <= rep.e_initial + rep.atol

    def test_regularized_form_selected_automatically(self):
        g = make_grid(2, 16, 16)
        params = PhysParams(eps=1e-3, delta=1e-4, beta=4.5)
        traj = run(_blob_state(g), params, SchemeSettings(t_end=0.01))
        rep = energy_audit(traj)
        assert rep.form == "regularized"
        assert rep.passed

    def test_explicit_unknown_form_rejected(self):
        g = make_grid(2, 16, 16)
        traj = run(_blob_state(g), PhysParams(), SchemeSettings(t_end=0.005))
        with pytest.raises(ValueError):
            energy_audit(traj, form="entropic")

    def test_needs_two_snapshots(self):
        g = make_grid(2, 16, 16)
        led = energy_ledger(_blob_state(g), PhysParams())
        with pytest.raises(ValueError):
            energy_audit([led], PhysParams())

    def test_bare_ledgers_require_params(self):
        g = make_grid(2, 16, 16)
        led = energy_ledger(_blob_state(g), PhysParams())
        with pytest.raises(ValueError, match="params"):
            energy_audit([led, led])

    def test_ledger_route_matches_trajectory_route(self):
        g = make_grid(2, 16, 16)
        params = PhysParams()
        traj = run(_blob_state(g), params, SchemeSettings(t_end=0.01))
        from_traj = energy_audit(traj)
        from_ledgers = energy_audit(ledger_series(traj), params)
        np.testing.assert_array_equal(from_traj.defects, from_ledgers.defects)
        assert from_traj.c_fit == from_ledgers.c_fit

    def test_sweep_envelope_is_stable(self):
        g = make_grid(2, 16, 16)
        rep = energy_audit_sweep(
            _blob_state(g), PhysParams(), SchemeSettings(t_end=0.02, cfl_diff=0.8)
        )
        assert rep.passed
        assert rep.variation < 0.2
        assert len(rep.c_fits) == 3


class TestSugiyama:
    def test_required_constant_hand_case(self):
        # Uniform rho = c = 1 on the unit square with kappa = 1/2,
        # xi arbitrary: lhs 1, rho term 1/2, gradient term 0, |c|_1 = 1,
        # so the needed constant is exactly 1/2.
        g = make_grid(2, 16, 16)
        one = ScalarField.full(g, 1.0)
        res = sugiyama_required_c1(one, one, m=2.0, d=2, kappa=0.5, xi=0.25)
        assert res.required_c1 == pytest.approx(0.5, rel=1e-13)

    def test_zero_when_bound_already_closes(self):
        g = make_grid(2, 16, 16)
        one = ScalarField.full(g, 1.0)
        res = sugiyama_required_c1(one, one, m=2.0, d=2, kappa=2.0, xi=0.25)
        assert res.required_c1 == 0.0

    def test_rejects_nonpositive_weights(self):
        g = make_grid(2, 8, 8)
        one = ScalarField.full(g, 1.0)
        with pytest.raises(ValueError):
            sugiyama_required_c1(one, one, m=2.0, d=2, kappa=0.0, xi=0.25)

    def test_ensemble_audit_small(self):
        g = make_grid(2, 32, 32)
        rep = sugiyama_ensemble_audit(g, n_pairs=20, seed=3)
        assert rep.passed
        assert np.isfinite(rep.sup)
        assert rep.prefix_sups[-1] == rep.sup
        assert np.all(np.diff(rep.prefix_sups) >= 0.0)

    def test_ensemble_is_seed_reproducible(self):
        g = make_grid(2, 16, 16)
        a = sugiyama_ensemble_audit(g, n_pairs=5, seed=11)
        b = sugiyama_ensemble_audit(g, n_pairs=5, seed=11)
        np.testing.assert_array_equal(a.required, b.required)

    def test_coupling_bound_holds_along_run(self):
        g = make_grid(2, 16, 16)
        traj = run(_blob_state(g), PhysParams(), SchemeSettings(t_end=0.01))
        margins = coupling_bound_series(traj, c1=5.0)
        assert np.all(margins > 0.0)


class TestChemicalMass:
    def test_bound_and_ode_defect_on_run(self):
        g = make_grid(2, 16, 16)
        traj = run(_blob_state(g), PhysParams(), SchemeSettings(t_end=0.02))
        rep = c_l1_audit(traj)
        assert rep.passed
        assert rep.max_excess <= 1e-10 * max(rep.bound, 1.0)

    def test_decay_without_sources(self):
        # rho = 0 leaves dc/dt = lap c - c; total mass decays like
        # the trapezoidal map of dM/dt = -M.
        g = make_grid(2, 16, 16)
        st = State(
            0.0,
            ScalarField.zeros(g),
            VectorField.zeros(g),
            ScalarField.from_callable(
                g, gaussian_blob(background=0.2, amplitude=0.3, width=0.2)
            ),
        )
        traj = run(st, PhysParams(), SchemeSettings(t_end=0.05))
        rep = c_l1_audit(traj)
        assert rep.passed
        masses = rep.c_masses
        assert np.all(np.diff(masses) < 0.0)

    def test_accepts_precollected_ledgers(self):
        g = make_grid(2, 16, 16)
        params = PhysParams()
        ops = StencilOps(g)
        ledgers = []
        run(
            _blob_state(g),
            params,
            SchemeSettings(t_end=0.01, snapshot_stride=10 ** 9),
            observer=lambda s: ledgers.append(energy_ledger(s, params, ops)),
        )
        rep = c_l1_audit(ledgers)
        assert rep.passed
        assert len(rep.times) == len(ledgers)
