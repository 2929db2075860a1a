"""Acceptance suite: every top-level claim at its stated tolerance.

Each test prints one PASS line when its criterion holds (run with ``-s`` to
see them); failures carry the measured numbers.  The heavy experiment bundles
are produced once per session through the same config-driven runner the CLI
uses, so these tests exercise the shipped configs end to end.
"""

import os
import shutil
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from vqnhe.classical_models import PostProcessor, mlp_param_count
from vqnhe.estimator import SampleSet, energy_exact, energy_sampled, expectation
from vqnhe.experiments import (ExperimentConfig, fit_power_law, read_summary,
                               run_experiment)
from vqnhe.oracles import (SQRT2, THETA0, one_qubit_closed_forms, one_qubit_energy)
from vqnhe.pauli import (PauliSum, PauliTerm, dense, local_transform, tfim,
                         transform_hamiltonian)
from vqnhe.simulator import (AnsatzSpec, NoiseModel, apply_channel, build_circuit,
                             depolarize_global, run_density)
from vqnhe.training import (TrainConfig, TrainingProblem, evaluate_energy,
                            polish_state, replace_noise, train,
                            train_noiseless_baseline)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")
RECIPE_DIR = os.path.join(os.path.dirname(__file__), "..", "recipes")


def report(name: str, detail: str = ""):
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


def _run_config(name: str, root) -> str:
    cfg = ExperimentConfig.from_file(os.path.join(CONFIG_DIR, f"{name}.toml"))
    return run_experiment(cfg, output_root=str(root))


@pytest.fixture(scope="session")
def fig3_bundle(tmp_path_factory):
    return _run_config("fig3", tmp_path_factory.mktemp("fig3"))


@pytest.fixture(scope="session")
def fig2_bundle(tmp_path_factory):
    return _run_config("fig2", tmp_path_factory.mktemp("fig2"))


@pytest.fixture(scope="session")
def fig4_bundle(tmp_path_factory):
    return _run_config("fig4", tmp_path_factory.mktemp("fig4"))


@pytest.fixture(scope="session")
def fig5_bundle(tmp_path_factory):
    return _run_config("fig5", tmp_path_factory.mktemp("fig5"))


# ---------------------------------------------------------------------------
# one-qubit analytic suite
# ---------------------------------------------------------------------------

class TestOneQubitSuite:
    """Closed forms vs the pipeline, injected at 1e-6 and trained at 1e-3."""

    STRENGTHS = (0.02, 0.05, 0.1)
    H = None

    @classmethod
    def setup_class(cls):
        cls.H = PauliSum.from_ops([(1.0, "X"), (1.0, "Z")])

    def _rho(self, theta, channel, strength):
        circ = build_circuit(AnsatzSpec(1, ["Ry"]), [theta])
        return apply_channel(run_density(circ), NoiseModel(channel, strength), [0])

    def _energy(self, theta, r, channel, strength):
        f = PostProcessor.complex_table(1, [1 - r, 1 + r])
        return energy_exact(self._rho(theta, channel, strength), f, self.H)

    @pytest.mark.parametrize("channel", ["depolarizing", "amplitude_damping"])
    def test_injected_parameters_match_closed_forms(self, channel):
        worst = 0.0
        for s in self.STRENGTHS:
            rec = one_qubit_closed_forms(channel, s)
            pairs = [(rec.theta0, 0.0, rec.e_baseline),
                     (rec.theta0, rec.r_neural, rec.e_neural)]
            if channel == "depolarizing":
                pairs.append((rec.theta_joint, rec.r_joint, rec.e_joint))
            else:
                # the joint optimum is a boundary limit; inject a near-limit pair
                th = 1e-4
                pairs.append((th, 1 - 2 * np.sqrt(1 - s) * (SQRT2 - 1) * th,
                              rec.e_joint))
            for theta, r, expected in pairs:
                got = self._energy(theta, r, channel, s)
                worst = max(worst, abs(got - expected))
                assert got == pytest.approx(expected, abs=1e-6)
        report(f"one-qubit injected ({channel})", f"max|dE|={worst:.2e} <= 1e-6")

    @pytest.mark.parametrize("channel", ["depolarizing", "amplitude_damping"])
    def test_trained_parameters_match_closed_forms(self, channel):
        # "trained": optimized numerically against the pipeline energy, with
        # nothing injected.  The channel acts on the prepared state, so the
        # optimization drives the same ratio the closed forms describe.
        from scipy.optimize import minimize
        worst = 0.0
        for s in self.STRENGTHS:
            rec = one_qubit_closed_forms(channel, s)
            rho0 = self._rho(rec.theta0, channel, s)
            # baseline needs no training
            assert one_qubit_energy(np.asarray(rho0.data), 0.0) == \
                pytest.approx(rec.e_baseline, abs=1e-9)
            # neural: scalar optimization of the pipeline energy over r
            rn = minimize_scalar(lambda r: self._energy(rec.theta0, r, channel, s),
                                 bounds=(-0.95, 0.95), method="bounded",
                                 options={"xatol": 1e-12})
            worst = max(worst, abs(rn.fun - rec.e_neural))
            assert rn.fun == pytest.approx(rec.e_neural, abs=1e-3)
            # joint: simplex descent over (theta, r) from the noise-free
            # optimum; the boundary r -> 1 degenerates, so penalize it
            def objective(v):
                try:
                    return self._energy(v[0], v[1], channel, s)
                except ZeroDivisionError:
                    return 10.0

            rj = minimize(objective, [rec.theta0, 0.0], method="Nelder-Mead",
                          options={"xatol": 1e-12, "fatol": 1e-14,
                                   "maxiter": 30_000})
            worst = max(worst, abs(rj.fun - rec.e_joint))
            assert rj.fun == pytest.approx(rec.e_joint, abs=1e-3)
        report(f"one-qubit trained ({channel})", f"max|dE|={worst:.2e} <= 1e-3")


class TestFirstOrderCancellation:
    def test_neural_gain_derivative_vanishes_at_zero_noise(self):
        h = PauliSum.from_ops([(1.0, "X"), (1.0, "Z")])

        def gain(p):
            circ = build_circuit(AnsatzSpec(1, ["Ry"]), [THETA0])
            rho = depolarize_global(run_density(circ), p)

            def energy(r):
                f = PostProcessor.complex_table(1, [1 - r, 1 + r])
                return energy_exact(rho, f, h)

            res = minimize_scalar(energy, bounds=(-0.9, 0.9), method="bounded",
                                  options={"xatol": 1e-13})
            return res.fun - energy(0.0)

        hstep = 0.0025
        deriv = (4 * gain(hstep) - gain(2 * hstep)) / (2 * hstep)
        assert abs(deriv) < 1e-4
        report("first-order cancellation", f"|d(gain)/dp|={abs(deriv):.2e} < 1e-4")


# ---------------------------------------------------------------------------
# transformed-Hamiltonian golden test
# ---------------------------------------------------------------------------

class TestTransformGolden:
    def test_hundred_random_draws(self):
        n = 5
        h = tfim(n)
        rng = np.random.default_rng(2022)
        worst_coeff = 0.0
        ev0 = np.linalg.eigvalsh(dense(h))
        worst_spec = 0.0
        for _ in range(100):
            taus = rng.uniform(-np.pi, np.pi, n)
            hp = transform_hamiltonian(h, local_transform("Y", n, taus))
            co = {t.ops: complex(t.coefficient) for t in hp.terms}
            c2, s2 = np.cos(2 * taus), np.sin(2 * taus)

            def ops(placed):
                out = ["I"] * n
                for i, o in placed.items():
                    out[i] = o
                return "".join(out)

            for i in range(n - 1):
                for placed, want in [({i: "Z", i + 1: "Z"}, c2[i] * c2[i + 1]),
                                     ({i: "X", i + 1: "X"}, s2[i] * s2[i + 1]),
                                     ({i: "X", i + 1: "Z"}, -s2[i] * c2[i + 1]),
                                     ({i: "Z", i + 1: "X"}, -c2[i] * s2[i + 1])]:
                    got = co.get(ops(placed), 0.0)
                    worst_coeff = max(worst_coeff, abs(got - want))
            for i in range(n):
                worst_coeff = max(worst_coeff, abs(co.get(ops({i: "X"}), 0) + c2[i]))
                worst_coeff = max(worst_coeff, abs(co.get(ops({i: "Z"}), 0) + s2[i]))
            assert worst_coeff < 1e-12
        for _ in range(5):
            taus = rng.uniform(-np.pi, np.pi, n)
            hp = transform_hamiltonian(h, local_transform("Y", n, taus))
            worst_spec = max(worst_spec,
                             np.max(np.abs(np.linalg.eigvalsh(dense(hp)) - ev0)))
        assert worst_spec < 1e-9
        report("transformed-Hamiltonian golden",
               f"coeff err {worst_coeff:.1e} < 1e-12, spectrum err {worst_spec:.1e} < 1e-9")


# ---------------------------------------------------------------------------
# estimator unbiasedness
# ---------------------------------------------------------------------------

class TestEstimatorUnbiasedness:
    SEEDS = 200
    SHOTS = 10_000

    @pytest.mark.parametrize("ops", ["ZZIII", "IIXII", "IYIII", "ZIXII", "IYZII"])
    def test_term_class(self, ops):
        self._check(PauliSum([PauliTerm(1.0, ops)]), f"term {ops}")

    def test_full_hamiltonian(self):
        self._check(tfim(5), "TFIM-5")

    def _check(self, h, label):
        n = 5
        rng = np.random.default_rng(99)
        spec = AnsatzSpec(n, ["H", "ZZ", "Rx"])
        circ = build_circuit(spec, rng.normal(0, 0.8, spec.n_params))
        noise = NoiseModel("depolarizing", 0.03)
        rho = run_density(circ, noise)
        f = PostProcessor.bounded_mlp(n, rng.normal(0, 0.6, mlp_param_count(n)))
        exact = energy_exact(rho, f, h)
        vals = np.array([
            energy_sampled(h, SampleSet.from_circuit(circ, noise, h, self.SHOTS, sd), f)
            for sd in range(self.SEEDS)])
        se = vals.std(ddof=1) / np.sqrt(self.SEEDS)
        z = (vals.mean() - exact) / max(se, 1e-15)
        assert abs(vals.mean() - exact) <= 3 * se + 1e-12, \
            f"{label}: mean={vals.mean():.6f} exact={exact:.6f} z={z:.2f}"
        report(f"estimator unbiasedness ({label})", f"z={z:+.2f} within 3 SE")


# ---------------------------------------------------------------------------
# quantum-retraining futility
# ---------------------------------------------------------------------------

class TestQuantumRetrainingFutility:
    def test_composed_identity(self):
        n = 5
        rng = np.random.default_rng(5)
        spec = AnsatzSpec(n, ["H", "ZZ", "Rx", "XX", "Ry"])
        circ = build_circuit(spec, rng.normal(0, 0.6, spec.n_params))
        rho_u = run_density(circ)
        h = tfim(n)
        f = PostProcessor.identity(n)
        worst = 0.0
        for p in (0.05, 0.2, 0.5):
            lhs = energy_exact(depolarize_global(rho_u, p), f, h)
            rhs = (1 - p) * expectation(rho_u, h)  # traceless H
            worst = max(worst, abs(lhs - rhs))
            assert abs(lhs - rhs) < 1e-10
        report("futility identity", f"max dev {worst:.1e} < 1e-10")

    def test_circuit_only_retraining_gains_nothing(self):
        # per-gate noise composes to the global form only approximately, with
        # an O(p^2) residual; checked at the smallest experiment strength
        prob = TrainingProblem(tfim(5), AnsatzSpec(5, ["H", "ZZ", "Rx", "XX", "Ry"]),
                               NoiseModel(), "identity", None)
        base = train_noiseless_baseline(prob, strategy=("q",), starts=8,
                                        epochs=3000, master_seed=0)
        noisy = replace_noise(prob, NoiseModel("depolarizing", 0.005))
        e_before = evaluate_energy(noisy, base.best_theta, np.zeros(0), np.zeros(0))
        st = train(TrainConfig(strategy=frozenset("q"), epochs=2500, seed=4), noisy,
                   init=(base.best_theta, np.zeros(0), np.zeros(0)))
        st = polish_state(noisy, st, frozenset("q"))
        gain = min(st.best_energy, e_before) - e_before
        assert abs(gain) < 1e-3
        report("futility (strategy q)", f"|gain|={abs(gain):.2e} < 1e-3")


# ---------------------------------------------------------------------------
# gradient fidelity (parameter-shift, phi, tau vs finite differences)
# ---------------------------------------------------------------------------

class TestGradientFidelity:
    def test_fifty_random_configurations(self):
        from vqnhe.training import TransformFamily, grad_classical, grad_quantum
        from vqnhe.pauli import norm_operator, swap_half_layer

        rng = np.random.default_rng(7)
        eps = 1e-5
        worst = 0.0
        for trial in range(50):
            n = int(rng.integers(2, 5))
            fam = None
            fam_kind = rng.choice(["none", "local-y", "swap"])
            if fam_kind == "local-y":
                fam = TransformFamily(
                    tuple(g for g, _ in local_transform("Y", n).factors),
                    complex_enabled=bool(rng.integers(2)))
            elif fam_kind == "swap" and n % 2 == 0:
                fam = TransformFamily(
                    tuple(g for g, _ in swap_half_layer(n).factors),
                    complex_enabled=bool(rng.integers(2)))
            noise_kind = rng.choice(["none", "depolarizing", "dephasing"])
            noise = NoiseModel() if noise_kind == "none" \
                else NoiseModel(noise_kind, float(rng.uniform(0.0, 0.12)))
            post = rng.choice(["bounded_mlp", "complex_table"])
            prob = TrainingProblem(tfim(n), AnsatzSpec(n, ["H", "ZZ", "Rx"]), noise,
                                   post, fam)
            theta = rng.normal(0, 0.5, prob.ansatz.n_params)
            if post == "bounded_mlp":
                phi = rng.normal(0, 0.5, prob.n_phi())
            else:
                dim = 2 ** n
                phi = np.concatenate([1 + rng.normal(0, 0.2, dim),
                                      rng.normal(0, 0.2, dim)])
            tau = rng.normal(0, 0.25, prob.n_tau())
            gphi, gtau = grad_classical(prob, theta, phi, tau)
            f = prob.post(phi)
            fvals = np.asarray(f.evaluate_all(), dtype=complex)
            if fam is not None:
                spec_t = fam.spec(tau)
                hp = transform_hamiltonian(prob.hamiltonian, spec_t)
                om = None if spec_t.is_unitary() else norm_operator(spec_t)
            else:
                hp, om = prob.hamiltonian, None
            gq = grad_quantum(prob, theta, fvals, dense(hp),
                              dense(om) if om is not None else None)

            def e_at(th=theta, ph=phi, ta=tau):
                return evaluate_energy(prob, th, ph, ta)

            checks = []
            for k in rng.choice(theta.size, 2, replace=False):
                tp, tm = theta.copy(), theta.copy()
                tp[k] += eps
                tm[k] -= eps
                checks.append(((e_at(th=tp) - e_at(th=tm)) / (2 * eps), gq[k]))
            for k in rng.choice(phi.size, 2, replace=False):
                pp, pm = phi.copy(), phi.copy()
                pp[k] += eps
                pm[k] -= eps
                checks.append(((e_at(ph=pp) - e_at(ph=pm)) / (2 * eps), gphi[k]))
            for k in range(tau.size):
                tp, tm = tau.copy(), tau.copy()
                tp[k] += eps
                tm[k] -= eps
                checks.append(((e_at(ta=tp) - e_at(ta=tm)) / (2 * eps), gtau[k]))
            for fd, an in checks:
                worst = max(worst, abs(fd - an))
                assert abs(fd - an) < 1e-5, f"trial {trial}: fd={fd} analytic={an}"
        report("gradient fidelity", f"max |fd - analytic| = {worst:.2e} < 1e-5")


# ---------------------------------------------------------------------------
# scaling laws (fig3 bundle)
# ---------------------------------------------------------------------------

PAPER_P_EFF = {0.005: 0.017, 0.01: 0.033, 0.015: 0.049, 0.02: 0.065}
PAPER_GAIN_N = {0.005: -0.0031, 0.01: -0.012, 0.015: -0.026, 0.02: -0.044}
PAPER_GAIN_J = {0.005: -0.044, 0.01: -0.080, 0.015: -0.12, 0.02: -0.15}


class TestScalingLaws:
    def test_exponents(self, fig3_bundle):
        rows = read_summary(os.path.join(fig3_bundle, "summary.csv"))
        by = {}
        for r in rows:
            by.setdefault(r["strategy"], []).append(
                (float(r["p_eff"]), float(r["mean_delta_e"])))
        _pref_n, expo_n = fit_power_law(by["n"])
        _pref_j, expo_j = fit_power_law(by["q+n"])
        assert expo_n == pytest.approx(2.0, abs=0.2), f"neural exponent {expo_n}"
        assert expo_j == pytest.approx(1.0, abs=0.2), f"joint exponent {expo_j}"
        report("scaling exponents",
               f"neural {expo_n:.3f} (2.0 +- 0.2), joint {expo_j:.3f} (1.0 +- 0.2)")

    def test_p_eff_values(self, fig3_bundle):
        rows = read_summary(os.path.join(fig3_bundle, "summary.csv"))
        seen = {}
        for r in rows:
            seen[round(float(r["strength"]), 4)] = float(r["p_eff"])
        devs = {p: abs(seen[p] - want) for p, want in PAPER_P_EFF.items()}
        assert all(d <= 0.005 for d in devs.values()), \
            f"p_eff deviations {devs} exceed +-0.005 (measured {seen})"
        report("effective noise strengths",
               "p_eff " + " ".join(f"{seen[p]:.4f}" for p in sorted(seen))
               + " all within +-0.005 of published")

    def test_gain_magnitudes(self, fig3_bundle):
        rows = read_summary(os.path.join(fig3_bundle, "summary.csv"))
        got = {("n", round(float(r["strength"]), 4)): float(r["mean_delta_e"])
               for r in rows if r["strategy"] == "n"}
        got.update({("q+n", round(float(r["strength"]), 4)): float(r["mean_delta_e"])
                    for r in rows if r["strategy"] == "q+n"})
        errs = {}
        for p, want in PAPER_GAIN_N.items():
            errs[("n", p)] = abs(got[("n", p)] - want) / abs(want)
        for p, want in PAPER_GAIN_J.items():
            errs[("q+n", p)] = abs(got[("q+n", p)] - want) / abs(want)
        worst = max(errs.values())
        assert worst <= 0.30, \
            (f"absolute gains deviate beyond 30%: worst {worst:.0%}; "
             f"measured {dict((k, round(v, 5)) for k, v in got.items())}")
        report("gain magnitudes", f"worst relative deviation {worst:.0%} <= 30%")


# ---------------------------------------------------------------------------
# biased shot law (fig2 bundle)
# ---------------------------------------------------------------------------

class TestBiasedShotLaw:
    def test_noiseless_intercept_and_residual(self, fig2_bundle):
        rows = [r for r in read_summary(os.path.join(fig2_bundle, "summary.csv"))
                if float(r["strength"]) == 0.0]
        pts = [(float(r["M"]), float(r["mean_delta_e"])) for r in rows]
        from vqnhe.experiments import fit_shot_scaling
        a, b = fit_shot_scaling(pts)
        assert abs(b) < 0.003, f"noiseless intercept {b}"
        resid = max(abs(y - (b + a / m)) for m, y in pts)
        spread = max(y for _, y in pts) - min(y for _, y in pts)
        assert resid <= 0.10 * abs(spread), f"residual {resid} vs range {spread}"
        report("biased shot law (noiseless)",
               f"B={b:.5f} (<0.003), residual {resid / abs(spread):.1%} of range")

    def test_depolarizing_intercept(self, fig2_bundle):
        rows = [r for r in read_summary(os.path.join(fig2_bundle, "summary.csv"))
                if float(r["strength"]) == 0.02]
        pts = [(float(r["M"]), float(r["mean_delta_e"])) for r in rows]
        from vqnhe.experiments import fit_shot_scaling
        _a, b = fit_shot_scaling(pts)
        assert b == pytest.approx(-0.046, abs=0.01), f"intercept {b}"
        report("biased shot law (depolarizing)", f"B={b:.4f} within -0.046 +- 0.01")


# ---------------------------------------------------------------------------
# strategy ordering (fig4 + fig5 bundles)
# ---------------------------------------------------------------------------

def _energies_by_strength(bundle):
    rows = read_summary(os.path.join(bundle, "summary.csv"))
    out = {}
    for r in rows:
        out.setdefault(float(r["strength"]), {})[r["strategy"]] = \
            float(r["final_energy"])
    exact = float(rows[0]["exact_energy"])
    return out, exact


class TestStrategyOrdering:
    TOL = 1e-3

    def test_tfim_ordering_and_tracking(self, fig4_bundle):
        table, exact = _energies_by_strength(fig4_bundle)
        for strength, e in sorted(table.items()):
            assert e["q+n+t"] <= e["n+t"] + self.TOL, (strength, e)
            assert e["n+t"] <= e["n"] + self.TOL, (strength, e)
            assert e["n"] <= e["none"] + self.TOL, (strength, e)
        largest = max(table)
        e = table[largest]
        gap = abs(e["q+n"] - exact)
        # classical-only n+t must track the joint strategy: no worse than 10%
        # of the remaining gap (being better than q+n is the headline claim)
        assert e["n+t"] <= e["q+n"] + 0.10 * gap, \
            f"n+t={e['n+t']} vs q+n={e['q+n']} gap-to-exact {gap}"
        report("strategy ordering (Ising chain)",
               f"ordering holds at {sorted(table)}; n+t at q+n"
               f"{(e['n+t'] - e['q+n']) / gap:+.1%} of the gap")

    def test_heisenberg_ordering_and_bound(self, fig5_bundle):
        table, _exact = _energies_by_strength(fig5_bundle)
        for strength, e in sorted(table.items()):
            assert e["q+n+t"] <= e["n+t"] + self.TOL, (strength, e)
            assert e["n+t"] <= e["n"] + self.TOL, (strength, e)
            assert e["n"] <= e["none"] + self.TOL, (strength, e)
        best_nt = min(e["n+t"] for e in table.values())
        assert best_nt <= -9.0 + 0.1, f"n+t mitigated energy {best_nt}"
        report("strategy ordering (Heisenberg chain)",
               f"ordering holds; best n+t energy {best_nt:.3f} <= -8.9")


# ---------------------------------------------------------------------------
# secondary: figure rendering agrees with the fit tool exactly
# ---------------------------------------------------------------------------

FRONTEND = os.path.join(os.path.dirname(__file__), "..", "frontend")


@pytest.mark.skipif(shutil.which("node") is None, reason="node unavailable")
class TestFigureRendering:
    def _render(self, kind, bundle, out):
        import json
        recipe = {"kind": kind, "summary": os.path.join(bundle, "summary.csv"),
                  "fits": os.path.join(bundle, "fits.csv"),
                  "output": str(out)}
        rpath = str(out) + ".json"
        with open(rpath, "w") as fh:
            json.dump(recipe, fh)
        main_js = os.path.join(FRONTEND, "dist", "src", "main.js")
        if not os.path.exists(main_js):
            subprocess.run(["npm", "run", "build"], cwd=FRONTEND, check=True,
                           capture_output=True)
        r = subprocess.run(["node", main_js, "render", "--recipe", rpath],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        return open(out).read()

    def test_power_law_annotations_match_fit_cli(self, fig3_bundle, tmp_path):
        svg = self._render("power_law", fig3_bundle, tmp_path / "fig3.svg")
        fit = subprocess.run([sys.executable, "-m", "vqnhe.cli", "fit",
                              os.path.join(fig3_bundle, "summary.csv"),
                              "--kind", "power"],
                             capture_output=True, text=True)
        assert fit.returncode == 0, fit.stderr
        matched = 0
        for line in fit.stdout.strip().splitlines():
            fields = dict(kv.split("=", 1) for kv in line.split())
            expected = f"exponent[{fields['strategy']}] = {fields['b']}"
            assert expected in svg, f"annotation {expected!r} not found"
            matched += 1
        assert matched >= 2
        report("figure annotations (power law)",
               f"{matched} exponents agree with the fit tool exactly")

    def test_all_shipped_recipes_render(self, fig2_bundle, fig3_bundle, fig4_bundle,
                                        fig5_bundle, tmp_path):
        bundles = {"fig2": fig2_bundle, "fig3": fig3_bundle, "fig4": fig4_bundle,
                   "fig5": fig5_bundle}
        kinds = {"fig2": "shot_scaling", "fig3": "power_law",
                 "fig4": "strategy_matrix", "fig5": "strategy_matrix"}
        for name, bundle in bundles.items():
            svg = self._render(kinds[name], bundle, tmp_path / f"{name}.svg")
            assert svg.startswith("<svg")
        report("figure rendering", "all shipped figure kinds render")
