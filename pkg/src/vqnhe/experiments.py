"""Config-driven experiment runner and scaling-law fits.

A config file (TOML) names one experiment kind:

* ``one_qubit``        -- analytic single-qubit suite, closed forms vs pipeline
* ``noise_scaling``    -- retraining gain vs effective noise strength
* ``shot_scaling``     -- biased-retraining gain vs frozen-shot count
* ``strategy_matrix``  -- final noisy energies per retraining strategy

Every run writes ``summary.csv`` with the frozen column order

    strength,p_eff,strategy,mode,M,runs,mean_delta_e,std_delta_e,final_energy,exact_energy

plus ``fits.csv`` (``kind,strategy,a,b``: A and B for shot fits, prefactor and
exponent for power-law fits), per-run history CSVs named by a config-key hash,
and a ``run.json`` manifest.  Floats are written with ``repr`` so reruns with
identical seeds reproduce every byte.

Per-run seeds derive from sha256(config key, master seed); the run matrix can
execute on a bounded process pool without changing any output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import oracles
from .classical_models import PostProcessor
from .estimator import SampleSet, energy_sampled, p_eff as peff_fn
from .pauli import PauliSum, heisenberg, local_transform, swap_half_layer, tfim
from .simulator import AnsatzSpec, NoiseModel, build_circuit, run_density
from .training import (TrainConfig, TrainingProblem, TransformFamily, biased_retrain,
                       evaluate_energy, polish_state, train, train_noiseless_baseline,
                       write_history_csv)

SUMMARY_COLUMNS = ["strength", "p_eff", "strategy", "mode", "M", "runs",
                   "mean_delta_e", "std_delta_e", "final_energy", "exact_energy"]
FITS_COLUMNS = ["kind", "strategy", "a", "b"]

OUTPUT_ROOT_ENV = "VQNHE_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    hamiltonian: str = "tfim-5"
    hamiltonian_file: str | None = None
    n: int = 5
    ansatz: str = "[H, ZZ, Rx]"
    noise_kind: str = "depolarizing"
    strengths: list = field(default_factory=lambda: [0.01])
    transform: str = "none"          # none | local-y | swap-half-layer
    complex_transform: bool = False
    post_processor: str = "bounded_mlp"
    strategies: list = field(default_factory=lambda: ["n"])
    mode: str = "unbiased"
    shots: list = field(default_factory=list)       # biased: frozen-shot counts M
    seeds: list = field(default_factory=lambda: [0])
    epochs: int = 1500
    baseline_starts: int = 8
    baseline_epochs: int = 3000
    baseline_tie_break: str = "resilient"   # resilient | first
    master_seed: int = 0
    output_dir: str = "results"
    channels: list = field(default_factory=lambda: ["depolarizing", "amplitude_damping"])

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        body = raw.get("experiment", raw)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(body) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**body)
        cfg.validate()
        return cfg

    def validate(self):
        if self.kind not in ("one_qubit", "noise_scaling", "shot_scaling",
                             "strategy_matrix"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for s in self.strengths:
            if not 0.0 <= float(s) <= 1.0:
                raise ConfigError(f"noise strength {s} outside [0, 1]")
        if self.hamiltonian_file and not os.path.exists(self.hamiltonian_file):
            raise ConfigError(f"hamiltonian file not found: {self.hamiltonian_file}")
        if self.kind == "shot_scaling" and not self.shots:
            raise ConfigError("shot_scaling requires a list of frozen-shot counts")
        for st in self.strategies:
            groups = set(st.split("+")) if st != "none" else set()
            if not groups <= {"q", "n", "t"}:
                raise ConfigError(f"bad strategy {st!r}")
        try:
            AnsatzSpec.parse(self.n, self.ansatz)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- builders ------------------------------------------------------------
    def build_hamiltonian(self) -> PauliSum:
        if self.hamiltonian_file:
            with open(self.hamiltonian_file) as fh:
                return PauliSum.parse(fh.read()).normalized()
        name = self.hamiltonian.lower()
        if name.startswith("tfim-"):
            return tfim(int(name.split("-")[1]))
        if name.startswith("heisenberg-"):
            return heisenberg(int(name.split("-")[1]))
        raise ConfigError(f"unknown hamiltonian {self.hamiltonian!r}")

    def build_family(self) -> TransformFamily | None:
        if self.transform == "none":
            return None
        if self.transform == "local-y":
            spec = local_transform("Y", self.n)
        elif self.transform == "swap-half-layer":
            spec = swap_half_layer(self.n)
        else:
            raise ConfigError(f"unknown transform {self.transform!r}")
        return TransformFamily(tuple(g for g, _ in spec.factors),
                               complex_enabled=self.complex_transform)

    def build_problem(self, strength: float | None = None) -> TrainingProblem:
        noise = NoiseModel() if strength in (None, 0.0) \
            else NoiseModel(self.noise_kind, float(strength))
        return TrainingProblem(self.build_hamiltonian(),
                               AnsatzSpec.parse(self.n, self.ansatz), noise,
                               self.post_processor, self.build_family())


def derived_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 62)


def parse_strategy(label: str) -> frozenset:
    return frozenset() if label == "none" else frozenset(label.split("+"))


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------

def fit_shot_scaling(points) -> tuple[float, float]:
    """Least squares for gain = B + A/M; returns (A, B)."""
    ms = np.array([float(m) for m, _ in points])
    ys = np.array([float(y) for _, y in points])
    if len(set(ms)) < 3:
        raise ValueError("need at least 3 distinct shot counts")
    x = 1.0 / ms
    a, b = np.polyfit(x, ys, 1)
    return float(a), float(b)


def fit_power_law(points) -> tuple[float, float]:
    """ln(-gain) on ln(strength) regression; returns (prefactor, exponent).

    The prefactor is returned signed (negative), matching gain = prefactor *
    strength**exponent.
    """
    xs = np.array([float(x) for x, _ in points])
    ys = np.array([float(y) for _, y in points])
    if np.any(xs <= 0) or np.any(ys >= 0):
        raise ValueError("power-law fit needs positive strengths and negative gains")
    k, c = np.polyfit(np.log(xs), np.log(-ys), 1)
    return float(-np.exp(c)), float(k)


# ---------------------------------------------------------------------------
# experiment protocols
# ---------------------------------------------------------------------------

def _pqc_p_eff(cfg: ExperimentConfig, theta0, strength: float) -> float:
    """1 - E_noise/E_noiseless from the bare circuit output at fixed weights."""
    base = cfg.build_problem()
    prob_clean = TrainingProblem(base.hamiltonian, base.ansatz, NoiseModel(),
                                 "identity", None)
    prob_noisy = TrainingProblem(base.hamiltonian, base.ansatz,
                                 NoiseModel(cfg.noise_kind, strength), "identity", None)
    e0 = evaluate_energy(prob_clean, theta0, np.zeros(0), np.zeros(0))
    en = evaluate_energy(prob_noisy, theta0, np.zeros(0), np.zeros(0))
    return peff_fn(en, e0)


def _baseline(cfg: ExperimentConfig, strategy) -> tuple:
    """Multi-start noiseless optimum.

    The noiseless optimum is a degenerate family; ``baseline_tie_break``
    selects the representative: "resilient" picks the tie with the lowest
    energy under the weakest configured noise (the member the noise itself
    singles out), "first" keeps the earliest winning seed.
    """
    problem = cfg.build_problem()
    tie = None
    if cfg.baseline_tie_break == "resilient":
        positive = [float(s) for s in cfg.strengths if float(s) > 0]
        if positive:
            tie = NoiseModel(cfg.noise_kind, min(positive))
    elif cfg.baseline_tie_break != "first":
        raise ConfigError(f"unknown baseline_tie_break {cfg.baseline_tie_break!r}")
    st = train_noiseless_baseline(problem, strategy=strategy,
                                  starts=cfg.baseline_starts,
                                  epochs=cfg.baseline_epochs,
                                  master_seed=cfg.master_seed,
                                  tie_break_noise=tie)
    return st.best_theta, st.best_phi, st.best_tau, st.best_energy


def _retrain_best(cfg: ExperimentConfig, problem: TrainingProblem, groups,
                  inits, seed_key, out: str | None = None) -> tuple:
    """Retrain from every listed init (plus scratch starts for circuit
    strategies) and keep the lowest polished energy."""
    best_e, best_params, best_state = np.inf, None, None
    starts = list(inits)
    n_scratch = 1 if "q" in groups else 0  # retraining may start from anywhere
    starts += [None] * n_scratch
    for i, init in enumerate(starts):
        tc = TrainConfig(strategy=frozenset(groups), epochs=cfg.epochs,
                         seed=derived_seed(*seed_key, i, cfg.master_seed))
        st = train(tc, problem, init=init)
        st = polish_state(problem, st, frozenset(groups))
        if out is not None:
            key = _run_key(*seed_key, i, cfg.master_seed)
            write_history_csv(st, os.path.join(out, f"history_{key}.csv"))
        if st.best_energy < best_e:
            best_e, best_params, best_state = st.best_energy, st.best_params(), st
    return best_e, best_params, best_state


def _run_noise_scaling(cfg: ExperimentConfig, out: str, workers: int) -> dict:
    problem = cfg.build_problem()
    th0, ph0, ta0, e0 = _baseline(cfg, ("q", "n") if problem.family is None
                                  else ("q", "n", "t"))
    rows = []
    fits = []
    exact = oracles.exact_ground_energy(problem.hamiltonian)
    jobs = []
    for strength in cfg.strengths:
        for strat in cfg.strategies:
            jobs.append((cfg, float(strength), strat, th0, ph0, ta0, out))
    results = _pool_map(_noise_scaling_job, jobs, workers)
    by_strategy: dict = {}
    for (strength, strat, peff, de, efinal) in sorted(results):
        rows.append({"strength": strength, "p_eff": peff, "strategy": strat,
                     "mode": "exact", "M": 0, "runs": 1, "mean_delta_e": de,
                     "std_delta_e": 0.0, "final_energy": efinal,
                     "exact_energy": exact})
        by_strategy.setdefault(strat, []).append((peff, de))
    for strat, pts in sorted(by_strategy.items()):
        if len(pts) >= 3 and all(y < 0 for _, y in pts):
            pref, expo = fit_power_law(pts)
            fits.append({"kind": "power", "strategy": strat, "a": pref, "b": expo})
    return {"rows": rows, "fits": fits,
            "meta": {"baseline_energy": e0, "exact_energy": exact,
                     "theta0": list(map(float, th0)), "phi0": list(map(float, ph0)),
                     "tau0": list(map(float, ta0))}}


def _noise_scaling_job(args):
    cfg, strength, strat, th0, ph0, ta0, out = args
    problem = cfg.build_problem(strength)
    e_before = evaluate_energy(problem, th0, ph0, ta0)
    groups = parse_strategy(strat)
    peff = _pqc_p_eff(cfg, th0, strength)
    if not groups:
        return (strength, strat, peff, 0.0, e_before)
    best_e, _params, _st = _retrain_best(cfg, problem, groups, [(th0, ph0, ta0)],
                                         (cfg.name, strength, strat), out)
    e_after = min(best_e, e_before)
    return (strength, strat, peff, e_after - e_before, e_after)


def _run_shot_scaling(cfg: ExperimentConfig, out: str, workers: int) -> dict:
    problem = cfg.build_problem()
    th0, ph0, ta0, e0 = _baseline(cfg, ("q", "n"))
    exact = oracles.exact_ground_energy(problem.hamiltonian)
    n_max = max(int(m) for m in cfg.shots)
    rows = []
    fits = []
    for strength in cfg.strengths:
        noisy = cfg.build_problem(strength)
        circuit = build_circuit(noisy.ansatz, th0)
        master = SampleSet.from_circuit(circuit, noisy.noise, noisy.hamiltonian,
                                        n_max, derived_seed(cfg.name, "samples",
                                                            strength, cfg.master_seed))
        peff = _pqc_p_eff(cfg, th0, float(strength)) if strength else 0.0
        pts = []
        for m in sorted(int(m) for m in cfg.shots):
            gains = []
            finals = []
            for g in range(n_max // m):
                sl = slice(g * m, (g + 1) * m)
                frozen = master.subset(sl)
                f0 = noisy.post(ph0)
                e_before = energy_sampled(noisy.hamiltonian, frozen, f0)
                tc = TrainConfig(strategy=frozenset({"n"}), mode="biased",
                                 epochs=cfg.epochs, frozen_shots=m,
                                 seed=derived_seed(cfg.name, strength, m, g,
                                                   cfg.master_seed))
                st = biased_retrain(frozen, tc, noisy, init=(th0, ph0, ta0),
                                    polish=True)
                gains.append(min(st.best_energy, e_before) - e_before)
                finals.append(min(st.best_energy, e_before))
            rows.append({"strength": float(strength), "p_eff": peff, "strategy": "n",
                         "mode": "biased", "M": m, "runs": len(gains),
                         "mean_delta_e": float(np.mean(gains)),
                         "std_delta_e": float(np.std(gains)),
                         "final_energy": float(np.mean(finals)),
                         "exact_energy": exact})
            pts.append((m, float(np.mean(gains))))
        a, b = fit_shot_scaling(pts)
        fits.append({"kind": "shots", "strategy": f"n@{strength}", "a": a, "b": b})
    return {"rows": rows, "fits": fits,
            "meta": {"baseline_energy": e0, "exact_energy": exact}}


def _run_strategy_matrix(cfg: ExperimentConfig, out: str, workers: int) -> dict:
    problem = cfg.build_problem()
    strategy0 = ("q", "n") if problem.family is None else ("q", "n", "t")
    th0, ph0, ta0, e0 = _baseline(cfg, strategy0)
    exact = oracles.exact_ground_energy(problem.hamiltonian)
    rows = []
    order = sorted(cfg.strategies, key=lambda s: len(parse_strategy(s)))
    jobs = [(cfg, float(strength), order, th0, ph0, ta0, out)
            for strength in cfg.strengths]
    results = _pool_map(_strategy_matrix_job, jobs, workers)
    for strength_rows in sorted(results, key=lambda rs: rs[0]["strength"]):
        rows.extend(strength_rows)
    return {"rows": rows, "fits": [],
            "meta": {"baseline_energy": e0, "exact_energy": exact}}


def _strategy_matrix_job(args):
    cfg, strength, order, th0, ph0, ta0, out = args
    problem = cfg.build_problem(strength)
    e_none = evaluate_energy(problem, th0, ph0, ta0)
    peff = _pqc_p_eff(cfg, th0, strength)
    exact = oracles.exact_ground_energy(problem.hamiltonian)
    solutions = {"none": ((th0, ph0, ta0), e_none)}
    rows = []
    for strat in order:
        groups = parse_strategy(strat)
        if not groups:
            rows.append(_matrix_row(strength, peff, strat, e_none, e_none, exact))
            continue
        # warm starts: the baseline plus every solved subset of this strategy
        inits = [(th0, ph0, ta0)]
        for prev, (params, _e) in solutions.items():
            if prev != "none" and parse_strategy(prev) < groups:
                inits.append(params)
        best_e, best_params, _st = _retrain_best(cfg, problem, groups, inits,
                                                 (cfg.name, strength, strat), out)
        best_e = min(best_e, e_none)
        solutions[strat] = (best_params, best_e)
        rows.append(_matrix_row(strength, peff, strat, best_e - e_none, best_e, exact))
    return rows


def _matrix_row(strength, peff, strat, de, efinal, exact):
    return {"strength": strength, "p_eff": peff, "strategy": strat, "mode": "exact",
            "M": 0, "runs": 1, "mean_delta_e": de, "std_delta_e": 0.0,
            "final_energy": efinal, "exact_energy": exact}


def _run_one_qubit(cfg: ExperimentConfig, out: str, workers: int) -> dict:
    """Closed forms against the simulator pipeline, channel by channel."""
    from .estimator import energy_exact
    from .simulator import apply_channel
    rows = []
    for channel in cfg.channels:
        for strength in cfg.strengths:
            rec = oracles.one_qubit_closed_forms(channel, float(strength))
            circ = build_circuit(AnsatzSpec(1, ["Ry"]), [rec.theta0])
            rho = apply_channel(run_density(circ), NoiseModel(channel, float(strength)),
                                [0])
            h = PauliSum.from_ops([(1.0, "X"), (1.0, "Z")])
            for scenario, r, e_closed in [
                    ("baseline", 0.0, rec.e_baseline),
                    ("neural", rec.r_neural, rec.e_neural)]:
                f = PostProcessor.complex_table(1, [1 - r, 1 + r])
                e_pipe = energy_exact(rho, f, h)
                rows.append({"strength": float(strength), "p_eff": float(strength),
                             "strategy": f"{channel}:{scenario}", "mode": "exact",
                             "M": 0, "runs": 1, "mean_delta_e": e_pipe - e_closed,
                             "std_delta_e": 0.0, "final_energy": e_pipe,
                             "exact_energy": e_closed})
    return {"rows": rows, "fits": [], "meta": {}}


_KINDS = {"one_qubit": _run_one_qubit, "noise_scaling": _run_noise_scaling,
          "shot_scaling": _run_shot_scaling, "strategy_matrix": _run_strategy_matrix}


def _run_key(*parts) -> str:
    return hashlib.sha256("|".join(str(p) for p in parts).encode()).hexdigest()[:12]


def _pool_map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_experiment(cfg: ExperimentConfig, output_root: str | None = None,
                   workers: int = 1) -> str:
    """Execute a config and write its result bundle; returns the bundle path."""
    cfg.validate()
    root = output_root or os.environ.get(OUTPUT_ROOT_ENV, ".")
    out = os.path.join(root, cfg.output_dir, cfg.name)
    os.makedirs(out, exist_ok=True)
    bundle = _KINDS[cfg.kind](cfg, out, workers)
    _write_csv(os.path.join(out, "summary.csv"), SUMMARY_COLUMNS, bundle["rows"])
    _write_csv(os.path.join(out, "fits.csv"), FITS_COLUMNS, bundle["fits"])
    with open(os.path.join(out, "run.json"), "w") as fh:
        json.dump({"name": cfg.name, "kind": cfg.kind, "meta": bundle["meta"]},
                  fh, indent=2, sort_keys=True)
    return out


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def read_summary(path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))
