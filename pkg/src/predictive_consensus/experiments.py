"""Experiment drivers: MSE traces, averaging-time gain sweeps and theory checks.

All randomness flows from ``ExperimentConfig.seed`` through per-(N, trial)
seed sequences, so identical configs give identical files.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .accel import (
    AcceleratedOperator,
    PredictorParams,
    asymptotic_theta,
    gamma,
    least_squares_theta,
    optimal_alpha,
)
from .doi import DoiConfig, end_to_end_alpha, estimate_lambda2
from .engine import ExperimentTrace, init_slope, init_spike, run_to_accuracy, to_db
from .errors import ConfigError
from .graph import Graph, make_chain, make_grid, make_rgg
from .spectral import symmetric_eigenvalues
from .weights import WeightMatrix, check_conditions, lazy_transform, metropolis_hastings

__all__ = [
    "ExperimentConfig",
    "TrialSetup",
    "GainRecord",
    "GainReport",
    "build_trial",
    "run_mse_experiment",
    "run_gain_sweep",
    "verify_theory",
    "bound_gain",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
TOPOLOGIES = ("chain", "grid", "rgg")
INITS = ("slope", "spike")


def _parse_count(token: str, n: int) -> int:
    """``"400"`` -> 400, ``"2N"`` -> 2n, ``"N^2"`` / ``"N2"`` -> n**2."""
    tok = token.strip().upper().replace(" ", "")
    if tok in ("N^2", "N2", "N**2"):
        return n * n
    m = re.fullmatch(r"(\d*)N", tok)
    if m:
        return int(m.group(1) or 1) * n
    if tok.isdigit():
        return int(tok)
    raise ConfigError(f"cannot parse iteration count {token!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment family.

    ``theta_mode`` is ``"ls"`` (least squares) or ``"asym:<eps>"``;
    ``lambda2_source`` is ``"oracle"`` or ``"doi:<K>,<L>"`` where counts may be
    written as multiples of N (``2N``) or ``N^2``.
    """

    topology: str = "rgg"
    sizes: tuple[int, ...] = (200,)
    trials: int = 30
    init: str = "slope"
    epsilon_db: float = -100.0
    theta_mode: str = "asym:0.5"
    lambda2_source: str = "oracle"
    seed: int = 0
    max_iters: int | None = None
    hold: int | None = None
    doi_seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.epsilon_db < 0:
            raise ConfigError(f"epsilon_db must be negative, got {self.epsilon_db}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.sizes or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError(f"sizes must be non-empty and strictly ascending, got {self.sizes}")
        if any(n < 2 for n in self.sizes):
            raise ConfigError("every size must be >= 2")
        if self.topology == "grid":
            for n in self.sizes:
                if math.isqrt(n) ** 2 != n or n < 4:
                    raise ConfigError(f"grid size must be a perfect square >= 4, got {n}")
        self.theta()
        self.doi_config(self.sizes[0], 0)

    @property
    def epsilon(self) -> float:
        """Relative l2 accuracy: -100 dB on the MSE is 1e-5 on the norm."""
        return 10.0 ** (self.epsilon_db / 20.0)

    def theta(self) -> PredictorParams:
        mode = self.theta_mode.strip().lower()
        if mode in ("ls", "least_squares"):
            return least_squares_theta()
        if mode.startswith("asym"):
            _, _, eps = mode.partition(":")
            try:
                return asymptotic_theta(float(eps) if eps else 0.5)
            except ValueError as exc:
                raise ConfigError(f"bad theta mode {self.theta_mode!r}: {exc}") from exc
        raise ConfigError(f"theta mode must be 'ls' or 'asym:<eps>', got {self.theta_mode!r}")

    @property
    def uses_doi(self) -> bool:
        return self.lambda2_source.strip().lower().startswith("doi")

    def doi_config(self, n: int, seed: int) -> DoiConfig:
        """DOI settings for size ``n``; defaults to K = 2N, L = 10 when the source is the oracle."""
        src = self.lambda2_source.strip()
        if src.lower() == "oracle":
            k, l = 2 * n, 10
        elif src.lower().startswith("doi"):
            _, _, args = src.partition(":")
            parts = [p for p in args.split(",") if p.strip()] or ["2N", "10"]
            if len(parts) != 2:
                raise ConfigError(f"lambda2 source must be doi:<K>,<L>, got {src!r}")
            k, l = (_parse_count(p, n) for p in parts)
        else:
            raise ConfigError(f"lambda2 source must be 'oracle' or 'doi:<K>,<L>', got {src!r}")
        try:
            return DoiConfig(K=k, L=min(l, k), seed=seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        return d


@dataclass
class TrialSetup:
    n: int
    trial: int
    seed: int
    graph: Graph
    weight: WeightMatrix
    lazy: bool
    lambdas: np.ndarray
    x0: np.ndarray
    doi_seed: int

    @property
    def lambda2(self) -> float:
        return float(self.lambdas[1])

    @property
    def rho_w(self) -> float:
        return float(np.abs(self.lambdas[1:]).max())


def _trial_seed(base: int, n: int, trial: int) -> int:
    return int(np.random.SeedSequence([base, n, trial]).generate_state(1)[0])


def build_trial(cfg: ExperimentConfig, n: int, trial: int) -> TrialSetup:
    """Topology, MH weights (lazy-transformed if needed) and initial state for one trial."""
    seed = _trial_seed(cfg.seed, n, trial)
    if cfg.topology == "chain":
        g = make_chain(n)
    elif cfg.topology == "grid":
        g = make_grid(math.isqrt(n))
    else:
        g = make_rgg(n, seed)
    w = metropolis_hastings(g)
    lam = symmetric_eigenvalues(w).eigenvalues
    lazy = abs(lam[-1]) > lam[1]
    if lazy:
        w = lazy_transform(w)
        lam = symmetric_eigenvalues(w).eigenvalues
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    if cfg.init == "slope":
        x0 = init_slope(g)
    elif cfg.topology == "chain" and cfg.trials >= n:
        # chain spikes sweep over all locations
        x0 = init_spike(g, trial % n)
    else:
        x0 = init_spike(g, int(rng.integers(n)))
    doi_seed = int(np.random.SeedSequence([seed, 2]).generate_state(1)[0])
    return TrialSetup(n, trial, seed, g, w, bool(lazy), lam, x0, doi_seed)


def _doi_seed(cfg: ExperimentConfig, setup: TrialSetup) -> int:
    return setup.doi_seed if cfg.doi_seed is None else cfg.doi_seed


def _horizon(cfg: ExperimentConfig, n: int, rho: float, accelerated: bool) -> int:
    if cfg.max_iters is not None:
        return cfg.max_iters
    default = (20 if accelerated else 50) * n
    if rho <= 0.0:
        return default
    predicted = math.log(1.0 / cfg.epsilon) / -math.log(rho)
    return max(default, int(math.ceil(2.0 * predicted)) + 2 * n)


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _trace_name(cfg: ExperimentConfig, n: int, algo: str, seed: int) -> str:
    return f"{cfg.topology}_{n}_{algo}_{cfg.init}_{seed}.csv"


def run_mse_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """MSE traces for memoryless MH, accelerated (oracle lambda2) and accelerated (DOI lambda2).

    Writes one CSV per trial and algorithm plus ``summary.json`` when
    ``out_dir`` is given; returns the summary. The dB comparison of the two
    accelerated variants is made on trial-averaged MSE curves, up to the
    iteration at which the averaged oracle curve reaches the target accuracy.
    """
    theta = cfg.theta()
    eps = cfg.epsilon
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    sizes = []
    for n in cfg.sizes:
        trials = []
        curves: dict[str, list[np.ndarray]] = {"accel-oracle": [], "accel-doi": []}
        for trial in range(cfg.trials):
            setup = build_trial(cfg, n, trial)
            rho_w = setup.rho_w
            op_oracle = AcceleratedOperator(setup.weight, theta, optimal_alpha(setup.lambda2, theta), setup.lambda2)
            doi_cfg = cfg.doi_config(n, _doi_seed(cfg, setup))
            op_doi = end_to_end_alpha(setup.weight, setup.graph, theta, doi_cfg)
            rho_acc = op_oracle.radius()
            runs: dict[str, ExperimentTrace] = {
                "memoryless": run_to_accuracy(
                    setup.weight, setup.x0, eps, _horizon(cfg, n, rho_w, False), hold=cfg.hold, init_model=cfg.init
                ),
                "accel-oracle": run_to_accuracy(
                    op_oracle, setup.x0, eps, _horizon(cfg, n, rho_acc, True), hold=cfg.hold, init_model=cfg.init
                ),
                "accel-doi": run_to_accuracy(
                    op_doi, setup.x0, eps, _horizon(cfg, n, rho_acc, True), hold=cfg.hold, init_model=cfg.init
                ),
            }
            for algo in curves:
                curves[algo].append(runs[algo].mse_linear)
            if out is not None:
                for algo, tr in runs.items():
                    tr.write_csv(out / _trace_name(cfg, n, algo, setup.seed))
            trials.append(
                {
                    "trial": trial,
                    "seed": setup.seed,
                    "lazy": setup.lazy,
                    "lambda2": setup.lambda2,
                    "lambda2_doi": op_doi.lambda2,
                    "alpha_oracle": op_oracle.alpha,
                    "alpha_doi": op_doi.alpha,
                    "converged_at": {a: tr.converged_at for a, tr in runs.items()},
                }
            )
        sizes.append(_summarize_mse(n, trials, curves, eps))
    summary = {"schema": SCHEMA_VERSION, "kind": "mse", "config": cfg.to_dict(), "sizes": sizes}
    if out is not None:
        _write_json(out / "summary.json", summary)
    return summary


def _summarize_mse(n: int, trials: list[dict], curves: dict[str, list[np.ndarray]], eps: float) -> dict:
    trials = sorted(trials, key=lambda t: t["trial"])
    algos = ("memoryless", "accel-oracle", "accel-doi")
    per_algo = {}
    for algo in algos:
        done = [t["converged_at"][algo] for t in trials if t["converged_at"][algo] is not None]
        per_algo[algo] = {
            "completed": len(done),
            "incomplete_trials": [t["trial"] for t in trials if t["converged_at"][algo] is None],
            "mean_iterations": _mean_or_none(done),
        }

    def faster(algo: str) -> float:
        wins = 0
        for t in trials:
            a, m = t["converged_at"][algo], t["converged_at"]["memoryless"]
            wins += a is not None and (m is None or a < m)
        return wins / len(trials)

    length = min(len(c) for cs in curves.values() for c in cs)
    mean_oracle = np.mean([c[:length] for c in curves["accel-oracle"]], axis=0)
    mean_doi = np.mean([c[:length] for c in curves["accel-doi"]], axis=0)
    reached = np.nonzero(mean_oracle <= eps * eps * mean_oracle[0])[0]
    upto = int(reached[0]) if len(reached) else length - 1
    tiny = np.finfo(float).tiny
    gap = np.abs(to_db(np.maximum(mean_oracle[: upto + 1], tiny)) - to_db(np.maximum(mean_doi[: upto + 1], tiny)))
    rel = [abs(t["lambda2_doi"] - t["lambda2"]) / t["lambda2"] for t in trials if t["lambda2"] > 0]
    return {
        "n": n,
        "trials": trials,
        "algorithms": per_algo,
        "fraction_faster": {"accel-oracle": faster("accel-oracle"), "accel-doi": faster("accel-doi")},
        "doi_vs_oracle_max_db_gap": float(gap.max()),
        "doi_vs_oracle_compared_iterations": upto + 1,
        "lambda2_max_relative_error": max(rel) if rel else None,
    }


def bound_gain(psi: float) -> float:
    """log(1 - sqrt(psi)) / log(1 - psi): the gain guaranteed by the radius bound."""
    return math.log1p(-math.sqrt(psi)) / math.log1p(-psi)


@dataclass
class GainRecord:
    n: int
    trials: int
    rho_w: float
    rho_phi: float
    psi: float
    tau_ratio: float
    bound_gain: float
    empirical_tc_ratio: float | None
    radius_bound_slack: float
    incomplete_trials: list[int] = field(default_factory=list)

    @property
    def inv_sqrt_psi(self) -> float:
        return 1.0 / math.sqrt(self.psi)


@dataclass
class GainReport:
    config: ExperimentConfig
    records: list[GainRecord]

    def ratios(self) -> dict[int, float]:
        return {r.n: r.tau_ratio for r in self.records}

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "kind": "gain",
            "config": self.config.to_dict(),
            "records": [dict(asdict(r), inv_sqrt_psi=r.inv_sqrt_psi) for r in self.records],
        }


def _accelerated_for(cfg: ExperimentConfig, setup: TrialSetup, theta: PredictorParams) -> AcceleratedOperator:
    if cfg.uses_doi:
        return end_to_end_alpha(setup.weight, setup.graph, theta, cfg.doi_config(setup.n, _doi_seed(cfg, setup)))
    return AcceleratedOperator(setup.weight, theta, optimal_alpha(setup.lambda2, theta), setup.lambda2)


def run_gain_sweep(cfg: ExperimentConfig, *, empirical: bool = True) -> GainReport:
    """Spectral and empirical averaging-time ratios for every size in the config.

    ``tau_ratio`` is ``log rho(Phi - J) / log rho(W - J)`` averaged over trials;
    ``empirical_tc_ratio`` compares iterations-to-epsilon for the same x(0).
    """
    theta = cfg.theta()
    records = []
    for n in cfg.sizes:
        rho_w, rho_phi, ratios, tcs, slacks, incomplete = [], [], [], [], [], []
        for trial in range(cfg.trials):
            setup = build_trial(cfg, n, trial)
            op = _accelerated_for(cfg, setup, theta)
            r_w = setup.rho_w
            r_phi = op.radius()
            rho_w.append(r_w)
            rho_phi.append(r_phi)
            ratios.append(math.log(r_phi) / math.log(r_w))
            slacks.append(1.0 - math.sqrt(1.0 - r_w) - r_phi)
            if empirical:
                eps = cfg.epsilon
                tm = run_to_accuracy(setup.weight, setup.x0, eps, _horizon(cfg, n, r_w, False), hold=cfg.hold or 5)
                ta = run_to_accuracy(op, setup.x0, eps, _horizon(cfg, n, r_phi, True), hold=cfg.hold or 5)
                if tm.converged_at is None or ta.converged_at is None or ta.converged_at == 0:
                    incomplete.append(trial)
                else:
                    tcs.append(tm.converged_at / ta.converged_at)
        psi = 1.0 - float(np.mean(rho_w))
        records.append(
            GainRecord(
                n=n,
                trials=cfg.trials,
                rho_w=float(np.mean(rho_w)),
                rho_phi=float(np.mean(rho_phi)),
                psi=psi,
                tau_ratio=float(np.mean(ratios)),
                bound_gain=bound_gain(psi),
                empirical_tc_ratio=_mean_or_none(tcs),
                radius_bound_slack=float(min(slacks)),
                incomplete_trials=incomplete,
            )
        )
    return GainReport(cfg, records)


def verify_theory(cfg: ExperimentConfig) -> dict:
    """Machine-readable check of the rate expansion, the gain envelope and the chain spectrum."""
    theta = cfg.theta()
    g_coef = gamma(theta.theta2, theta.theta3)
    report = run_gain_sweep(cfg, empirical=False)
    rows = []
    for r in report.records:
        predicted_gap = g_coef * math.sqrt(r.psi)
        measured_gap = 1.0 - r.rho_phi
        inv = r.inv_sqrt_psi
        rows.append(
            {
                "n": r.n,
                "psi": r.psi,
                "one_minus_rho_phi": measured_gap,
                "gamma_sqrt_psi": predicted_gap,
                "rate_relative_deviation": abs(measured_gap - predicted_gap) / predicted_gap,
                "gain": r.tau_ratio,
                "inv_sqrt_psi": inv,
                "bound_gain": r.bound_gain,
                "gain_over_inv_sqrt_psi": r.tau_ratio / inv,
                "bound_gain_in_envelope": inv <= r.bound_gain <= inv + 0.5,
                "gain_at_least_bound_gain": r.tau_ratio >= r.bound_gain * (1 - 1e-12),
                "gain_in_envelope": inv <= r.tau_ratio <= inv + 0.5,
                "radius_bound_slack": r.radius_bound_slack,
            }
        )
    devs = [row["rate_relative_deviation"] for row in rows]
    out = {
        "schema": SCHEMA_VERSION,
        "kind": "verify",
        "config": cfg.to_dict(),
        "gamma": g_coef,
        "records": rows,
        "rate_deviation_shrinking": all(b <= a for a, b in zip(devs, devs[1:])),
        "radius_bound_holds": all(row["radius_bound_slack"] >= 0 for row in rows),
    }
    if cfg.topology == "chain":
        checks = []
        for n in cfg.sizes:
            lam = symmetric_eigenvalues(metropolis_hastings(make_chain(n))).eigenvalues
            closed = 1.0 / 3.0 + 2.0 / 3.0 * np.cos(np.pi * np.arange(n) / n)
            checks.append({"n": n, "max_abs_error": float(np.abs(lam - closed).max())})
        out["chain_spectrum"] = checks
    return out


def doi_report(cfg: ExperimentConfig) -> dict:
    """Decentralized lambda2 estimates against the exact eigenvalue, with round costs."""
    rows = []
    for n in cfg.sizes:
        for trial in range(cfg.trials):
            setup = build_trial(cfg, n, trial)
            dcfg = cfg.doi_config(n, _doi_seed(cfg, setup))
            res = estimate_lambda2(setup.weight, setup.graph, dcfg)
            rows.append(
                {
                    "n": n,
                    "trial": trial,
                    "K": dcfg.K,
                    "L": dcfg.L,
                    "lambda2": setup.lambda2,
                    "estimate": res.estimate,
                    "relative_error": abs(res.estimate - setup.lambda2) / setup.lambda2,
                    "cost": res.cost.as_dict(),
                    "conditions_ok": check_conditions(setup.weight).all_ok,
                }
            )
    return {"schema": SCHEMA_VERSION, "kind": "doi", "config": cfg.to_dict(), "records": rows}
