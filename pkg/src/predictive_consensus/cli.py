"""Command-line entry point: ``predictive-consensus <verb> [flags]``.

Verbs are ``mse``, ``gain``, ``verify``, ``doi`` and ``dump-graph``. A JSON
config file given by ``--config`` may set any flag (keys use underscores,
e.g. ``"eps_db"``); flags on the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, ConsensusError
from .experiments import (
    ExperimentConfig,
    build_trial,
    doi_report,
    run_gain_sweep,
    run_mse_experiment,
    verify_theory,
)

log = logging.getLogger("predictive_consensus")

VERBS = ("mse", "gain", "verify", "doi", "dump-graph")

# flag dest -> ExperimentConfig field
_FIELD_FOR = {
    "topology": "topology",
    "n": "sizes",
    "trials": "trials",
    "init": "init",
    "eps_db": "epsilon_db",
    "theta": "theta_mode",
    "lambda2": "lambda2_source",
    "seed": "seed",
    "max_iters": "max_iters",
    "hold": "hold",
    "doi_seed": "doi_seed",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with default flag values")
    common.add_argument("--topology", choices=("chain", "grid", "rgg"))
    common.add_argument("--n", type=int, action="append", help="network size (repeatable)")
    common.add_argument("--trials", type=int)
    common.add_argument("--init", choices=("slope", "spike"))
    common.add_argument("--eps-db", type=float, help="target accuracy in dB (negative)")
    common.add_argument("--theta", help="'ls' or 'asym:<eps>'")
    common.add_argument("--lambda2", help="'oracle' or 'doi:<K>,<L>' (K, L may be 2N, N^2, ...)")
    common.add_argument("--doi-k", help="DOI iterations; implies --lambda2 doi")
    common.add_argument("--doi-l", help="DOI rescaling period; implies --lambda2 doi")
    common.add_argument("--doi-seed", type=int, help="fixed DOI start-vector seed for every trial")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--hold", type=int, help="stop after this many iterations below epsilon")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="predictive-consensus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("mse", parents=[common], help="MSE traces for memoryless and accelerated consensus")
    sub.add_parser("gain", parents=[common], help="averaging-time ratio sweep over N")
    sub.add_parser("verify", parents=[common], help="check rate expansion and gain envelope")
    sub.add_parser("doi", parents=[common], help="decentralized lambda2 estimates and round costs")
    dump = sub.add_parser("dump-graph", parents=[common], help="write edge lists (and debug dumps)")
    dump.add_argument("--dump-weights", action="store_true", help="also write W as CSV")
    dump.add_argument("--dump-spectrum", action="store_true", help="also write the spectra of W and Phi as CSV")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, val in raw.items():
            dest = key.replace("-", "_")
            if dest in _FIELD_FOR:
                values[_FIELD_FOR[dest]] = val
            elif dest in ExperimentConfig.__dataclass_fields__:
                values[dest] = val
            elif dest not in ("doi_k", "doi_l", "out"):
                raise ConfigError(f"unknown config key {key!r}")
        doi_k, doi_l = raw.get("doi_k"), raw.get("doi_l")
    else:
        doi_k = doi_l = None
    for dest, fld in _FIELD_FOR.items():
        val = getattr(args, dest, None)
        if val is not None:
            values[fld] = val
    doi_k = args.doi_k if args.doi_k is not None else doi_k
    doi_l = args.doi_l if args.doi_l is not None else doi_l
    if doi_k is not None or doi_l is not None:
        values["lambda2_source"] = f"doi:{doi_k if doi_k is not None else '2N'},{doi_l if doi_l is not None else 10}"
    if isinstance(values.get("sizes"), int):
        values["sizes"] = [values["sizes"]]
    if "sizes" in values:
        values["sizes"] = tuple(values["sizes"])
    return ExperimentConfig(**values)


def _out_dir(args: argparse.Namespace) -> Path | None:
    if args.out is not None:
        return args.out
    if args.config is not None:
        raw = json.loads(Path(args.config).read_text())
        if "out" in raw:
            return Path(raw["out"])
    return None


def _emit(payload: dict, out: Path | None, name: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _fmt_mean(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.1f}"


def _cmd_mse(cfg: ExperimentConfig, out: Path | None) -> int:
    summary = run_mse_experiment(cfg, out)
    for rec in summary["sizes"]:
        algos = rec["algorithms"]
        means = " ".join(f"{a}={_fmt_mean(algos[a]['mean_iterations'])}" for a in algos)
        print(
            f"N={rec['n']}: mean iterations {means}; "
            f"accelerated faster in {rec['fraction_faster']['accel-oracle']:.0%} of trials; "
            f"doi/oracle max gap {rec['doi_vs_oracle_max_db_gap']:.3f} dB"
        )
        for algo, a in algos.items():
            if a["incomplete_trials"]:
                print(f"  {algo}: incomplete trials {a['incomplete_trials']}")
    if out is None:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_gain(cfg: ExperimentConfig, out: Path | None) -> int:
    report = run_gain_sweep(cfg)
    print(f"{'N':>6} {'rho(W-J)':>12} {'rho(Phi-J)':>12} {'tau ratio':>10} {'Tc ratio':>10} {'slack':>10}")
    for r in report.records:
        tc = "n/a" if r.empirical_tc_ratio is None else f"{r.empirical_tc_ratio:10.3f}"
        print(f"{r.n:>6} {r.rho_w:12.8f} {r.rho_phi:12.8f} {r.tau_ratio:10.3f} {tc:>10} {r.radius_bound_slack:10.2e}")
    _emit(report.to_dict(), out, "gain.json")
    return 0


def _cmd_verify(cfg: ExperimentConfig, out: Path | None) -> int:
    _emit(verify_theory(cfg), out, "verify.json")
    return 0


def _cmd_doi(cfg: ExperimentConfig, out: Path | None) -> int:
    report = doi_report(cfg)
    for r in report["records"]:
        c = r["cost"]
        print(
            f"N={r['n']} trial={r['trial']} K={r['K']} L={r['L']}: lambda2={r['lambda2']:.10f} "
            f"estimate={r['estimate']:.10f} rel.err={r['relative_error']:.2e} "
            f"consensus rounds={c['consensus_rounds']} max-consensus rounds={c['max_consensus_rounds']}"
        )
    if out is not None:
        _emit(report, out, "doi.json")
    return 0


def _cmd_dump(cfg: ExperimentConfig, out: Path | None, args: argparse.Namespace) -> int:
    from .accel import AcceleratedOperator, optimal_alpha

    theta = cfg.theta()
    for n in cfg.sizes:
        for trial in range(cfg.trials):
            setup = build_trial(cfg, n, trial)
            stem = f"{cfg.topology}_{n}_{setup.seed}"
            text = setup.graph.to_edge_list()
            if out is None:
                sys.stdout.write(text)
                continue
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{stem}.edges").write_text(text)
            if args.dump_weights:
                (out / f"{stem}_W.csv").write_text(setup.weight.to_csv())
            if args.dump_spectrum:
                from .spectral import Spectrum

                (out / f"{stem}_W_spectrum.csv").write_text(Spectrum(setup.lambdas).to_csv())
                op = AcceleratedOperator(setup.weight, theta, optimal_alpha(setup.lambda2, theta), setup.lambda2)
                (out / f"{stem}_Phi_spectrum.csv").write_text(op.spectrum().to_csv())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        out = _out_dir(args)
        if args.verb == "mse":
            return _cmd_mse(cfg, out)
        if args.verb == "gain":
            return _cmd_gain(cfg, out)
        if args.verb == "verify":
            return _cmd_verify(cfg, out)
        if args.verb == "doi":
            return _cmd_doi(cfg, out)
        return _cmd_dump(cfg, out, args)
    except ConsensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
