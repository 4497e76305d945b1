"""Command-line front end: ``qjwork {trace,ensemble,sweep,analytics,validate}``.

Settings are resolved as subcommand defaults, then the ``--config`` JSON file,
then explicit flags.  Exit status is 0 on success, 1 when a validation check
fails and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import emit, figures, validation
from .engine import StepTooLarge, check_step
from .model import TWO_PI, DriveProtocol, ModelParams
from .stats import histogram, summarize
from .work import run_protocol_ensemble

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2

SUBCOMMANDS = ("trace", "ensemble", "sweep", "analytics", "validate")
GAMMA_GRID = [0.0, 0.005, 0.01, 0.015, 0.02]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    beta_hbar_omega0: float = 1.0
    gamma_down: float = 0.1
    gamma_up: float | None = None
    lambda0: float = 0.1
    n_cycles: float = 8.0
    omega: float = 1.0
    n_trajectories: int = 10_000
    dt_per_cycle: int = 1000
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    lambda0_grid: list = field(default_factory=list)
    gamma_down_grid: list = field(default_factory=list)
    method: str = "waiting"
    n_bootstrap: int = 1000
    prelude_cycles: float = 2.0
    tail_cycles: float = 4.0
    sample_every: int = 1
    broken_detailed_balance: bool = False

    @property
    def dt(self):
        return TWO_PI / self.dt_per_cycle

    def params(self, gamma_down=None):
        g = self.gamma_down if gamma_down is None else gamma_down
        if self.gamma_up is None:
            p = ModelParams.from_detailed_balance(g, self.beta_hbar_omega0)
        else:
            p = ModelParams(self.beta_hbar_omega0, g, self.gamma_up)
        return validation.broken_detailed_balance(p) if self.broken_detailed_balance else p

    def protocol(self, lambda0=None):
        lam = self.lambda0 if lambda0 is None else lambda0
        return DriveProtocol(lam, self.n_cycles, self.omega)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**_coerce(data))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_FIELDS = {"n_trajectories", "dt_per_cycle", "seed", "workers", "n_bootstrap",
               "sample_every"}
_LIST_FIELDS = {"lambda0_grid", "gamma_down_grid"}


def _coerce(data):
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    out = {}
    for key, value in data.items():
        try:
            if key in _LIST_FIELDS:
                if isinstance(value, str):
                    value = [v for v in value.split(",") if v.strip()]
                out[key] = [float(v) for v in value]
            elif key in _INT_FIELDS:
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError("not an integer")
                out[key] = int(value)
            elif key == "gamma_up":
                out[key] = None if value is None else float(value)
            elif key == "broken_detailed_balance":
                if not isinstance(value, bool):
                    raise ValueError("expected true or false")
                out[key] = value
            elif key in ("output_dir", "method"):
                out[key] = str(value)
            else:
                out[key] = float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {key!r}: invalid value {value!r} ({exc})") from exc
    return out


SUBCOMMAND_DEFAULTS = {
    "trace": {"beta_hbar_omega0": 1.0, "lambda0": 0.1, "n_cycles": 8.0,
              "gamma_down": 0.1},
    "ensemble": {"beta_hbar_omega0": 1.0, "lambda0": 0.05, "n_cycles": 10.0,
                 "gamma_down_grid": GAMMA_GRID, "n_trajectories": 100_000},
    "sweep": {"beta_hbar_omega0": 2.0, "n_cycles": 10.0,
              "lambda0_grid": [0.01, 0.02, 0.05, 0.1, 0.2],
              "gamma_down_grid": GAMMA_GRID, "n_trajectories": 100_000},
    "analytics": {"beta_hbar_omega0": 2.0, "n_cycles": 10.0,
                  "lambda0_grid": [0.01, 0.02, 0.05, 0.1, 0.2],
                  "gamma_down_grid": GAMMA_GRID},
    "validate": {"n_trajectories": 10_000, "workers": 8},
}

_FLAG_FIELDS = (
    ("--beta", "beta_hbar_omega0", float, "inverse temperature beta*hbar*omega0"),
    ("--gamma-down", "gamma_down", float, "emission rate"),
    ("--gamma-up", "gamma_up", float, "absorption rate (default: detailed balance)"),
    ("--lambda0", "lambda0", float, "drive amplitude"),
    ("--n-cycles", "n_cycles", float, "drive duration in periods"),
    ("--omega", "omega", float, "drive frequency"),
    ("-n", "n_trajectories", int, "number of realizations"),
    ("--dt-per-cycle", "dt_per_cycle", int, "integration steps per drive period"),
    ("--lambda0-grid", "lambda0_grid", str, "comma-separated lambda0 values"),
    ("--gamma-down-grid", "gamma_down_grid", str, "comma-separated gamma_down values"),
    ("--method", "method", str, "ensemble sampler: waiting or step"),
    ("--bootstrap", "n_bootstrap", int, "bootstrap replicates"),
    ("--prelude-cycles", "prelude_cycles", float, "undriven cycles before the drive"),
    ("--tail-cycles", "tail_cycles", float, "undriven cycles after the drive"),
    ("--sample-every", "sample_every", int, "trace sampling stride in steps"),
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qjwork",
        description="Quantum-jump work statistics of a driven dissipative qubit.",
        epilog="Settings precedence: subcommand defaults < --config file < flags.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "trace": "single trajectory with prelude, drive and guardian tail",
        "ensemble": "work histograms and Jarzynski averages per gamma_down",
        "sweep": "Monte Carlo and analytic moment ratio over a (lambda0, gamma_down) grid",
        "analytics": "photon-number resolved analytics over the grid, no Monte Carlo",
        "validate": "run the numerical self-checks",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", dest="output_dir", help="output directory")
        for flag, dest, typ, text in _FLAG_FIELDS:
            p.add_argument(flag, dest=dest, type=typ, help=text)
        if name == "validate":
            p.add_argument("--broken-detailed-balance", action="store_true",
                           default=None,
                           help="scale gamma_up by 1.5 in the reverse-identity check")
    return parser


def resolve_config(args):
    """Merge defaults, the config file and explicit flags into a RunConfig."""
    merged = RunConfig().to_dict()
    merged.update(SUBCOMMAND_DEFAULTS[args.command])
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.update(_coerce(data))
    flags = {k: v for k, v in vars(args).items()
             if k in _FIELDS and v is not None}
    merged.update(_coerce(flags))
    cfg = RunConfig.from_dict(merged)
    _check(cfg)
    return cfg


def _check(cfg):
    problems = []
    if cfg.n_trajectories < 1:
        problems.append("n_trajectories must be >= 1")
    if cfg.dt_per_cycle < 1:
        problems.append("dt_per_cycle must be >= 1")
    if cfg.workers < 1:
        problems.append("workers must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        problems.append("seed must be an unsigned 64-bit integer")
    if cfg.method not in ("waiting", "step"):
        problems.append("method must be 'waiting' or 'step'")
    if cfg.n_bootstrap < 100:
        problems.append("n_bootstrap must be >= 100")
    for name in ("lambda0", "n_cycles", "prelude_cycles", "tail_cycles"):
        if not getattr(cfg, name) >= 0:
            problems.append(f"{name} must be >= 0")
    try:
        cfg.params()
        cfg.protocol()
    except ValueError as exc:
        problems.append(str(exc))
    if problems:
        raise ConfigError("; ".join(problems))


def _gammas(cfg):
    return cfg.gamma_down_grid or [cfg.gamma_down]


def _lambdas(cfg):
    return cfg.lambda0_grid or [cfg.lambda0]


def _out(cfg):
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise emit.EmitError(f"cannot create {out}: {exc.strerror or exc}") from exc
    return out


def _save_config(cfg, out, name):
    path = out / f"{name}_config.json"
    path.write_text(cfg.to_json(), encoding="utf-8")


def cmd_trace(cfg, log=print):
    params, protocol = cfg.params(), cfg.protocol()
    check_step(cfg.dt, params)
    tr = figures.single_trace(params, protocol, cfg.dt, cfg.seed,
                              prelude=cfg.prelude_cycles * TWO_PI,
                              tail=cfg.tail_cycles * TWO_PI,
                              sample_every=cfg.sample_every)
    out = _out(cfg)
    emit.write_trace(out / "trace.csv", tr.times, tr.pop_e, tr.jumps)
    emit.plot_trace(out / "trace.svg", tr.times, tr.pop_e, tr.jumps, tr.drive_window)
    _save_config(cfg, out, "trace")
    kinds = [ev.kind for ev in tr.jumps]
    log(f"trace: initial {tr.initial}, {kinds.count('emission')} emissions, "
        f"{kinds.count('absorption')} absorptions -> {out / 'trace.csv'}")
    return EXIT_OK


SUMMARY_COLUMNS = ("gamma_down", "n", "timeouts", "mean_W", "se_mean_W", "mean_W2",
                   "se_mean_W2", "ratio", "se_ratio", "jarzynski_mean", "se_jarzynski",
                   "jarzynski_ci_low", "jarzynski_ci_high", "P_W_minus1", "P_W_plus1",
                   "mass_outside_pm1", "occupied_bins")


def cmd_ensemble(cfg, log=print):
    out = _out(cfg)
    rows = []
    for g in _gammas(cfg):
        params, protocol = cfg.params(g), cfg.protocol()
        ens = run_protocol_ensemble(cfg.n_trajectories, params, protocol, cfg.dt,
                                    cfg.seed, method=cfg.method, workers=cfg.workers)
        hist = histogram(ens)
        s = summarize(hist, params.beta, n_bootstrap=cfg.n_bootstrap, rng=cfg.seed)
        tag = f"g{g:g}"
        emit.write_ensemble(out / f"ensemble_{tag}.csv", ens)
        emit.write_histogram(out / f"histogram_{tag}.csv", hist)
        emit.plot_histogram(out / f"histogram_{tag}.svg", hist,
                            title=rf"$\Gamma_\downarrow = {g:g}$")
        rows.append((g, s.n, ens.n_timeouts, s.mean_W, s.se_mean_W, s.mean_W2,
                     s.se_mean_W2, s.ratio, s.se_ratio, s.jarzynski_mean,
                     s.se_jarzynski, *s.ci_jarzynski, hist.probability(-1),
                     hist.probability(1), hist.mass_outside((-1, 1)),
                     len(hist.occupied)))
        log(f"gamma_down={g:g}: <exp(-beta W)> = {s.jarzynski_mean:.5f} "
            f"+- {s.se_jarzynski:.5f}, bins {list(hist.occupied)}")
    emit.write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    _save_config(cfg, out, "ensemble")
    return EXIT_OK


def _grid_rows(cfg, monte_carlo):
    for g in _gammas(cfg):
        check_step(cfg.dt, cfg.params(g))
    mc = None
    if monte_carlo:
        mc = {"n": cfg.n_trajectories, "seed": cfg.seed, "workers": cfg.workers,
              "n_bootstrap": cfg.n_bootstrap, "method": cfg.method}
    return figures.sweep_rows(cfg.beta_hbar_omega0, cfg.n_cycles, _lambdas(cfg),
                              _gammas(cfg), cfg.dt, cfg.omega, cfg.gamma_up, mc)


def cmd_sweep(cfg, log=print, monte_carlo=True, name="sweep"):
    rows = _grid_rows(cfg, monte_carlo)
    out = _out(cfg)
    extra = figures.ANALYTIC_EXTRA + (figures.MC_EXTRA if monte_carlo else ())
    emit.write_sweep(out / f"{name}.csv", rows, extra)
    emit.plot_sweep(out / f"{name}.svg", rows, cfg.beta_hbar_omega0)
    _save_config(cfg, out, name)
    for r in rows:
        mc = (f", MC ratio {r['mc_ratio']:.4f} +- {r['mc_ratio_se']:.4f}, "
              f"MC <exp(-beta W)> {r['mc_jarzynski']:.4f}" if monte_carlo else "")
        log(f"lambda0={r['lambda0']:g} gamma_down={r['gamma_down']:g}: "
            f"ratio {r['ratio']:.5f}{mc}")
    return EXIT_OK


def cmd_analytics(cfg, log=print):
    return cmd_sweep(cfg, log, monte_carlo=False, name="analytics")


def cmd_validate(cfg, log=print):
    check_step(cfg.dt, cfg.params())
    workers = sorted({1, cfg.workers})
    results = [
        validation.check_zero_photon_fdt(),
        validation.check_master_equivalence(n=cfg.n_trajectories, seed=cfg.seed,
                                            dt=cfg.dt),
        validation.check_guardian(seed=cfg.seed),
        validation.check_reverse_identity(broken=cfg.broken_detailed_balance),
        validation.check_perturbation_order(),
        validation.check_determinism(workers=workers, seed=cfg.seed),
    ]
    lines = [r.line() for r in results]
    for line in lines:
        log(line)
    out = _out(cfg)
    (out / "validate.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _save_config(cfg, out, "validate")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = {"trace": cmd_trace, "ensemble": cmd_ensemble, "sweep": cmd_sweep,
            "analytics": cmd_analytics, "validate": cmd_validate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg)
    except StepTooLarge as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except emit.EmitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.command} finished in {time.perf_counter() - start:.1f} s",
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
