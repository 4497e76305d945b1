"""CSV, JSON and SVG writers.  Every writer is byte-deterministic in its inputs."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

TRACE_COLUMNS = ("t", "pop_e", "jump_flag", "jump_kind")
ENSEMBLE_COLUMNS = ("index", "initial", "final", "n_emit", "n_absorb",
                    "Q_over_hw0", "W_over_hw0")
MASTER_COLUMNS = ("t", "sigma_ee", "re_sigma_ge", "im_sigma_ge")
HISTOGRAM_COLUMNS = ("W_over_hw0", "count", "probability")
SWEEP_COLUMNS = ("lambda0", "gamma_down", "P0", "P1", "W1_mean", "W2_mean", "ratio",
                 "jarzynski_lhs", "jarzynski_rhs")

_SVG_RC = {"svg.hashsalt": "qjwork", "svg.fonttype": "path", "path.simplify": False}
_LABELS = ("g", "e")


class EmitError(OSError):
    pass


def fmt(x):
    """Shortest round-tripping text for a number; bools and strings pass through."""
    if isinstance(x, (bool, str)) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, int):
        return str(x)
    if hasattr(x, "item"):
        x = x.item()
        if isinstance(x, (bool, int)):
            return str(x)
    return repr(float(x))


def _open(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(path, columns, rows):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return Path(path)


def write_json(path, payload):
    with _open(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return Path(path)


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trace_rows(times, pop_e, jumps):
    """Rows of the trace CSV; each jump is flagged on the first sample at or after it."""
    flags = [0] * len(times)
    kinds = [""] * len(times)
    for ev in jumps:
        i = min(range(len(times)), key=lambda k: abs(times[k] - ev.time))
        if times[i] < ev.time - 1e-9 and i + 1 < len(times):
            i += 1
        flags[i] += 1
        kinds[i] = ev.kind
    return zip(times, pop_e, flags, kinds)


def write_trace(path, times, pop_e, jumps):
    return write_csv(path, TRACE_COLUMNS, trace_rows(times, pop_e, jumps))


def write_ensemble(path, ensemble):
    """Per-realization CSV plus a ``.json`` metadata sidecar; returns both paths."""
    path = Path(path)
    Q = ensemble.heat
    W = ensemble.all_work
    rows = ((int(ensemble.start + i), _LABELS[ensemble.initial[i]],
             _LABELS[ensemble.final[i]], int(ensemble.n_emit[i]),
             int(ensemble.n_absorb[i]), int(Q[i]), int(W[i]))
            for i in range(ensemble.initial.size) if not ensemble.timeout[i])
    write_csv(path, ENSEMBLE_COLUMNS, rows)
    side = write_json(path.with_suffix(".json"), ensemble.metadata)
    return path, side


def write_master(path, solution):
    rows = zip(solution.times, solution.sigma_ee, solution.sigma_ge.real,
               solution.sigma_ge.imag)
    return write_csv(path, MASTER_COLUMNS, rows)


def write_histogram(path, hist):
    n = hist.total
    rows = ((b, c, c / n) for b, c in zip(hist.bins, hist.counts))
    return write_csv(path, HISTOGRAM_COLUMNS, rows)


def write_sweep(path, rows, extra_columns=()):
    """``rows`` are mappings; missing cells are written empty."""
    columns = SWEEP_COLUMNS + tuple(extra_columns)
    return write_csv(path, columns, ([r.get(c) for c in columns] for r in rows))


def _save_svg(fig, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context(_SVG_RC):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def plot_histogram(path, hist, title=""):
    """Bar chart of P(W); each bar carries the SVG id ``bar-<W>``."""
    fig = Figure(figsize=(4.0, 3.0))
    ax = fig.add_subplot()
    probs = hist.probabilities()
    for b in hist.occupied:
        (bar,) = ax.bar([b], [probs[b]], width=0.8, color="tab:blue")
        bar.set_gid(f"bar-{b}")
    ax.set_xlabel(r"$W/\hbar\omega_0$")
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_trace(path, times, pop_e, jumps, drive_window=None):
    fig = Figure(figsize=(6.0, 3.0))
    ax = fig.add_subplot()
    ax.plot(times, pop_e, lw=0.8, color="k")
    for ev in jumps:
        colour = "tab:red" if ev.kind == "emission" else "tab:blue"
        ax.axvline(ev.time, color=colour, lw=0.6, ls="--")
    if drive_window is not None:
        ax.axvspan(*drive_window, color="0.9", zorder=0)
    ax.set_xlabel(r"$\omega_0 t$")
    ax.set_ylabel(r"$|b|^2$")
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_sweep(path, rows, beta):
    """Moment ratio and Jarzynski average against lambda0, one curve per gamma_down."""
    fig = Figure(figsize=(5.0, 6.0))
    ax_r, ax_j = fig.subplots(2, 1, sharex=True)
    gammas = sorted({r["gamma_down"] for r in rows})
    for k, g in enumerate(gammas):
        sel = sorted((r for r in rows if r["gamma_down"] == g), key=lambda r: r["lambda0"])
        lam = [r["lambda0"] for r in sel]
        colour = f"C{k}"
        ax_r.plot(lam, [r["ratio"] for r in sel], color=colour, label=f"{g:g}")
        if any(r.get("ratio_perturbative") is not None for r in sel):
            ax_r.plot(lam, [r.get("ratio_perturbative", math.nan) for r in sel],
                      color=colour, ls=":")
        if any(r.get("mc_ratio") is not None for r in sel):
            ax_r.errorbar(lam, [r["mc_ratio"] for r in sel],
                          yerr=[r.get("mc_ratio_se", 0.0) for r in sel],
                          fmt="o", ms=3, color=colour)
            ax_j.errorbar(lam, [r["mc_jarzynski"] for r in sel],
                          yerr=[r.get("mc_jarzynski_se", 0.0) for r in sel],
                          fmt="o", ms=3, color=colour)
        ax_j.plot(lam, [r["jarzynski_lhs"] for r in sel], color=colour)
    ax_r.axhline(1.0 / math.tanh(beta / 2.0), color="0.5", lw=0.6)
    ax_j.axhline(1.0, color="0.5", lw=0.6)
    ax_r.set_ylabel(r"$\langle W^2\rangle/\hbar\omega_0\langle W\rangle$")
    ax_j.set_ylabel(r"$\langle e^{-\beta W}\rangle$")
    ax_j.set_xlabel(r"$\lambda_0/\hbar\omega_0$")
    ax_r.legend(title=r"$\Gamma_\downarrow$", fontsize=7)
    fig.tight_layout()
    return _save_svg(fig, path)
