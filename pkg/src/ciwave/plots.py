"""Figure rendering for experiment reports (SVG files, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLES = {
    "sca": dict(color="tab:blue", marker="o"),
    "sq": dict(color="tab:orange", marker="s"),
    "sdr": dict(color="tab:green", marker="^"),
    "sdr_bound": dict(color="tab:green", marker="", linestyle="--"),
}


def _style(method):
    return _STYLES.get(method, dict(color="tab:gray", marker="."))


def plot_tradeoff(report, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({p.method for p in report.tradeoff})
    for method in methods:
        pts = [p for p in report.tradeoff if p.method == method and p.n_ok > 0]
        if not pts:
            continue
        gammas = [p.gamma_db for p in pts]
        means = [p.mean_sinr_db for p in pts]
        errs = [p.stderr_db for p in pts]
        ax.errorbar(gammas, means, yerr=errs, label=method, **_style(method))
    ax.set_xlabel("user SNR threshold (dB)")
    ax.set_ylabel("radar SINR (dB)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path))
    plt.close(fig)


def plot_beampattern(report, path, floor_db: float = -60.0) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted(report.beampattern_db):
        gains = report.beampattern_db[method].clip(floor_db, None)
        ax.plot(report.angles_deg, gains, label=method, linewidth=1.2)
    scenario = report.spec.scenario
    for th in scenario.clutter_angles:
        ax.axvline(th * 180.0 / 3.141592653589793, color="gray", alpha=0.35, linestyle=":")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("normalized gain (dB)")
    ax.set_ylim(floor_db, 3)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path))
    plt.close(fig)


def plot_security(report, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    gammas = [p.gamma_db for p in report.security]
    floor = 0.5 / max((p.n_trials for p in report.security), default=1)
    cu = [max(p.cu_ser, floor) for p in report.security]
    eve = [max(p.eve_ser, floor) for p in report.security]
    ax.semilogy(gammas, cu, marker="o", label="served users")
    ax.semilogy(gammas, eve, marker="x", label="eavesdropper")
    ax.set_xlabel("user SNR threshold (dB)")
    ax.set_ylabel("symbol error rate")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path))
    plt.close(fig)
