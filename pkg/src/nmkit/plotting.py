"""Figure rendering for the CLI report paths.

Every plotter writes a PNG next to the delimited output.  Rendering is
deterministic: fixed figure geometry and no software/timestamp metadata in
the files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_OPTS = {"dpi": 130, "metadata": {"Software": None}}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def plot_gfun(times, g, gamma=None, shift=None, g_reference=None, path="gfun.png"):
    """|G|, Re G, Im G against time, with the rate series when available."""
    nrows = 2 if gamma is not None else 1
    fig, axes = plt.subplots(nrows, 1, figsize=(6.4, 3.2 * nrows), sharex=True)
    axes = np.atleast_1d(axes)
    ax = axes[0]
    ax.plot(times, np.abs(g), label="|G|", color="C0")
    ax.plot(times, np.real(g), label="Re G", color="C1", lw=0.8)
    ax.plot(times, np.imag(g), label="Im G", color="C2", lw=0.8)
    if g_reference is not None:
        ax.plot(times, np.abs(g_reference), "k--", lw=0.8, label="|G| closed form")
    ax.set_ylabel("amplitude")
    ax.legend(loc="best", fontsize=8)
    if gamma is not None:
        ax2 = axes[1]
        ax2.plot(times, gamma, label="decay rate", color="C3")
        if shift is not None:
            ax2.plot(times, shift, label="frequency shift", color="C4", lw=0.8)
        ax2.axhline(0.0, color="0.6", lw=0.6)
        ax2.set_ylabel("rate")
        ax2.legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("t")
    return _finish(fig, path)


def plot_evolution(times, states, path="evolve.png"):
    """Populations and coherence magnitude of an evolved qubit state."""
    states = np.asarray(states)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(times, np.real(states[:, 1, 1]), label="excited population", color="C0")
    ax.plot(times, np.real(states[:, 0, 0]), label="ground population", color="C1")
    ax.plot(times, np.abs(states[:, 1, 0]), label="|coherence|", color="C2")
    ax.set_xlabel("t")
    ax.set_ylabel("matrix elements")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_measure(times, d, intervals, path="measure.png"):
    """Trace distance of the optimal pair with growth intervals shaded."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(times, d, color="C0", label="trace distance")
    for k, (a, b, _) in enumerate(intervals):
        ax.axvspan(a, b, color="C3", alpha=0.25, label="backflow" if k == 0 else None)
    ax.set_xlabel("t")
    ax.set_ylabel("D")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_divisibility(times, min_eigs, intervals, path="divisibility.png"):
    """Per-step minimum Choi eigenvalue with flagged intervals shaded."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(times, min_eigs, color="C0", lw=0.8, label="min Choi eigenvalue")
    ax.axhline(0.0, color="0.6", lw=0.6)
    for k, iv in enumerate(intervals):
        ax.axvspan(
            iv.t_start, iv.t_end, color="C3", alpha=0.25,
            label="CP failure" if k == 0 else None,
        )
    ax.set_xlabel("t")
    ax.set_ylabel("eigenvalue")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_witness(record, path="witness.png"):
    """Reduced-state trace distance against the correlation bounds."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(record.times, record.d_local, color="C0", label="D(rho1_S, rho2_S)")
    ax.axhline(record.d_local_0, color="0.4", lw=0.8, ls=":", label="initial value")
    bound = record.d_local_0 + record.bound_corr1 + record.bound_corr2
    ax.axhline(bound, color="C3", lw=0.8, ls="--", label="correlation bound")
    ax.set_xlabel("t")
    ax.set_ylabel("trace distance")
    ax.set_title(f"verdict: {record.verdict}", fontsize=9)
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_sweep(gamma0_values, n_values, path="sweep.png"):
    """Backflow measure against the coupling strength."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(gamma0_values, n_values, "o-", color="C0")
    ax.set_xlabel("coupling gamma0")
    ax.set_ylabel("measure")
    return _finish(fig, path)
