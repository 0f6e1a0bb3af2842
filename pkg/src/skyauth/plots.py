"""Figure rendering for the CLI: one PNG per sweep or run, written next
to the CSV it illustrates.  All plotting stays here so library users who
never render anything do not pay the matplotlib import."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_overhead(rows: list[dict], path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_digest: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        by_digest.setdefault(row["digest_bits"], []).append(
            (row["slot_duration"], row["overhead_percent"])
        )
    for digest_bits in sorted(by_digest):
        pts = sorted(by_digest[digest_bits])
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", markersize=3, label=f"digest {digest_bits} bit")
    ax.set_xlabel("slot duration [s]")
    ax.set_ylabel("bandwidth overhead [%]")
    ax.set_title("Authentication overhead vs slot duration")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_loss(rows: list[dict], path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [row["p_loss"] for row in rows]
    curves = [c for c in rows[0] if c != "p_loss"]
    for name in curves:
        style = "--" if name == "success_hibs" else "-"
        ax.plot(xs, [row[name] for row in rows], style, label=name)
    ax.set_xlabel("per-frame loss probability")
    ax.set_ylabel("slot verification success probability")
    ax.set_title("Loss tolerance")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_recovery(rows: list[dict], path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [row["adversary_rate"] for row in rows]
    curves = [c for c in rows[0] if c != "adversary_rate"]
    for name in curves:
        style = "--" if name == "subsets_hibs" else "-"
        ax.plot(xs, [row[name] for row in rows], style, marker="o",
                markersize=3, label=name)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("adversary injection rate [msgs/s]")
    ax.set_ylabel("worst-case digest computations")
    ax.set_title("Recovery search cost under injection")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_run_overview(report, path: str) -> None:
    """Verdict mix and per-antenna delivery for one simulation run."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    counts = report.verdict_counts()
    labels = list(counts)
    ax1.bar(labels, [counts[k] for k in labels],
            color=["#2a9d8f", "#e9c46a", "#e76f51", "#8d99ae"])
    ax1.set_ylabel("slots")
    ax1.set_title("Verdicts")
    ax1.tick_params(axis="x", rotation=20)
    antennas = range(report.config.antennas)
    ax2.bar(list(antennas), [report.antenna_frame_delivery(a) for a in antennas],
            color="#457b9d", label="per antenna")
    ax2.axhline(report.server_frame_delivery(), color="#e63946",
                linestyle="--", label="server (fused)")
    ax2.set_xlabel("antenna")
    ax2.set_ylabel("frame delivery rate")
    ax2.set_ylim(0, 1.05)
    ax2.set_title("Delivery: antennas vs fused server")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
