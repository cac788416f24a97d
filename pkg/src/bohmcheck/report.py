"""Batch reporting: a delimited summary table plus rendered figures.

write_report decides every named term against one automaton, writes the
results to report.tsv, and renders two PNG figures next to it: the
lattice sizes per level and the certificate sizes per term.
"""

from __future__ import annotations

import os
import time

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .automata import WAA
from .derive import decide
from .model import Ctx, LatticeTooLarge
from .terms import O, Arrow, Term, bohm_prefix, bt_render

PREFIX_DEPTH = 6


def lattice_sizes(ctx: Ctx) -> list[tuple[str, int, int]]:
    """(type, level, size) rows for the base and first order lattices."""
    rows = []
    for ty, label in [(O, "o"), (Arrow(O, O), "o -> o")]:
        for k in range(ctx.aut.max_rank + 1):
            try:
                rows.append((label, k, len(ctx.lattice(ty, k))))
            except LatticeTooLarge:
                rows.append((label, k, -1))
    return rows


def write_report(
    aut: WAA,
    named_terms: list[tuple[str, Term]],
    outdir: str,
    depth: int = PREFIX_DEPTH,
    cap: int | None = None,
) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    written = []

    rows = []
    for name, term in named_terms:
        t0 = time.perf_counter()
        dec = decide(aut, term, cap=cap)
        elapsed = time.perf_counter() - t0
        prefix = bt_render(bohm_prefix(term, depth))
        rows.append(
            {
                "name": name,
                "accepted": dec.accepted,
                "value": ",".join(sorted(dec.value)) or "-",
                "prefix": prefix,
                "positive_nodes": dec.positive.size(),
                "refutation_nodes": dec.refutation.size(),
                "seconds": elapsed,
            }
        )

    tsv = os.path.join(outdir, "report.tsv")
    cols = ["name", "accepted", "value", "prefix",
            "positive_nodes", "refutation_nodes", "seconds"]
    with open(tsv, "w") as f:
        f.write("\t".join(cols) + "\n")
        for r in rows:
            f.write("\t".join(
                f"{r[c]:.3f}" if c == "seconds" else str(r[c]) for c in cols
            ) + "\n")
    written.append(tsv)

    ctx = Ctx(aut) if cap is None else Ctx(aut, cap)
    written.append(_plot_lattices(lattice_sizes(ctx), outdir))
    written.append(_plot_certificates(rows, outdir))
    return written


def _plot_lattices(sizes: list[tuple[str, int, int]], outdir: str) -> str:
    labels = sorted({label for label, _, _ in sizes})
    levels = sorted({k for _, k, _ in sizes})
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(1, len(labels))
    for i, label in enumerate(labels):
        xs = [k + i * width for k in levels]
        ys = [next((n for l, k2, n in sizes if l == label and k2 == k), 0)
              for k in levels]
        ax.bar(xs, [max(0, y) for y in ys], width=width, label=label)
        for x, y in zip(xs, ys):
            ax.text(x, max(0, y), "cap" if y < 0 else str(y),
                    ha="center", va="bottom", fontsize=8)
    ax.set_xticks([k + width * (len(labels) - 1) / 2 for k in levels])
    ax.set_xticklabels([str(k) for k in levels])
    ax.set_xlabel("level")
    ax.set_ylabel("lattice size")
    ax.set_title("Lattice sizes per level")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "lattices.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_certificates(rows: list[dict], outdir: str) -> str:
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    xs = range(len(rows))
    width = 0.4
    ax.bar([x - width / 2 for x in xs],
           [r["positive_nodes"] for r in rows], width=width, label="positive")
    ax.bar([x + width / 2 for x in xs],
           [r["refutation_nodes"] for r in rows], width=width, label="refutation")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r["name"] for r in rows], rotation=20, ha="right")
    ax.set_ylabel("derivation nodes")
    ax.set_title("Certificate sizes per term")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "certificates.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
