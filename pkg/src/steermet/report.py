"""Report rendering: plot-ready data files, aligned text tables, and figure
PNGs for sweep results.

The gnuplot emitter writes one whitespace-delimited ``.dat`` file per
(mode, noise, control) group; the table emitter prints one aligned block
per group.  Both paths also render a matplotlib figure per (mode, noise)
group showing the information/variance curves and the resulting violation,
saved next to the data files (suppress with ``figures=False``).
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import SweepRecord  # noqa: E402

DAT_COLUMNS = ("visibility", "p_plus", "f_opt_avg", "four_var_opt_avg",
               "violation", "stderr_f", "stderr_var")


def _groups(records: Sequence[SweepRecord]):
    by_key: dict[tuple[str, str, str], list[SweepRecord]] = defaultdict(list)
    for r in records:
        by_key[(r.mode, r.noise, r.control)].append(r)
    for key in sorted(by_key):
        yield key, sorted(by_key[key], key=lambda r: r.visibility)


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in text).strip("-")


def emit_gnuplot(records: Sequence[SweepRecord], out_dir: str | Path,
                 stem: str = "sweep") -> list[Path]:
    """Write one plot-ready data file per (mode, noise, control) group."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (mode, noise, control), rows in _groups(records):
        name = f"{stem}_{_slug(mode)}_{noise}_{_slug(control)}.dat"
        path = out_dir / name
        lines = [f"# mode={mode} noise={noise} control={control}",
                 "# " + " ".join(DAT_COLUMNS)]
        for r in rows:
            lines.append(" ".join(format(getattr(r, c), ".17g")
                                  for c in DAT_COLUMNS))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def emit_table(records: Sequence[SweepRecord]) -> str:
    """Aligned text table, one block per group."""
    blocks = []
    for (mode, noise, control), rows in _groups(records):
        header = f"mode={mode} noise={noise} control={control}"
        cols = ["visibility", "p_plus", "f_opt_avg", "four_var_opt_avg",
                "violation"]
        lines = [header, "  ".join(f"{c:>16s}" for c in cols)]
        for r in rows:
            lines.append("  ".join(f"{getattr(r, c):16.9g}" for c in cols))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def render_figures(records: Sequence[SweepRecord], out_dir: str | Path,
                   stem: str = "sweep") -> list[Path]:
    """One two-panel figure per (mode, noise): F and 4*Var on top, the
    violation below, with one curve per control."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_fig: dict[tuple[str, str], dict[str, list[SweepRecord]]] = \
        defaultdict(dict)
    for (mode, noise, control), rows in _groups(records):
        by_fig[(mode, noise)][control] = rows
    written = []
    for (mode, noise), controls in sorted(by_fig.items()):
        fig, (ax_top, ax_bot) = plt.subplots(
            2, 1, figsize=(6.0, 6.5), sharex=True,
            gridspec_kw={"height_ratios": [3, 2]})
        xlabel = "dephasing visibility w" if noise == "deph" \
            else "depolarizing visibility v"
        for control, rows in sorted(controls.items()):
            x = [r.visibility for r in rows]
            f = [r.f_opt_avg for r in rows]
            v4 = [r.four_var_opt_avg for r in rows]
            viol = [r.violation for r in rows]
            ef = [r.stderr_f for r in rows]
            ev = [r.stderr_var for r in rows]
            if any(e > 0 for e in ef):
                ax_top.errorbar(x, f, yerr=ef, fmt="o-", ms=3, capsize=2,
                                label=f"F, control={control}")
                ax_top.errorbar(x, v4, yerr=ev, fmt="s--", ms=3, capsize=2,
                                label=f"4*Var, control={control}")
            else:
                ax_top.plot(x, f, "o-", ms=3, label=f"F, control={control}")
                ax_top.plot(x, v4, "s--", ms=3,
                            label=f"4*Var, control={control}")
            ax_bot.plot(x, viol, "o-", ms=3, label=f"control={control}")
        ax_top.set_ylabel("information / variance")
        ax_top.legend(fontsize=8)
        ax_top.grid(alpha=0.3)
        ax_bot.set_xlabel(xlabel)
        ax_bot.set_ylabel("violation")
        ax_bot.legend(fontsize=8)
        ax_bot.grid(alpha=0.3)
        ax_bot.axhline(0.0, color="k", lw=0.8)
        fig.suptitle(f"{mode} mode, {noise}")
        fig.tight_layout()
        path = Path(out_dir) / f"{stem}_{_slug(mode)}_{noise}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
