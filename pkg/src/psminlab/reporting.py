"""Artifact writers: key-value report blocks, JSON, CSV tables and SVG plots.

Everything a command produces is staged in a scratch directory next to the
output directory and moved into place only when the command succeeds, so a
failing run leaves no partial artifacts behind.
"""

from __future__ import annotations

import io
import json
import math
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__  # noqa: E402

SVG_SALT = "psminlab"


def fmt_value(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(fmt_value(x) for x in v) + "]"
    return str(v)


def report_block(items: dict) -> str:
    return "".join(f"{k} = {fmt_value(v)}\n" for k, v in items.items())


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt_value(v) for v in row) + "\n")
    return out.getvalue()


def _jsonable(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class Artifacts:
    """Files of one run, written into a staging directory."""

    def __init__(self, stage: Path):
        self.stage = stage
        self.names: list[str] = []

    def _path(self, name: str) -> Path:
        self.names.append(name)
        return self.stage / name

    def text(self, name: str, content: str) -> None:
        self._path(name).write_text(content)

    def json(self, name: str, doc: dict) -> None:
        self._path(name).write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        content = csv_text(header, rows)
        self._path(name).write_text(content)
        return content

    def svg(self, name: str, fig, data_csv: str) -> None:
        buf = io.StringIO()
        with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
            fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": f"psminlab {__version__}"})
        plt.close(fig)
        svg = buf.getvalue()
        comment = "<!-- data\n" + data_csv.replace("--", "- -") + "-->\n"
        head, sep, tail = svg.partition("?>\n")
        self._path(name).write_text(head + sep + comment + tail if sep else comment + svg)


@contextmanager
def staged_output(out_dir: str | Path) -> Iterator[Artifacts]:
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out.parent))
    try:
        art = Artifacts(stage)
        yield art
        out.mkdir(parents=True, exist_ok=True)
        for name in art.names:
            (stage / name).replace(out / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


# -- plots --------------------------------------------------------------------

def _axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_history(history: Sequence[float], threshold: float | None = None):
    fig, ax = _axes("Quotient along the descent", "iteration", "quotient")
    ax.plot(range(len(history)), history, lw=1.2)
    if threshold is not None:
        ax.axhline(threshold, color="k", ls="--", lw=0.8, label="threshold")
        ax.legend()
    return fig


def plot_dimension_table(rows: Sequence[dict]):
    fig, ax = _axes("Hypercube test value and Sobolev floor", "d", "value")
    d = [r["dim"] for r in rows]
    ax.plot(d, [r["T"] for r in rows], marker=".", label="T(d)")
    ax.plot(d, [r["S_over_4"] for r in rows], marker=".", label="S_d / 4")
    ax.axhline(math.pi ** 2, color="k", ls=":", lw=0.8, label="π²")
    ax.legend()
    return fig


def plot_scaling(lambdas, quotients, exponent: float):
    fig, ax = _axes(f"Dilated bump, fitted slope {exponent:.4f}", "λ", "quotient")
    ax.loglog(lambdas, quotients, marker="o")
    return fig


def plot_sweep(params, values, level: float, label: str):
    fig, ax = _axes("Upper bound for the rectangle constant", label, "quotient")
    ax.plot(params, values, marker="o", label="discrete minimum")
    ax.axhline(level, color="k", ls="--", lw=0.8, label="G(2)/4")
    ax.legend()
    return fig
