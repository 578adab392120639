"""CSV tables with a provenance preamble, and SVG line charts derived from them.

Layout of every file::

    # meta: version=0.1.0
    # meta: timestamp=2026-10-14T12:00:00+00:00
    # meta: table=curves
    # config: L=16
    # ...
    # plot: x=T y=qfi group=delta scale=loglog
    delta,T,qfi
    -1,0.001,0
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

META, CONFIG, PLOT = "# meta: ", "# config: ", "# plot: "


@dataclass
class PlotHint:
    x: str
    y: list[str]
    group: str | None = None
    scale: str = "loglog"

    def encode(self) -> str:
        parts = [f"x={self.x}", f"y={','.join(self.y)}"]
        if self.group:
            parts.append(f"group={self.group}")
        parts.append(f"scale={self.scale}")
        return " ".join(parts)

    @classmethod
    def decode(cls, text: str) -> "PlotHint":
        kv = dict(tok.split("=", 1) for tok in text.split())
        return cls(kv["x"], kv["y"].split(","), kv.get("group"), kv.get("scale", "loglog"))


@dataclass
class ResultTable:
    name: str
    columns: list[tuple[str, type]]
    rows: list[tuple] = field(default_factory=list)
    plot: PlotHint | None = None

    def __post_init__(self):
        width = len(self.columns)
        for r in self.rows:
            if len(r) != width:
                raise ValueError(f"table {self.name}: row of length {len(r)}, expected {width}")

    @property
    def column_names(self) -> list[str]:
        return [c for c, _ in self.columns]

    def column(self, name: str) -> list:
        i = self.column_names.index(name)
        return [r[i] for r in self.rows]

    def add_column(self, name: str, typ: type, values) -> None:
        values = list(values)
        if len(values) != len(self.rows):
            raise ValueError("column length mismatch")
        self.columns.append((name, typ))
        self.rows = [tuple(r) + (v,) for r, v in zip(self.rows, values)]


def format_value(value, typ: type) -> str:
    if typ is float:
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if typ is int:
        return str(int(value))
    if typ is bool:
        return "true" if value else "false"
    return str(value)


def render_body(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(table.column_names)
    types = [t for _, t in table.columns]
    for row in table.rows:
        writer.writerow([format_value(v, t) for v, t in zip(row, types)])
    return buf.getvalue()


def write_csv(path, table: ResultTable, config_pairs, meta: dict[str, str]) -> Path:
    path = Path(path)
    lines = [f"{META}{k}={v}" for k, v in meta.items()]
    lines.append(f"{META}table={table.name}")
    lines += [f"{CONFIG}{k}={v}" for k, v in config_pairs]
    if table.plot is not None:
        lines.append(PLOT + table.plot.encode())
    path.write_text("\n".join(lines) + "\n" + render_body(table), encoding="utf-8")
    return path


def read_csv(path):
    """Return ``(meta, config_pairs, plot_hint, header, rows)`` from a written table."""
    meta, config, plot = {}, {}, None
    body = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith(META):
            k, v = line[len(META):].split("=", 1)
            meta[k] = v
        elif line.startswith(CONFIG):
            k, v = line[len(CONFIG):].split("=", 1)
            config[k] = v
        elif line.startswith(PLOT):
            plot = PlotHint.decode(line[len(PLOT):])
        elif line.startswith("#"):
            continue
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return meta, config, plot, header, list(reader)


def read_body(path) -> str:
    return "".join(
        line for line in Path(path).read_text(encoding="utf-8").splitlines(keepends=True)
        if not line.startswith("#")
    )


def plot_csv(csv_path, svg_path=None) -> Path:
    """Render the chart described by the table's own plot hint.

    Needs nothing beyond the CSV file.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt keeps SVG element ids reproducible
    matplotlib.rcParams["svg.hashsalt"] = "topotherm"

    csv_path = Path(csv_path)
    meta, _, hint, header, rows = read_csv(csv_path)
    if hint is None:
        raise ValueError(f"{csv_path} carries no plot hint")
    svg_path = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    col = {name: i for i, name in enumerate(header)}
    data = np.array([[float(r[col[c]]) for c in [hint.x, *hint.y]] for r in rows]).reshape(-1, 1 + len(hint.y))
    groups = [r[col[hint.group]] for r in rows] if hint.group else [""] * len(rows)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    labels = list(dict.fromkeys(groups))
    for j, yname in enumerate(hint.y):
        for g in labels:
            sel = [i for i, gi in enumerate(groups) if gi == g]
            x, y = data[sel, 0], data[sel, 1 + j]
            if hint.scale in ("loglog", "logy"):
                keep = (x > 0) & (y > 0) if hint.scale == "loglog" else y > 0
                x, y = x[keep], y[keep]
            label = None
            if len(hint.y) > 1:
                label = yname
            elif hint.group and len(labels) <= 12:
                label = f"{hint.group}={g}"
            ax.plot(x, y, lw=0.8 if hint.group else 1.5, label=label)
    if hint.scale == "loglog":
        ax.set_xscale("log")
    if hint.scale in ("loglog", "logy"):
        ax.set_yscale("log")
    ax.set_xlabel(hint.x)
    ax.set_ylabel(hint.y[0] if len(hint.y) == 1 else "value")
    ax.set_title(meta.get("table", ""))
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return svg_path
