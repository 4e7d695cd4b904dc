"""Renderers for the five figure ids.

All inputs are harness CSV files; all files are SI (m, m/s, rad). Axes are
converted to the presentation units (cm/s, degrees) here and nowhere else.
Every input row is either plotted or reported in the omitted list — rows are
never dropped silently.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGURE_IDS = ("pose-traces", "speed-vs-freq", "roll-vs-freq", "yaw-midline",
              "cot-vs-speed")
DPI = 120
RAD2DEG = 180.0 / math.pi


class MissingColumnError(ValueError):
    """An input CSV lacks a column required by the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}; "
                             f"expected one of {', '.join(FIGURE_IDS)}")
        if not self.inputs:
            raise ValueError("at least one input file is required")


@dataclass
class RenderResult:
    """What ended up in the figure, for callers and tests."""

    output: str
    series: dict              # label -> (x values, y values)
    omitted: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    has_error_bars: bool = False
    size_px: tuple = (0, 0)


def _parse(value: str):
    if value == "true":
        return True
    if value == "false":
        return False
    return float(value)


def _load_columns(path, required):
    """Read a delimited file into per-column lists, enforcing the contract."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnError(f"{path}: empty file") from None
        missing = [name for name in required if name not in header]
        if missing:
            raise MissingColumnError(
                f"{path}: missing column(s) {', '.join(missing)}")
        rows = [[_parse(v) for v in row] for row in reader if row]
    return {name: [row[header.index(name)] for row in rows]
            for name in header}


def _load_many(paths, required):
    merged = {}
    for path in paths:
        data = _load_columns(path, required)
        for name in required:
            merged.setdefault(name, []).extend(data[name])
    return merged


def _new_figure(nrows=1):
    fig, axes = plt.subplots(nrows, 1, figsize=(6.4, 4.8), dpi=DPI,
                             sharex=True, squeeze=False)
    return fig, [ax[0] for ax in axes]


def _finish(fig, spec, result, note_lines):
    if note_lines:
        fig.text(0.01, 0.01, "\n".join(note_lines), fontsize=7, va="bottom")
    fig.savefig(spec.output)
    width, height = fig.canvas.get_width_height()
    result.size_px = (width * 1, height * 1)
    plt.close(fig)
    return result


def _render_pose_traces(spec):
    result = RenderResult(output=spec.output, series={})
    fig, axes = _new_figure(nrows=3)
    for path in spec.inputs:
        data = _load_columns(path, ("t", "roll", "pitch", "yaw"))
        t = data["t"]
        stem = Path(path).parent.name or Path(path).stem
        for ax, channel in zip(axes, ("roll", "pitch", "yaw")):
            values = [v * RAD2DEG for v in data[channel]]
            ax.plot(t, values, lw=0.8, label=stem)
            ax.set_ylabel(f"{channel} (deg)")
            result.series[f"{stem}:{channel}"] = (t, values)
    axes[-1].set_xlabel("time (s)")
    if len(spec.inputs) > 1:
        axes[0].legend(fontsize=7)
    fig.suptitle("body attitude traces")
    return _finish(fig, spec, result, [])


def _split_by_stability(data, key_names):
    """(stable rows, omitted labels) with one label per unstable row."""
    stable_rows = []
    omitted = []
    for i, is_stable in enumerate(data["stable"]):
        row = {name: data[name][i] for name in data}
        if is_stable:
            stable_rows.append(row)
        else:
            label = ", ".join(f"{name}={row[name]:g}" for name in key_names)
            omitted.append(f"{label} (unstable, omitted)")
    return stable_rows, omitted


def _sweep_lines(spec, value_key, std_key=None):
    """Shared speed-sweep renderer: one line per amplitude over frequency."""
    required = ["frequency_hz", "amplitude_deg", "stable", value_key]
    if std_key:
        required.append(std_key)
    data = _load_many(spec.inputs, required)
    stable_rows, omitted = _split_by_stability(
        data, ("frequency_hz", "amplitude_deg"))
    result = RenderResult(output=spec.output, series={}, omitted=omitted,
                          has_error_bars=bool(std_key))
    fig, (ax,) = _new_figure()
    if not stable_rows:
        result.annotations.append("no stable cells")
        ax.text(0.5, 0.5, "no stable cells", ha="center", va="center",
                transform=ax.transAxes)
    for amp in sorted({row["amplitude_deg"] for row in stable_rows}):
        rows = sorted((r["frequency_hz"], r) for r in stable_rows
                      if r["amplitude_deg"] == amp)
        x = [freq for freq, _ in rows]
        if value_key == "speed":
            y = [r[value_key] * 100.0 for _, r in rows]  # m/s -> cm/s
        else:
            y = [r[value_key] * RAD2DEG for _, r in rows]
        label = f"{amp:g} deg"
        if std_key:
            yerr = [r[std_key] * RAD2DEG for _, r in rows]
            ax.errorbar(x, y, yerr=yerr, marker="o", capsize=3, label=label)
        else:
            ax.plot(x, y, marker="o", label=label)
        result.series[label] = (x, y)
    ax.set_xlabel("frequency (Hz)")
    if value_key == "speed":
        ax.set_ylabel("speed (cm/s)")
        fig.suptitle("walking speed vs frequency")
    else:
        ax.set_ylabel("roll amplitude (deg)")
        fig.suptitle("roll amplitude vs frequency")
    if stable_rows:
        ax.legend(fontsize=8)
    return _finish(fig, spec, result, omitted)


def _render_yaw_midline(spec):
    required = ("frequency_hz", "amplitude_diff_deg", "step", "t_mid_s",
                "yaw_rad")
    data = _load_many(spec.inputs, required)
    result = RenderResult(output=spec.output, series={})
    fig, (ax,) = _new_figure()
    keys = sorted({(f, d) for f, d in zip(data["frequency_hz"],
                                          data["amplitude_diff_deg"])})
    for freq, diff in keys:
        points = sorted(
            (t, yaw * RAD2DEG)
            for f, d, t, yaw in zip(data["frequency_hz"],
                                    data["amplitude_diff_deg"],
                                    data["t_mid_s"], data["yaw_rad"])
            if f == freq and d == diff)
        x = [t for t, _ in points]
        y = [v for _, v in points]
        style = "-" if diff >= 0.0 else "--"
        label = f"{freq:g} Hz, diff {diff:+g} deg"
        ax.plot(x, y, style, lw=1.0, label=label)
        result.series[label] = (x, y)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("yaw midline (deg)")
    fig.suptitle("per-step yaw midline")
    if keys:
        ax.legend(fontsize=6, ncol=2)
    return _finish(fig, spec, result, [])


def _render_cot_vs_speed(spec):
    required = ("frequency_hz", "amplitude_deg", "stable", "speed",
                "cot_total")
    data = _load_many(spec.inputs, required)
    stable_rows, omitted = _split_by_stability(
        data, ("frequency_hz", "amplitude_deg"))
    result = RenderResult(output=spec.output, series={}, omitted=omitted)
    fig, (ax,) = _new_figure()
    if not stable_rows:
        result.annotations.append("no stable cells")
        ax.text(0.5, 0.5, "no stable cells", ha="center", va="center",
                transform=ax.transAxes)
    for amp in sorted({row["amplitude_deg"] for row in stable_rows}):
        rows = sorted((r["speed"], r["cot_total"]) for r in stable_rows
                      if r["amplitude_deg"] == amp)
        x = [speed * 100.0 for speed, _ in rows]  # m/s -> cm/s
        y = [cot for _, cot in rows]
        label = f"{amp:g} deg"
        ax.plot(x, y, marker="o", ls="", label=label)
        result.series[label] = (x, y)
    ax.set_xlabel("speed (cm/s)")
    ax.set_ylabel("cost of transport")
    fig.suptitle("cost of transport vs walking speed")
    if stable_rows:
        ax.legend(fontsize=8)
    return _finish(fig, spec, result, omitted)


_RENDERERS = {
    "pose-traces": _render_pose_traces,
    "speed-vs-freq": lambda spec: _sweep_lines(spec, "speed"),
    "roll-vs-freq": lambda spec: _sweep_lines(spec, "roll_amp_mean",
                                              "roll_amp_std"),
    "yaw-midline": _render_yaw_midline,
    "cot-vs-speed": _render_cot_vs_speed,
}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure to ``spec.output`` and describe what was plotted."""
    return _RENDERERS[spec.figure_id](spec)
