"""Experiment runner CLI: scenarios, calibration, bus benchmark, analysis.

Commands (all outputs under --out):

  run <scenario.json>        execute a scenario, write trace CSV + metrics
  calibrate <jig.json>       run bench jigs, write model JSONs + report
  bus-bench <line.json>      ring simulation rates / fault statistics
  analyze <trace.csv>        recompute metrics from a stored trace
  plot <trace.csv> [spec]    time-series panels as standalone SVG

Exit code is 0 iff every bounded metric in the produced report passes.
Config arguments accept a filesystem path or the name of a bundled file
(e.g. `walk_floor`).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import busring, calibration, cpg, plant

log = logging.getLogger("amphisense")

FREQ_TOL = 0.02
LAG_TOL_CYCLES = 0.15
FIN_LAG_TOL_CYCLES = 0.10
EST_FX_RMSE_MAX_N = 0.3
SWIM_FOOT_QUIET_N = 1.0
WALK_FIN_QUIET_N = 0.05
LATENCY_MAX_S = 0.020
MIN_CYCLES = 5


class HarnessError(ValueError):
    pass


class TraceTooShortError(HarnessError):
    """Fewer gait cycles in the analysis window than the estimator needs."""


class EmptyTraceError(HarnessError):
    pass


# ---------------------------------------------------------------------------
# signal measurements
# ---------------------------------------------------------------------------

def measure_frequency(t, x, min_cycles: int = MIN_CYCLES) -> float:
    """Fundamental frequency from mean-crossing intervals.

    Rising crossings of the de-meaned signal, linearly interpolated
    between samples; robust on the few-cycle traces the scenarios
    produce, where an FFT bin would be too coarse.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    xm = x - x.mean()
    below = xm[:-1] < 0.0
    above = xm[1:] >= 0.0
    idx = np.nonzero(below & above)[0]
    if len(idx) < min_cycles + 1:
        raise TraceTooShortError(
            f"{len(idx)} rising crossings; need at least {min_cycles + 1} "
            f"({min_cycles} full cycles)"
        )
    frac = -xm[idx] / (xm[idx + 1] - xm[idx])
    crossings = t[idx] + frac * (t[idx + 1] - t[idx])
    return (len(crossings) - 1) / (crossings[-1] - crossings[0])


def circular_lag_cycles(x, y, period_s: float, dt: float) -> float:
    """Delay of y behind x in cycles, from the circular cross-correlation peak.

    Returned in (-0.5, 0.5] of a cycle; callers fold into [0, 1) when the
    expected lag is near a half cycle.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x = x - x.mean()
    y = y - y.mean()
    n = len(x)
    cc = np.fft.irfft(np.fft.rfft(x).conj() * np.fft.rfft(y), n)
    k = int(np.argmax(cc))
    if k > n // 2:
        k -= n
    lag = k * dt / period_s
    # fold to [-0.5, 0.5) in cycles
    lag -= math.floor(lag + 0.5)
    return lag


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


# ---------------------------------------------------------------------------
# metrics report
# ---------------------------------------------------------------------------

@dataclass
class Metric:
    name: str
    value: float
    lo: float = None
    hi: float = None
    unit: str = ""

    @property
    def bounded(self) -> bool:
        return self.lo is not None or self.hi is not None

    @property
    def ok(self) -> bool:
        if not np.isfinite(self.value):
            return not self.bounded
        if self.lo is not None and self.value < self.lo:
            return False
        if self.hi is not None and self.value > self.hi:
            return False
        return True

    @property
    def verdict(self) -> str:
        if not self.bounded:
            return "info"
        return "pass" if self.ok else "FAIL"


@dataclass
class MetricsReport:
    """Measured quantities, each carrying its tolerance and verdict."""

    source: str
    metrics: list = field(default_factory=list)

    def add(self, name, value, lo=None, hi=None, unit=""):
        self.metrics.append(Metric(name, float(value), lo, hi, unit))

    @property
    def all_pass(self) -> bool:
        return all(m.ok for m in self.metrics)

    def to_json(self, path=None):
        doc = {
            "source": self.source,
            "all_pass": self.all_pass,
            "metrics": [
                {
                    "name": m.name,
                    "value": m.value,
                    "lo": m.lo,
                    "hi": m.hi,
                    "unit": m.unit,
                    "verdict": m.verdict,
                }
                for m in self.metrics
            ],
        }
        if path is not None:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1)
                fh.write("\n")
        return doc

    def format_table(self) -> str:
        lines = [f"metrics for {self.source}"]
        for m in self.metrics:
            band = ""
            if m.bounded:
                lo = "-inf" if m.lo is None else f"{m.lo:g}"
                hi = "+inf" if m.hi is None else f"{m.hi:g}"
                band = f" in [{lo}, {hi}]"
            lines.append(f"  {m.name:<28} {m.value:12.6g} {m.unit:<6}{band}  {m.verdict}")
        lines.append(f"  => {'ALL PASS' if self.all_pass else 'FAILURES PRESENT'}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# trace analysis
# ---------------------------------------------------------------------------

_LEGS = ("fl", "fr", "hl", "hr")
_DIAG_PAIRS = (("fl", "hr"), ("fr", "hl"))
_IPSI_PAIRS = (("fl", "hl"), ("fr", "hr"))


def _switch_index(mode):
    if mode[0] == 0.0 and mode.max() > 0.0:
        return int(np.argmax(mode > 0.0))
    return None


def analyze_trace(result: plant.ScenarioResult,
                  scenario: plant.Scenario = None) -> MetricsReport:
    """Compute the scenario-appropriate metric set from a wide trace.

    Without a scenario, the kind (floor / water / shoreline) is inferred
    from the mode column and foot loads, and the analysis window starts
    after the first fifth of the trace.
    """
    if result.data.size == 0:
        raise EmptyTraceError("trace has no rows")
    t = result.col("t")
    dt = float(t[1] - t[0]) if len(t) > 1 else 1e-3
    mode = result.col("mode")
    sw = _switch_index(mode)
    if scenario is not None:
        kind = scenario.terrain
        window_start = scenario.window_start
        name = scenario.name
    else:
        if sw is not None:
            kind = "shoreline"
        elif mode[-1] > 0.0 or np.all(result.col("gt_foot_fl_fx") == 0.0):
            kind = "water"
        else:
            kind = "floor"
        window_start = 0.2 * float(t[-1])
        name = "trace"
    w = t >= window_start
    report = MetricsReport(source=name)

    if kind == "floor":
        freq = measure_frequency(t[w], result.col("gt_q_ax1")[w])
        period = 1.0 / freq
        f0 = cpg.FREQ_WALK_HZ
        report.add("gait_freq", freq, f0 * (1 - FREQ_TOL), f0 * (1 + FREQ_TOL), "Hz")
        fx = {leg: result.col(f"gt_foot_{leg}_fx")[w] for leg in _LEGS}
        for a, b in _DIAG_PAIRS:
            lag = circular_lag_cycles(fx[a], fx[b], period, dt)
            report.add(f"diag_lag_{a}_{b}", lag, -LAG_TOL_CYCLES, LAG_TOL_CYCLES, "cyc")
        for a, b in _IPSI_PAIRS:
            lag = circular_lag_cycles(fx[a], fx[b], period, dt) % 1.0
            report.add(f"ipsi_lag_{a}_{b}", lag,
                       0.5 - LAG_TOL_CYCLES, 0.5 + LAG_TOL_CYCLES, "cyc")
        for leg in _LEGS:
            e = rmse(result.col(f"est_foot_{leg}_fx")[w], fx[leg])
            report.add(f"est_fx_rmse_{leg}", e, None, EST_FX_RMSE_MAX_N, "N")
        fin_max = max(
            float(np.abs(result.col(f"est_{nm}_force")[w]).max())
            for nm in plant.FIN_NAMES
        )
        report.add("est_fin_max_dry", fin_max, None, WALK_FIN_QUIET_N, "N")
        report.add("switched", float(mode.max() > 0.0), -0.5, 0.5, "")

    elif kind == "water":
        freq = measure_frequency(t[w], result.col("gt_q_ax1")[w])
        period = 1.0 / freq
        f0 = cpg.FREQ_SWIM_HZ
        report.add("gait_freq", freq, f0 * (1 - FREQ_TOL), f0 * (1 + FREQ_TOL), "Hz")
        amp = math.degrees(float(np.ptp(result.col("gt_q_ax4")[w])) / 2.0)
        report.add("axial_amp", amp, 28.0, 30.0, "deg")
        # spine wave: adjacent lags are small and wrap-free, so the
        # head-to-tail delay is their sum (a lag vs ax1 alone folds mod 1
        # once the accumulated delay passes a full cycle)
        adj = []
        prev = result.col("gt_q_ax1")[w]
        for k in range(2, cpg.N_AXIAL_JOINTS + 1):
            cur = result.col(f"gt_q_ax{k}")[w]
            adj.append(circular_lag_cycles(prev, cur, period, dt))
            prev = cur
        report.add("wave_monotone", float(min(adj) > 0.0), 0.5, 1.5, "")
        report.add("wave_total_lag", float(np.sum(adj)), 0.95, 1.05, "cyc")
        for fi, nm in enumerate(plant.FIN_NAMES):
            ax = result.col(f"gt_q_ax{plant.FIN_ANTERIOR_JOINT[fi] + 1}")[w]
            lag = circular_lag_cycles(ax, result.col(f"est_{nm}_force")[w],
                                      period, dt)
            report.add(f"fin_lag_{nm}", lag,
                       -FIN_LAG_TOL_CYCLES, FIN_LAG_TOL_CYCLES, "cyc")
        foot_max = max(
            float(np.abs(result.col(f"est_foot_{leg}_fx")).max()) for leg in _LEGS
        )
        report.add("est_foot_max_wet", foot_max, None, SWIM_FOOT_QUIET_N, "N")
        if sw is not None:
            t_settle = t[sw] + 3.0 / f0
            late = t >= t_settle
            if late.any():
                amp_limb = max(
                    float(np.abs(result.col(f"gt_q_{leg}_swing")[late]).max())
                    for leg in _LEGS
                )
                report.add("limb_amp_after_3cyc", amp_limb, None, 1e-3, "rad")

    else:  # shoreline
        report.add("switched", float(sw is not None), 0.5, 1.5, "")
        s = result.col("est_foot_sum")
        below = (s < cpg.FOOT_SUM_THRESHOLD_N) & (t >= 0.1)
        if below.any() and sw is not None:
            i_cross = int(np.argmax(below))
            latency = t[sw] - t[i_cross]
            report.add("transition_latency", latency, 0.0, LATENCY_MAX_S, "s")
            pre = s[(t >= 0.5) & (t < t[i_cross])]
            if len(pre):
                report.add("foot_sum_min_before", float(pre.min()), unit="N")
        else:
            report.add("transition_latency", float("nan"), 0.0, LATENCY_MAX_S, "s")

    report.add("ring_rate", busring.ring_rate(len(plant.SENSOR_NAMES),
                                              busring.LineConfig()),
               589.8, None, "Hz")
    return report


# ---------------------------------------------------------------------------
# SVG plotting
# ---------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_PLOT_W = 900
_PANEL_H = 200
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 34
_MAX_POINTS = 1500


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def default_plot_spec(columns) -> dict:
    """Panel layout covering flux, wrenches, joints, and fin forces."""
    panels = []
    raw_mods = sorted({c[4:-3] for c in columns if c.startswith("raw_")})
    if raw_mods:
        m = raw_mods[0]
        panels.append({
            "title": f"{m} flux, raw and filtered (mT)",
            "series": [f"raw_{m}_b{a}" for a in "xyz"]
            + [f"filt_{m}_b{a}" for a in "xyz"],
        })
    panels.append({
        "title": "foot normal force, truth vs estimate (N)",
        "series": [f"gt_foot_{leg}_fx" for leg in _LEGS]
        + [f"est_foot_{leg}_fx" for leg in _LEGS],
    })
    panels.append({
        "title": "axial joint targets (rad)",
        "series": ["gt_q_ax1", "gt_q_ax4", "gt_q_ax8"],
    })
    panels.append({
        "title": "tail fin force (N) vs anterior joint (rad)",
        "series": ["gt_q_ax8", "gt_fin_tail_force", "est_fin_tail_force"],
    })
    return {"panels": [p for p in panels
                       if all(s in columns for s in p["series"])]}


def render_svg(result: plant.ScenarioResult, spec: dict = None) -> str:
    """Render time-series panels to a standalone SVG string.

    Purely a function of the trace and the spec: no timestamps, fixed
    float formatting, so identical inputs give identical bytes.
    """
    if result.data.size == 0:
        raise EmptyTraceError("cannot plot an empty trace")
    if spec is None:
        spec = default_plot_spec(result.columns)
    panels = spec.get("panels", [])
    if not panels:
        raise HarnessError("plot spec has no panels")
    t = result.col("t")
    stride = max(1, len(t) // _MAX_POINTS)
    ts = t[::stride]
    height = len(panels) * _PANEL_H
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PLOT_W}" '
        f'height="{height}" viewBox="0 0 {_PLOT_W} {height}">',
        '<style>text{font-family:monospace;font-size:11px;fill:#333}'
        '.title{font-size:13px}</style>',
        f'<rect width="{_PLOT_W}" height="{height}" fill="white"/>',
    ]
    x0, x1 = _MARGIN_L, _PLOT_W - _MARGIN_R
    t_lo, t_hi = float(ts[0]), float(ts[-1])

    def px(v):
        return x0 + (v - t_lo) / (t_hi - t_lo) * (x1 - x0)

    for pi, panel in enumerate(panels):
        top = pi * _PANEL_H
        y0, y1 = top + _MARGIN_T, top + _PANEL_H - _MARGIN_B
        series = panel["series"]
        data = [result.col(s)[::stride] for s in series]
        v_lo = min(float(d.min()) for d in data)
        v_hi = max(float(d.max()) for d in data)
        if v_hi <= v_lo:
            v_hi = v_lo + 1.0
        pad = 0.05 * (v_hi - v_lo)
        v_lo, v_hi = v_lo - pad, v_hi + pad

        def py(v):
            return y1 - (v - v_lo) / (v_hi - v_lo) * (y1 - y0)

        out.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" '
                   f'height="{y1 - y0}" fill="none" stroke="#999"/>')
        out.append(f'<text class="title" x="{x0}" y="{top + 18}">'
                   f'{panel["title"]}</text>')
        for k in range(5):
            tv = t_lo + k * (t_hi - t_lo) / 4.0
            xp = _fmt(px(tv))
            out.append(f'<line x1="{xp}" y1="{y1}" x2="{xp}" y2="{y1 + 4}" '
                       'stroke="#999"/>')
            out.append(f'<text x="{xp}" y="{y1 + 16}" text-anchor="middle">'
                       f'{_fmt(tv)}</text>')
        for k in range(4):
            vv = v_lo + k * (v_hi - v_lo) / 3.0
            yp = _fmt(py(vv))
            out.append(f'<line x1="{x0 - 4}" y1="{yp}" x2="{x0}" y2="{yp}" '
                       'stroke="#999"/>')
            out.append(f'<text x="{x0 - 6}" y="{yp}" text-anchor="end" '
                       f'dominant-baseline="middle">{_fmt(vv)}</text>')
        for si, (sname, d) in enumerate(zip(series, data)):
            color = _PALETTE[si % len(_PALETTE)]
            pts = " ".join(f"{_fmt(px(tv))},{_fmt(py(dv))}"
                           for tv, dv in zip(ts, d))
            out.append(f'<polyline points="{pts}" fill="none" '
                       f'stroke="{color}" stroke-width="1"/>')
            out.append(f'<text x="{x1 - 6}" y="{y0 + 12 + 11 * si}" '
                       f'text-anchor="end" fill="{color}">{sname}</text>')
        out.append(f'<text x="{(x0 + x1) // 2}" y="{y1 + 28}" '
                   'text-anchor="middle">t (s)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------

def _resolve_config(arg: str) -> str:
    """A filesystem path, or the name of a bundled config file."""
    if os.path.exists(arg):
        return arg
    import importlib.resources as res

    name = arg if arg.endswith(".json") else arg + ".json"
    ref = res.files("amphisense") / "scenarios" / name
    if ref.is_file():
        return str(ref)
    raise HarnessError(f"no such config file or bundled name: {arg!r}")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise HarnessError(f"{path}: malformed JSON: {e}") from e


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    path = _resolve_config(args.scenario)
    doc = _load_json(path)
    scenario = plant.Scenario(**doc)
    if args.seed is not None:
        scenario.seed = args.seed
    os.makedirs(args.out, exist_ok=True)
    log.info("running scenario %s (%.1f s at %.0f Hz)", scenario.name,
             scenario.duration_s, 1.0 / scenario.dt)
    result = plant.run_scenario(scenario)
    trace_path = os.path.join(args.out, f"{scenario.name}_trace.csv")
    result.write_csv(trace_path)
    report = analyze_trace(result, scenario)
    report.to_json(os.path.join(args.out, f"{scenario.name}_metrics.json"))
    print(report.format_table())
    print(f"trace: {trace_path}")
    return 0 if report.all_pass else 1


def cmd_calibrate(args) -> int:
    cfg = _load_json(_resolve_config(args.jig))
    kind = cfg.get("kind", "foot")
    n_units = int(cfg.get("n_units", 4))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    os.makedirs(args.out, exist_ok=True)
    report = MetricsReport(source=f"calibrate[{kind}]")
    foot_model = plant.ElasticFootModel()
    fin_model = plant.FlowFinModel()
    rmse_max = cfg.get("rmse_max")
    torques, forces = [], []
    for i in range(n_units):
        rng = np.random.default_rng(seed + i)
        jig = calibration.JigConfig(
            kind=kind,
            lever=float(cfg.get("lever", 19.0)),
            noise_sigma=float(cfg.get("noise_sigma", 0.01)),
            n_average=int(cfg.get("n_average", 1)),
        )
        if kind == "foot":
            transduce = lambda w: plant.foot_deflection_p(w, foot_model)
            params = plant.magnetics.DipoleParams(n_t=50.0)
        else:
            transduce = fin_model.pose_for_force
            params = fin_model.dipole_params
        ds = calibration.simulate_jig(transduce, params, jig, rng)
        train, heldout = ds.train_eval_split()
        model = calibration.fit_poly(train)
        ev = calibration.evaluate_rmse(model, heldout)
        model.to_json(os.path.join(args.out, f"{kind}_{i:02d}_model.json"))
        if kind == "foot":
            torques.append(ev.mean_torque_rmse)
            forces.append(ev.rmse["f_x"])
            report.add(f"unit{i:02d}_torque_rmse", ev.mean_torque_rmse,
                       None, rmse_max, "N*mm")
            report.add(f"unit{i:02d}_fx_rmse", ev.rmse["f_x"],
                       None, rmse_max, "N")
        else:
            forces.append(ev.rmse["force"])
            report.add(f"unit{i:02d}_force_rmse", ev.rmse["force"],
                       None, rmse_max, "N")
    if kind == "foot" and torques:
        tb = cfg.get("torque_band")
        fb = cfg.get("force_band")
        report.add("mean_torque_rmse", float(np.mean(torques)),
                   *(tb if tb else (None, None)), "N*mm")
        report.add("mean_fx_rmse", float(np.mean(forces)),
                   *(fb if fb else (None, None)), "N")
    report.to_json(os.path.join(args.out, "calibration_report.json"))
    print(report.format_table())
    return 0 if report.all_pass else 1


def cmd_bus_bench(args) -> int:
    cfg = _load_json(_resolve_config(args.line))
    line = busring.LineConfig(
        baud=int(cfg.get("baud", 1_000_000)),
        bits_per_byte=int(cfg.get("bits_per_byte", 10)),
        inter_frame_gap=float(cfg.get("inter_frame_gap", 20e-6)),
    )
    n = int(cfg.get("n_modules", 10))
    duration = float(cfg.get("duration_s", 2.0))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 5))
    os.makedirs(args.out, exist_ok=True)
    report = MetricsReport(source=f"bus-bench[{n} modules]")

    clean = busring.simulate_ring(n, line, duration)
    rate = float(clean.frames_ok.min()) / duration
    report.add("per_module_rate", rate, float(cfg.get("expect_rate_hz", 589.8)),
               None, "Hz")

    flip_rate = float(cfg.get("flip_rate", 0.001))
    if flip_rate > 0.0:
        faulted = busring.simulate_ring(
            n, line, duration, faults=busring.FaultPlan(flip_rate=flip_rate),
            rng=np.random.default_rng(seed),
        )
        detected = (faulted.corrupt_detected / faulted.corrupt_injected
                    if faulted.corrupt_injected else 1.0)
        report.add("corruption_detect_frac", detected, 1.0, 1.0, "")

    kill_at = cfg.get("kill_at", duration / 2.0)
    if kill_at is not None:
        kill_mod = n // 2
        killed = busring.simulate_ring(
            n, line, duration,
            faults=busring.FaultPlan(kills=((float(kill_at), kill_mod),)),
            record_frames=True,
        )
        # steady post-kill round period exceeds nominal by exactly one
        # timeout's worth iff the heal costs one timeout per round
        nominal = busring.ring_round_period(n, line)
        excess = line.timeout - line.frame_time - line.inter_frame_gap
        ref = (kill_mod + 3) % n
        t_ref = np.array([e[0] for e in killed.frame_log if e[1] == ref])
        periods = np.diff(t_ref)
        post = periods[t_ref[1:] > float(kill_at) + 2.0 * (nominal + excess)]
        if len(post):
            per_round = (float(np.median(post)) - nominal) / excess
        else:
            per_round = float("nan")
        report.add("timeouts_per_round", per_round, 0.999, 1.001, "")
        alive = float(t_ref.max() > duration - 2.0 * (nominal + excess))
        report.add("ring_alive_after_kill", alive, 0.5, 1.5, "")

    budget = busring.motor_bus_budget(
        int(cfg.get("n_motors", 16)),
        float(cfg.get("t_write", 2e-6)),
        float(cfg.get("t_read", 0.3e-3)),
    )
    report.add("motor_loop_budget", budget, 100.0, None, "Hz")

    report.to_json(os.path.join(args.out, "bus_bench.json"))
    print(report.format_table())
    return 0 if report.all_pass else 1


def cmd_analyze(args) -> int:
    result = plant.ScenarioResult.read_csv(args.trace)
    scenario = None
    if args.scenario is not None:
        scenario = plant.Scenario(**_load_json(_resolve_config(args.scenario)))
    report = analyze_trace(result, scenario)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.trace))[0]
    report.to_json(os.path.join(args.out, f"{stem}_metrics.json"))
    print(report.format_table())
    return 0 if report.all_pass else 1


def cmd_plot(args) -> int:
    result = plant.ScenarioResult.read_csv(args.trace)
    spec = None
    if args.plotspec is not None:
        spec = _load_json(_resolve_config(args.plotspec))
    svg = render_svg(result, spec)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.trace))[0]
    out_path = os.path.join(args.out, f"{stem}.svg")
    with open(out_path, "w") as fh:
        fh.write(svg)
    print(f"plot: {out_path}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="amphisense",
        description="scenario runner and analysis tools for the sensing stack",
    )
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int, default=None,
                    help="override the config seed")
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="run bench jigs and fit models")
    p.add_argument("jig")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bus-bench", help="ring rates and fault statistics")
    p.add_argument("line")
    p.set_defaults(func=cmd_bus_bench)

    p = sub.add_parser("analyze", help="recompute metrics from a trace CSV")
    p.add_argument("trace")
    p.add_argument("--scenario", default=None,
                   help="scenario JSON the trace came from")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="render trace panels to SVG")
    p.add_argument("trace")
    p.add_argument("plotspec", nargs="?", default=None)
    p.set_defaults(func=cmd_plot)

    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (HarnessError, plant.PlantError, calibration.CalibrationError,
            busring.BusError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
