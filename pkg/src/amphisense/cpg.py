"""Phase-oscillator gait network with drive-dependent walk/swim patterns.

Sixteen antagonist oscillator pairs (eight spine joints, two joints per
leg) coupled on a sparse graph.  Each oscillator integrates

    dphi_i/dt = omega_i(d) + sum_j r_j w_ij sin(phi_j - phi_i - b_ij)
    dr_i/dt   = a_i (R_i(d) - r_i)
    x_i       = r_i (1 + cos phi_i)

where the intrinsic rate omega_i and target amplitude R_i come from
piecewise-affine saturation maps of the scalar drive d.  Limb maps cut
off below the swim drive, so at high drive the limb amplitudes decay to
zero and (because coupling terms carry the source amplitude r_j) the
limbs drop out of the network: the spine alone carries a traveling
wave.  At low drive all 32 oscillators are active and the limb graph
locks the legs into a diagonal trot while pinning the girdle segments.

A one-way supervisor switches the drive from walk to swim when the
summed foot load falls below a threshold.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi

# drive operating points and the gait frequencies they must produce
D_WALK = 2.0
D_SWIM = 5.0
FREQ_WALK_HZ = 0.47
FREQ_SWIM_HZ = 0.78

# amplitude targets: 20 deg peak axial bend at walk, 29 deg at swim
# (joint angle peaks at 2*R for an anti-phase pair, see joint_targets)
R_AXIAL_WALK = math.radians(20.0) / 2.0
R_AXIAL_SWIM = math.radians(29.0) / 2.0
R_LIMB_WALK = math.radians(20.0) / 2.0

W_EDGE = 10.0   # coupling weight on every edge, 1/s
A_RATE = 20.0   # amplitude convergence rate, 1/s

FOOT_SUM_THRESHOLD_N = 7.0

N_AXIAL_JOINTS = 8
N_JOINTS = 16
N_OSC = 32

# axial joints carrying the limb girdles
FRONT_GIRDLE_JOINT = 1
HIND_GIRDLE_JOINT = 5

LEGS = ("fl", "fr", "hl", "hr")
# diagonal pairs stride together, ipsilateral pairs alternate
LIMB_WALK_PHASE = {"fl": 0.0, "fr": math.pi, "hl": math.pi, "hr": 0.0}
GIRDLE_PHASE = {"front": 0.0, "hind": math.pi}


class CpgConfigError(ValueError):
    """Raised for malformed network configuration."""


class GaitMode(enum.Enum):
    WALKING = "walking"
    SWIMMING = "swimming"


@dataclass(frozen=True)
class SaturationMap:
    """Affine drive response c1*d + c0 inside [d_low, d_high], zero outside."""

    c1: float
    c0: float
    d_low: float
    d_high: float

    def __post_init__(self):
        if not self.d_low < self.d_high:
            raise CpgConfigError("saturation band requires d_low < d_high")

    def value(self, d: float) -> float:
        if self.d_low <= d <= self.d_high:
            return self.c1 * d + self.c0
        return 0.0


def drive_to_intrinsic(d: float, smap: SaturationMap) -> float:
    """Evaluate a saturation map at drive d."""
    return smap.value(d)


def _affine_through(d0, v0, d1, v1, band):
    c1 = (v1 - v0) / (d1 - d0)
    return SaturationMap(c1=c1, c0=v0 - c1 * d0, d_low=band[0], d_high=band[1])


# axial maps stay live across both gaits; limb maps cut off below d_swim
AXIAL_BAND = (0.5, 6.0)
LIMB_BAND = (0.5, 4.0)

AXIAL_OMEGA_MAP = _affine_through(
    D_WALK, TWO_PI * FREQ_WALK_HZ, D_SWIM, TWO_PI * FREQ_SWIM_HZ, AXIAL_BAND
)
AXIAL_AMP_MAP = _affine_through(D_WALK, R_AXIAL_WALK, D_SWIM, R_AXIAL_SWIM, AXIAL_BAND)
LIMB_OMEGA_MAP = SaturationMap(0.0, TWO_PI * FREQ_WALK_HZ, *LIMB_BAND)
LIMB_AMP_MAP = SaturationMap(0.0, R_LIMB_WALK, *LIMB_BAND)


@dataclass(frozen=True)
class OscillatorParams:
    """Per-oscillator rate constants, saturation maps, and group tags."""

    a: np.ndarray
    omega_maps: tuple
    amp_maps: tuple
    groups: tuple

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        n = a.shape[0]
        if not (len(self.omega_maps) == len(self.amp_maps) == len(self.groups) == n):
            raise CpgConfigError("per-oscillator field lengths disagree")
        if np.any(a <= 0.0):
            raise CpgConfigError("amplitude rates a_i must be positive")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def intrinsic(self, d: float):
        """Intrinsic rates and target amplitudes at drive d."""
        omega = np.array([m.value(d) for m in self.omega_maps])
        R = np.array([m.value(d) for m in self.amp_maps])
        return omega, R


@dataclass(frozen=True)
class CouplingGraph:
    """Directed weighted edge list (i, j, w_ij, b_ij) over n oscillators."""

    n: int
    edges: tuple

    def __post_init__(self):
        W = np.zeros((self.n, self.n))
        B = np.zeros((self.n, self.n))
        for i, j, w, b in self.edges:
            if i == j:
                raise CpgConfigError("self-coupling is not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise CpgConfigError("edge endpoint out of range")
            if not (math.isfinite(w) and w >= 0.0):
                raise CpgConfigError("edge weight must be finite and >= 0")
            W[i, j] = w
            B[i, j] = b
        W.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "_W", W)
        object.__setattr__(self, "_B", B)

    def dense(self):
        return self._W, self._B

    def is_connected(self) -> bool:
        adj = (self._W > 0) | (self._W.T > 0)
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        return bool(seen.all())


@dataclass(frozen=True)
class JointMap:
    """Joint names and the (flexor, extensor) oscillator index of each."""

    names: tuple
    flexor: np.ndarray
    extensor: np.ndarray
    groups: tuple


@dataclass
class NetworkState:
    phi: np.ndarray
    r: np.ndarray
    drive: float
    t: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if np.any(self.r < 0.0):
            raise CpgConfigError("amplitudes must be non-negative")

    def copy(self) -> "NetworkState":
        return NetworkState(self.phi.copy(), self.r.copy(), self.drive, self.t)


def initial_state(params: OscillatorParams, drive: float, rng=None) -> NetworkState:
    """State with amplitudes at their drive targets and phases at 0 or random."""
    omega, R = params.intrinsic(drive)
    if rng is None:
        phi = np.zeros(params.n)
    else:
        phi = rng.uniform(0.0, TWO_PI, size=params.n)
    return NetworkState(phi=phi, r=R.copy(), drive=drive, t=0.0)


def build_gait_network(axial_total_lag: float = TWO_PI):
    """Construct the 32-oscillator network.

    Parameters
    ----------
    axial_total_lag : float
        Head-to-tail phase lag of the spine chain during swimming, spread
        evenly over the 7 inter-joint gaps (default one full wavelength).

    Returns
    -------
    (OscillatorParams, CouplingGraph, JointMap)

    Notes
    -----
    Joint order: spine joints ax1..ax8 head to tail, then per leg
    (fl, fr, hl, hr) a swing joint and an elevation joint.  Oscillators
    2k / 2k+1 are the flexor / extensor of joint k.  Edge conventions:
    an edge added as (i, j, w, b) locks phi_j - phi_i = b, and every
    edge is installed bidirectionally with the opposite bias, so any
    phase-locked state of the full network advances at the amplitude
    weighted mean of the intrinsic rates.
    """
    names = [f"ax{k + 1}" for k in range(N_AXIAL_JOINTS)]
    groups = ["axial"] * N_AXIAL_JOINTS
    for leg in LEGS:
        names += [f"{leg}_swing", f"{leg}_elev"]
        groups += ["limb", "limb"]
    names = tuple(names)
    groups = tuple(groups)

    flexor = np.arange(N_JOINTS) * 2
    extensor = flexor + 1
    jmap = JointMap(names=names, flexor=flexor, extensor=extensor, groups=groups)

    osc_groups = []
    omega_maps = []
    amp_maps = []
    for g in groups:
        for _ in range(2):
            osc_groups.append(g)
            if g == "axial":
                omega_maps.append(AXIAL_OMEGA_MAP)
                amp_maps.append(AXIAL_AMP_MAP)
            else:
                omega_maps.append(LIMB_OMEGA_MAP)
                amp_maps.append(LIMB_AMP_MAP)
    params = OscillatorParams(
        a=np.full(N_OSC, A_RATE),
        omega_maps=tuple(omega_maps),
        amp_maps=tuple(amp_maps),
        groups=tuple(osc_groups),
    )

    edges = []

    def add_sym(i, j, b):
        edges.append((int(i), int(j), W_EDGE, float(b)))
        edges.append((int(j), int(i), W_EDGE, -float(b)))

    # antagonist pairs
    for k in range(N_JOINTS):
        add_sym(flexor[k], extensor[k], math.pi)

    # spine chain, head leads: phi drops by one gap per joint
    gap = axial_total_lag / (N_AXIAL_JOINTS - 1)
    for k in range(N_AXIAL_JOINTS - 1):
        add_sym(flexor[k], flexor[k + 1], -gap)
        add_sym(extensor[k], extensor[k + 1], -gap)

    joint_index = {nm: k for k, nm in enumerate(names)}
    swing_flex = {leg: flexor[joint_index[f"{leg}_swing"]] for leg in LEGS}
    elev_flex = {leg: flexor[joint_index[f"{leg}_elev"]] for leg in LEGS}

    # inter-leg trot graph on the swing flexors
    for a_i in range(len(LEGS)):
        for b_i in range(a_i + 1, len(LEGS)):
            la, lb = LEGS[a_i], LEGS[b_i]
            add_sym(swing_flex[la], swing_flex[lb],
                    LIMB_WALK_PHASE[lb] - LIMB_WALK_PHASE[la])

    # elevation runs a quarter cycle ahead of swing: the foot presses
    # down exactly while the swing joint sweeps back through stance
    for leg in LEGS:
        add_sym(swing_flex[leg], elev_flex[leg], math.pi / 2.0)

    # legs pin their girdle segment; front and hind girdles end up a
    # half cycle apart, bending the trunk into the standing S shape
    for leg in LEGS:
        girdle = FRONT_GIRDLE_JOINT if leg in ("fl", "fr") else HIND_GIRDLE_JOINT
        gphase = GIRDLE_PHASE["front" if leg in ("fl", "fr") else "hind"]
        add_sym(flexor[girdle], swing_flex[leg], LIMB_WALK_PHASE[leg] - gphase)

    graph = CouplingGraph(n=N_OSC, edges=tuple(edges))
    return params, graph, jmap


def step_network(state: NetworkState, params: OscillatorParams,
                 graph: CouplingGraph, dt: float) -> NetworkState:
    """Advance the network one RK4 step of length dt (s).

    Intrinsic rates and amplitude targets are re-evaluated from the
    state's current drive, so drive changes take effect immediately.
    """
    if not 0.0 < dt <= 0.010:
        raise ValueError("dt must be in (0, 10 ms]")
    omega, R = params.intrinsic(state.drive)
    W, B = graph.dense()
    phi, r = _kernels.cpg_step(state.phi, state.r, omega, W, B, params.a, R, dt)
    return NetworkState(phi=phi, r=np.maximum(r, 0.0), drive=state.drive,
                        t=state.t + dt)


def rollout(state: NetworkState, params: OscillatorParams, graph: CouplingGraph,
            dt: float, n_steps: int):
    """Integrate n_steps at fixed drive; returns (t, phis, rs).

    Output arrays have n_steps + 1 rows including the initial state.
    """
    if not 0.0 < dt <= 0.010:
        raise ValueError("dt must be in (0, 10 ms]")
    omega, R = params.intrinsic(state.drive)
    W, B = graph.dense()
    phis, rs = _kernels.cpg_rollout(state.phi, state.r, omega, W, B,
                                    params.a, R, dt, n_steps)
    t = state.t + dt * np.arange(n_steps + 1)
    return t, phis, np.maximum(rs, 0.0)


def oscillator_output(state: NetworkState) -> np.ndarray:
    """Activity x_i = r_i (1 + cos phi_i)."""
    return state.r * (1.0 + np.cos(state.phi))


def joint_targets(x: np.ndarray, jmap: JointMap, gain: float = 1.0) -> np.ndarray:
    """Joint angles from antagonist activity differences.

    For a pair locked in anti-phase with common amplitude r the output
    is gain * 2 r cos(phi_flexor).
    """
    x = np.asarray(x, dtype=float)
    return gain * (x[..., jmap.flexor] - x[..., jmap.extensor])


@dataclass(frozen=True)
class GaitCommand:
    mode: GaitMode
    drive: float


def transition_controller(foot_sum: float, cmd: GaitCommand,
                          threshold: float = FOOT_SUM_THRESHOLD_N) -> GaitCommand:
    """One-way walk-to-swim supervisor on the summed foot load (N)."""
    if cmd.mode is GaitMode.WALKING and foot_sum < threshold:
        return GaitCommand(mode=GaitMode.SWIMMING, drive=D_SWIM)
    return cmd


def network_to_json(params: OscillatorParams, graph: CouplingGraph,
                    jmap: JointMap, path=None):
    """Serialize a network configuration; writes to path if given."""
    doc = {
        "oscillators": {
            "a": params.a.tolist(),
            "groups": list(params.groups),
            "omega_maps": [vars(m).copy() for m in params.omega_maps],
            "amp_maps": [vars(m).copy() for m in params.amp_maps],
        },
        "edges": [[i, j, w, b] for i, j, w, b in graph.edges],
        "joints": {
            "names": list(jmap.names),
            "flexor": jmap.flexor.tolist(),
            "extensor": jmap.extensor.tolist(),
            "groups": list(jmap.groups),
        },
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    return doc


def network_from_json(source):
    """Inverse of network_to_json; accepts a dict or a file path."""
    if not isinstance(source, dict):
        with open(source) as fh:
            source = json.load(fh)
    osc = source["oscillators"]
    params = OscillatorParams(
        a=np.array(osc["a"]),
        omega_maps=tuple(SaturationMap(**m) for m in osc["omega_maps"]),
        amp_maps=tuple(SaturationMap(**m) for m in osc["amp_maps"]),
        groups=tuple(osc["groups"]),
    )
    graph = CouplingGraph(
        n=params.n, edges=tuple((i, j, w, b) for i, j, w, b in source["edges"])
    )
    jn = source["joints"]
    jmap = JointMap(
        names=tuple(jn["names"]),
        flexor=np.array(jn["flexor"], dtype=int),
        extensor=np.array(jn["extensor"], dtype=int),
        groups=tuple(jn["groups"]),
    )
    return params, graph, jmap
