"""Polynomial force/torque calibration and the bench-jig simulator.

A calibration dataset pairs magnet-location estimates (from the sensing
pipeline) with reference loads applied by a simulated jig.  Separate ordinary
least squares models map foot locations (3 coords, full 10-term quadratic
basis) to pitch torque / yaw torque / axial force, and fin location changes
(2 coords, 6-term quadratic basis) to a single flow force.

Units follow the sensing stack: mm, mT, N, N*mm, rad.
"""

import csv
import json
import math

import numpy as np
from dataclasses import dataclass, field

from . import magnetics


FOOT_FEATURES = ("1", "p_x", "p_y", "p_z", "p_x^2", "p_y^2", "p_z^2",
                 "p_x*p_y", "p_x*p_z", "p_y*p_z")
FLOW_FEATURES = ("1", "dp_x", "dp_y", "dp_x^2", "dp_y^2", "dp_x*dp_y")
FOOT_OUTPUTS = ("tau_pitch", "tau_yaw", "f_x")
FLOW_OUTPUTS = ("force",)


class CalibrationError(ValueError):
    pass


class InsufficientSamplesError(CalibrationError):
    pass


class RankDeficiencyError(CalibrationError):
    def __init__(self, message, directions):
        super().__init__(message)
        self.directions = directions


class CycleOverlapError(CalibrationError):
    pass


class EmptyEvalError(CalibrationError):
    pass


@dataclass
class FootWrench:
    """Pitch torque (N*mm), yaw torque (N*mm), axial force (N)."""

    tau_pitch: float
    tau_yaw: float
    f_x: float

    def as_array(self):
        return np.array([self.tau_pitch, self.tau_yaw, self.f_x])


def quad_features(p) -> np.ndarray:
    """Full 10-term quadratic basis [1, x, y, z, x^2, y^2, z^2, xy, xz, yz]."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    return np.array([1.0, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z])


def flow_features(dp) -> np.ndarray:
    """6-term quadratic basis [1, dx, dy, dx^2, dy^2, dx*dy] in the fin plane."""
    x, y = float(dp[0]), float(dp[1])
    return np.array([1.0, x, y, x * x, y * y, x * y])


def _feature_matrix(kind: str, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if kind == "foot":
        x, y, z = X[:, 0], X[:, 1], X[:, 2]
        return np.column_stack(
            [np.ones(len(X)), x, y, z, x * x, y * y, z * z, x * y, x * z, y * z]
        )
    if kind == "flow":
        x, y = X[:, 0], X[:, 1]
        return np.column_stack([np.ones(len(X)), x, y, x * x, y * y, x * y])
    raise CalibrationError(f"unknown sensor kind {kind!r}")


def _kind_meta(kind: str):
    if kind == "foot":
        return FOOT_FEATURES, FOOT_OUTPUTS, 3
    if kind == "flow":
        return FLOW_FEATURES, FLOW_OUTPUTS, 2
    raise CalibrationError(f"unknown sensor kind {kind!r}")


@dataclass
class CalibrationDataset:
    """Location estimates paired with reference loads, labeled by jig cycle.

    X holds (p_x, p_y, p_z) rows for foot sensors or (dp_x, dp_y) rows for
    flow sensors; Y holds (tau_pitch, tau_yaw, f_x) or (force,).
    """

    kind: str
    X: np.ndarray
    Y: np.ndarray
    cycle_ids: list
    load_types: list

    def __post_init__(self):
        _, outputs, dims = _kind_meta(self.kind)
        self.X = np.asarray(self.X, dtype=float).reshape(-1, dims)
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1, len(outputs))
        if not (len(self.X) == len(self.Y) == len(self.cycle_ids) == len(self.load_types)):
            raise CalibrationError("dataset columns disagree in length")

    def __len__(self):
        return len(self.X)

    @property
    def cycles(self):
        return sorted(set(self.cycle_ids))

    def subset(self, cycles) -> "CalibrationDataset":
        cycles = set(cycles)
        mask = np.array([c in cycles for c in self.cycle_ids])
        return CalibrationDataset(
            self.kind,
            self.X[mask],
            self.Y[mask],
            [c for c, m in zip(self.cycle_ids, mask) if m],
            [t for t, m in zip(self.load_types, mask) if m],
        )

    def train_eval_split(self, n_eval: int = 2):
        """Hold out the last n_eval cycles of every load type for evaluation."""
        per_type = {}
        for cid, lt in zip(self.cycle_ids, self.load_types):
            per_type.setdefault(lt, set()).add(cid)
        eval_cycles = set()
        for lt, cids in per_type.items():
            ordered = sorted(cids)
            if len(ordered) <= n_eval:
                raise CalibrationError(
                    f"load type {lt!r} has {len(ordered)} cycles, "
                    f"cannot hold out {n_eval}"
                )
            eval_cycles.update(ordered[-n_eval:])
        train_cycles = set(self.cycles) - eval_cycles
        return self.subset(train_cycles), self.subset(eval_cycles)

    def to_csv(self, path):
        feats, outputs, dims = _kind_meta(self.kind)
        xcols = ("p_x", "p_y", "p_z") if self.kind == "foot" else ("dp_x", "dp_y")
        ycols = tuple(f"ref_{o}" for o in outputs)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("cycle_id", "load_type") + xcols + ycols)
            for i in range(len(self)):
                w.writerow(
                    [self.cycle_ids[i], self.load_types[i]]
                    + [f"{v:.17g}" for v in self.X[i]]
                    + [f"{v:.17g}" for v in self.Y[i]]
                )

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, rows = rows[0], rows[1:]
        if "p_z" in header:
            kind, dims = "foot", 3
        elif "dp_x" in header:
            kind, dims = "flow", 2
        else:
            raise CalibrationError(f"unrecognized dataset header {header}")
        X = np.array([[float(v) for v in r[2 : 2 + dims]] for r in rows])
        Y = np.array([[float(v) for v in r[2 + dims :]] for r in rows])
        return cls(kind, X, Y, [r[0] for r in rows], [r[1] for r in rows])


@dataclass
class PolyModel:
    """Per-output quadratic polynomial, fitted by ordinary least squares."""

    kind: str
    coef: np.ndarray  # outputs x features
    train_rmse: np.ndarray
    train_cycles: list = field(default_factory=list)

    @property
    def feature_names(self):
        return _kind_meta(self.kind)[0]

    @property
    def output_names(self):
        return _kind_meta(self.kind)[1]

    def to_json(self, path=None):
        doc = {
            "kind": self.kind,
            "features": list(self.feature_names),
            "outputs": list(self.output_names),
            "coef": self.coef.tolist(),
            "train_rmse": self.train_rmse.tolist(),
            "train_cycles": list(self.train_cycles),
        }
        if path is None:
            return json.dumps(doc, indent=2)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        model = cls(
            kind=doc["kind"],
            coef=np.array(doc["coef"], dtype=float),
            train_rmse=np.array(doc["train_rmse"], dtype=float),
            train_cycles=list(doc["train_cycles"]),
        )
        if doc["features"] != list(model.feature_names):
            raise CalibrationError("feature ordering in file disagrees with kind")
        return model


@dataclass
class RmseReport:
    """Per-output root mean square error with units, over n_samples."""

    kind: str
    rmse: dict
    n_samples: int

    @property
    def mean_torque_rmse(self):
        if self.kind != "foot":
            raise CalibrationError("torque RMSE applies to foot models")
        return 0.5 * (self.rmse["tau_pitch"] + self.rmse["tau_yaw"])


def fit_poly(data: CalibrationDataset) -> PolyModel:
    """Ordinary least squares fit of the quadratic basis, per output.

    Solved through the SVD so rank deficiency is detected and reported, never
    silently regularized: the error message names the features dominating
    each unexcited direction (the usual cause is a jig schedule that never
    varies two axes together).
    """
    feats, outputs, _ = _kind_meta(data.kind)
    k = len(feats)
    if len(data) < k:
        raise InsufficientSamplesError(
            f"{len(data)} samples cannot determine {k} coefficients"
        )
    F = _feature_matrix(data.kind, data.X)
    U, s, Vt = np.linalg.svd(F, full_matrices=False)
    tol = s[0] * max(F.shape) * np.finfo(float).eps
    rank = int((s > tol).sum())
    if rank < k:
        dirs = []
        for row in Vt[rank:]:
            top = np.argsort(-np.abs(row))[:3]
            dirs.append(" + ".join(f"{row[i]:+.3f}*{feats[i]}" for i in top))
        raise RankDeficiencyError(
            f"feature matrix rank {rank} < {k}; unexcited directions: "
            + "; ".join(dirs),
            directions=Vt[rank:].copy(),
        )
    coef = (Vt.T @ ((U.T @ data.Y) / s[:, None])).T
    resid = data.Y - F @ coef.T
    train_rmse = np.sqrt(np.mean(resid**2, axis=0))
    return PolyModel(
        kind=data.kind, coef=coef, train_rmse=train_rmse,
        train_cycles=data.cycles,
    )


def apply_poly(model: PolyModel, x):
    """Evaluate the model at one location (foot: Vec3, flow: (dp_x, dp_y))."""
    x = np.asarray(x, dtype=float)
    if model.kind == "foot":
        if x.shape != (3,):
            raise CalibrationError(f"foot model expects 3 coords, got {x.shape}")
        out = model.coef @ quad_features(x)
        return FootWrench(tau_pitch=out[0], tau_yaw=out[1], f_x=out[2])
    if x.shape != (2,):
        raise CalibrationError(f"flow model expects 2 coords, got {x.shape}")
    return float((model.coef @ flow_features(x))[0])


def apply_poly_batch(model: PolyModel, X) -> np.ndarray:
    """Evaluate the model over (N, dims) locations; returns (N, outputs)."""
    return _feature_matrix(model.kind, np.asarray(X, dtype=float)) @ model.coef.T


def evaluate_rmse(model: PolyModel, eval_data: CalibrationDataset) -> RmseReport:
    """Per-output RMSE on held-out cycles; refuses overlap with training."""
    if model.kind != eval_data.kind:
        raise CalibrationError("model and dataset kinds differ")
    if len(eval_data) == 0:
        raise EmptyEvalError("evaluation dataset is empty")
    overlap = set(model.train_cycles) & set(eval_data.cycles)
    if overlap:
        raise CycleOverlapError(f"eval cycles overlap training: {sorted(overlap)}")
    pred = apply_poly_batch(model, eval_data.X)
    rmse = np.sqrt(np.mean((pred - eval_data.Y) ** 2, axis=0))
    return RmseReport(
        kind=model.kind,
        rmse=dict(zip(model.output_names, rmse)),
        n_samples=len(eval_data),
    )


def reference_torque(force: float, lever: float) -> float:
    """Reference torque (N*mm) of a tangential load: force times lever arm."""
    if not (lever > 0):
        raise CalibrationError("lever must be positive")
    return force * lever


def fin_angle(pose: magnetics.FlowPose, rest_pose: magnetics.FlowPose,
              min_radius: float = 1.0) -> float:
    """Signed fin rotation about z between the rest and current magnet spots."""
    ax, ay = rest_pose.p_x, rest_pose.p_y
    bx, by = pose.p_x, pose.p_y
    if math.hypot(ax, ay) < min_radius or math.hypot(bx, by) < min_radius:
        raise magnetics.DegeneratePoseError("magnet too close to the rotation axis")
    return math.atan2(ax * by - ay * bx, ax * bx + ay * by)


# ---------------------------------------------------------------------------
# bench jig
# ---------------------------------------------------------------------------

@dataclass
class JigConfig:
    """Load schedule and noise for one simulated calibration bench.

    Every load type runs n_train + n_eval cycles; each cycle sweeps its load
    profile over samples_per_cycle points.  n_average flux draws are averaged
    per point before inversion (the bench is quasi-static).  The combo cycles
    drive all three foot axes together so the quadratic cross terms are
    excited; single-axis cycles alone leave them unidentifiable.
    """

    kind: str = "foot"
    lever: float = 19.0
    n_train: int = 10
    n_eval: int = 2
    samples_per_cycle: int = 41
    n_average: int = 1
    noise_sigma: float = 0.01
    f_x_max: float = 8.0
    tangential_max: float = 3.0
    flow_force_max: float = 0.3
    load_types: tuple = None

    def __post_init__(self):
        if self.load_types is None:
            self.load_types = (
                ("fx", "pitch", "yaw", "combo") if self.kind == "foot" else ("flow",)
            )


def _foot_cycle_loads(load_type, cfg: JigConfig):
    """Reference wrenches of one cycle: columns tau_pitch, tau_yaw, f_x."""
    s = np.linspace(0.0, 1.0, cfg.samples_per_cycle)
    zero = np.zeros_like(s)
    tri = 1.0 - np.abs(2.0 * s - 1.0)
    bi = np.sin(2.0 * np.pi * s)
    t_max = reference_torque(cfg.tangential_max, cfg.lever)
    if load_type == "fx":
        return np.column_stack([zero, zero, cfg.f_x_max * tri])
    if load_type == "pitch":
        return np.column_stack([t_max * bi, zero, zero])
    if load_type == "yaw":
        return np.column_stack([zero, t_max * bi, zero])
    if load_type == "combo":
        return np.column_stack(
            [
                t_max * bi,
                t_max * np.sin(4.0 * np.pi * s),
                cfg.f_x_max * 0.5 * (1.0 - np.cos(2.0 * np.pi * s)),
            ]
        )
    raise CalibrationError(f"unknown foot load type {load_type!r}")


def simulate_jig(transduce, params: magnetics.DipoleParams, cfg: JigConfig,
                 rng) -> CalibrationDataset:
    """Run the simulated calibration bench and return the labeled dataset.

    transduce is the opaque ground-truth elastic law: for a foot jig it maps
    a FootWrench to the magnet position Vec3; for a flow jig it maps a force
    (N) to a FlowPose.  Each scheduled load point goes load -> pose -> flux
    -> noise -> inversion, and the estimated location is paired with the
    reference load.
    """
    if cfg.kind == "foot":
        return _simulate_foot_jig(transduce, params, cfg, rng)
    if cfg.kind == "flow":
        return _simulate_flow_jig(transduce, params, cfg, rng)
    raise CalibrationError(f"unknown jig kind {cfg.kind!r}")


def _simulate_foot_jig(transduce, params, cfg, rng):
    X, Y, cids, ltypes = [], [], [], []
    for load_type in cfg.load_types:
        loads = _foot_cycle_loads(load_type, cfg)
        for c in range(cfg.n_train + cfg.n_eval):
            cid = f"{load_type}-{c:02d}"
            for w in loads:
                p = transduce(FootWrench(tau_pitch=w[0], tau_yaw=w[1], f_x=w[2]))
                b = magnetics.dipole_flux_radial(p, params)
                noise = rng.normal(scale=cfg.noise_sigma, size=(cfg.n_average, 3))
                b_meas = b + noise.mean(axis=0)
                p_hat = magnetics.invert_foot_flux(b_meas, params)
                X.append(p_hat)
                Y.append(w)
                cids.append(cid)
                ltypes.append(load_type)
    return CalibrationDataset("foot", np.array(X), np.array(Y), cids, ltypes)


def _simulate_flow_jig(transduce, params, cfg, rng):
    rest = transduce(0.0)
    s = np.linspace(0.0, 1.0, cfg.samples_per_cycle)
    forces = cfg.flow_force_max * np.sin(2.0 * np.pi * s)
    X, Y, cids, ltypes = [], [], [], []
    for c in range(cfg.n_train + cfg.n_eval):
        cid = f"flow-{c:02d}"
        for f in forces:
            pose = transduce(f)
            b = magnetics.flow_flux(pose, params)
            noise = rng.normal(scale=cfg.noise_sigma, size=(cfg.n_average, 3))
            b_meas = b + noise.mean(axis=0)
            est = magnetics.invert_flow_flux(
                b_meas, pose.d_z0, params, rest,
                resid_accept=max(5.0 * cfg.noise_sigma, 1e-9),
            )
            X.append([est.p_x - rest.p_x, est.p_y - rest.p_y])
            Y.append([f])
            cids.append(cid)
            ltypes.append("flow")
    return CalibrationDataset("flow", np.array(X), np.array(Y), cids, ltypes)
