"""Oscillator network: saturation maps, locking, gaits, transition."""

import math

import numpy as np
import pytest

from amphisense import cpg

TWO_PI = 2.0 * math.pi


def const_map(v, band=(0.0, 10.0)):
    return cpg.SaturationMap(c1=0.0, c0=v, d_low=band[0], d_high=band[1])


def single_osc(omega, R, a=20.0):
    return cpg.OscillatorParams(
        a=np.array([a]),
        omega_maps=(const_map(omega),),
        amp_maps=(const_map(R),),
        groups=("axial",),
    )


def osc_pair(omega, R, w, b, a=20.0):
    params = cpg.OscillatorParams(
        a=np.array([a, a]),
        omega_maps=(const_map(omega),) * 2,
        amp_maps=(const_map(R),) * 2,
        groups=("axial", "axial"),
    )
    graph = cpg.CouplingGraph(n=2, edges=((0, 1, w, b), (1, 0, w, -b)))
    return params, graph


def wrap(x):
    return np.angle(np.exp(1j * np.asarray(x)))


class TestSaturationMap:
    def test_affine_inside_band(self):
        m = cpg.SaturationMap(c1=2.0, c0=1.0, d_low=1.0, d_high=3.0)
        assert m.value(2.0) == 5.0
        assert m.value(1.0) == 3.0 and m.value(3.0) == 7.0

    def test_zero_outside_band(self):
        m = cpg.SaturationMap(c1=2.0, c0=1.0, d_low=1.0, d_high=3.0)
        assert m.value(0.5) == 0.0
        assert m.value(3.1) == 0.0

    def test_band_ordering_enforced(self):
        with pytest.raises(cpg.CpgConfigError):
            cpg.SaturationMap(c1=0.0, c0=1.0, d_low=2.0, d_high=2.0)

    def test_limb_rate_saturates_at_swim_drive(self):
        assert cpg.drive_to_intrinsic(cpg.D_SWIM, cpg.LIMB_OMEGA_MAP) == 0.0
        assert cpg.drive_to_intrinsic(cpg.D_SWIM, cpg.LIMB_AMP_MAP) == 0.0
        assert cpg.drive_to_intrinsic(cpg.D_WALK, cpg.LIMB_OMEGA_MAP) == pytest.approx(
            TWO_PI * 0.47
        )

    def test_axial_rate_anchors(self):
        assert cpg.drive_to_intrinsic(cpg.D_WALK, cpg.AXIAL_OMEGA_MAP) == pytest.approx(
            TWO_PI * 0.47
        )
        assert cpg.drive_to_intrinsic(cpg.D_SWIM, cpg.AXIAL_OMEGA_MAP) == pytest.approx(
            TWO_PI * 0.78
        )

    def test_axial_amplitude_anchors(self):
        assert cpg.AXIAL_AMP_MAP.value(cpg.D_WALK) == pytest.approx(math.radians(10.0))
        assert cpg.AXIAL_AMP_MAP.value(cpg.D_SWIM) == pytest.approx(math.radians(14.5))


class TestBuildNetwork:
    def setup_method(self):
        self.params, self.graph, self.jmap = cpg.build_gait_network()

    def test_counts(self):
        assert self.params.n == 32
        assert len(self.jmap.names) == 16
        idx = np.concatenate([self.jmap.flexor, self.jmap.extensor])
        assert sorted(idx.tolist()) == list(range(32))

    def test_connected(self):
        assert self.graph.is_connected()

    def test_pair_edges_have_pi_bias(self):
        for f, e in zip(self.jmap.flexor, self.jmap.extensor):
            found = [b for (i, j, w, b) in self.graph.edges if i == f and j == e]
            assert found and abs(abs(found[0]) - math.pi) < 1e-12

    def test_bidirectional_antisymmetric(self):
        W, B = self.graph.dense()
        assert np.array_equal(W > 0, (W > 0).T)
        mask = W > 0
        assert np.allclose(wrap(B + B.T)[mask], 0.0, atol=1e-12)

    def test_uniform_weight(self):
        W, _ = self.graph.dense()
        assert set(np.unique(W)) == {0.0, cpg.W_EDGE}

    def test_invalid_edges_rejected(self):
        with pytest.raises(cpg.CpgConfigError):
            cpg.CouplingGraph(n=2, edges=((0, 0, 1.0, 0.0),))
        with pytest.raises(cpg.CpgConfigError):
            cpg.CouplingGraph(n=2, edges=((0, 5, 1.0, 0.0),))
        with pytest.raises(cpg.CpgConfigError):
            cpg.CouplingGraph(n=2, edges=((0, 1, -1.0, 0.0),))


class TestStepNetwork:
    def test_uncoupled_phase_growth(self):
        params = single_osc(TWO_PI, 1.0)
        graph = cpg.CouplingGraph(n=1, edges=())
        st = cpg.NetworkState(phi=np.zeros(1), r=np.ones(1), drive=1.0)
        for _ in range(1000):
            st = cpg.step_network(st, params, graph, 1e-3)
        assert st.phi[0] == pytest.approx(TWO_PI, abs=1e-6)
        assert st.t == pytest.approx(1.0)

    def test_amplitude_exponential_convergence(self):
        a, R, r0 = 20.0, 1.0, 0.5
        params = single_osc(0.0, R, a=a)
        graph = cpg.CouplingGraph(n=1, edges=())
        st = cpg.NetworkState(phi=np.zeros(1), r=np.array([r0]), drive=1.0)
        t_end = 5.0 / a
        n = int(round(t_end / 1e-3))
        for _ in range(n):
            st = cpg.step_network(st, params, graph, 1e-3)
        gap0 = abs(R - r0)
        assert abs(st.r[0] - R) < 0.007 * gap0
        analytic = R + (r0 - R) * math.exp(-a * t_end)
        assert st.r[0] == pytest.approx(analytic, abs=1e-9)

    def test_pair_locks_at_bias(self):
        b = 0.7
        params, graph = osc_pair(TWO_PI * 0.5, 1.0, w=10.0, b=b)
        rng = np.random.default_rng(0)
        for _ in range(10):
            st = cpg.NetworkState(
                phi=rng.uniform(0, TWO_PI, 2), r=np.ones(2), drive=1.0
            )
            _, phis, _ = cpg.rollout(st, params, graph, 1e-3, 5000)
            diff = wrap(phis[-1, 1] - phis[-1, 0])
            assert diff == pytest.approx(b, abs=1e-6)

    def test_dt_validation(self):
        params = single_osc(1.0, 1.0)
        graph = cpg.CouplingGraph(n=1, edges=())
        st = cpg.NetworkState(phi=np.zeros(1), r=np.ones(1), drive=1.0)
        with pytest.raises(ValueError):
            cpg.step_network(st, params, graph, 0.0)
        with pytest.raises(ValueError):
            cpg.step_network(st, params, graph, 0.02)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(cpg.CpgConfigError):
            cpg.NetworkState(phi=np.zeros(1), r=np.array([-0.1]), drive=1.0)


class TestOutputs:
    def test_output_extremes(self):
        st = cpg.NetworkState(phi=np.array([0.0, math.pi]), r=np.ones(2), drive=1.0)
        x = cpg.oscillator_output(st)
        assert x[0] == pytest.approx(2.0)
        assert x[1] == pytest.approx(0.0, abs=1e-15)

    def test_output_range(self):
        rng = np.random.default_rng(3)
        st = cpg.NetworkState(
            phi=rng.uniform(-10, 10, 50), r=rng.uniform(0, 2, 50), drive=1.0
        )
        x = cpg.oscillator_output(st)
        assert np.all(x >= 0) and np.all(x <= 2 * st.r + 1e-15)

    def test_joint_targets_symmetric_pair(self):
        jmap = cpg.JointMap(
            names=("j",), flexor=np.array([0]), extensor=np.array([1]),
            groups=("axial",),
        )
        assert cpg.joint_targets(np.array([1.3, 1.3]), jmap)[0] == 0.0

    def test_joint_targets_antiphase_pair(self):
        jmap = cpg.JointMap(
            names=("j",), flexor=np.array([0]), extensor=np.array([1]),
            groups=("axial",),
        )
        r, gain = 0.8, 1.7
        for phi in np.linspace(0, TWO_PI, 17):
            st = cpg.NetworkState(
                phi=np.array([phi, phi + math.pi]), r=np.full(2, r), drive=1.0
            )
            x = cpg.oscillator_output(st)
            ang = cpg.joint_targets(x, jmap, gain=gain)[0]
            assert ang == pytest.approx(gain * 2 * r * math.cos(phi), abs=1e-12)


def _measure_freq(sig, t):
    s = sig - sig.mean()
    idx = np.nonzero((s[:-1] < 0) & (s[1:] >= 0))[0]
    tc = t[idx] + (t[idx + 1] - t[idx]) * (-s[idx]) / (s[idx + 1] - s[idx])
    return (len(tc) - 1) / (tc[-1] - tc[0])


@pytest.fixture(scope="module")
def network():
    return cpg.build_gait_network()


@pytest.fixture(scope="module")
def walk_run(network):
    params, graph, jmap = network
    st = cpg.initial_state(params, cpg.D_WALK, rng=np.random.default_rng(11))
    t, phis, rs = cpg.rollout(st, params, graph, 1e-3, 16000)
    return t, phis, rs, jmap


@pytest.fixture(scope="module")
def swim_run(network):
    # start from the locked walk pattern, then switch drive, as on the robot
    params, graph, jmap = network
    st = cpg.initial_state(params, cpg.D_WALK, rng=np.random.default_rng(12))
    _, phis, rs = cpg.rollout(st, params, graph, 1e-3, 8000)
    st2 = cpg.NetworkState(phi=phis[-1], r=rs[-1], drive=cpg.D_SWIM, t=8.0)
    t, phis2, rs2 = cpg.rollout(st2, params, graph, 1e-3, 14000)
    return t, phis2, rs2, jmap


class TestWalking:
    def test_frequency(self, walk_run):
        t, phis, rs, jmap = walk_run
        x = rs * (1 + np.cos(phis))
        ang = cpg.joint_targets(x, jmap)
        f = _measure_freq(ang[6000:, 0], t[6000:])
        assert abs(f - 0.47) / 0.47 < 0.02

    def test_axial_amplitude(self, walk_run):
        t, phis, rs, jmap = walk_run
        ang = cpg.joint_targets(rs * (1 + np.cos(phis)), jmap)
        amp = math.degrees(np.ptp(ang[6000:, 0]) / 2)
        assert amp == pytest.approx(20.0, abs=0.2)

    def test_trot_phase_relations(self, walk_run):
        t, phis, rs, jmap = walk_run
        ji = {nm: k for k, nm in enumerate(jmap.names)}
        ph = {leg: phis[-1, jmap.flexor[ji[f"{leg}_swing"]]] for leg in cpg.LEGS}
        cyc = lambda d: abs(wrap(d)) / TWO_PI
        # diagonal pairs in phase
        assert cyc(ph["fl"] - ph["hr"]) < 0.05
        assert cyc(ph["fr"] - ph["hl"]) < 0.05
        # ipsilateral pairs a half cycle apart
        assert abs(cyc(ph["fl"] - ph["hl"]) - 0.5) < 0.05
        assert abs(cyc(ph["fr"] - ph["hr"]) - 0.5) < 0.05

    def test_elevation_quadrature(self, walk_run):
        t, phis, rs, jmap = walk_run
        ji = {nm: k for k, nm in enumerate(jmap.names)}
        d = phis[-1, jmap.flexor[ji["fl_elev"]]] - phis[-1, jmap.flexor[ji["fl_swing"]]]
        assert wrap(d) == pytest.approx(math.pi / 2, abs=0.05)


class TestSwimming:
    def test_frequency(self, swim_run):
        t, phis, rs, jmap = swim_run
        ang = cpg.joint_targets(rs * (1 + np.cos(phis)), jmap)
        f = _measure_freq(ang[6000:, 0], t[6000:])
        assert abs(f - 0.78) / 0.78 < 0.02

    def test_axial_amplitude(self, swim_run):
        t, phis, rs, jmap = swim_run
        ang = cpg.joint_targets(rs * (1 + np.cos(phis)), jmap)
        amp = math.degrees(np.ptp(ang[6000:, 0]) / 2)
        assert abs(amp - 29.0) < 1.0

    def test_traveling_wave(self, swim_run):
        t, phis, rs, jmap = swim_run
        ax = phis[-1, jmap.flexor[:8]]
        gaps = wrap(np.diff(ax))
        assert np.all(gaps < 0.0)
        total = abs(gaps.sum())
        assert abs(total - TWO_PI) / TWO_PI < 0.05

    def test_limb_silencing_within_three_cycles(self, swim_run):
        t, phis, rs, jmap = swim_run
        ang = cpg.joint_targets(rs * (1 + np.cos(phis)), jmap)
        k3 = int(3 / 0.78 / 1e-3)
        limb_cols = [k for k, g in enumerate(jmap.groups) if g == "limb"]
        assert np.abs(ang[k3:, limb_cols]).max() < 1e-3


class TestNetworkProperties:
    def test_phase_lock_from_random_initializations(self, network):
        # active (axial) relative phases reach a unique fixed point; limb
        # phases carry no amplitude at swim drive and are excluded
        params, graph, jmap = network
        ax = np.concatenate([jmap.flexor[:8], jmap.extensor[:8]])
        reference = None
        for seed in range(20):
            st = cpg.initial_state(params, cpg.D_SWIM, rng=np.random.default_rng(seed))
            _, phis, _ = cpg.rollout(st, params, graph, 1e-3, 30000)
            rel = wrap(phis[-1, ax] - phis[-1, ax[0]])
            if reference is None:
                reference = rel
            else:
                assert np.abs(wrap(rel - reference)).max() < 1e-3

    def test_halving_dt_leaves_lock_unchanged(self, network):
        params, graph, jmap = network

        def steady(dt):
            st = cpg.initial_state(params, cpg.D_WALK)
            _, phis, _ = cpg.rollout(st, params, graph, dt, int(25.0 / dt))
            return wrap(phis[-1] - phis[-1][0])

        d1, d2 = steady(1e-3), steady(5e-4)
        assert np.abs(wrap(d1 - d2)).max() < 1e-4


class TestTransition:
    def test_above_threshold_keeps_walking(self):
        cmd = cpg.GaitCommand(cpg.GaitMode.WALKING, cpg.D_WALK)
        out = cpg.transition_controller(20.0, cmd)
        assert out.mode is cpg.GaitMode.WALKING and out.drive == cpg.D_WALK

    def test_below_threshold_switches(self):
        cmd = cpg.GaitCommand(cpg.GaitMode.WALKING, cpg.D_WALK)
        out = cpg.transition_controller(6.9, cmd)
        assert out.mode is cpg.GaitMode.SWIMMING and out.drive == cpg.D_SWIM

    def test_threshold_is_strict(self):
        cmd = cpg.GaitCommand(cpg.GaitMode.WALKING, cpg.D_WALK)
        assert cpg.transition_controller(7.0, cmd).mode is cpg.GaitMode.WALKING

    def test_one_way(self):
        cmd = cpg.GaitCommand(cpg.GaitMode.SWIMMING, cpg.D_SWIM)
        out = cpg.transition_controller(30.0, cmd)
        assert out.mode is cpg.GaitMode.SWIMMING and out.drive == cpg.D_SWIM


class TestSerialization:
    def test_json_round_trip(self, tmp_path, network):
        params, graph, jmap = network
        path = tmp_path / "net.json"
        cpg.network_to_json(params, graph, jmap, path)
        p2, g2, j2 = cpg.network_from_json(path)
        assert p2.groups == params.groups
        assert j2.names == jmap.names
        np.testing.assert_array_equal(p2.a, params.a)
        W1, B1 = graph.dense()
        W2, B2 = g2.dense()
        np.testing.assert_array_equal(W1, W2)
        np.testing.assert_array_equal(B1, B2)
        # identical dynamics from the round-tripped configuration
        st = cpg.initial_state(params, cpg.D_WALK, rng=np.random.default_rng(5))
        _, ph1, _ = cpg.rollout(st.copy(), params, graph, 1e-3, 500)
        _, ph2, _ = cpg.rollout(st.copy(), p2, g2, 1e-3, 500)
        np.testing.assert_array_equal(ph1, ph2)

    def test_initial_state_reproducible(self, network):
        params, _, _ = network
        s1 = cpg.initial_state(params, cpg.D_WALK, rng=np.random.default_rng(9))
        s2 = cpg.initial_state(params, cpg.D_WALK, rng=np.random.default_rng(9))
        np.testing.assert_array_equal(s1.phi, s2.phi)
        omega, R = params.intrinsic(cpg.D_WALK)
        np.testing.assert_array_equal(s1.r, R)
