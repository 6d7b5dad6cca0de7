import csv
import io

import numpy as np
import pytest

from lbmexpand.scheme import builtin
from lbmexpand.sim import (
    HAVE_NUMBA,
    LatticeState,
    SimulationError,
    Simulator,
    conservation_run,
    fit_decay,
    read_snapshot,
    scalar_decay_benchmark,
    shear_wave_benchmark,
    timeseries_csv,
    write_snapshot,
)

B9 = {"lambda": 1.0, "sigma_e": 0.4, "sigma_x": 0.3, "sigma_q": 0.6, "sigma_h": 0.5}


@pytest.fixture(scope="module")
def d2q9():
    return builtin("d2q9")


def _uniform(sim, rho=1.0, ux=0.02, uy=-0.01):
    shape = sim.grid
    W = np.stack([rho * np.ones(shape), rho * ux * np.ones(shape), rho * uy * np.ones(shape)])
    return sim.init_equilibrium(W)


def test_uniform_equilibrium_is_fixed_point(d2q9):
    sim = Simulator(d2q9, (6, 5), B9, use_numba=False)
    st = _uniform(sim)
    out = sim.step(st, 3)
    assert np.allclose(out.f, st.f, rtol=0, atol=1e-15)
    assert out.t == 3 and st.t == 0


def test_perturbation_moves_one_link(d2q9):
    sim = Simulator(d2q9, (9, 9), B9, use_numba=False)
    base = _uniform(sim)
    st = LatticeState(base.f.copy())
    st.f[:, 4, 4] += 1e-3 * np.arange(1, 10)
    diff = sim.step(st).f - sim.step(base).f
    for j, (cx, cy) in enumerate(d2q9.stencil):
        nz = np.argwhere(np.abs(diff[j]) > 1e-14)
        assert [tuple(p) for p in nz] in ([], [(4 + cx, 4 + cy)])


def test_periodic_wrap(d2q9):
    sim = Simulator(d2q9, (4, 4), B9, use_numba=False)
    base = _uniform(sim, ux=0, uy=0)
    st = LatticeState(base.f.copy())
    st.f[1, 3, 0] += 1e-3  # population moving +x at the right edge
    diff = sim.step(st).f - sim.step(base).f
    assert abs(diff[1, 0, 0]) > 1e-6


def test_step_does_not_mutate_input(d2q9):
    sim = Simulator(d2q9, (5, 5), B9)
    st = _uniform(sim)
    keep = st.f.copy()
    sim.step(st, 2)
    assert np.array_equal(st.f, keep)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_compiled_kernel_matches_numpy(d2q9):
    rng = np.random.default_rng(1)
    a = Simulator(d2q9, (8, 7), B9, use_numba=True)
    b = Simulator(d2q9, (8, 7), B9, use_numba=False)
    st = _uniform(a)
    st.f = st.f * (1 + 1e-2 * rng.uniform(-1, 1, st.f.shape))
    fa, fb = a.step(st, 20).f, b.step(st, 20).f
    assert np.allclose(fa, fb, rtol=1e-13, atol=1e-15)


def test_conservation_short_run(d2q9):
    drift, before, after, _ = conservation_run(d2q9, (12, 12), 500, B9, seed=4)
    assert np.all(drift < 1e-13)


def test_d1q3_simulation_conserves_mass():
    d1 = builtin("d1q3")
    drift, *_ = conservation_run(d1, (32,), 500, seed=2)
    assert drift[0] < 1e-13


def test_nonfinite_detected(d2q9):
    sim = Simulator(d2q9, (4, 4), B9, use_numba=False)
    st = _uniform(sim)
    st.f[0, 1, 1] = np.nan
    with pytest.raises(SimulationError):
        sim.step(st, 1)


def test_shape_mismatch(d2q9):
    with pytest.raises(SimulationError):
        Simulator(d2q9, (8,), B9)


def test_snapshot_roundtrip(tmp_path, d2q9):
    sim = Simulator(d2q9, (5, 3), B9)
    st = sim.step(_uniform(sim), 4)
    p = tmp_path / "s.bin"
    write_snapshot(p, st, d2q9)
    back = read_snapshot(p)
    assert back.t == 4 and np.array_equal(back.f, st.f)
    raw = p.read_bytes()
    assert raw[:8] == b"LBMSNAP1"
    assert len(raw) == 8 + 4 + 2 * 4 + 4 + 8 + 8 + 9 * 5 * 3 * 8
    # body is row-major (q, nx, ny)
    body = np.frombuffer(raw[-9 * 15 * 8:], dtype="<f8").reshape(9, 5, 3)
    assert np.array_equal(body, st.f)


def test_snapshot_1d(tmp_path):
    d1 = builtin("d1q3")
    sim = Simulator(d1, (10,))
    st = sim.init_equilibrium(np.ones((1, 10)))
    p = tmp_path / "s1.bin"
    write_snapshot(p, st, d1)
    assert int.from_bytes(p.read_bytes()[8:12], "little") == 1
    assert np.array_equal(read_snapshot(p).f, st.f)


def test_snapshot_rejects_garbage(tmp_path, d2q9):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTASNAP" + bytes(40))
    with pytest.raises(SimulationError):
        read_snapshot(p)
    sim = Simulator(d2q9, (3, 3), B9)
    good = tmp_path / "good.bin"
    write_snapshot(good, _uniform(sim), d2q9)
    p.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(SimulationError):
        read_snapshot(p)


def test_timeseries_csv():
    text = timeseries_csv([(10, 0.5, 1.0, 0.0, 1e-20), (20, 0.25, 1.0, 0.0, -1e-20)])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["step", "amplitude", "mass", "momentum_x", "momentum_y"]
    assert float(rows[2][1]) == 0.25 and float(rows[1][4]) == 1e-20


def test_fit_decay_exact_exponential():
    t = np.linspace(0, 5, 200)
    rate, r2, used = fit_decay(t, 1e-3 * np.exp(-0.9 * t), 1e-3)
    assert rate == pytest.approx(0.9, rel=1e-10) and r2 > 0.999999 and used > 10
    with pytest.raises(SimulationError):
        fit_decay(t[:3], 1e-3 * np.ones(3), 1e-3)


def test_shear_wave_small_grid(d2q9):
    res = shear_wave_benchmark(d2q9, resolution=32, bindings={"sigma_x": 0.5})
    assert res.accepted
    assert res.rel_error < 0.02
    assert res.extra["mach"] <= 0.05
    masses = [r[2] for r in res.series]
    assert max(masses) - min(masses) < 1e-10


def test_shear_wave_mach_limit(d2q9):
    with pytest.raises(SimulationError):
        shear_wave_benchmark(d2q9, resolution=16, amplitude=0.1)


def test_scalar_decay_matches_alpha2():
    res = scalar_decay_benchmark(builtin("d1q3"), resolution=256, mode=2, bindings={"V": 0.0})
    assert res.accepted
    assert res.rel_error < 1e-3


def test_third_order_term_improves_phase():
    # mode 8 on 256 nodes: k dx = 0.196
    res = scalar_decay_benchmark(builtin("d1q3"), resolution=256, mode=8)
    assert abs(res.extra["kdx"] - 0.2) < 0.01
    om, pred = res.extra["omega"], res.extra["omega_pred"]
    assert abs(om - pred[3]) < abs(om - pred[2])
