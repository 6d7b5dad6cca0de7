"""Direct simulation of MRT schemes on periodic grids.

One step relaxes the nonconserved moments towards equilibrium and then
moves every population one lattice link (exact transport):

    m = M f,  Y* = Y + S (Phi(W) - Y),  W* = W,  f* = M^-1 m*,
    f_j(x + v_j dt, t + dt) = f*_j(x, t).

The equilibrium is turned into straight-line numeric code from its exact
rational form.  When numba is importable (and every link has length at
most one) the whole step is emitted as straight-line source and compiled;
otherwise a vectorized numpy path is used.  Both give the same update up
to floating-point contraction.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .algebra import registry
from .jet import as_jet
from .scheme import SchemeSpec, compile_scheme

try:  # optional accelerator
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

__all__ = [
    "LatticeState",
    "Simulator",
    "BenchmarkResult",
    "SimulationError",
    "shear_wave_benchmark",
    "scalar_decay_benchmark",
    "conservation_run",
    "write_snapshot",
    "read_snapshot",
    "timeseries_csv",
    "fit_decay",
]


class SimulationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# numeric equilibrium


def _poly_source(p, params, bindings):
    terms = []
    for m, c in p.items():
        coef = float(Fraction(int(c.numerator), int(c.denominator)))
        factors = [repr(coef)]
        for i, e in enumerate(m):
            if not e:
                continue
            if i in registry.jet_of:
                k, mu = registry.jet_of[i]
                if any(mu):
                    raise SimulationError("equilibrium depends on derivatives")
                base = f"w{k}"
            else:
                base = repr(float(bindings[registry.names[i]]))
            factors.append(base if e == 1 else f"{base}**{e}")
        terms.append("*".join(factors))
    return " + ".join(terms) if terms else "0.0"


def equilibrium_source(spec: SchemeSpec, bindings) -> str:
    """Python source of ``phi(m, out)`` writing Phi(m[:N]) into ``out``."""
    lines = ["def phi(m, out):"]
    for k in range(spec.N):
        lines.append(f"    w{k} = m[{k}]")
    for i, e in enumerate(spec.phi()):
        num, den = as_jet(e).pair()
        missing = [registry.names[g] for g in as_jet(e).generators() if registry.is_param(g) and registry.names[g] not in bindings]
        if missing:
            raise KeyError(missing[0])
        ns = _poly_source(num, None, bindings)
        ds = _poly_source(den, None, bindings)
        expr = f"({ns})" if ds == "1.0" else f"({ns}) / ({ds})"
        lines.append(f"    out[{i}] = {expr}")
    lines.append("    return out")
    return "\n".join(lines) + "\n"


def _build_phi(spec, bindings, jit):
    src = equilibrium_source(spec, bindings)
    ns = {}
    exec(compile(src, f"<equilibrium {spec.name}>", "exec"), ns)
    fn = ns["phi"]
    if jit and HAVE_NUMBA:
        fn = numba.njit(cache=False)(fn)
    return fn


def _lin(coeffs, names):
    """Source of sum_i c_i * name_i, skipping zero coefficients."""
    parts = []
    for c, n in zip(coeffs, names):
        if c == 0.0:
            continue
        if c == 1.0:
            parts.append(f"+ {n}")
        elif c == -1.0:
            parts.append(f"- {n}")
        else:
            parts.append(f"+ {c!r}*{n}")
    if not parts:
        return "0.0"
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def kernel_source(M, Minv, s, cx, cy, N, phi_src) -> str:
    """Straight-line source of one relax-and-transport sweep.

    The back transform is written incrementally, f* = f + M^-1[:, N:] dY,
    which equals M^-1 m* exactly and keeps the rounding of the conserved
    sums proportional to the nonequilibrium part only.
    """
    q = M.shape[0]
    fn = [f"f{j}" for j in range(q)]
    L = [phi_src.rstrip(), "", "def sweep(f, fout):", "    q, nx, ny = f.shape", f"    yeq = np.empty({q - N})",
         f"    m = np.empty({q})", "    for ix in range(nx):",
         "        xp = ix + 1 if ix + 1 < nx else 0", "        xm = ix - 1 if ix > 0 else nx - 1",
         "        for iy in range(ny):", "            yp = iy + 1 if iy + 1 < ny else 0",
         "            ym = iy - 1 if iy > 0 else ny - 1"]
    for j in range(q):
        L.append(f"            f{j} = f[{j}, ix, iy]")
    for i in range(q):
        L.append(f"            m[{i}] = {_lin(M[i], fn)}")
    L.append("            phi(m, yeq)")
    dn = []
    for i in range(N, q):
        L.append(f"            d{i} = {float(s[i - N])!r} * (yeq[{i - N}] - m[{i}])")
        dn.append(f"d{i}")
    ax = {0: ("ix", "iy"), 1: ("xp", "yp"), -1: ("xm", "ym")}
    for j in range(q):
        inc = _lin(Minv[j, N:], dn)
        tx, ty = ax[int(cx[j])][0], ax[int(cy[j])][1]
        L.append(f"            fout[{j}, {tx}, {ty}] = f{j} + ({inc})")
    return "\n".join(L) + "\n"


# ---------------------------------------------------------------------------
# state and stepping


@dataclass
class LatticeState:
    """Populations f[j, x, y] (1D grids use a trailing axis of length 1)."""

    f: np.ndarray
    t: int = 0

    @property
    def shape(self):
        return self.f.shape[1:]


class Simulator:
    """Relax-then-transport stepping of one scheme with numeric bindings.

    Parameters
    ----------
    spec : SchemeSpec
    shape : tuple of int
        Grid size per axis (length d).
    bindings : dict, optional
        Numeric parameter values; the scheme defaults fill the gaps.
    use_numba : bool, optional
        Use the compiled kernel when available (default True).
    """

    def __init__(self, spec: SchemeSpec, shape, bindings=None, use_numba: bool = True):
        if spec.d not in (1, 2):
            raise SimulationError("only 1D and 2D lattices are simulated")
        if len(shape) != spec.d:
            raise SimulationError(f"grid shape {shape} does not match d = {spec.d}")
        self.spec = spec
        b = dict(spec.defaults)
        b.update(bindings or {})
        self.bindings = b
        compile_scheme(spec)
        self.grid = tuple(shape) + (1,) * (2 - spec.d)
        self.M = np.array([[float(c.evaluate(b)) for c in row] for row in spec.M])
        self.Minv = np.linalg.inv(self.M)
        self.s = np.array([float(x.evaluate(b)) for x in spec.s])
        st = np.array(spec.stencil, dtype=np.int64).reshape(spec.q, spec.d)
        self.cx = st[:, 0].copy()
        self.cy = st[:, 1].copy() if spec.d == 2 else np.zeros(spec.q, dtype=np.int64)
        unit_links = bool(np.all(np.abs(st) <= 1))
        self.use_numba = use_numba and HAVE_NUMBA and unit_links
        self._phi_py = _build_phi(spec, b, False)
        self._sweep = None
        if self.use_numba:
            src = kernel_source(self.M, self.Minv, self.s, self.cx, self.cy, spec.N, equilibrium_source(spec, b))
            ns = {"np": np}
            exec(compile(src, f"<sweep {spec.name}>", "exec"), ns)
            ns["phi"] = numba.njit(ns["phi"])
            self._sweep = numba.njit(ns["sweep"])
        self.lam = float(b.get(spec.velocity, 1.0))

    # -- moments ----------------------------------------------------------
    def moments(self, f):
        return np.einsum("ij,j...->i...", self.M, f)

    def populations(self, m):
        return np.einsum("ij,j...->i...", self.Minv, m)

    def equilibrium(self, W):
        """Numeric Phi(W) on arrays W[k, ...]."""
        out = np.empty((self.spec.q - self.spec.N,) + W.shape[1:])
        self._phi_py(W, out)
        return out

    def init_equilibrium(self, W) -> LatticeState:
        """State with Y = Phi(W) for conserved fields W[k, ...] on the grid."""
        W = np.asarray(W, dtype=float).reshape((self.spec.N,) + self.grid)
        m = np.concatenate([W, self.equilibrium(W)], axis=0)
        return LatticeState(self.populations(m), 0)

    # -- stepping ---------------------------------------------------------
    def _step_numpy(self, f):
        N = self.spec.N
        m = self.moments(f)
        yeq = self.equilibrium(m[:N])
        dY = self.s[:, None, None] * (yeq - m[N:])
        fs = f + np.einsum("ij,j...->i...", self.Minv[:, N:], dY)
        out = np.empty_like(fs)
        for j in range(self.spec.q):
            out[j] = np.roll(fs[j], (int(self.cx[j]), int(self.cy[j])), axis=(0, 1))
        return out

    def step(self, state: LatticeState, nsteps: int = 1, check_every: int = 100) -> LatticeState:
        f = np.array(state.f, dtype=float, order="C")  # never alias the caller's state
        buf = np.empty_like(f)
        t = state.t
        for n in range(nsteps):
            if self.use_numba:
                self._sweep(f, buf)
                f, buf = buf, f
            else:
                f = self._step_numpy(f)
            t += 1
            if (n + 1) % check_every == 0 or n == nsteps - 1:
                if not np.isfinite(f).all():
                    raise SimulationError(f"non-finite populations at step {t}")
        return LatticeState(f, t)

    # -- diagnostics ------------------------------------------------------
    def conserved_totals(self, state: LatticeState):
        m = self.moments(state.f)
        return m[: self.spec.N].reshape(self.spec.N, -1).sum(axis=1)


# ---------------------------------------------------------------------------
# fits and benchmarks


@dataclass
class BenchmarkResult:
    """Measured vs predicted transport coefficient."""

    name: str
    measured: float
    predicted: float
    resolution: tuple
    r2: float
    steps: int
    extra: dict = dc_field(default_factory=dict)
    series: list = dc_field(default_factory=list)
    final_state: LatticeState | None = None

    @property
    def rel_error(self) -> float:
        return abs(self.measured - self.predicted) / abs(self.predicted)

    @property
    def accepted(self) -> bool:
        return self.r2 >= 0.999


def fit_decay(times, amps, A, window=(1e-2, 0.5), skip_fraction=0.05):
    """Least-squares rate of log|amp| on samples inside the amplitude window.

    The first ``skip_fraction`` of the samples is discarded as initial
    transient.  Returns (rate, r2, n_used).
    """
    times = np.asarray(times, dtype=float)
    amps = np.abs(np.asarray(amps, dtype=float))
    start = int(np.ceil(skip_fraction * len(times)))
    lo, hi = window[0] * A, window[1] * A
    sel = np.zeros(len(times), dtype=bool)
    sel[start:] = True
    sel &= (amps >= lo) & (amps <= hi)
    if sel.sum() < 3:
        raise SimulationError("decay fit failed: fewer than 3 samples inside the amplitude window")
    x, y = times[sel], np.log(amps[sel])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return -slope, float(r2), int(sel.sum())


def _sine_amplitude(field, axis_len, mode=1):
    x = np.arange(axis_len)
    w = np.sin(2 * np.pi * mode * x / axis_len)
    prof = field.reshape(axis_len, -1).mean(axis=1)
    return 2.0 * np.dot(prof, w) / axis_len


def shear_wave_benchmark(
    spec: SchemeSpec,
    resolution: int = 128,
    amplitude: float = 1e-3,
    bindings=None,
    rho0: float = 1.0,
    stop_fraction: float = 0.1,
    sample_every: int = 10,
    max_steps: int | None = None,
    use_numba: bool = True,
) -> BenchmarkResult:
    """Decay of the transverse wave v = A sin(2 pi x / L) on a periodic square.

    The domain is the unit square with ``resolution`` nodes per side, so
    dx = 1/resolution and dt = dx/lambda.  The run stops once the amplitude
    falls below ``stop_fraction * A``; the decay rate nu k^2 is fitted on the
    samples with amplitude in [1e-2, 0.5] A.  The prediction is
    nu = lambda sigma_x dx / 3.
    """
    b = dict(spec.defaults)
    b.update(bindings or {})
    n = resolution
    sim = Simulator(spec, (n, n), b, use_numba=use_numba)
    lam = sim.lam
    dx = 1.0 / n
    dt = dx / lam
    cs = lam / np.sqrt(3.0)
    mach = amplitude / cs
    if mach > 0.05 + 1e-12:
        raise SimulationError(f"amplitude {amplitude} gives Mach {mach:.3f} > 0.05")
    x = np.arange(n) * dx
    v = amplitude * np.sin(2 * np.pi * x)[:, None] * np.ones((1, n))
    W = np.stack([rho0 * np.ones((n, n)), np.zeros((n, n)), rho0 * v])
    state = sim.init_equilibrium(W)
    sigma_x = float(b["sigma_x"])
    nu_pred = lam * sigma_x * dx / 3.0
    kk = (2 * np.pi) ** 2
    # enough steps to reach the stop amplitude, with margin
    if max_steps is None:
        max_steps = int(np.ceil(np.log(1.0 / stop_fraction) / (nu_pred * kk * dt) * 1.3)) + 100
    times, amps, series = [0.0], [amplitude], []
    while state.t < max_steps:
        state = sim.step(state, sample_every)
        m = sim.moments(state.f)
        a = _sine_amplitude(m[2] / m[0], n)
        times.append(state.t * dt)
        amps.append(a)
        tot = m[:3].reshape(3, -1).sum(axis=1)
        series.append((state.t, a, tot[0], tot[1], tot[2]))
        if abs(a) < stop_fraction * amplitude:
            break
    rate, r2, used = fit_decay(times, amps, amplitude)
    nu = rate / kk
    return BenchmarkResult(
        name="shear-wave",
        measured=nu,
        predicted=nu_pred,
        resolution=(n, n),
        r2=r2,
        steps=state.t,
        extra={"mach": mach, "samples": used, "dt": dt, "dx": dx},
        series=series,
        final_state=state,
    )


def scalar_decay_benchmark(
    spec: SchemeSpec,
    resolution: int = 1024,
    mode: int = 8,
    bindings=None,
    amplitude: float = 1e-2,
    stop_fraction: float = 0.1,
    sample_every: int = 10,
    use_numba: bool = True,
):
    """Decay and phase drift of one sine mode for a linear 1D scheme.

    Returns a BenchmarkResult whose ``measured`` is the fitted diffusivity
    (decay rate / k^2) and whose ``extra`` holds the measured angular
    frequency from the per-step phase rotation of the Fourier coefficient.
    ``predicted`` comes from the symbol of alpha_2 of the linear engine.
    """
    from .expand import taylor_expand_linear
    from .fourier import SymbolEvaluation, series_symbol

    b = dict(spec.defaults)
    b.update(bindings or {})
    n = resolution
    sim = Simulator(spec, (n,), b, use_numba=use_numba)
    lam = sim.lam
    dx = 1.0 / n
    dt = dx / lam
    k = 2 * np.pi * mode
    x = np.arange(n) * dx
    W = (1.0 + amplitude * np.sin(k * x))[None, :]
    state = sim.init_equilibrium(W)

    lin = taylor_expand_linear(spec, 4)
    ev = SymbolEvaluation((k,), b, dt)
    sym = {m: complex(series_symbol(lin.gammas, ev, m)[0, 0]) for m in (1, 2, 3, 4)}
    # dt * symbol(alpha_2) = kappa k^2 for a diffusive second-order term
    kappa_pred = (sym[2] - sym[1]).real / k**2

    def coeff(f):
        rho = sim.moments(f)[0].reshape(n)
        return np.dot(rho - rho.mean(), np.exp(-1j * k * x)) * 2 / n

    c0 = coeff(state.f)
    times, amps, coeffs = [0.0], [abs(c0)], [c0]
    rate_guess = max(kappa_pred * k**2, 1e-12)
    max_steps = int(np.ceil(np.log(1.0 / stop_fraction) / (rate_guess * dt) * 1.3)) + 100
    while state.t < max_steps:
        state = sim.step(state, sample_every)
        c = coeff(state.f)
        times.append(state.t * dt)
        amps.append(abs(c))
        coeffs.append(c)
        if abs(c) < stop_fraction * amplitude:
            break
    rate, r2, used = fit_decay(times, amps, amplitude)
    # angular frequency from the unwrapped phase after the transient
    ph = np.unwrap(np.angle(np.array(coeffs)))
    start = max(1, int(0.05 * len(ph)))
    omega = -np.polyfit(np.array(times[start:]), ph[start:], 1)[0]
    return BenchmarkResult(
        name="scalar-decay",
        measured=rate / k**2,
        predicted=kappa_pred,
        resolution=(n,),
        r2=r2,
        steps=state.t,
        extra={
            "omega": float(omega),
            "k": k,
            "dt": dt,
            "kdx": k * dx,
            # predicted angular frequency = Im(symbol) for each truncation
            "omega_pred": {m: float(sym[m].imag) for m in sym},
        },
        final_state=state,
    )


def conservation_run(spec: SchemeSpec, shape=(32, 32), steps: int = 10_000, bindings=None, seed: int = 0,
                     noise: float = 1e-2, use_numba: bool = True):
    """Relative drift of the conserved totals from a random initial state.

    Returns (drift, initial totals, final totals, final state).  Each drift is
    |total(T) - total(0)| divided by the sum of |f| over the grid times
    the largest absolute entry of the corresponding row of M.
    """
    rng = np.random.default_rng(seed)
    sim = Simulator(spec, shape, bindings, use_numba=use_numba)
    grid = sim.grid
    N = spec.N
    W = np.zeros((N,) + grid)
    W[0] = 1.0 + 0.1 * rng.uniform(-1, 1, grid)
    for k in range(1, N):
        W[k] = 0.05 * sim.lam * rng.uniform(-1, 1, grid)
    state = sim.init_equilibrium(W)
    state.f = state.f + noise * rng.uniform(-1, 1, state.f.shape) * np.abs(state.f).mean()
    before = sim.conserved_totals(state)
    scale = np.abs(state.f).sum() * np.abs(sim.M[:N]).max(axis=1)
    state = sim.step(state, steps)
    after = sim.conserved_totals(state)
    return np.abs(after - before) / scale, before, after, state


# ---------------------------------------------------------------------------
# output formats


SNAPSHOT_MAGIC = b"LBMSNAP1"


def write_snapshot(path, state: LatticeState, spec: SchemeSpec | None = None):
    """Flat binary snapshot.

    Layout (little endian): 8-byte magic ``LBMSNAP1``; uint32 ndim; ndim x
    uint32 grid sizes; uint32 q; uint64 time step; 8-byte ASCII dtype tag
    (``<f8`` padded with spaces); then the populations as a row-major
    float64 array of shape (q, *grid).
    """
    f = np.ascontiguousarray(state.f, dtype="<f8")
    q = f.shape[0]
    grid = f.shape[1:]
    if spec is not None and spec.d == 1 and len(grid) == 2 and grid[1] == 1:
        grid = grid[:1]
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", len(grid)))
        fh.write(struct.pack(f"<{len(grid)}I", *grid))
        fh.write(struct.pack("<IQ", q, state.t))
        fh.write(b"<f8".ljust(8))
        fh.write(f.tobytes(order="C"))


def read_snapshot(path) -> LatticeState:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != SNAPSHOT_MAGIC:
        raise SimulationError("not a snapshot file (bad magic)")
    off = 8
    (ndim,) = struct.unpack_from("<I", data, off)
    off += 4
    grid = struct.unpack_from(f"<{ndim}I", data, off)
    off += 4 * ndim
    q, t = struct.unpack_from("<IQ", data, off)
    off += 12
    tag = data[off : off + 8].decode("ascii").strip()
    off += 8
    dt = np.dtype(tag)
    want = q * int(np.prod(grid)) * dt.itemsize
    if len(data) - off != want:
        raise SimulationError(f"snapshot body has {len(data) - off} bytes, header implies {want}")
    f = np.frombuffer(data, dtype=np.dtype(tag), offset=off).reshape((q,) + tuple(grid))
    if ndim == 1:
        f = f.reshape((q, grid[0], 1))
    return LatticeState(f.astype(float), int(t))


def timeseries_csv(rows, header=("step", "amplitude", "mass", "momentum_x", "momentum_y"), delimiter=","):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in r])
    return buf.getvalue()
