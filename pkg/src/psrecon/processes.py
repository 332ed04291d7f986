"""Seeded point-process samplers: GAF zeros (disk) and invariant Poisson.

Determinism contract: every replication is a pure function of (spec, rep).
The master seed expands through a counter-based Philox key (seed, rep), so
ensembles are order- and batch-independent and safe to generate in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import geometry as geo
from ._quad import leggauss
from .errors import DomainError, NumericalError, UsageError
from .geometry import Model

GAF_PROCESS = "gaf-zeros"
POISSON_PROCESS = "poisson"

STEP_TOL = 1e-13
MAX_SWEEPS = 500
RESIDUAL_TOL = 1e-10
CDF_KNOTS = 4096
BISECT_TOL = 1e-12
GAF_BATCH = 32


def rng_split(seed: int, rep: int) -> np.random.Generator:
    """Counter-based per-replication generator; order-independent ensembles."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, rep & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SamplerSpec:
    process: str
    model: Model
    lam: float | None = None
    R: float | None = None
    N: int = 256
    r_edge: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.process == GAF_PROCESS:
            if self.model.kind != geo.DISK:
                raise UsageError("gaf-zeros is defined on the disk only")
            if self.N < 8:
                raise UsageError("gaf degree must be at least 8")
            if not 0.0 < self.r_edge <= 0.95:
                raise UsageError("r_edge must lie in (0, 0.95]")
        elif self.process == POISSON_PROCESS:
            if self.lam is None or self.lam <= 0:
                raise UsageError("poisson intensity must be positive")
            if self.R is None or self.R <= 0:
                raise UsageError("poisson truncation radius must be positive")
        else:
            raise UsageError(f"unknown process {self.process!r}")


@dataclass(frozen=True)
class Configuration:
    model: Model
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------- root finder

def _log_deriv(monic: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p'(z)/p(z) for monic coefficient rows, two-regime for |z| <> 1."""
    B, n1 = monic.shape
    deg = n1 - 1
    with np.errstate(all="ignore"):
        # Horner descending (stable for |z| <= 1)
        p = np.broadcast_to(monic[:, -1:], z.shape).astype(complex).copy()
        dp = np.zeros_like(z)
        for k in range(deg - 1, -1, -1):
            dp = dp * z + p
            p = p * z + monic[:, k, None]
        d_in = dp / p
        # reversed evaluation at w = 1/z (stable for |z| > 1)
        w = 1.0 / z
        rev = monic[:, ::-1]
        q = np.broadcast_to(rev[:, -1:], z.shape).astype(complex).copy()
        dq = np.zeros_like(z)
        for k in range(deg - 1, -1, -1):
            dq = dq * w + q
            q = q * w + rev[:, k, None]
        d_out = deg * w - w * w * dq / q
    return np.where(np.abs(z) <= 1.0, d_in, d_out)


def _initial_guesses(monic: np.ndarray) -> np.ndarray:
    """Per-annulus starting points from the Newton polygon of the coefficients.

    The lower convex hull of (k, -log|a_k|) partitions the indices into
    groups; each segment of slope s contributes (index span) starting points
    on the circle of radius e^s.  Radii are capped by the Cauchy bound; a
    plain Cauchy-bound circle needs hundreds of inward sweeps when the
    leading coefficient is small, while polygon radii keep sweeps bounded.
    """
    B, n1 = monic.shape
    deg = n1 - 1
    cauchy = 1.0 + np.max(np.abs(monic[:, :-1]), axis=1)
    logs = np.log(np.maximum(np.abs(monic), 1e-300))
    z = np.empty((B, deg), dtype=complex)
    ks = np.arange(n1)
    for b in range(B):
        y = -logs[b]
        hull = [0]
        for k in range(1, n1):
            while len(hull) >= 2:
                k1, k2 = hull[-2], hull[-1]
                # drop k2 if it lies above the chord k1 -> k
                if (y[k2] - y[k1]) * (k - k1) >= (y[k] - y[k1]) * (k2 - k1):
                    hull.pop()
                else:
                    break
            hull.append(k)
        pos = 0
        for k1, k2 in zip(hull[:-1], hull[1:]):
            m = k2 - k1
            r = min(math.exp((y[k2] - y[k1]) / m), cauchy[b])
            ang = 2.0 * np.pi * (np.arange(m) + 0.5) / m + 0.4 + k1
            z[b, pos:pos + m] = r * np.exp(1j * ang)
            pos += m
    return z


def _aberth_batch(coeffs: np.ndarray) -> np.ndarray:
    """All roots of each equal-degree polynomial row (ascending coefficients).

    Simultaneous (Aberth-Ehrlich) iteration; rows freeze independently when
    their largest step drops below STEP_TOL.  Results depend only on the row,
    never on batch composition.
    """
    c = np.asarray(coeffs, dtype=complex)
    B, n1 = c.shape
    deg = n1 - 1
    monic = c / c[:, -1:]
    z = _initial_guesses(monic)

    eye = np.eye(deg)
    active = np.ones(B, dtype=bool)
    for _ in range(MAX_SWEEPS):
        za = z[active]
        d = _log_deriv(monic[active], za)
        diff = za[:, :, None] - za[:, None, :]
        diff += eye  # unit diagonal; its reciprocal contributes exactly 1
        with np.errstate(all="ignore"):
            np.divide(1.0, diff, out=diff)
            s = diff.sum(axis=2)
            s -= 1.0
            step = 1.0 / (d - s)
        step = np.where(np.isfinite(step), step, 0.0)
        z[active] = za - step
        done = np.max(np.abs(step), axis=1) < STEP_TOL
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    else:
        resid = np.abs(_eval_rows(monic[active], z[active])).max()
        raise NumericalError(
            f"root iteration did not converge in {MAX_SWEEPS} sweeps; "
            f"worst monic residual {resid:.3e}")
    # one Newton polish per root
    d = _log_deriv(monic, z)
    with np.errstate(all="ignore"):
        polish = np.where(np.abs(d) > 0, 1.0 / d, 0.0)
    z -= np.where(np.isfinite(polish), polish, 0.0)
    return z


def _eval_rows(monic: np.ndarray, z: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        p = np.broadcast_to(monic[:, -1:], z.shape).astype(complex).copy()
        for k in range(monic.shape[1] - 2, -1, -1):
            p = p * z + monic[:, k, None]
    return p


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of a single polynomial given ascending coefficients."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    scale = np.max(np.abs(c))
    if scale == 0.0:
        raise UsageError("zero polynomial has no well-defined roots")
    deg = len(c) - 1
    # degenerate leading coefficients: reduce the degree
    while deg > 0 and abs(c[deg]) <= 1e-250 * scale:
        deg -= 1
    if deg == 0:
        return np.empty(0, dtype=complex)
    return _aberth_batch(c[None, :deg + 1])[0]


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.full_like(z, c[-1], dtype=complex)
    for k in range(len(c) - 2, -1, -1):
        out = out * z + c[k]
    return out


def gaf_coefficients(N: int, seed: int, rep: int = 0) -> np.ndarray:
    """N+1 i.i.d. standard complex Gaussian coefficients."""
    rng = rng_split(seed, rep)
    g = rng.standard_normal((N + 1, 2))
    return (g[:, 0] + 1j * g[:, 1]) / math.sqrt(2.0)


def _retain_gaf_roots(coeffs: np.ndarray, roots: np.ndarray, r_edge: float) -> np.ndarray:
    keep = roots[np.abs(roots) <= r_edge]
    scale = np.max(np.abs(coeffs))
    resid = np.abs(_horner(coeffs, keep))
    if np.any(resid > RESIDUAL_TOL * scale):
        raise NumericalError(
            f"retained root residual {resid.max():.3e} exceeds "
            f"{RESIDUAL_TOL:.1e} * coefficient scale {scale:.3e}")
    order = np.lexsort((keep.imag, keep.real))
    return keep[order]


def sample_gaf_zeros(N: int, r_edge: float, seed: int, rep: int = 0) -> Configuration:
    """Zeros of the degree-N Gaussian power series inside |z| <= r_edge."""
    spec = SamplerSpec(GAF_PROCESS, geo.poincare_disk(), N=N, r_edge=r_edge, seed=seed)
    coeffs = gaf_coefficients(N, seed, rep)
    roots = _aberth_batch(coeffs[None])[0]
    pts = _retain_gaf_roots(coeffs, roots, r_edge)
    meta = {"process": GAF_PROCESS, "model": str(spec.model), "N": N,
            "r_edge": r_edge, "seed": seed, "rep": rep,
            "R": 2.0 * math.atanh(r_edge)}
    return Configuration(spec.model, pts, meta)


def _gaf_batch(spec: SamplerSpec, reps: list[int]) -> list[Configuration]:
    coeffs = np.stack([gaf_coefficients(spec.N, spec.seed, r) for r in reps])
    roots = _aberth_batch(coeffs)
    out = []
    for i, rep in enumerate(reps):
        pts = _retain_gaf_roots(coeffs[i], roots[i], spec.r_edge)
        meta = {"process": GAF_PROCESS, "model": str(spec.model), "N": spec.N,
                "r_edge": spec.r_edge, "seed": spec.seed, "rep": rep,
                "R": 2.0 * math.atanh(spec.r_edge)}
        out.append(Configuration(spec.model, pts, meta))
    return out


# ---------------------------------------------------------------- poisson

_CDF_CACHE: dict = {}


def _radial_cdf(model: Model, R: float):
    """(knot radii, CDF values, monotone spline) for the ball-volume law."""
    key = (model.kind, model.dim, float(R))
    hit = _CDF_CACHE.get(key)
    if hit is not None:
        return hit
    rho = np.linspace(0.0, R, CDF_KNOTS)
    x16, w16 = leggauss(16)
    h = np.diff(rho)[:, None]
    mids = rho[:-1, None] + 0.5 * h * (x16[None, :] + 1.0)
    rates = np.exp(geo.log_ball_volume_rate(model, mids))
    seg = (0.5 * h * w16 * rates).sum(axis=1)
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    cdf /= cdf[-1]
    spline = PchipInterpolator(rho, cdf)
    _CDF_CACHE[key] = (rho, cdf, spline)
    return _CDF_CACHE[key]


def _invert_radii(model: Model, R: float, u: np.ndarray) -> np.ndarray:
    """Radii with P(radius <= r) = CDF(r), by bracketed bisection to 1e-12."""
    rho, cdf, spline = _radial_cdf(model, R)
    idx = np.clip(np.searchsorted(cdf, u), 1, len(rho) - 1)
    lo, hi = rho[idx - 1], rho[idx]
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = spline(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo, initial=0.0) <= BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def sample_poisson(model: Model, lam: float, R: float, seed: int,
                   rep: int = 0) -> Configuration:
    """Poisson sample of intensity lam * invariant volume, truncated at radius R."""
    spec = SamplerSpec(POISSON_PROCESS, model, lam=lam, R=R, seed=seed)
    if math.tanh(R / 2.0) >= 1.0 - geo.EDGE_TOL:
        raise DomainError("truncation radius reaches the numerical boundary")
    rng = rng_split(seed, rep)
    mean = lam * geo.ball_volume(model, R)
    count = int(rng.poisson(mean))
    u = rng.random(count)
    radii = _invert_radii(model, R, u)
    if model.kind == geo.DISK:
        theta = 2.0 * np.pi * rng.random(count)
        direction = np.exp(1j * theta)
    else:
        v = rng.standard_normal((count, model.real_dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        direction = geo._pack(model, v)
    t = np.tanh(radii / 2.0)
    pts = (t if model.kind == geo.DISK else t[:, None]) * direction
    meta = {"process": POISSON_PROCESS, "model": str(model), "lambda": lam,
            "R": R, "seed": seed, "rep": rep}
    return Configuration(model, pts, meta)


def first_intensity(model: Model, spec: SamplerSpec, x):
    """Density of the expected counting measure against Lebesgue measure."""
    if spec.process == POISSON_PROCESS:
        return spec.lam * geo.volume_density(model, x)
    n2 = geo.norm_sq(model, geo.check_point(model, x))
    return 1.0 / (np.pi * (1.0 - n2) ** 2)


def sample(spec: SamplerSpec, rep: int = 0) -> Configuration:
    if spec.process == GAF_PROCESS:
        return sample_gaf_zeros(spec.N, spec.r_edge, spec.seed, rep)
    return sample_poisson(spec.model, spec.lam, spec.R, spec.seed, rep)


def ensemble(spec: SamplerSpec, n_reps: int, threads: int | None = None) -> list[Configuration]:
    """Replications 0..n_reps-1; output indexed by rep, independent of threads."""
    reps = list(range(n_reps))
    if spec.process == GAF_PROCESS:
        chunks = [reps[i:i + GAF_BATCH] for i in range(0, n_reps, GAF_BATCH)]
        if threads and threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda ch: _gaf_batch(spec, ch), chunks))
        else:
            parts = [_gaf_batch(spec, ch) for ch in chunks]
        return [conf for part in parts for conf in part]
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        # warm the CDF cache once to avoid redundant concurrent builds
        _radial_cdf(spec.model, spec.R)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda r: sample(spec, r), reps))
    return [sample(spec, r) for r in reps]


# ---------------------------------------------------------------- CSV

def save_configuration(conf: Configuration, fh) -> None:
    """Header comments (# key=value) then one coordinate row per point."""
    close = False
    if isinstance(fh, str):
        fh, close = open(fh, "w"), True
    try:
        model = conf.model
        meta = dict(conf.meta)
        for k in ("model", "process", "seed", "R"):
            fh.write(f"# {k}={_fmt_meta(meta.pop(k, ''))}\n")
        for k in sorted(meta):
            fh.write(f"# {k}={_fmt_meta(meta[k])}\n")
        if model.kind == geo.REAL_BALL:
            cols = [f"x{i+1}" for i in range(model.dim)]
            rows = np.asarray(conf.points, dtype=float).reshape(-1, model.dim)
        else:
            pts = np.asarray(conf.points, dtype=complex)
            pts = pts[:, None] if model.kind == geo.DISK else pts
            cols = []
            for i in range(pts.shape[1] if pts.ndim > 1 else 1):
                suffix = "" if model.kind == geo.DISK else str(i + 1)
                cols += [f"re{suffix}", f"im{suffix}"]
            rows = np.empty((pts.shape[0], 2 * pts.shape[1]))
            rows[:, 0::2], rows[:, 1::2] = pts.real, pts.imag
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if close:
            fh.close()


def _fmt_meta(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def load_configuration(path_or_fh) -> Configuration:
    close = False
    fh = path_or_fh
    if isinstance(path_or_fh, str):
        fh, close = open(path_or_fh), True
    try:
        meta = {}
        header = None
        data = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            elif header is None:
                header = line.split(",")
            else:
                data.append([float(t) for t in line.split(",")])
        if "model" not in meta or header is None:
            raise UsageError("configuration CSV lacks a model header or columns")
        model = geo.parse_model(meta["model"])
        arr = np.asarray(data, dtype=float).reshape(len(data), len(header))
        if model.kind == geo.REAL_BALL:
            pts = arr
        else:
            cplx = arr[:, 0::2] + 1j * arr[:, 1::2]
            pts = cplx[:, 0] if model.kind == geo.DISK else cplx
        for k in ("seed", "rep", "N"):
            if k in meta:
                meta[k] = int(meta[k])
        for k in ("R", "lambda", "r_edge"):
            if k in meta:
                meta[k] = float(meta[k])
        return Configuration(model, pts, meta)
    finally:
        if close:
            fh.close()


def regenerate(conf: Configuration) -> Configuration:
    """Re-run the sampler from the stored meta; must be bit-identical."""
    meta = conf.meta
    if meta.get("process") == GAF_PROCESS:
        return sample_gaf_zeros(int(meta["N"]), float(meta["r_edge"]),
                                int(meta["seed"]), int(meta.get("rep", 0)))
    if meta.get("process") == POISSON_PROCESS:
        return sample_poisson(conf.model, float(meta["lambda"]), float(meta["R"]),
                              int(meta["seed"]), int(meta.get("rep", 0)))
    raise UsageError("configuration metadata does not name a sampler")


__all__ = [
    "SamplerSpec", "Configuration", "rng_split", "polynomial_roots",
    "sample_gaf_zeros", "sample_poisson", "sample", "ensemble",
    "first_intensity", "save_configuration", "load_configuration", "regenerate",
]
