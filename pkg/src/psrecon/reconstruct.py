"""Reconstruction statistics: exponential-weight sums, ratio estimators,
shell (principal-value) summation, compact radial weights, and s-schedules.

Conventions: z is the base point, s the exponent; every statistic is a plain
sum over the finite stored configuration.  sigma_bar is the exact Poisson
expectation of sigma and normalizes the two-step ratio estimator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import boundary as bd
from . import geometry as geo
from ._quad import adaptive_gl
from .errors import DomainError, UsageError
from .geometry import Model
from .processes import Configuration

DEFAULT_S_GRID = (2.0, 1.7, 1.5, 1.35, 1.25, 1.2)
TAIL_THRESHOLD = 0.02

SCHEDULE_KINDS = ("inverse-square", "square-summable-custom",
                  "summable-custom", "log-slow")


# ---------------------------------------------------------------- schedules

@dataclass(frozen=True)
class Schedule:
    kind: str
    h: float
    values: np.ndarray


def make_schedule(kind: str, h: float, n: int = 32) -> Schedule:
    k = np.arange(1, n + 1, dtype=float)
    if kind == "inverse-square":
        vals = h + k ** -2.0
    elif kind == "square-summable-custom":
        # gaps n^{-3/4}: squares n^{-3/2} summable, gaps themselves are not
        vals = h + k ** -0.75
    elif kind == "summable-custom":
        vals = h + k ** -1.5
    elif kind == "log-slow":
        if abs(h - 1.0) > 1e-12:
            raise UsageError("log-slow schedule is stated for entropy 1")
        # 1/|log(s_n - 1)| = n^{-3/2}, summable; keeps 1 < s_n < 2
        vals = 1.0 + np.exp(-k ** 1.5)
    else:
        raise UsageError(f"unknown schedule kind {kind!r}")
    return Schedule(kind, h, vals)


def _fitted_power(terms: np.ndarray) -> float:
    """Least-squares exponent alpha in terms ~ C n^alpha over the prefix."""
    n = np.arange(1, len(terms) + 1, dtype=float)
    good = terms > 0
    if good.sum() < 4:
        raise UsageError("prefix too short to fit a power law")
    x, y = np.log(n[good]), np.log(terms[good])
    return float(np.polyfit(x, y, 1)[0])


def check_schedule(s: Schedule) -> dict:
    """Numeric summability diagnostics of the stored prefix; raises on violation."""
    v = s.values
    if not np.all(np.diff(v) < 0):
        raise UsageError("schedule values must decrease strictly")
    if not np.all(v > s.h):
        raise UsageError("schedule values must stay above the entropy")
    report = {"kind": s.kind, "n": len(v)}
    if s.kind == "inverse-square":
        k = np.arange(1, len(v) + 1, dtype=float)
        if not np.allclose(v, s.h + k ** -2.0, rtol=0, atol=1e-15):
            raise UsageError("inverse-square schedule prefix mismatch")
        report["alpha"] = -2.0
        return report
    if s.kind == "square-summable-custom":
        alpha = _fitted_power((v - s.h) ** 2)
    elif s.kind == "summable-custom":
        alpha = _fitted_power(v - s.h)
    elif s.kind == "log-slow":
        if not np.all((v > 1.0) & (v < 2.0)):
            raise UsageError("log-slow schedule must keep 1 < s < 2")
        alpha = _fitted_power(1.0 / np.abs(np.log(v - 1.0)))
    else:  # pragma: no cover
        raise UsageError(f"unknown schedule kind {s.kind!r}")
    report["alpha"] = alpha
    if alpha > -1.05:
        raise UsageError(
            f"{s.kind} prefix fits exponent {alpha:.3f} > -1.05; not summable")
    return report


# ---------------------------------------------------------------- targets

@dataclass(frozen=True)
class TargetFunction:
    """Function to reconstruct: constant, harmonic extension, or kernel pole."""
    kind: str
    value: complex = 1.0
    g: bd.BoundaryFunction | None = None
    rule: bd.QuadratureRule | None = None
    xi0: object = None

    def evaluate(self, model: Model, pts):
        if self.kind == "constant":
            return np.full(np.shape(pts)[0] if np.ndim(pts) else (), self.value,
                           dtype=complex)
        if self.kind == "boundary-data":
            return np.asarray(bd.poisson_extend(self.g, pts, self.rule), dtype=complex)
        if self.kind == "kernel-pole":
            return np.asarray(geo.poisson_kernel(model, pts, self.xi0), dtype=complex)
        raise UsageError(f"unknown target kind {self.kind!r}")

    def reference(self, model: Model, z) -> complex:
        if self.kind == "constant":
            return complex(self.value)
        if self.kind == "boundary-data":
            return complex(bd.poisson_extend(self.g, z, self.rule))
        if self.kind == "kernel-pole":
            return complex(geo.poisson_kernel(model, np.asarray(z), np.asarray(self.xi0)))
        raise UsageError(f"unknown target kind {self.kind!r}")


def constant_target(value: complex = 1.0) -> TargetFunction:
    return TargetFunction("constant", value=value)


def boundary_target(g: bd.BoundaryFunction,
                    rule: bd.QuadratureRule | None = None) -> TargetFunction:
    return TargetFunction("boundary-data", g=g, rule=rule)


def kernel_pole_target(xi0) -> TargetFunction:
    return TargetFunction("kernel-pole", xi0=xi0)


# ---------------------------------------------------------------- sums

def _distances(conf: Configuration, z) -> np.ndarray:
    if len(conf) == 0:
        return np.zeros(0)
    zz = np.asarray(z, dtype=complex if conf.model.is_complex else float)
    return geo.dist(conf.model, conf.points, zz if conf.model.kind != geo.DISK
                    else np.full(len(conf), complex(zz)))


def sigma(conf: Configuration, z, s: float) -> float:
    """Sum of e^{-s d(z, x)} over the configuration."""
    if s <= 0:
        raise UsageError("exponent must be positive")
    return float(np.sum(np.exp(-s * _distances(conf, z))))


def sigma_bar(model: Model, lam: float, z, s: float) -> float:
    """Expectation of sigma under the invariant Poisson law (z-independent).

    Disk: closed form lam*pi/(2(s^2-1)); other models: radial quadrature of
    e^{-s rho} V'(rho) after the substitution u = 1 - e^{-(s-h) rho}, which
    makes the integrand bounded and smooth on [0, 1).
    """
    h = model.entropy
    if s <= h:
        raise UsageError(f"exponential sum diverges for s <= entropy {h}")
    if lam <= 0:
        raise UsageError("intensity must be positive")
    if model.kind == geo.DISK:
        return lam * math.pi / (2.0 * (s * s - 1.0))
    return lam * _radial_exp_integral(model, s, 0.0)


def _radial_exp_integral(model: Model, s: float, R: float) -> float:
    """integral_R^inf e^{-s rho} V'(rho) drho via u = 1 - e^{-(s-h) rho}."""
    h = model.entropy
    gap = s - h

    def f(u):
        rho = -np.log1p(-u) / gap
        val = np.exp(-s * rho + geo.log_ball_volume_rate(model, rho))
        return val / (gap * (1.0 - u))

    u_lo = -math.expm1(-gap * R)  # 1 - e^{-gap R}
    val, _ = adaptive_gl(f, u_lo, 1.0, tol=1e-12, rtol=1e-12)
    return val


def tail_fraction(model: Model, z, s: float, R: float) -> float:
    """Mass fraction of the exponential weight beyond distance R (in [0, 1])."""
    h = model.entropy
    if s <= h:
        raise UsageError(f"exponential sum diverges for s <= entropy {h}")
    if R < 0:
        raise UsageError("radius must be nonnegative")
    if R == 0.0:
        return 1.0
    return _radial_exp_integral(model, s, R) / _radial_exp_integral(model, s, 0.0)


def shell_sums(conf: Configuration, z, s: float, f: TargetFunction) -> np.ndarray:
    """T_k = sum over k <= d(z,x) < k+1 of e^{-s d} f(x); length ceil(R)."""
    if s <= 0:
        raise UsageError("exponent must be positive")
    R = float(conf.meta.get("R", 0.0))
    d = _distances(conf, z)
    n_shell = max(int(math.ceil(R)), int(d.max()) + 1 if len(d) else 0, 1)
    out = np.zeros(n_shell, dtype=complex)
    if len(d) == 0:
        return out
    w = np.exp(-s * d) * f.evaluate(conf.model, conf.points)
    np.add.at(out, np.minimum(d.astype(int), n_shell - 1), w)
    return out


@dataclass(frozen=True)
class RatioResult:
    numerator: complex
    sigma: float
    ratio: complex
    ratio_bar: complex | None  # numerator / sigma_bar, when lambda is known


def ratio_reconstruct(conf: Configuration, z, s: float, f: TargetFunction,
                      lam: float | None = None) -> RatioResult:
    """R(z,s;X) = (sum e^{-s d} f(x)) / sigma, plus the sigma_bar-normalized form."""
    d = _distances(conf, z)
    w = np.exp(-s * d)
    sig = float(np.sum(w))
    if sig == 0.0:
        raise DomainError("degenerate configuration: sigma vanishes")
    num = complex(np.sum(w * f.evaluate(conf.model, conf.points)))
    lam = lam if lam is not None else conf.meta.get("lambda")
    rbar = num / sigma_bar(conf.model, float(lam), z, s) if lam is not None else None
    return RatioResult(num, sig, num / sig, rbar)


def kernel_statistic(conf: Configuration, z, s: float, n_max: int = 64,
                     rule: bd.QuadratureRule | None = None) -> bd.BoundaryFunction:
    """Boundary-space statistic sum_x e^{-s d(z,x)} P(x, .), truncated."""
    model = conf.model
    if s <= model.entropy:
        raise UsageError("kernel statistic needs s above the entropy")
    d = _distances(conf, z)
    w = np.exp(-s * d)
    if model.kind == geo.DISK:
        coeffs = np.zeros(2 * n_max + 1, dtype=complex)
        if len(conf):
            x = conf.points
            n = np.arange(1, n_max + 1)
            pos = (np.conjugate(x)[:, None] ** n * w[:, None]).sum(axis=0)
            coeffs[n_max] = w.sum()
            coeffs[n_max + 1:] = pos
            coeffs[:n_max] = np.conjugate(pos)[::-1]
        return bd.fourier_boundary(coeffs)
    if rule is None:
        rule = bd.quadrature_rule(model)
    vals = np.zeros(len(rule.nodes), dtype=complex)
    if len(conf):
        ker = geo.poisson_kernel(model, conf.points[:, None, :], rule.nodes)
        vals = (w[:, None] * ker).sum(axis=0)
    return bd.node_boundary(rule, vals)


def radial_weight_ratio(conf: Configuration, z, s: float, f: TargetFunction) -> complex:
    """Compactly supported estimator with weight (1-|x|^2)^s on |x|^2 <= 2-s."""
    if conf.model.kind != geo.DISK:
        raise UsageError("the compact radial weight is a disk construction")
    if not 1.0 < s < 2.0:
        raise UsageError("weight exponent must lie in (1, 2)")
    w = radial_weight_values(conf, z, s)
    den = float(np.sum(w))
    if den == 0.0:
        raise DomainError("degenerate configuration: no points in the weight support")
    num = complex(np.sum(w * f.evaluate(conf.model, conf.points)))
    return num / den


def radial_weight_values(conf: Configuration, z, s: float) -> np.ndarray:
    """W_s(phi_z(x)) for every configuration point (0 outside the support)."""
    if len(conf) == 0:
        return np.zeros(0)
    img = geo.involution(conf.model, np.asarray(z, dtype=complex),
                         conf.points)
    r2 = geo.norm_sq(conf.model, img)
    return np.where(r2 <= 2.0 - s, (1.0 - r2) ** s, 0.0)


# ---------------------------------------------------------------- traces

@dataclass(frozen=True)
class TraceRow:
    s: float
    sigma: float
    numerator: complex
    ratio: complex
    ratio_bar: complex | None
    reference: complex
    abs_err: float
    tail_fraction: float

    @property
    def tail_flagged(self) -> bool:
        return self.tail_fraction > TAIL_THRESHOLD


def trace(conf: Configuration, z, s_grid, f: TargetFunction,
          lam: float | None = None) -> list[TraceRow]:
    """Per-s reconstruction rows, ordered by decreasing s; distances reused."""
    model = conf.model
    s_grid = sorted((float(s) for s in s_grid), reverse=True)
    d = _distances(conf, z)
    fv = f.evaluate(model, conf.points) if len(conf) else np.zeros(0, complex)
    ref = f.reference(model, z)
    lam = lam if lam is not None else conf.meta.get("lambda")
    R = float(conf.meta.get("R", 0.0))
    rows = []
    for s in s_grid:
        w = np.exp(-s * d)
        sig = float(np.sum(w))
        num = complex(np.sum(w * fv))
        ratio = num / sig if sig > 0 else complex("nan")
        rbar = (num / sigma_bar(model, float(lam), z, s)) if lam is not None else None
        tf = tail_fraction(model, z, s, R) if R > 0 else 1.0
        rows.append(TraceRow(s, sig, num, ratio, rbar, ref,
                             abs(ratio - ref), tf))
    return rows


def save_trace(rows: list[TraceRow], fh) -> None:
    close = False
    if isinstance(fh, str):
        fh, close = open(fh, "w"), True
    try:
        fh.write("s,sigma,num_re,num_im,ratio_re,ratio_im,"
                 "ref_re,ref_im,abs_err,tail_fraction\n")
        for r in rows:
            vals = (r.s, r.sigma, r.numerator.real, r.numerator.imag,
                    r.ratio.real, r.ratio.imag, r.reference.real,
                    r.reference.imag, r.abs_err, r.tail_fraction)
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
    finally:
        if close:
            fh.close()
