"""Boundary quadrature rules, boundary functions, Poisson extension, kernel norms.

Disk boundary functions live in a truncated Fourier representation
(coefficients c_n, |n| <= n_max, default 64); sphere boundary functions are
node-value vectors bound to an equal-weight Monte Carlo quadrature rule with
a fixed seed.  All pairings are against the normalized surface measure.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import UsageError
from .geometry import Model

N_MAX_DEFAULT = 64
SPHERE_NODES_DEFAULT = 4096
SPHERE_SEED_DEFAULT = 163
MVP_PRODUCT_DEFAULT = ("product", 64, 128)
MVP_MC_DEFAULT = ("mc", 65536, 163)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and normalized weights on the boundary sphere of a model."""
    model: Model
    nodes: np.ndarray
    weights: np.ndarray


def circle_rule(n: int = 256) -> QuadratureRule:
    theta = 2.0 * np.pi * np.arange(n) / n
    return QuadratureRule(geo.poincare_disk(), np.exp(1j * theta), np.full(n, 1.0 / n))


def sphere_rule(model: Model, n: int = SPHERE_NODES_DEFAULT,
                seed: int = SPHERE_SEED_DEFAULT) -> QuadratureRule:
    if model.kind == geo.DISK:
        raise UsageError("use circle_rule for the disk")
    rng = np.random.default_rng(seed)
    nodes = geo.random_boundary(model, n, rng)
    return QuadratureRule(model, nodes, np.full(n, 1.0 / n))


def quadrature_rule(model: Model, n: int | None = None,
                    seed: int = SPHERE_SEED_DEFAULT) -> QuadratureRule:
    if model.kind == geo.DISK:
        return circle_rule(256 if n is None else n)
    return sphere_rule(model, SPHERE_NODES_DEFAULT if n is None else n, seed)


# ---------------------------------------------------------------- functions

@dataclass(frozen=True)
class BoundaryFunction:
    """Either a disk Fourier vector (coeffs, index n -> coeffs[n_max + n]) or
    node values bound to a quadrature rule."""
    model: Model
    coeffs: np.ndarray | None = None
    values: np.ndarray | None = None

    @property
    def n_max(self) -> int:
        if self.coeffs is None:
            raise UsageError("node-form function has no Fourier order")
        return (len(self.coeffs) - 1) // 2

    @property
    def is_fourier(self) -> bool:
        return self.coeffs is not None

    def coeff(self, n: int) -> complex:
        k = self.n_max
        return complex(self.coeffs[k + n]) if abs(n) <= k else 0.0


def fourier_boundary(coeffs) -> BoundaryFunction:
    """Disk boundary function from {n: c_n} dict or odd-length array c_{-K}..c_K."""
    if isinstance(coeffs, dict):
        k = max(abs(int(n)) for n in coeffs) if coeffs else 0
        arr = np.zeros(2 * k + 1, dtype=complex)
        for n, c in coeffs.items():
            arr[k + int(n)] = c
    else:
        arr = np.asarray(coeffs, dtype=complex)
        if arr.ndim != 1 or len(arr) % 2 == 0:
            raise UsageError("Fourier coefficient array must be 1-D of odd length")
    return BoundaryFunction(geo.poincare_disk(), coeffs=arr)


def node_boundary(rule: QuadratureRule, values) -> BoundaryFunction:
    vals = np.asarray(values(rule.nodes) if callable(values) else values, dtype=complex)
    if vals.shape != rule.weights.shape:
        raise UsageError("value vector must match the rule's node count")
    return BoundaryFunction(rule.model, values=vals)


def boundary_values(g: BoundaryFunction, rule: QuadratureRule) -> np.ndarray:
    """Evaluate g at the rule's nodes."""
    if g.model != rule.model:
        raise UsageError("function/rule model mismatch")
    if g.is_fourier:
        k = g.n_max
        theta = np.angle(rule.nodes)
        n = np.arange(-k, k + 1)
        return np.exp(1j * np.outer(theta, n)) @ g.coeffs
    if len(g.values) != len(rule.nodes):
        raise UsageError("node-form function bound to a different rule")
    return g.values


def is_real_function(g: BoundaryFunction, tol: float = 1e-12) -> bool:
    if g.is_fourier:
        return bool(np.all(np.abs(g.coeffs - g.coeffs[::-1].conjugate()) <= tol))
    return bool(np.all(np.abs(g.values.imag) <= tol))


# ---------------------------------------------------------------- kernels

def poisson_coeffs(x: complex, n_max: int = N_MAX_DEFAULT) -> np.ndarray:
    """Fourier coefficients of the disk kernel P(x, .): conj(x)^n / x^{|n|}."""
    x = complex(x)
    n = np.arange(1, n_max + 1)
    out = np.empty(2 * n_max + 1, dtype=complex)
    out[n_max] = 1.0
    out[n_max + 1:] = np.conjugate(x) ** n
    out[:n_max] = (x ** n)[::-1]
    return out


def kernel_vector(model: Model, x, n_max: int = N_MAX_DEFAULT,
                  rule: QuadratureRule | None = None) -> BoundaryFunction:
    """The kernel P(x, .) as a boundary function (Fourier on the disk)."""
    if model.kind == geo.DISK:
        return fourier_boundary(poisson_coeffs(x, n_max))
    if rule is None:
        rule = quadrature_rule(model)
    return node_boundary(rule, geo.poisson_kernel(model, np.asarray(x)[None], rule.nodes))


def poisson_extend(g: BoundaryFunction, x, rule: QuadratureRule | None = None):
    """Harmonic extension of g evaluated at interior point(s) x.

    Disk Fourier route is exact in the coefficients: the mode e^{in theta}
    extends to z^n (n >= 0) and to conj(z)^{|n|} (n < 0).
    """
    if g.is_fourier:
        z = geo.check_point(g.model, x)
        k = g.n_max
        n = np.arange(1, k + 1)
        zp = z[..., None] ** n
        out = np.full(z.shape, g.coeffs[k], dtype=complex)
        out += zp @ g.coeffs[k + 1:]
        out += np.conjugate(zp) @ g.coeffs[:k][::-1]
        return out if out.ndim else complex(out)
    if rule is None:
        raise UsageError("node-form extension needs its quadrature rule")
    if g.model != rule.model:
        raise UsageError("function/rule model mismatch")
    x = geo.check_point(rule.model, x)
    point_ndim = 0 if rule.model.kind == geo.DISK else 1
    scalar = x.ndim == point_ndim
    batch = x[None] if scalar else x
    xb = batch[..., None] if rule.model.kind == geo.DISK else batch[..., None, :]
    ker = geo.poisson_kernel(rule.model, xb, rule.nodes)
    out = ker @ (rule.weights * g.values)
    return complex(out[0]) if scalar else out


def l2_inner(f: BoundaryFunction, g: BoundaryFunction,
             rule: QuadratureRule | None = None) -> complex:
    """<f, g> against normalized surface measure (f conj(g))."""
    if f.model != g.model:
        raise UsageError("inner product across models")
    if f.is_fourier and g.is_fourier:
        kf, kg = f.n_max, g.n_max
        k = min(kf, kg)
        a = f.coeffs[kf - k:kf + k + 1]
        b = g.coeffs[kg - k:kg + k + 1]
        return complex(np.sum(a * np.conjugate(b)))
    if rule is None:
        raise UsageError("node-form inner product needs its quadrature rule")
    fv, gv = boundary_values(f, rule), boundary_values(g, rule)
    return complex(np.sum(rule.weights * fv * np.conjugate(gv)))


def kernel_l2_norm_sq(model: Model, x, rule: QuadratureRule | None = None) -> float:
    """Quadrature value of the squared boundary L2 norm of P(x, .)."""
    if rule is None:
        rule = quadrature_rule(model)
    x = geo.check_point(model, x)
    xi = rule.nodes
    xb = x[..., None, :] if model.kind != geo.DISK else x[..., None]
    ker = geo.poisson_kernel(model, xb, xi)
    out = ker**2 @ rule.weights
    return out if out.ndim else float(out)


def kernel_growth_constant(model: Model, rule: QuadratureRule, points) -> float:
    """Fitted c with |P(x,.)|_2^2 <= c (1 + d(o,x)) e^{h d(o,x)} over the points."""
    pts = np.asarray(points)
    o = np.zeros_like(pts) if model.kind != geo.DISK else np.zeros(pts.shape, complex)
    d = geo.dist(model, pts, o)
    norms = kernel_l2_norm_sq(model, pts, rule)
    return float(np.max(norms / ((1.0 + d) * np.exp(model.entropy * d))))


# ---------------------------------------------------------------- mean value

def uniform_ball_points(model: Model, r: float, n: int, rng: np.random.Generator):
    """n points distributed by invariant volume restricted to the ball B(o, r).

    Rejection sampling in the Euclidean radius against the power-law proposal
    t^{D-1}; acceptance weight ((1-t^2)/(1-t_max^2))^{-p}.
    """
    t_max = math.tanh(r / 2.0)
    D = model.real_dim
    p = {geo.DISK: 2.0, geo.COMPLEX_BALL: model.dim + 1.0,
         geo.REAL_BALL: float(model.dim)}[model.kind]
    radii = np.empty(0)
    while len(radii) < n:
        m = max(2 * (n - len(radii)), 1024)
        t = t_max * rng.random(m) ** (1.0 / D)
        # acceptance ratio relative to the density sup at t = t_max
        accept = rng.random(m) <= ((1.0 - t_max * t_max) / (1.0 - t * t)) ** p
        radii = np.concatenate([radii, t[accept]])
    t = radii[:n]
    v = rng.standard_normal((n, D))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return geo._pack(model, t[:, None] * v)


def _ball_average(model: Model, x0, xi, r: float, quad) -> tuple[float, float]:
    """Mean of P(., xi) over B(x0, r) by centering with the involution.

    Returns (mean, stderr); stderr is 0 for the deterministic product rule.
    """
    kind = quad[0]
    x0 = np.asarray(x0, dtype=complex if model.is_complex else float)
    if kind == "product":
        _, n_rad, n_ang = quad
        from ._quad import leggauss
        u, w = leggauss(n_rad)
        rho = 0.5 * r * (u + 1.0)
        wrho = 0.5 * r * w * geo.ball_volume_rate(model, rho)
        if model.kind != geo.DISK:
            raise UsageError("product rule is only wired for the disk")
        ang = 2.0 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
        y = np.tanh(rho[:, None] / 2.0) * np.exp(1j * ang)[None, :]
        pts = geo.involution(model, np.asarray(x0), y.ravel())
        vals = geo.poisson_kernel(model, pts, xi).reshape(n_rad, n_ang)
        mass = geo.ball_volume(model, r)
        return float((wrho @ vals.mean(axis=1)) / mass), 0.0
    if kind == "mc":
        _, n_pts, seed = quad
        rng = np.random.default_rng(seed)
        y = uniform_ball_points(model, r, n_pts, rng)
        pts = geo.involution(model, x0[None] if model.kind != geo.DISK else x0, y)
        vals = geo.poisson_kernel(model, pts, np.asarray(xi)[None]
                                  if model.kind != geo.DISK else xi)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_pts))
    raise UsageError(f"unknown interior quadrature kind {kind!r}")


def mvp_residual(model: Model, x0, xi, r: float, quad=None) -> float:
    """|P(x0, xi) - average of P(., xi) over the geodesic ball B(x0, r)|."""
    if r <= 0:
        raise UsageError("ball radius must be positive")
    if quad is None:
        quad = MVP_PRODUCT_DEFAULT if model.kind == geo.DISK else MVP_MC_DEFAULT
    mean, _ = _ball_average(model, x0, xi, r, quad)
    ref = geo.poisson_kernel(model, np.asarray(x0), np.asarray(xi))
    return abs(float(ref) - mean)


def mvp_residual_stats(model: Model, x0, xi, r: float, quad=None) -> tuple[float, float]:
    """(residual, interior-average stderr); stderr 0 for product rules."""
    if quad is None:
        quad = MVP_PRODUCT_DEFAULT if model.kind == geo.DISK else MVP_MC_DEFAULT
    mean, se = _ball_average(model, x0, xi, r, quad)
    ref = geo.poisson_kernel(model, np.asarray(x0), np.asarray(xi))
    return abs(float(ref) - mean), se


# ---------------------------------------------------------------- serialization

def _node_coords(model: Model, nodes: np.ndarray) -> np.ndarray:
    """(n, real_dim) float view of boundary nodes."""
    if model.kind == geo.REAL_BALL:
        return np.asarray(nodes, dtype=float)
    c = np.asarray(nodes, dtype=complex)
    if model.kind == geo.DISK:
        c = c[:, None]
    out = np.empty((c.shape[0], 2 * c.shape[1]))
    out[:, 0::2], out[:, 1::2] = c.real, c.imag
    return out


def save_boundary(g: BoundaryFunction, path: str,
                  rule: QuadratureRule | None = None) -> None:
    """Fourier form: rows (n, re, im); node form: rows (coords..., re, im)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if g.is_fourier:
            w.writerow(["n", "re", "im"])
            k = g.n_max
            for n in range(-k, k + 1):
                c = g.coeffs[k + n]
                w.writerow([n, f"{c.real:.17g}", f"{c.imag:.17g}"])
            return
        if rule is None:
            raise UsageError("node-form CSV needs the rule the function is bound to")
        coords = _node_coords(g.model, rule.nodes)
        w.writerow([f"x{i}" for i in range(coords.shape[1])] + ["re", "im"])
        for row, v in zip(coords, g.values):
            w.writerow([f"{float(c):.17g}" for c in row]
                       + [f"{v.real:.17g}", f"{v.imag:.17g}"])


def load_boundary(path: str, rule: QuadratureRule | None = None) -> BoundaryFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:1] == ["n"]:
        coeffs = {int(r[0]): float(r[1]) + 1j * float(r[2]) for r in body}
        return fourier_boundary(coeffs)
    if rule is None:
        raise UsageError("node-form CSV needs the quadrature rule it was bound to")
    coords = np.array([[float(c) for c in r[:-2]] for r in body])
    if not np.allclose(coords, _node_coords(rule.model, rule.nodes), atol=1e-15):
        raise UsageError("node coordinates in CSV do not match the rule")
    vals = np.array([float(r[-2]) + 1j * float(r[-1]) for r in body])
    return node_boundary(rule, vals)
