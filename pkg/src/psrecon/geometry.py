"""Closed-form geometry of the three hyperbolic ball models.

Models and coordinates:
  * unit disk            -- complex scalars z, |z| < 1
  * complex d-ball       -- complex vectors (..., d), Euclidean norm < 1
  * real m-ball          -- real vectors (..., m), Euclidean norm < 1

All operations broadcast over leading axes and are pure.  The invariant
volume is measured against Lebesgue measure of the ambient coordinates with
densities (1-|z|^2)^{-2}, (1-|z|^2)^{-(d+1)}, (1-|x|^2)^{-m}; the resulting
volume growth rates (entropies) are 1, d, m-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import adaptive_gl
from .errors import DomainError, UsageError

# points this close to the unit sphere are rejected to keep densities finite
EDGE_TOL = 1e-14
BOUNDARY_TOL = 1e-12

DISK, COMPLEX_BALL, REAL_BALL = "disk", "complex-ball", "real-ball"


@dataclass(frozen=True)
class Model:
    kind: str
    dim: int  # complex dimension d, real dimension m; 1 for the disk

    def __post_init__(self):
        if self.kind == DISK:
            if self.dim != 1:
                raise UsageError("disk has fixed dimension 1")
        elif self.kind == COMPLEX_BALL:
            if self.dim < 1:
                raise UsageError("complex ball needs d >= 1")
        elif self.kind == REAL_BALL:
            if self.dim < 2:
                raise UsageError("real ball needs m >= 2")
        else:
            raise UsageError(f"unknown model kind {self.kind!r}")

    @property
    def entropy(self) -> float:
        if self.kind == DISK:
            return 1.0
        if self.kind == COMPLEX_BALL:
            return float(self.dim)
        return float(self.dim - 1)

    @property
    def real_dim(self) -> int:
        if self.kind == COMPLEX_BALL:
            return 2 * self.dim
        if self.kind == REAL_BALL:
            return self.dim
        return 2

    @property
    def is_complex(self) -> bool:
        return self.kind in (DISK, COMPLEX_BALL)

    def __str__(self):
        if self.kind == DISK:
            return "disk"
        prefix = "complex" if self.kind == COMPLEX_BALL else "real"
        return f"{prefix}:{self.dim}"


def poincare_disk() -> Model:
    return Model(DISK, 1)


def complex_ball(d: int) -> Model:
    return Model(COMPLEX_BALL, d)


def real_ball(m: int) -> Model:
    return Model(REAL_BALL, m)


def parse_model(text: str) -> Model:
    """Parse 'disk', 'complex:d', 'real:m'."""
    t = text.strip().lower()
    if t == "disk":
        return poincare_disk()
    for prefix, ctor in (("complex:", complex_ball), ("real:", real_ball)):
        if t.startswith(prefix):
            try:
                return ctor(int(t[len(prefix):]))
            except ValueError as exc:
                raise UsageError(f"bad model spec {text!r}") from exc
    raise UsageError(f"bad model spec {text!r} (want disk | complex:d | real:m)")


# ---------------------------------------------------------------- coordinates

def _as_coords(model: Model, x):
    if model.kind == DISK:
        return np.asarray(x, dtype=complex)
    if model.kind == COMPLEX_BALL:
        arr = np.asarray(x, dtype=complex)
    else:
        arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != model.dim:
        raise UsageError(f"point of {model} must have last axis {model.dim}")
    return arr


def norm_sq(model: Model, x):
    x = _as_coords(model, x)
    if model.kind == DISK:
        return (x * x.conjugate()).real
    if model.kind == COMPLEX_BALL:
        return np.sum((x * x.conjugate()).real, axis=-1)
    return np.sum(x * x, axis=-1)


def _herm(model: Model, x, y):
    """sum_i x_i conj(y_i) (complex models) / sum_i x_i y_i (real)."""
    if model.kind == DISK:
        return x * np.conjugate(y)
    if model.kind == COMPLEX_BALL:
        return np.sum(x * np.conjugate(y), axis=-1)
    return np.sum(x * y, axis=-1)


def check_point(model: Model, x):
    x = _as_coords(model, x)
    if np.any(norm_sq(model, x) >= (1.0 - EDGE_TOL) ** 2):
        raise DomainError(f"point outside the open unit ball of {model}")
    return x


def check_boundary(model: Model, xi):
    xi = _as_coords(model, xi)
    if np.any(np.abs(np.sqrt(norm_sq(model, xi)) - 1.0) > BOUNDARY_TOL):
        raise DomainError(f"boundary point of {model} must have unit norm")
    return xi


# ---------------------------------------------------------------- distance

def dist(model: Model, x, y):
    """Geodesic distance, as log((1+r)/(1-r)) of the involution magnitude r."""
    x = check_point(model, x)
    y = check_point(model, y)
    if model.is_complex:
        # 1 - |phi_x(y)|^2 = (1-|x|^2)(1-|y|^2)/|1-<y,x>|^2
        frac = (1.0 - norm_sq(model, x)) * (1.0 - norm_sq(model, y)) \
            / np.abs(1.0 - _herm(model, y, x)) ** 2
        r = np.sqrt(np.clip(1.0 - frac, 0.0, None))
    else:
        d2 = np.sum((x - y) ** 2, axis=-1)
        den = d2 + (1.0 - norm_sq(model, x)) * (1.0 - norm_sq(model, y))
        r = np.sqrt(d2 / den)
    return np.log1p(r) - np.log1p(-r)


def involution(model: Model, w, x):
    """The isometric involution exchanging w and the origin, evaluated at x."""
    w = check_point(model, w)
    x = check_point(model, x)
    if model.kind == DISK:
        return (w - x) / (1.0 - np.conjugate(w) * x)
    if model.kind == COMPLEX_BALL:
        w2 = norm_sq(model, w)[..., None]
        xw = _herm(model, x, w)[..., None]
        if np.all(w2 == 0.0):
            return -x + 0.0 * xw  # broadcast to the common shape
        proj = np.where(w2 == 0.0, 0.0, xw / np.where(w2 == 0.0, 1.0, w2)) * w
        s = np.sqrt(1.0 - w2)
        return (w - proj - s * (x - proj)) / (1.0 - xw)
    d2 = np.sum((x - w) ** 2, axis=-1)[..., None]
    nw2 = (1.0 - norm_sq(model, w))[..., None]
    nx2 = (1.0 - norm_sq(model, x))[..., None]
    den = d2 + nw2 * nx2
    return (w * d2 + nw2 * (w - x)) / den


def busemann(model: Model, xi, x, y):
    """Horospherical cocycle B_xi(x, y): additive in (x, y), zero at x = y."""
    xi = check_boundary(model, xi)
    x = check_point(model, x)
    y = check_point(model, y)
    if model.is_complex:
        ax = np.abs(1.0 - _herm(model, x, xi)) ** 2
        ay = np.abs(1.0 - _herm(model, y, xi)) ** 2
        return np.log((1.0 - norm_sq(model, y)) * ax) \
            - np.log((1.0 - norm_sq(model, x)) * ay)
    dx = np.sum((x - xi) ** 2, axis=-1)
    dy = np.sum((y - xi) ** 2, axis=-1)
    return np.log(dx * (1.0 - norm_sq(model, y))) \
        - np.log(dy * (1.0 - norm_sq(model, x)))


def poisson_kernel(model: Model, x, xi):
    """Boundary kernel; equals exp(-entropy * busemann(xi, x, o)) in every model."""
    x = check_point(model, x)
    xi = check_boundary(model, xi)
    if model.kind == DISK:
        return (1.0 - norm_sq(model, x)) / np.abs(xi - x) ** 2
    if model.kind == COMPLEX_BALL:
        base = (1.0 - norm_sq(model, x)) / np.abs(1.0 - _herm(model, x, xi)) ** 2
        return base ** model.dim
    base = (1.0 - norm_sq(model, x)) / np.sum((x - xi) ** 2, axis=-1)
    return base ** (model.dim - 1)


def volume_density(model: Model, x):
    """Density of the invariant volume against Lebesgue measure."""
    x = check_point(model, x)
    n2 = norm_sq(model, x)
    if model.kind == DISK:
        return (1.0 - n2) ** -2.0
    if model.kind == COMPLEX_BALL:
        return (1.0 - n2) ** -(model.dim + 1.0)
    return (1.0 - n2) ** -float(model.dim)


# ---------------------------------------------------------------- volumes

def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _density_exponent(model: Model) -> float:
    return {DISK: 2.0, COMPLEX_BALL: model.dim + 1.0, REAL_BALL: float(model.dim)}[model.kind]


def ball_volume(model: Model, r, *, tol: float = 1e-12):
    """Invariant volume of the geodesic ball of radius r about the origin.

    Disk: closed form pi*sinh^2(r/2). Other models: adaptive radial quadrature
    of the volume density over the Euclidean ball of radius tanh(r/2).
    """
    r = float(r)
    if r < 0.0:
        raise UsageError("ball radius must be nonnegative")
    if model.kind == DISK:
        return math.pi * math.sinh(r / 2.0) ** 2
    if r == 0.0:
        return 0.0
    D = model.real_dim
    p = _density_exponent(model)
    A = sphere_area(D)

    def f(t):
        return t ** (D - 1) * (1.0 - t * t) ** (-p)

    val, _ = adaptive_gl(f, 0.0, math.tanh(r / 2.0), tol=tol / max(A, 1.0), rtol=1e-13)
    return A * val


def log_ball_volume_rate(model: Model, rho):
    """log of d/drho ball_volume, stable for arbitrarily large rho.

    Grows like entropy * rho + O(1); -inf at rho = 0 for real_dim > 1.
    """
    rho = np.asarray(rho, dtype=float)
    D = model.real_dim
    p = _density_exponent(model)
    A = sphere_area(D)
    # t = tanh(rho/2); rate = (A/2) t^{D-1} (1-t^2)^{1-p}
    with np.errstate(divide="ignore"):
        log_t = np.log(np.tanh(rho / 2.0))
    log_sech2 = -2.0 * (rho / 2.0 + np.log1p(np.exp(-rho)) - math.log(2.0))
    return math.log(A / 2.0) + (D - 1) * log_t + (1.0 - p) * log_sech2


def ball_volume_rate(model: Model, rho):
    """d/drho of ball_volume (overflows for rho >> 700/entropy; see log form)."""
    rho = np.asarray(rho, dtype=float)
    out = np.exp(log_ball_volume_rate(model, rho))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- sampling aids

def random_points(model: Model, n: int, rng: np.random.Generator, rmax: float = 0.9):
    """n points uniform in the Euclidean ball of radius rmax (test/verify helper)."""
    D = model.real_dim
    v = rng.standard_normal((n, D))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radii = rmax * rng.random(n) ** (1.0 / D)
    pts = radii[:, None] * v
    return _pack(model, pts)


def random_boundary(model: Model, n: int, rng: np.random.Generator):
    v = rng.standard_normal((n, model.real_dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return _pack(model, v)


def _pack(model: Model, flat):
    """(n, real_dim) float array -> model coordinates."""
    if model.kind == REAL_BALL:
        return flat
    cplx = flat[:, 0::2] + 1j * flat[:, 1::2]
    if model.kind == DISK:
        return cplx[:, 0]
    return cplx
