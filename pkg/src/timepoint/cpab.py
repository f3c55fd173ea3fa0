"""1D CPAB diffeomorphisms on the unit interval.

A transform is the time-1 flow of a continuous piecewise-affine (CPA)
velocity field defined on a uniform tessellation of [0, 1] with zero
velocity at both ends. The parameter vector holds the velocities at the
interior vertices, in units of cell widths per unit time. Integration is done in closed form by hopping from
cell to cell, so no ODE solver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_A_EPS = 1e-12
_V_EPS = 1e-14
_JITTER = 1e-9


@dataclass(frozen=True)
class Tessellation:
    n_cells: int = 16

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")

    @property
    def vertices(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def interior(self) -> np.ndarray:
        return self.vertices[1:-1]

    @property
    def dim(self) -> int:
        return self.n_cells - 1


@dataclass(frozen=True)
class CpaPrior:
    """Zero-mean Gaussian prior over interior-vertex velocities."""

    n_cells: int
    sigma_var: float
    sigma_smooth: float
    covariance: np.ndarray
    cholesky_factor: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_cells - 1


def build_prior(n_cells: int = 16, sigma_var: float = 0.5, sigma_smooth: float = 1.0) -> CpaPrior:
    """RBF covariance over interior vertices, length-scale ``sigma_smooth / n_cells``."""
    if n_cells < 2:
        raise ValueError("n_cells must be >= 2")
    if sigma_var <= 0 or sigma_smooth <= 0:
        raise ValueError("sigma_var and sigma_smooth must be positive")
    centers = Tessellation(n_cells).interior
    length_scale = sigma_smooth / n_cells
    diff = centers[:, None] - centers[None, :]
    cov = sigma_var ** 2 * np.exp(-(diff ** 2) / (2.0 * length_scale ** 2))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(cov + _JITTER * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            raise ValueError("prior covariance not PD") from None
    return CpaPrior(n_cells, float(sigma_var), float(sigma_smooth), cov, chol)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_theta(prior: CpaPrior, rng_seed=None) -> np.ndarray:
    """Draw theta = L z with z ~ N(0, I).

    ``rng_seed`` may be an integer seed or anything exposing
    ``standard_normal(size)`` (e.g. a ``numpy.random.Generator``).
    """
    gen = rng_seed if hasattr(rng_seed, "standard_normal") else _as_rng(rng_seed)
    z = np.asarray(gen.standard_normal(prior.dim), dtype=np.float64)
    return prior.cholesky_factor @ z


@dataclass(frozen=True)
class CpabTransform:
    theta: np.ndarray
    tessellation: Tessellation = field(default_factory=Tessellation)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if theta.size != self.tessellation.dim:
            raise ValueError(
                f"theta has {theta.size} entries, tessellation expects {self.tessellation.dim}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        nc = self.tessellation.n_cells
        v = self.vertex_velocities
        a = (v[1:] - v[:-1]) * nc
        b = v[:-1] - a * self.tessellation.vertices[:-1]
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_theta(cls, theta, n_cells: int | None = None) -> "CpabTransform":
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        return cls(theta, Tessellation(n_cells or theta.size + 1))

    @property
    def vertex_velocities(self) -> np.ndarray:
        # theta is measured in cell widths per unit time
        return np.concatenate([[0.0], self.theta, [0.0]]) / self.tessellation.n_cells

    def velocity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        c = _cell_index(x, self.tessellation.n_cells)
        return self.a[c] * x + self.b[c]

    def negated(self) -> "CpabTransform":
        return CpabTransform(-self.theta, self.tessellation)

    def __call__(self, x, integration_time: float = 1.0):
        return transform_point(self, x, integration_time)

    def inverse(self, y):
        return inverse_point(self, y)


def _cell_index(x: np.ndarray, n_cells: int) -> np.ndarray:
    return np.clip(np.floor(x * n_cells).astype(np.int64), 0, n_cells - 1)


def _check_domain(x: np.ndarray) -> None:
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("points must lie in [0, 1]")


def _integrate(t: CpabTransform, x: np.ndarray, time: float) -> np.ndarray:
    nc = t.tessellation.n_cells
    verts = t.tessellation.vertices
    x = x.astype(np.float64, copy=True)
    remaining = np.full(x.shape, float(abs(time)))
    sign = 1.0 if time >= 0 else -1.0
    a_all = t.a * sign
    b_all = t.b * sign

    c = _cell_index(x, nc)
    v = a_all[c] * x + b_all[c]
    # A point sitting on a vertex belongs to the cell it is moving into.
    on_vertex = (x * nc == np.round(x * nc)) & (x > 0.0)
    move_left = on_vertex & (v < 0.0) & (c == np.round(x * nc).astype(np.int64))
    c = np.where(move_left, c - 1, c)
    c = np.clip(c, 0, nc - 1)

    active = (remaining > 0.0) & (np.abs(a_all[c] * x + b_all[c]) >= _V_EPS)
    for _ in range(4 * nc + 8):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xi, ci, ti = x[idx], c[idx], remaining[idx]
        a, b = a_all[ci], b_all[ci]
        v = a * xi + b
        right = v > 0
        boundary = np.where(right, verts[ci + 1], verts[ci])
        vb = a * boundary + b

        lin = np.abs(a) < _A_EPS
        safe_a = np.where(lin, 1.0, a)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # v(boundary) / v(x) = 1 + a * dist / v; non-positive means the
            # field vanishes inside the cell and the boundary is never reached
            growth = a * (boundary - xi) / v
            t_aff = np.where(growth > -1.0, np.log1p(np.where(growth > -1.0, growth, 0.0)) / safe_a, np.inf)
            t_hit = np.where(lin, (boundary - xi) / v, t_aff)

        finish = t_hit >= ti
        with np.errstate(over="ignore", invalid="ignore"):
            psi_aff = xi + v * np.expm1(a * ti) / safe_a
        psi = np.where(lin, xi + v * ti, psi_aff)
        lo, hi = verts[ci], verts[ci + 1]
        psi = np.clip(psi, lo, hi)

        x_new = np.where(finish, psi, boundary)
        t_new = np.where(finish, 0.0, ti - t_hit)
        c_new = np.where(finish, ci, np.where(right, ci + 1, ci - 1))
        stuck = ~finish & ((c_new < 0) | (c_new >= nc))
        c_new = np.clip(c_new, 0, nc - 1)

        x[idx], remaining[idx], c[idx] = x_new, t_new, c_new
        v_next = a_all[c_new] * x_new + b_all[c_new]
        still = ~finish & ~stuck & (np.abs(v_next) >= _V_EPS)
        active[idx] = still
    return np.clip(x, 0.0, 1.0)


def transform_point(t: CpabTransform, x, integration_time: float = 1.0):
    """phi(x; integration_time) for scalar or array ``x`` in [0, 1]."""
    arr = np.asarray(x, dtype=np.float64)
    _check_domain(arr)
    out = _integrate(t, arr.reshape(-1), integration_time).reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out


def inverse_point(t: CpabTransform, y):
    # stationary field: the inverse flow is the flow of -v, i.e. of -theta
    arr = np.asarray(y, dtype=np.float64)
    _check_domain(arr)
    out = _integrate(t, arr.reshape(-1), -1.0).reshape(arr.shape)
    return float(out) if np.ndim(y) == 0 else out


def grid(length: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, length)


def warp_signal(x, t: CpabTransform) -> np.ndarray:
    """Resample ``x`` at the warped grid: out[k] = x(T(k / (L - 1)))."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("signal must be 1D with at least 2 samples")
    g = grid(x.size)
    # interpolating on the unit grid keeps the identity warp bit-exact
    return np.interp(transform_point(t, g), g, x)


def warp_keypoints(mask, t: CpabTransform) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Move keypoints along with the signal under ``x o T``.

    A keypoint at source index p lands at round(T^-1(p / (L - 1)) * (L - 1)).
    Returns the new mask and the (source index, target index) pairs; when two
    sources collide after rounding the lowest source index is kept.
    """
    mask = np.asarray(mask)
    n = mask.size
    src = np.flatnonzero(mask)
    out = np.zeros(n, dtype=np.uint8)
    if src.size == 0:
        return out, []
    mapped = inverse_point(t, src / (n - 1)) * (n - 1)
    dst = np.clip(np.rint(mapped).astype(np.int64), 0, n - 1)
    pairs = []
    taken = set()
    for p, q in zip(src.tolist(), dst.tolist()):
        if q in taken:
            continue
        taken.add(q)
        pairs.append((p, q))
        out[q] = 1
    return out, pairs
