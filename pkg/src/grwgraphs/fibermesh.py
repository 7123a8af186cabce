"""Structured compact fibers (flat torus, round sphere) and metric-aware operators.

Scalar fields are ``(n0, n1)`` arrays, vector fields ``(2, n0, n1)`` arrays of
contravariant components, and symmetric 2x2 tensors are :class:`Metric`
objects. Every operator accepts ``metric="fiber"`` (the metric g of the fiber)
or an explicit :class:`Metric`, e.g. the induced metric of a graph.

Derivatives are second-order centered differences. On the sphere the latitude
axis is staggered away from the poles; the stencils of the first and last rows
reach across the pole to the node half a turn away in longitude (``pole=
"reflect"``, the default) or use one-sided second-order differences
(``pole="onesided"``). Longitude is periodic. Quadrature is the midpoint rule
on coordinate cells.

Across a pole, theta-components change sign. Derivative helpers therefore take
a ``parity`` argument: +1 for scalars and for the ``theta-theta`` and
``phi-phi`` components of tensors, -1 for ``d/dtheta`` of a scalar and for
``theta-phi`` components.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from . import _backend
from ._kernels_py import ONESIDED, PERIODIC, POLE

MIN_RESOLUTION = 8


class MeshError(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    def __init__(self, node, det, m11):
        self.node = node
        super().__init__(
            f"metric is not positive definite at node {node} (det={det:.3e}, m11={m11:.3e})"
        )


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric 2x2 tensor field with components broadcastable to the mesh shape."""

    m11: np.ndarray
    m12: np.ndarray
    m22: np.ndarray

    @property
    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m12

    def inverse(self):
        det = self.det
        return self.m22 / det, -self.m12 / det, self.m11 / det

    def scaled(self, c) -> Metric:
        return Metric(c * self.m11, c * self.m12, c * self.m22)

    def check_positive_definite(self, shape):
        det = np.broadcast_to(self.det, shape)
        m11 = np.broadcast_to(self.m11, shape)
        bad = ~((det > 0) & (m11 > 0))
        if bad.any():
            node = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NotPositiveDefinite(node, float(det[node]), float(m11[node]))

    def as_arrays(self, shape):
        return tuple(np.broadcast_to(m, shape).copy() for m in (self.m11, self.m12, self.m22))


@dataclass(frozen=True, eq=False)
class FiberMesh:
    kind: str
    shape: tuple[int, int]
    size: tuple[float, ...]
    h: tuple[float, float]
    x0: np.ndarray
    x1: np.ndarray
    metric: Metric
    sqrt_det: np.ndarray
    gauss_curvature: float
    euler_characteristic: int
    mode0: int
    _inverse: tuple = field(repr=False, default=None)

    @property
    def nodes(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def cell_area(self) -> float:
        return self.h[0] * self.h[1]

    @property
    def spacing(self) -> float:
        """Largest coordinate spacing, used as the refinement parameter."""
        return max(self.h)

    def coords(self):
        """Node coordinate arrays ``(X0, X1)`` of shape ``self.shape``."""
        return np.meshgrid(self.x0, self.x1, indexing="ij")

    def K_fiber(self) -> np.ndarray:
        return np.full(self.shape, self.gauss_curvature)

    def fiber_inverse(self):
        return self._inverse

    def embedding(self):
        """Cartesian coordinates of the sphere nodes (sphere only)."""
        if self.kind != "sphere":
            raise MeshError("embedding is only defined for the sphere")
        r = self.size[0]
        th, ph = self.coords()
        return r * np.sin(th) * np.cos(ph), r * np.sin(th) * np.sin(ph), r * np.cos(th)

    def christoffel(self) -> np.ndarray:
        """Fiber Christoffel symbols ``G[k, i, j]`` as an array of shape (2, 2, 2, n0, n1)."""
        G = np.zeros((2, 2, 2) + self.shape)
        if self.kind == "sphere":
            th, _ = self.coords()
            G[0, 1, 1] = -np.sin(th) * np.cos(th)
            G[1, 0, 1] = G[1, 1, 0] = np.cos(th) / np.sin(th)
        return G

    def d0(self, a, parity=1):
        """Centered derivative along the first coordinate."""
        return _backend.diff0(a, self.h[0], self.mode0, parity)

    def d1(self, a):
        """Centered derivative along the (periodic) second coordinate."""
        return _backend.diff1(a, self.h[1])

    def to_config(self) -> dict:
        return {"kind": self.kind, "resolution": list(self.shape), "size": list(self.size)}


def _check_resolution(n0, n1):
    if n0 < MIN_RESOLUTION or n1 < MIN_RESOLUTION:
        raise MeshError(
            f"resolution {n0}x{n1} is below the minimum {MIN_RESOLUTION}x{MIN_RESOLUTION}"
        )


def build_torus(Nx: int, Ny: int, Lx: float = 2 * math.pi, Ly: float = 2 * math.pi) -> FiberMesh:
    """Flat torus ``[0, Lx) x [0, Ly)`` with ``g = dx^2 + dy^2``."""
    _check_resolution(Nx, Ny)
    if not (Lx > 0 and Ly > 0):
        raise MeshError("torus periods must be positive")
    hx, hy = Lx / Nx, Ly / Ny
    return FiberMesh(
        kind="torus",
        shape=(Nx, Ny),
        size=(float(Lx), float(Ly)),
        h=(hx, hy),
        x0=np.arange(Nx) * hx,
        x1=np.arange(Ny) * hy,
        metric=Metric(1.0, 0.0, 1.0),
        sqrt_det=np.ones((1, 1)),
        gauss_curvature=0.0,
        euler_characteristic=0,
        mode0=PERIODIC,
        _inverse=(1.0, 0.0, 1.0),
    )


def build_sphere(Ntheta: int, Nphi: int, r: float = 1.0, pole: str = "reflect") -> FiberMesh:
    """Round sphere of radius ``r`` on a staggered latitude-longitude grid.

    Latitude nodes sit at ``(j + 1/2) pi / Ntheta``, so no node lies on a pole.
    ``Nphi`` must be even for the pole-crossing stencils.
    """
    _check_resolution(Ntheta, Nphi)
    if not r > 0:
        raise MeshError("sphere radius must be positive")
    if pole not in ("reflect", "onesided"):
        raise MeshError(f"unknown pole treatment {pole!r}")
    if pole == "reflect" and Nphi % 2:
        raise MeshError("pole-crossing stencils need an even number of longitudes")
    hth, hph = math.pi / Ntheta, 2 * math.pi / Nphi
    theta = (np.arange(Ntheta) + 0.5) * hth
    sin = np.sin(theta)[:, None]
    return FiberMesh(
        kind="sphere",
        shape=(Ntheta, Nphi),
        size=(float(r),),
        h=(hth, hph),
        x0=theta,
        x1=np.arange(Nphi) * hph,
        metric=Metric(np.full_like(sin, r * r), np.zeros_like(sin), (r * sin) ** 2),
        sqrt_det=r * r * sin,
        gauss_curvature=1.0 / r**2,
        euler_characteristic=2,
        mode0=POLE if pole == "reflect" else ONESIDED,
        _inverse=(np.full_like(sin, 1.0 / r**2), np.zeros_like(sin), 1.0 / (r * sin) ** 2),
    )


def build(cfg: dict) -> FiberMesh:
    """Build a mesh from ``{"kind", "resolution", "size"}``."""
    kind = cfg["kind"]
    n0, n1 = cfg["resolution"]
    size = cfg.get("size")
    if kind == "torus":
        Lx, Ly = size if size else (2 * math.pi, 2 * math.pi)
        return build_torus(int(n0), int(n1), float(Lx), float(Ly))
    if kind == "sphere":
        r = size[0] if size else 1.0
        return build_sphere(int(n0), int(n1), float(r))
    raise MeshError(f"unknown fiber kind {kind!r}")


def _resolve(mesh: FiberMesh, metric):
    """Return ``(inverse components, sqrt det)`` for ``metric``."""
    if isinstance(metric, str):
        if metric != "fiber":
            raise ValueError(f"unknown metric {metric!r}")
        return mesh.fiber_inverse(), mesh.sqrt_det
    metric.check_positive_definite(mesh.shape)
    return metric.inverse(), np.sqrt(metric.det)


def partials(mesh: FiberMesh, phi):
    """Covariant differential ``(d0 phi, d1 phi)``."""
    return mesh.d0(phi), mesh.d1(phi)


def gradient(mesh: FiberMesh, phi, metric="fiber") -> np.ndarray:
    """Contravariant gradient ``m^{ij} d_j phi``, shape ``(2, n0, n1)``."""
    (i11, i12, i22), _ = _resolve(mesh, metric)
    g0, g1 = _backend.gradient(phi, i11, i12, i22, mesh.h[0], mesh.h[1], mesh.mode0)
    return np.stack([g0, g1])


def divergence(mesh: FiberMesh, V, metric="fiber") -> np.ndarray:
    """``(1/sqrt det m) d_i (sqrt det m V^i)``."""
    _, sq = _resolve(mesh, metric)
    return _backend.divergence(V[0], V[1], sq, mesh.h[0], mesh.h[1], mesh.mode0)


def laplace_beltrami(mesh: FiberMesh, phi, metric="fiber") -> np.ndarray:
    """Laplace-Beltrami operator, the divergence of the gradient in ``metric``."""
    return divergence(mesh, gradient(mesh, phi, metric), metric)


def derivative_matrices(mesh: FiberMesh):
    """Sparse matrices of ``d0`` (parity +1) and ``d1`` acting on raveled fields."""
    n0, n1 = mesh.shape
    idx = np.arange(mesh.nodes).reshape(mesh.shape)
    i, j = np.divmod(idx, n1)
    h0, h1 = mesh.h
    # d1: periodic in j.
    rows = np.concatenate([idx.ravel(), idx.ravel()])
    cols = np.concatenate([(i * n1 + (j + 1) % n1).ravel(), (i * n1 + (j - 1) % n1).ravel()])
    vals = np.concatenate([np.full(mesh.nodes, 0.5 / h1), np.full(mesh.nodes, -0.5 / h1)])
    D1 = sp.csr_matrix((vals, (rows, cols)), shape=(mesh.nodes, mesh.nodes))

    if mesh.mode0 == ONESIDED:
        eye = sp.identity(n1, format="csr")
        stencil = sp.lil_matrix((n0, n0))
        for r in range(1, n0 - 1):
            stencil[r, r + 1], stencil[r, r - 1] = 0.5 / h0, -0.5 / h0
        stencil[0, 0:3] = np.array([-3.0, 4.0, -1.0]) * 0.5 / h0
        stencil[n0 - 1, n0 - 3:] = np.array([1.0, -4.0, 3.0]) * 0.5 / h0
        return sp.kron(stencil.tocsr(), eye, format="csr"), D1

    up_i, dn_i = i + 1, i - 1
    up_j, dn_j = j.copy(), j.copy()
    if mesh.mode0 == PERIODIC:
        up_i, dn_i = up_i % n0, dn_i % n0
    else:
        # Across a pole the neighbour is the same row half a turn away.
        half = (j + n1 // 2) % n1
        top, bot = i == n0 - 1, i == 0
        up_i = np.where(top, i, up_i)
        up_j = np.where(top, half, up_j)
        dn_i = np.where(bot, i, dn_i)
        dn_j = np.where(bot, half, dn_j)
    cols = np.concatenate([(up_i * n1 + up_j).ravel(), (dn_i * n1 + dn_j).ravel()])
    vals = np.concatenate([np.full(mesh.nodes, 0.5 / h0), np.full(mesh.nodes, -0.5 / h0)])
    D0 = sp.csr_matrix((vals, (rows, cols)), shape=(mesh.nodes, mesh.nodes))
    return D0, D1


def laplacian_matrix(mesh: FiberMesh) -> sp.csr_matrix:
    """Sparse matrix of :func:`laplace_beltrami` in the fiber metric."""
    D0, D1 = derivative_matrices(mesh)
    (i11, i12, i22), sq = mesh.fiber_inverse(), mesh.sqrt_det

    def diag(a):
        return sp.diags(np.broadcast_to(a, mesh.shape).ravel())

    G0 = diag(i11) @ D0 + diag(i12) @ D1
    G1 = diag(i12) @ D0 + diag(i22) @ D1
    S = diag(sq)
    Sinv = diag(1.0 / np.broadcast_to(sq, mesh.shape))
    return (Sinv @ (D0 @ S @ G0 + D1 @ S @ G1)).tocsr()


def integrate(mesh: FiberMesh, phi, metric="fiber") -> float:
    """Midpoint-rule integral of ``phi`` with respect to the area form of ``metric``."""
    _, sq = _resolve(mesh, metric)
    dens = np.broadcast_to(np.asarray(phi, dtype=float) * sq, mesh.shape)
    return float(np.sum(dens) * mesh.cell_area)


def inner(metric_or_mesh, U, V):
    """Pointwise ``m(U, V)`` for contravariant fields."""
    m = metric_or_mesh.metric if isinstance(metric_or_mesh, FiberMesh) else metric_or_mesh
    return m.m11 * U[0] * V[0] + m.m12 * (U[0] * V[1] + U[1] * V[0]) + m.m22 * U[1] * V[1]


def gauss_curvature(mesh: FiberMesh, metric: Metric) -> np.ndarray:
    """Gauss curvature of ``metric`` from the Brioschi formula.

    Metric components are differentiated with the same centered stencils as
    the other operators; second derivatives are composed first derivatives.
    """
    metric.check_positive_definite(mesh.shape)
    E, F, G = metric.as_arrays(mesh.shape)
    d0, d1 = mesh.d0, mesh.d1
    E_u, E_v = d0(E), d1(E)
    F_u, F_v = d0(F, -1), d1(F)
    G_u, G_v = d0(G), d1(G)
    E_vv = d1(E_v)
    F_uv = d0(F_v, -1)
    G_uu = d0(G_u, -1)

    def det3(a, b, c, d, e, f_, g, h, i):
        return a * (e * i - f_ * h) - b * (d * i - f_ * g) + c * (d * h - e * g)

    det1 = det3(
        -0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v,
        F_v - 0.5 * G_u, E, F,
        0.5 * G_v, F, G,
    )
    det2 = det3(
        0.0, 0.5 * E_v, 0.5 * G_u,
        0.5 * E_v, E, F,
        0.5 * G_u, F, G,
    )
    return (det1 - det2) / (E * G - F * F) ** 2


def refine(mesh: FiberMesh, phi):
    """Double the resolution of ``mesh`` and prolong ``phi`` onto it.

    ``phi`` may be an analytic field (an object with ``sample(mesh)`` or a
    callable taking the mesh), which is resampled exactly, or an array, which
    is bilinearly interpolated. Returns ``(mesh, values, exact)``.
    """
    if mesh.kind == "torus":
        fine = build_torus(2 * mesh.shape[0], 2 * mesh.shape[1], *mesh.size)
    else:
        pole = "reflect" if mesh.mode0 == POLE else "onesided"
        fine = build_sphere(2 * mesh.shape[0], 2 * mesh.shape[1], mesh.size[0], pole)
    if hasattr(phi, "sample"):
        return fine, phi.sample(fine), True
    if callable(phi):
        return fine, np.asarray(phi(fine), dtype=float), True
    return fine, _interpolate(mesh, np.asarray(phi, dtype=float), fine), False


def _interpolate(mesh, values, fine):
    # Periodic wrap along every periodic axis, linear extrapolation at the
    # sphere's outermost latitude rows.
    x1 = np.append(mesh.x1, mesh.x1[-1] + mesh.h[1])
    vals = np.concatenate([values, values[:, :1]], axis=1)
    x0 = mesh.x0
    if mesh.mode0 == PERIODIC:
        x0 = np.append(x0, x0[-1] + mesh.h[0])
        vals = np.concatenate([vals, vals[:1]], axis=0)
    interp = RegularGridInterpolator((x0, x1), vals, bounds_error=False, fill_value=None)
    X0, X1 = fine.coords()
    return interp(np.stack([X0.ravel(), X1.ravel()], axis=-1)).reshape(fine.shape)


def field_summary(mesh: FiberMesh, phi, metric="fiber") -> dict:
    phi = np.broadcast_to(np.asarray(phi, dtype=float), mesh.shape)
    return {
        "min": float(phi.min()),
        "max": float(phi.max()),
        "mean": float(phi.mean()),
        "l2": math.sqrt(max(integrate(mesh, phi * phi, metric), 0.0)),
    }


def field_to_csv(mesh: FiberMesh, phi, path=None, name="value") -> str:
    """Write ``node, i0, i1, x0, x1, <name>`` rows; returns the CSV text."""
    phi = np.broadcast_to(np.asarray(phi, dtype=float), mesh.shape)
    X0, X1 = mesh.coords()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "i0", "i1", "x0", "x1", name])
    n1 = mesh.shape[1]
    for node, (i0, i1) in enumerate(np.ndindex(mesh.shape)):
        assert node == i0 * n1 + i1
        w.writerow([node, i0, i1, repr(float(X0[i0, i1])), repr(float(X1[i0, i1])),
                    repr(float(phi[i0, i1]))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def summary_json(mesh: FiberMesh, phi, metric="fiber") -> str:
    return json.dumps(field_summary(mesh, phi, metric), sort_keys=True)
