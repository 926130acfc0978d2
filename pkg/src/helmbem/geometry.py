"""Benchmark boundary curves and wavelength-resolved panel meshes.

Six closed 2-D obstacles are provided (circle, ellipse, kite, square, moon,
elliptic cavity), each as a piecewise-smooth parametric curve with
counterclockwise orientation so that the outward normal is the tangent
rotated by -pi/2.  Meshes place nodes exactly on the curve, equispaced in
arclength within each smooth piece, with every corner a node; panels are the
straight chords between consecutive nodes and carry continuous piecewise-
linear (hat) degrees of freedom.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

GEOMETRY_NAMES = ("circle", "ellipse", "kite", "square", "moon", "elliptic_cavity")

_CLOSURE_TOL = 1e-12
_DERIV_TOL = 1e-10
_SIMPLE_TOL = 1e-8


class GeometryError(ValueError):
    """Invalid geometry name, parameters, or curve data."""


class MeshSizeError(RuntimeError):
    """Requested mesh exceeds the degree-of-freedom cap."""


@dataclass(frozen=True)
class CurvePiece:
    """One smooth arc: an analytic map of a local parameter interval into R^2.

    ``point`` and ``velocity`` must accept scalar or array parameters in
    [0, length] (the local interval always starts at zero) and return arrays
    with a trailing coordinate axis of size 2.
    """

    point: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    length: float  # parameter length, not arclength


@dataclass(frozen=True)
class ParametricCurve:
    """A closed piecewise-smooth boundary curve, counterclockwise.

    The global parameter concatenates the pieces' local intervals; for the
    single-piece curves this coincides with the natural parametrization
    (e.g. t in [0, 2*pi] for the circle).
    """

    name: str
    pieces: tuple[CurvePiece, ...]
    corner_params: tuple[float, ...]
    classification: str
    _offsets: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        offs = [0.0]
        for p in self.pieces:
            offs.append(offs[-1] + p.length)
        object.__setattr__(self, "_offsets", tuple(offs))
        self._validate()

    # -- parameter bookkeeping -------------------------------------------
    @property
    def param_length(self) -> float:
        return self._offsets[-1]

    def piece_index(self, t: float) -> tuple[int, float]:
        """Global parameter -> (piece index, local parameter)."""
        t = float(t) % self.param_length
        i = int(np.searchsorted(self._offsets, t, side="right") - 1)
        i = min(max(i, 0), len(self.pieces) - 1)
        return i, t - self._offsets[i]

    def point(self, t: float) -> np.ndarray:
        i, s = self.piece_index(t)
        return np.asarray(self.pieces[i].point(s), dtype=float)

    def velocity(self, t: float) -> np.ndarray:
        i, s = self.piece_index(t)
        return np.asarray(self.pieces[i].velocity(s), dtype=float)

    def point_and_normal(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Point on the curve and outward unit normal at parameter ``t``.

        Raises :class:`GeometryError` at a corner parameter, where the
        normal is undefined.
        """
        tm = float(t) % self.param_length
        for tc in self.corner_params:
            if tm == tc % self.param_length:
                raise GeometryError(f"normal undefined at corner parameter t={t}")
        v = self.velocity(t)
        speed = float(np.hypot(v[0], v[1]))
        tangent = v / speed
        normal = np.array([tangent[1], -tangent[0]])  # rotate by -pi/2
        return self.point(t), normal

    def diameter(self) -> float:
        pts = self.sample(64)[1]
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(d2.max()))

    def sample(self, per_piece: int) -> tuple[np.ndarray, np.ndarray]:
        """Interior-point samples (global params, points) of every piece."""
        ts, ps = [], []
        for i, piece in enumerate(self.pieces):
            s = (np.arange(per_piece) + 0.5) / per_piece * piece.length
            ts.append(s + self._offsets[i])
            ps.append(np.asarray(piece.point(s), dtype=float))
        return np.concatenate(ts), np.vstack(ps)

    # -- construction-time checks ----------------------------------------
    def _validate(self):
        npieces = len(self.pieces)
        for i, piece in enumerate(self.pieces):
            nxt = self.pieces[(i + 1) % npieces]
            gap = np.linalg.norm(
                np.asarray(piece.point(piece.length)) - np.asarray(nxt.point(0.0))
            )
            if gap > _CLOSURE_TOL:
                raise GeometryError(
                    f"{self.name}: pieces {i} and {(i + 1) % npieces} leave a gap {gap:.2e}"
                )
            s = np.linspace(0.0, piece.length, 64)
            v = np.asarray(piece.velocity(s), dtype=float)
            if np.min(np.hypot(v[..., 0], v[..., 1])) <= _DERIV_TOL:
                raise GeometryError(f"{self.name}: vanishing derivative on piece {i}")
        if npieces > 2:
            _, pts = self.sample(64)
            per = 64
            for i in range(npieces):
                for j in range(i + 2, npieces):
                    if i == 0 and j == npieces - 1:
                        continue  # cyclically adjacent
                    di = pts[i * per:(i + 1) * per]
                    dj = pts[j * per:(j + 1) * per]
                    d2 = np.sum((di[:, None, :] - dj[None, :, :]) ** 2, axis=-1)
                    if d2.min() < _SIMPLE_TOL**2:
                        raise GeometryError(
                            f"{self.name}: pieces {i} and {j} nearly intersect"
                        )


@dataclass(frozen=True)
class BoundaryMesh:
    """Piecewise-linear panel mesh with nodes on the curve.

    ``nodes[p]`` and ``nodes[(p+1) % n_dof]`` are the endpoints of panel
    ``p``; the trial space is the continuous piecewise-linear hat functions
    on this closed polygon (one per node).
    """

    curve_name: str
    nodes: np.ndarray          # (n, 2), on the curve
    node_params: np.ndarray    # (n,)  global curve parameter of each node
    corner_nodes: np.ndarray   # indices of nodes sitting at curve corners
    k: float
    ppw: float

    def __post_init__(self):
        for arr in (self.nodes, self.node_params, self.corner_nodes):
            arr.setflags(write=False)

    @property
    def n_dof(self) -> int:
        return self.nodes.shape[0]

    @property
    def panel_vectors(self) -> np.ndarray:
        return np.roll(self.nodes, -1, axis=0) - self.nodes

    @property
    def panel_lengths(self) -> np.ndarray:
        v = self.panel_vectors
        return np.hypot(v[:, 0], v[:, 1])

    @property
    def panel_tangents(self) -> np.ndarray:
        return self.panel_vectors / self.panel_lengths[:, None]

    @property
    def outward_normals(self) -> np.ndarray:
        t = self.panel_tangents
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    @property
    def panel_midpoints(self) -> np.ndarray:
        return self.nodes + 0.5 * self.panel_vectors

    @property
    def h_max(self) -> float:
        return float(self.panel_lengths.max())

    @property
    def perimeter(self) -> float:
        return float(self.panel_lengths.sum())

    def mesh_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.nodes).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# built-in geometries
# ---------------------------------------------------------------------------

def _arc_piece(cx, cy, rx, ry, t0, t1) -> CurvePiece:
    """Elliptic arc (cx + rx cos t, cy + ry sin t), local parameter t - t0."""
    span = t1 - t0

    def pt(s):
        t = t0 + np.asarray(s, dtype=float)
        return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=-1)

    def vel(s):
        t = t0 + np.asarray(s, dtype=float)
        return np.stack([-rx * np.sin(t), ry * np.cos(t)], axis=-1)

    if span < 0:
        # reversed traversal: local s runs 0..|span| while t runs t0..t1
        def pt(s):  # noqa: F811
            t = t0 - np.asarray(s, dtype=float)
            return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=-1)

        def vel(s):  # noqa: F811
            t = t0 - np.asarray(s, dtype=float)
            return np.stack([rx * np.sin(t), -ry * np.cos(t)], axis=-1)

    return CurvePiece(pt, vel, abs(span))


def _segment_piece(a, b) -> CurvePiece:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.linalg.norm(b - a))
    direction = (b - a) / length

    def pt(s):
        s = np.asarray(s, dtype=float)
        return a + s[..., None] * direction

    def vel(s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(direction, s.shape + (2,)).copy()

    return CurvePiece(pt, vel, length)


def make_geometry(name: str, params: dict | None = None) -> ParametricCurve:
    """Build one of the six benchmark obstacles.

    Parameters
    ----------
    name
        One of ``circle``, ``ellipse``, ``kite``, ``square``, ``moon``,
        ``elliptic_cavity``.
    params
        Optional overrides: ``radius`` (circle), ``semi_x``/``semi_y``
        (ellipse), ``side`` (square).
    """
    params = dict(params or {})

    def _positive(key, default):
        v = float(params.pop(key, default))
        if v <= 0:
            raise GeometryError(f"{name}: parameter {key} must be positive, got {v}")
        return v

    if name == "circle":
        r = _positive("radius", 1.0)
        piece = CurvePiece(
            lambda t: np.stack([r * np.cos(t), r * np.sin(t)], axis=-1),
            lambda t: np.stack([-r * np.sin(np.asarray(t, float)),
                                r * np.cos(np.asarray(t, float))], axis=-1),
            2 * math.pi,
        )
        curve = ParametricCurve(name, (piece,), (), "smooth_curved")
    elif name == "ellipse":
        ax = _positive("semi_x", 1.0)
        ay = _positive("semi_y", 0.5)
        piece = CurvePiece(
            lambda t: np.stack([ax * np.cos(t), ay * np.sin(t)], axis=-1),
            lambda t: np.stack([-ax * np.sin(np.asarray(t, float)),
                                ay * np.cos(np.asarray(t, float))], axis=-1),
            2 * math.pi,
        )
        curve = ParametricCurve(name, (piece,), (), "smooth_curved")
    elif name == "kite":
        def pt(t):
            t = np.asarray(t, dtype=float)
            return np.stack([np.cos(t) - 0.65 * np.cos(2 * t) - 0.65,
                             1.5 * np.sin(t)], axis=-1)

        def vel(t):
            t = np.asarray(t, dtype=float)
            return np.stack([-np.sin(t) + 1.3 * np.sin(2 * t), 1.5 * np.cos(t)], axis=-1)

        curve = ParametricCurve(name, (CurvePiece(pt, vel, 2 * math.pi),), (), "smooth")
    elif name == "square":
        half = 0.5 * _positive("side", 2.0)
        corners = [(half, -half), (half, half), (-half, half), (-half, -half)]
        pieces = tuple(
            _segment_piece(corners[i], corners[(i + 1) % 4]) for i in range(4)
        )
        offs = np.cumsum([0.0] + [p.length for p in pieces[:-1]])
        curve = ParametricCurve(name, pieces, tuple(offs), "piecewise_smooth")
    elif name == "moon":
        # outer circular arc, two flat closures, inner elliptic arc (reversed)
        circle_arc = _arc_piece(0.25, 0.0, 1.0, 1.0, -math.pi / 2, math.pi / 2)
        top = _segment_piece((0.25, 1.0), (0.0, 1.0))
        ellipse_arc = _arc_piece(0.0, 0.0, 0.5, 1.0, math.pi / 2, -math.pi / 2)
        bottom = _segment_piece((0.0, -1.0), (0.25, -1.0))
        pieces = (circle_arc, top, ellipse_arc, bottom)
        offs = np.cumsum([0.0] + [p.length for p in pieces[:-1]])
        curve = ParametricCurve(name, pieces, tuple(offs), "piecewise_curved")
    elif name == "elliptic_cavity":
        phi0 = 7 * math.pi / 10
        phi1 = math.acos(math.cos(phi0) / 1.3)
        outer = _arc_piece(0.0, 0.0, 1.3, 0.6, -phi1, phi1)
        inner = _arc_piece(0.0, 0.0, 1.0, 0.5, phi0, -phi0)
        top = _segment_piece(outer.point(outer.length), inner.point(0.0))
        bottom = _segment_piece(inner.point(inner.length), outer.point(0.0))
        pieces = (outer, top, inner, bottom)
        offs = np.cumsum([0.0] + [p.length for p in pieces[:-1]])
        curve = ParametricCurve(name, pieces, tuple(offs), "trapping")
    else:
        raise GeometryError(f"unknown geometry {name!r}; choose from {GEOMETRY_NAMES}")

    if params:
        raise GeometryError(f"{name}: unknown parameter overrides {sorted(params)}")
    return curve


# ---------------------------------------------------------------------------
# arclength machinery and meshing
# ---------------------------------------------------------------------------

_GL16 = leggauss(16)


def _cumulative_arclength(piece: CurvePiece, n_sub: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative arclength at n_sub+1 equispaced local parameters."""
    edges = np.linspace(0.0, piece.length, n_sub + 1)
    xg, wg = _GL16
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    tg = mid[:, None] + half[:, None] * xg[None, :]
    v = np.asarray(piece.velocity(tg.ravel()), dtype=float).reshape(n_sub, xg.size, 2)
    speed = np.hypot(v[..., 0], v[..., 1])
    seg = half * (speed @ wg)
    return edges, np.concatenate([[0.0], np.cumsum(seg)])


def piece_arclength(piece: CurvePiece, rel_tol: float = 1e-10) -> float:
    """Arclength of one piece by adaptive composite Gauss sampling of |gamma'|."""
    n = 16
    _, cum = _cumulative_arclength(piece, n)
    prev = cum[-1]
    for _ in range(12):
        n *= 2
        _, cum = _cumulative_arclength(piece, n)
        if abs(cum[-1] - prev) <= rel_tol * abs(cum[-1]):
            return float(cum[-1])
        prev = cum[-1]
    return float(cum[-1])


def _equi_arclength_params(piece: CurvePiece, m: int) -> np.ndarray:
    """Local parameters of m+1 nodes equispaced in arclength (ends included)."""
    n_sub = max(1024, 16 * m)
    edges, cum = _cumulative_arclength(piece, n_sub)
    total = cum[-1]
    targets = np.linspace(0.0, total, m + 1)
    t = np.interp(targets, cum, edges)
    # two Newton corrections: solve s(t) = target with s'(t) = |gamma'(t)|
    for _ in range(2):
        inner = t[1:-1]
        s_here = np.interp(inner, edges, cum)
        v = np.asarray(piece.velocity(inner), dtype=float)
        speed = np.hypot(v[..., 0], v[..., 1])
        inner = inner - (s_here - targets[1:-1]) / speed
        t[1:-1] = np.clip(inner, 0.0, piece.length)
    return t


def build_mesh(
    curve: ParametricCurve,
    k: float,
    ppw: float = 10.0,
    dof_cap: int = 40000,
    min_panels_per_piece: int = 8,
) -> BoundaryMesh:
    """Mesh the curve so that every panel is shorter than (2*pi/k)/ppw.

    Nodes are equispaced in arclength within each smooth piece; piece
    junctions (in particular all corners) are always nodes.
    """
    if k <= 0:
        raise GeometryError(f"wavenumber must be positive, got {k}")
    if ppw < 2:
        raise GeometryError(f"points per wavelength must be >= 2, got {ppw}")
    h_target = (2 * math.pi / k) / ppw

    lengths = [piece_arclength(p) for p in curve.pieces]
    counts = [
        max(min_panels_per_piece, int(math.ceil(L / h_target - 1e-7 * max(1.0, L / h_target))))
        for L in lengths
    ]
    n_dof = sum(counts)
    if n_dof > dof_cap:
        raise MeshSizeError(
            f"{curve.name}: mesh at k={k}, ppw={ppw} needs {n_dof} dof > cap {dof_cap}"
        )

    nodes, params, corner_nodes = [], [], []
    offset_nodes = 0
    multi = len(curve.pieces) > 1
    for i, (piece, m) in enumerate(zip(curve.pieces, counts)):
        t_local = _equi_arclength_params(piece, m)[:-1]  # drop shared end node
        pts = np.asarray(piece.point(t_local), dtype=float).reshape(-1, 2)
        nodes.append(pts)
        params.append(t_local + curve._offsets[i])
        if multi:
            corner_nodes.append(offset_nodes)  # junction node at piece start
        offset_nodes += m
    return BoundaryMesh(
        curve_name=curve.name,
        nodes=np.vstack(nodes),
        node_params=np.concatenate(params),
        corner_nodes=np.asarray(corner_nodes, dtype=int),
        k=float(k),
        ppw=float(ppw),
    )


def point_and_normal(curve: ParametricCurve, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Module-level convenience wrapper around the curve method."""
    return curve.point_and_normal(t)
