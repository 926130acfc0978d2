"""Gauss rules, a log-weighted Gauss rule, and panel-pair integration.

The Galerkin entries are double integrals over panel pairs of

    f_logcoeff(x, y) * ln|x - y| + f_smooth(x, y).

Separated pairs are handled by a tensor Gauss-Legendre rule on the whole
integrand.  For adjacent and coincident pairs the variable u = s - t
(difference of arclength coordinates measured continuously across the shared
node) isolates the singularity:

    ln|x - y| = ln u + ln(|x - y| / u),

where the second term is bounded because flat panels keep |x - y|/u above a
positive constant.  The ln u factor is integrated exactly along u-lines with
a Gauss rule for the weight ln(1/xi) (built once per order by the modified
Chebyshev algorithm from shifted-Legendre modified moments, then
Golub-Welsch); the bounded remainder is folded into the smooth tensor part.

The same point sets drive both the public single-pair integrator and the
vectorized assembly (see :mod:`helmbem.assembly`), so there is a single
source of truth for the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str  # "gauss_legendre" on [-1,1] or "log_gauss" on [0,1]

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1]; exact to degree 2n-1."""
    if not 1 <= n <= 64:
        raise ValueError(f"gauss_legendre order must be in [1, 64], got {n}")
    x, w = leggauss(n)
    return QuadratureRule(x, w, "gauss_legendre")


@lru_cache(maxsize=None)
def log_gauss(n: int) -> QuadratureRule:
    """n-point Gauss rule for integral_0^1 f(x) ln(1/x) dx; exact to degree 2n-1.

    Recurrence coefficients for the weight ln(1/x) come from the modified
    Chebyshev algorithm fed with its modified moments against monic shifted
    Legendre polynomials,

        m_0 = 1,   m_l = (-1)^l / (l (l+1)) * (l!)^2 / (2l)!   (l >= 1),

    which keeps the map moments -> coefficients well conditioned.
    """
    if not 1 <= n <= 32:
        raise ValueError(f"log_gauss order must be in [1, 32], got {n}")
    N = 2 * n
    a = np.full(N, 0.5)
    b = np.array([0.0] + [j * j / (4.0 * (4.0 * j * j - 1.0)) for j in range(1, N)])
    m = np.zeros(N)
    m[0] = 1.0
    for l in range(1, N):
        m[l] = (-1) ** l / (l * (l + 1.0)) * math.factorial(l) ** 2 / math.factorial(2 * l)

    alpha = np.zeros(n)
    beta = np.zeros(n)
    sigma_prev = np.zeros(N)
    sigma = m.copy()
    alpha[0] = a[0] + m[1] / m[0]
    beta[0] = m[0]
    for j in range(1, n):
        sigma_next = np.zeros(N)
        for l in range(j, N - j):
            sigma_next[l] = (
                sigma[l + 1]
                - (alpha[j - 1] - a[l]) * sigma[l]
                - beta[j - 1] * sigma_prev[l]
                + b[l] * sigma[l - 1]
            )
        alpha[j] = a[j] + sigma_next[j + 1] / sigma_next[j] - sigma[j] / sigma[j - 1]
        beta[j] = sigma_next[j] / sigma[j - 1]
        sigma_prev, sigma = sigma, sigma_next

    if n == 1:
        return QuadratureRule(np.array([alpha[0]]), np.array([beta[0]]), "log_gauss")
    nodes, vecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    weights = beta[0] * vecs[0, :] ** 2
    return QuadratureRule(nodes, weights, "log_gauss")


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    r = gauss_legendre(n)
    return 0.5 * (r.nodes + 1.0), 0.5 * r.weights


# ---------------------------------------------------------------------------
# panel-pair relations and point sets
# ---------------------------------------------------------------------------

def panel_relation(mesh, p: int, q: int) -> str:
    """coincident / adjacent / separated by shared-node topology."""
    n = mesh.n_dof
    p, q = p % n, q % n
    if p == q:
        return "coincident"
    shared = len({p, (p + 1) % n} & {q, (q + 1) % n})
    if shared == 1:
        return "adjacent"
    if shared == 2:
        raise ValueError(f"panels {p} and {q} share both nodes; broken mesh topology")
    return "separated"


@dataclass(frozen=True)
class PairPointSet:
    """Quadrature data for a batch of panel pairs with a shared singularity scheme.

    For every point: ``w_smooth`` weights the smooth part of the integrand
    (for kernels, total - log_coeff*ln r) and ``w_logc`` weights the bare
    log coefficient; together they integrate f_logcoeff*ln r + f_smooth.
    ``sx``/``sy`` are canonical local panel coordinates in [0, 1] used to
    evaluate shape functions.
    """

    x: np.ndarray        # (P, N, 2)
    y: np.ndarray        # (P, N, 2)
    r: np.ndarray        # (P, N)
    w_smooth: np.ndarray
    w_logc: np.ndarray
    sx: np.ndarray
    sy: np.ndarray


def coincident_pointset(a, tau, lengths, order: int) -> PairPointSet:
    """Self-interaction scheme for straight panels a + s*tau, s in [0, L].

    On a straight panel |x(s) - y(t)| = |s - t| exactly, so the log part is
    handled by u-line integration with no bounded remainder, and the smooth
    part by an asymmetric (order, order+1) tensor grid included in both
    orientations at half weight, which keeps self-blocks exactly symmetric.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    tau = np.atleast_2d(np.asarray(tau, dtype=float))
    L = np.atleast_1d(np.asarray(lengths, dtype=float))
    P = L.shape[0]
    m = order

    xs, ws = _gauss01(m)
    xt, wt = _gauss01(m + 1)
    # tensor smooth part, both orientations at half weight
    Sg = xs[:, None] * np.ones((1, m + 1))
    Tg = np.ones((m, 1)) * xt[None, :]
    wst = (ws[:, None] * wt[None, :]).ravel()
    s_unit = np.concatenate([Sg.ravel(), Tg.ravel()])
    t_unit = np.concatenate([Tg.ravel(), Sg.ravel()])
    w_unit = 0.5 * np.concatenate([wst, wst])

    # log part: u = L*xi lines, chord integral over t in [0, L-u], both
    # orientations (t+u, t) and (t, t+u)
    lg = log_gauss(order)
    xg, wg = _gauss01(order)
    xc, wc = _gauss01(order)
    u_nodes = np.concatenate([lg.nodes, xg])          # unit u coordinates
    u_w_kind = np.concatenate([-lg.weights, wg])      # -log rule; +gauss (ln L factor later)
    is_gauss = np.concatenate([np.zeros_like(lg.nodes, dtype=bool),
                               np.ones_like(xg, dtype=bool)])
    TT = xc[None, :] * (1.0 - u_nodes[:, None])       # (nu, nc) chord points
    chord_w = wc[None, :] * (1.0 - u_nodes[:, None])
    s_log = np.concatenate([(TT + u_nodes[:, None]).ravel(), TT.ravel()])
    t_log = np.concatenate([TT.ravel(), (TT + u_nodes[:, None]).ravel()])

    # assemble per-panel arrays
    N_sm = s_unit.size
    N_lg = s_log.size
    s_all = np.concatenate([s_unit, s_log])[None, :] * L[:, None]
    t_all = np.concatenate([t_unit, t_log])[None, :] * L[:, None]
    x = a[:, None, :] + s_all[:, :, None] * tau[:, None, :]
    y = a[:, None, :] + t_all[:, :, None] * tau[:, None, :]
    r = np.abs(s_all - t_all)

    w_smooth = np.zeros((P, N_sm + N_lg))
    w_logc = np.zeros((P, N_sm + N_lg))
    w_smooth[:, :N_sm] = (L**2)[:, None] * w_unit[None, :]
    # u-line weights: L^2 * (chord_w) * (-wl  or  wg*ln L)
    base = (u_w_kind[:, None] * chord_w).ravel()
    lnL_fac = np.where(np.repeat(is_gauss, TT.shape[1]), 1.0, 0.0)
    per_point = np.concatenate([base, base])
    lnL_mask = np.concatenate([lnL_fac, lnL_fac])
    w_logc[:, N_sm:] = (L**2)[:, None] * per_point[None, :] * np.where(
        lnL_mask[None, :] > 0, np.log(L)[:, None], 1.0
    )
    return PairPointSet(
        x=x, y=y, r=r,
        w_smooth=w_smooth, w_logc=w_logc,
        sx=s_all / L[:, None], sy=t_all / L[:, None],
    )


def adjacent_pointset(shared, ex, ey, lx, ly, x_starts_at_shared, y_starts_at_shared,
                      order: int) -> PairPointSet:
    """Scheme for ordered pairs of panels meeting at one node.

    ``ex``/``ey`` are unit directions along each panel pointing away from the
    shared node; sigma and t' are distances from it, u = sigma + t'.  The
    boolean flags say whether the shared node is the panel's canonical start
    (node index order), which fixes the orientation of the shape-function
    coordinate.
    """
    shared = np.atleast_2d(np.asarray(shared, dtype=float))
    ex = np.atleast_2d(np.asarray(ex, dtype=float))
    ey = np.atleast_2d(np.asarray(ey, dtype=float))
    Lx = np.atleast_1d(np.asarray(lx, dtype=float))
    Ly = np.atleast_1d(np.asarray(ly, dtype=float))
    fx = np.atleast_1d(np.asarray(x_starts_at_shared, dtype=bool))
    fy = np.atleast_1d(np.asarray(y_starts_at_shared, dtype=bool))
    P = Lx.shape[0]

    m = order
    xg, wg = _gauss01(m)
    lg = log_gauss(order)

    # ---- tensor part over [0,Lx] x [0,Ly]: smooth + bounded log remainder
    sig = Lx[:, None] * xg[None, :]
    tp = Ly[:, None] * xg[None, :]
    SIG = np.repeat(sig[:, :, None], m, axis=2)
    TP = np.repeat(tp[:, None, :], m, axis=1)
    W2 = (wg[:, None] * wg[None, :])[None, :, :] * (Lx * Ly)[:, None, None]
    Xt = shared[:, None, None, :] + SIG[..., None] * ex[:, None, None, :]
    Yt = shared[:, None, None, :] + TP[..., None] * ey[:, None, None, :]
    D = Xt - Yt
    Rt = np.hypot(D[..., 0], D[..., 1])
    Ut = SIG + TP
    lnratio = np.log(Rt / Ut)

    N_t = m * m
    x_parts = [Xt.reshape(P, N_t, 2)]
    y_parts = [Yt.reshape(P, N_t, 2)]
    r_parts = [Rt.reshape(P, N_t)]
    wsm_parts = [W2.reshape(P, N_t)]
    wlc_parts = [(W2 * lnratio).reshape(P, N_t)]
    sig_parts = [SIG.reshape(P, N_t)]
    tp_parts = [TP.reshape(P, N_t)]

    # ---- u-line log part: subdivide [0, u1], [u1, u2], [u2, U]
    u1 = np.minimum(Lx, Ly)
    u2 = np.maximum(Lx, Ly)
    U = Lx + Ly
    xc, wc = _gauss01(m)

    def add_u_block(u_abs, w_u):
        # u_abs, w_u: (P, nu); chord sigma in [max(0,u-Ly), min(u,Lx)]
        lo = np.maximum(0.0, u_abs - Ly[:, None])
        hi = np.minimum(u_abs, Lx[:, None])
        clen = np.maximum(hi - lo, 0.0)
        S2 = lo[:, :, None] + clen[:, :, None] * xc[None, None, :]
        T2 = u_abs[:, :, None] - S2
        Wp = w_u[:, :, None] * clen[:, :, None] * wc[None, None, :]
        X2 = shared[:, None, None, :] + S2[..., None] * ex[:, None, None, :]
        Y2 = shared[:, None, None, :] + T2[..., None] * ey[:, None, None, :]
        Dxy = X2 - Y2
        R2 = np.hypot(Dxy[..., 0], Dxy[..., 1])
        nu = u_abs.shape[1]
        N = nu * m
        x_parts.append(X2.reshape(P, N, 2))
        y_parts.append(Y2.reshape(P, N, 2))
        r_parts.append(np.maximum(R2, 1e-300).reshape(P, N))
        wsm_parts.append(np.zeros((P, N)))
        wlc_parts.append(Wp.reshape(P, N))
        sig_parts.append(S2.reshape(P, N))
        tp_parts.append(T2.reshape(P, N))

    # [0, u1]: ln u = ln u1 + ln(xi); log rule eats ln(1/xi), gauss eats ln u1
    u_abs = u1[:, None] * lg.nodes[None, :]
    add_u_block(u_abs, -(u1[:, None] * lg.weights[None, :]))
    u_abs = u1[:, None] * xg[None, :]
    add_u_block(u_abs, (u1 * np.log(u1))[:, None] * wg[None, :])
    # [u1, u2] and [u2, U]: ln u is smooth there (zero-width if Lx == Ly)
    for a_seg, b_seg in ((u1, u2), (u2, U)):
        width = b_seg - a_seg
        u_abs = a_seg[:, None] + width[:, None] * xg[None, :]
        w_u = width[:, None] * wg[None, :] * np.log(np.maximum(u_abs, 1e-300))
        add_u_block(u_abs, w_u)

    x = np.concatenate(x_parts, axis=1)
    y = np.concatenate(y_parts, axis=1)
    r = np.concatenate(r_parts, axis=1)
    w_smooth = np.concatenate(wsm_parts, axis=1)
    w_logc = np.concatenate(wlc_parts, axis=1)
    sig_all = np.concatenate(sig_parts, axis=1)
    tp_all = np.concatenate(tp_parts, axis=1)

    su = sig_all / Lx[:, None]
    tu = tp_all / Ly[:, None]
    sx = np.where(fx[:, None], su, 1.0 - su)
    sy = np.where(fy[:, None], tu, 1.0 - tu)
    return PairPointSet(x=x, y=y, r=r, w_smooth=w_smooth, w_logc=w_logc, sx=sx, sy=sy)


def separated_pointset(ax, taux, lx, ay, tauy, ly, order: int) -> PairPointSet:
    """Plain tensor Gauss grid; the whole integrand is evaluated directly."""
    ax = np.atleast_2d(np.asarray(ax, dtype=float))
    ay = np.atleast_2d(np.asarray(ay, dtype=float))
    taux = np.atleast_2d(np.asarray(taux, dtype=float))
    tauy = np.atleast_2d(np.asarray(tauy, dtype=float))
    Lx = np.atleast_1d(np.asarray(lx, dtype=float))
    Ly = np.atleast_1d(np.asarray(ly, dtype=float))
    P = Lx.shape[0]
    xg, wg = _gauss01(order)
    m = order
    S = Lx[:, None] * xg[None, :]
    T = Ly[:, None] * xg[None, :]
    X = ax[:, None, :] + S[:, :, None] * taux[:, None, :]
    Y = ay[:, None, :] + T[:, :, None] * tauy[:, None, :]
    Xg = np.repeat(X[:, :, None, :], m, axis=2).reshape(P, m * m, 2)
    Yg = np.repeat(Y[:, None, :, :], m, axis=1).reshape(P, m * m, 2)
    D = Xg - Yg
    R = np.hypot(D[..., 0], D[..., 1])
    W = ((wg[:, None] * wg[None, :])[None, :, :] * (Lx * Ly)[:, None, None]).reshape(P, m * m)
    sx = np.repeat(xg[None, :, None], m, axis=2).reshape(1, m * m) * np.ones((P, 1))
    sy = np.repeat(xg[None, None, :], m, axis=1).reshape(1, m * m) * np.ones((P, 1))
    # separated points integrate the full kernel: w_smooth carries the weight
    # and w_logc = w * ln r reconstitutes log_coeff*ln r + smooth = total
    return PairPointSet(x=Xg, y=Yg, r=R, w_smooth=W, w_logc=W * np.log(R), sx=sx, sy=sy)


# ---------------------------------------------------------------------------
# public single-pair integral
# ---------------------------------------------------------------------------

def panel_pair_integrate(f_smooth, f_logcoeff, panel_x, panel_y, relation: str,
                         order: int = 12):
    """Integrate f_logcoeff(x,y) ln|x-y| + f_smooth(x,y) over two panels.

    ``panel_x`` and ``panel_y`` are (start, end) point pairs; ``relation``
    must be the shared-node relation of the two panels (see
    :func:`panel_relation`).  The callables receive point arrays of shape
    (..., 2) and must broadcast.
    """
    ax, bx = (np.asarray(p, dtype=float) for p in panel_x)
    ay, by = (np.asarray(p, dtype=float) for p in panel_y)
    lx = float(np.linalg.norm(bx - ax))
    ly = float(np.linalg.norm(by - ay))
    taux = (bx - ax) / lx
    tauy = (by - ay) / ly

    if relation == "separated":
        ps = separated_pointset(ax, taux, lx, ay, tauy, ly, order)
        vals = f_smooth(ps.x, ps.y) + f_logcoeff(ps.x, ps.y) * np.log(ps.r)
        return complex(np.sum(ps.w_smooth * vals))
    if relation == "coincident":
        if not np.allclose(ax, ay) or not np.allclose(bx, by):
            raise ValueError("coincident relation requires identical panels")
        ps = coincident_pointset(ax, taux, lx, order)
    elif relation == "adjacent":
        # locate the shared node among the four endpoints
        if np.allclose(bx, ay, atol=1e-12):
            shared, ex_, ey_, fx_, fy_ = bx, -taux, tauy, False, True
        elif np.allclose(by, ax, atol=1e-12):
            shared, ex_, ey_, fx_, fy_ = ax, taux, -tauy, True, False
        elif np.allclose(ax, ay, atol=1e-12):
            shared, ex_, ey_, fx_, fy_ = ax, taux, tauy, True, True
        elif np.allclose(bx, by, atol=1e-12):
            shared, ex_, ey_, fx_, fy_ = bx, -taux, -tauy, False, False
        else:
            raise ValueError("adjacent relation requires one shared endpoint")
        ps = adjacent_pointset(shared, ex_, ey_, lx, ly, fx_, fy_, order)
    else:
        raise ValueError(f"unknown relation {relation!r}")

    total = np.sum(ps.w_smooth * f_smooth(ps.x, ps.y))
    total = total + np.sum(ps.w_logc * f_logcoeff(ps.x, ps.y))
    return complex(total)
