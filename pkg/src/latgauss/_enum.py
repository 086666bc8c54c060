"""Branch-and-bound lattice point enumeration (Fincke-Pohst over the GSO).

The search runs level-by-level on numpy float64 arrays with a slightly
inflated radius; candidates whose floating norm lands near the boundary are
re-checked in exact rational arithmetic, so the returned set is exactly the
set of lattice points in the closed ball.  Output order is lexicographic
ascending on the coefficient vectors.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .exactlin import Mat, Vec, dot, norm_sq, vec_sub

_MAX_NODES = 80_000_000  # hard cap on intermediate prefix count


class EnumerationOverflow(RuntimeError):
    pass


def gso_data(basis: Mat):
    """Exact GSO of row-vectors: returns (gs_vectors, gs_norms_sq, mu).

    mu[i][j] = <b_i, b~_j> / ||b~_j||^2 for j < i.
    """
    d = len(basis)
    gs: list[Vec] = []
    gs_nsq: list[Fraction] = []
    mu = [[Fraction(0)] * d for _ in range(d)]
    for i in range(d):
        v = basis[i]
        for j in range(i):
            if gs_nsq[j] == 0:
                raise ValueError("basis rows are linearly dependent")
            mu[i][j] = dot(basis[i], gs[j]) / gs_nsq[j]
            v = vec_sub(v, tuple(mu[i][j] * x for x in gs[j]))
        gs.append(v)
        gs_nsq.append(norm_sq(v))
    if any(x == 0 for x in gs_nsq):
        raise ValueError("basis rows are linearly dependent")
    return gs, gs_nsq, mu


def enumerate_coeffs(basis: Mat, center: Vec | None, radius_sq: Fraction) -> np.ndarray:
    """All integer coefficient vectors z with ||B^T z - center||^2 <= radius_sq.

    basis rows span the lattice; center must lie in their span (components
    orthogonal to the span are ignored after projection).  Closed-ball
    semantics are exact.  Returns an (m, d) int64 array sorted lexicographically.
    """
    d = len(basis)
    radius_sq = Fraction(radius_sq)
    if radius_sq < 0:
        return np.zeros((0, d), dtype=np.int64)
    gs, gs_nsq, mu = gso_data(basis)

    # center coordinates along the GSO directions
    if center is None:
        c = [Fraction(0)] * d
        resid_sq = Fraction(0)
    else:
        c = [dot(center, gs[j]) / gs_nsq[j] for j in range(d)]
        proj = [Fraction(0)] * len(basis[0])
        for j in range(d):
            proj = [p + c[j] * g for p, g in zip(proj, gs[j])]
        resid_sq = norm_sq(vec_sub(center, tuple(proj)))
    # the component of the center orthogonal to span(B) contributes a fixed
    # offset; points exist only if it fits inside the ball
    eff_rsq = radius_sq - resid_sq
    if eff_rsq < 0:
        return np.zeros((0, d), dtype=np.int64)

    mu_f = np.array([[float(mu[i][j]) for j in range(d)] for i in range(d)])
    gs_nsq_f = np.array([float(x) for x in gs_nsq])
    c_f = np.array([float(x) for x in c])
    rsq_f = float(eff_rsq)
    slack = rsq_f * 1e-9 + 1e-12

    # breadth-first over levels i = d-1 .. 0; prefix state:
    #   zs: (m, d) with columns > i filled, pnorm: partial squared norm,
    #   shift[j] = sum_{k > i} z_k * mu[k][j] for the remaining levels j <= i
    zs = np.zeros((1, d), dtype=np.int64)
    pnorm = np.zeros(1)
    shift = np.zeros((1, d))
    for i in range(d - 1, -1, -1):
        ci = c_f[i] - shift[:, i]
        ri = np.sqrt(np.maximum(rsq_f + slack - pnorm, 0.0) / gs_nsq_f[i])
        lo = np.ceil(ci - ri - 1e-9).astype(np.int64)
        hi = np.floor(ci + ri + 1e-9).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        total = int(cnt.sum())
        if total == 0:
            return np.zeros((0, d), dtype=np.int64)
        if total > _MAX_NODES:
            raise EnumerationOverflow(f"enumeration exceeds {_MAX_NODES} nodes")
        keep = cnt > 0
        idx = np.repeat(np.flatnonzero(keep), cnt[keep])
        # z_i values: lo[row] + offset within each row's run
        starts = np.concatenate(([0], np.cumsum(cnt[keep])[:-1]))
        offs = np.arange(total, dtype=np.int64) - np.repeat(starts, cnt[keep])
        zi = lo[idx] + offs
        zs = zs[idx]
        zs[:, i] = zi
        dev = zi - ci[idx]
        pnorm = pnorm[idx] + dev * dev * gs_nsq_f[i]
        ok = pnorm <= rsq_f + slack
        zs, pnorm = zs[ok], pnorm[ok]
        if i > 0:
            shift = shift[idx][ok] + zi[ok, None] * mu_f[i, :][None, :]

    if len(zs) == 0:
        return zs
    # exact filter for candidates near the boundary
    band = abs(rsq_f) * 1e-7 + 1e-9
    near = np.abs(pnorm - rsq_f) <= band
    if near.any():
        keep_mask = np.ones(len(zs), dtype=bool)
        for row in np.flatnonzero(near):
            keep_mask[row] = _exact_in_ball(basis, center, zs[row], radius_sq)
        zs = zs[keep_mask]
    order = np.lexsort(zs.T[::-1])
    return zs[order]


def _exact_in_ball(basis: Mat, center: Vec | None, z, radius_sq) -> bool:
    x = [Fraction(0)] * len(basis[0])
    for j, zj in enumerate(z):
        zj = int(zj)
        if zj:
            x = [xi + zj * bi for xi, bi in zip(x, basis[j])]
    if center is not None:
        x = [xi - ti for xi, ti in zip(x, center)]
    return sum(xi * xi for xi in x) <= radius_sq
