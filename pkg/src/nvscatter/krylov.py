"""Restarted GMRES over a batch of independent systems.

The CGO sweep solves one Lippmann-Schwinger system per spectral parameter k
and the dbar sweep one system per spatial point x.  Each system is small
(a few thousand unknowns) and dominated by FFT work, so solving a stack of
them in lock step with vectorised Arnoldi is far cheaper than looping over
scipy's solver.

With ``real_linear=True`` the operator only needs to be R-linear (it may
involve complex conjugation).  The inner product is then
``Re sum(conj(u) v)``, i.e. the Euclidean product of the real/imaginary
split, and all Hessenberg and Givens data are real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GMRESInfo", "gmres"]


@dataclass
class GMRESInfo:
    residual: np.ndarray      # relative true residual per system
    iterations: np.ndarray    # inner iterations until convergence (or maxiter)
    converged: np.ndarray     # bool per system


def gmres(matvec, b, *, tol=1e-8, restart=30, maxiter=300, real_linear=False, x0=None):
    """Solve ``A x_i = b_i`` for every leading index ``i`` of ``b``.

    ``matvec(v, sel)`` must apply the operator of systems ``sel`` (an index
    array into the batch) to ``v`` of shape ``(len(sel),) + b.shape[1:]``.
    Converged systems are dropped from the batch at each restart.
    """
    b = np.asarray(b, dtype=complex)
    nb = b.shape[0]
    axes = tuple(range(1, b.ndim))
    expand = (slice(None),) + (None,) * (b.ndim - 1)
    hdtype = float if real_linear else complex

    def dot(u, v):
        p = np.sum(np.conj(u) * v, axis=axes)
        return p.real if real_linear else p

    def norm(u):
        return np.sqrt(np.sum(u.real**2 + u.imag**2, axis=axes))

    bnorm = norm(b)
    bscale = np.where(bnorm > 0, bnorm, 1.0)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=complex)
    iterations = np.zeros(nb, dtype=int)
    residual = np.where(bnorm > 0, 1.0, 0.0)
    everyone = np.arange(nb)

    if x0 is None:
        r_all = b.copy()
    else:
        r_all = b - matvec(x, everyone)
    residual = norm(r_all) / bscale
    pending = residual > tol
    total = 0

    while pending.any() and total < maxiter:
        sel = np.flatnonzero(pending)
        r = r_all[sel]
        beta = norm(r)
        m = min(restart, maxiter - total)
        V = np.zeros((m + 1,) + r.shape, dtype=complex)
        V[0] = r / np.where(beta > 0, beta, 1.0)[expand]
        H = np.zeros((len(sel), m + 1, m), dtype=hdtype)
        cs = np.zeros((len(sel), m), dtype=hdtype)
        sn = np.zeros((len(sel), m), dtype=hdtype)
        g = np.zeros((len(sel), m + 1), dtype=hdtype)
        g[:, 0] = beta
        active = np.ones(len(sel), dtype=bool)
        used = 0
        for j in range(m):
            w = matvec(V[j], sel)
            for i in range(j + 1):
                hij = dot(V[i], w)
                H[:, i, j] = hij
                w = w - hij[expand] * V[i]
            hn = norm(w)
            H[:, j + 1, j] = hn
            tiny = hn <= 1e-300
            V[j + 1] = np.where(tiny[expand], 0.0, w / np.where(tiny, 1.0, hn)[expand])
            for i in range(j):
                a, c = H[:, i, j].copy(), H[:, i + 1, j].copy()
                H[:, i, j] = np.conj(cs[:, i]) * a + np.conj(sn[:, i]) * c
                H[:, i + 1, j] = -sn[:, i] * a + cs[:, i] * c
            a, c = H[:, j, j], H[:, j + 1, j]
            d = np.sqrt(np.abs(a) ** 2 + np.abs(c) ** 2)
            dz = d == 0
            dsafe = np.where(dz, 1.0, d)
            cs[:, j] = np.where(dz, 1.0, a / dsafe)
            sn[:, j] = np.where(dz, 0.0, c / dsafe)
            H[:, j, j] = d
            H[:, j + 1, j] = 0.0
            g[:, j + 1] = -sn[:, j] * g[:, j]
            g[:, j] = np.conj(cs[:, j]) * g[:, j]
            total += 1
            used = j + 1
            iterations[sel[active]] += 1
            est = np.abs(g[:, j + 1]) / bscale[sel]
            active &= est > tol
            if not active.any():
                break

        R = H[:, :used, :used].copy()
        diag = np.einsum("bii->bi", R)
        bad = np.abs(diag) == 0
        if bad.any():
            idx = np.nonzero(bad)
            R[idx[0], idx[1], idx[1]] = 1.0
        y = np.linalg.solve(R, g[:, :used, None])[..., 0]
        y = np.where(bad, 0.0, y)
        x[sel] += np.einsum("bj,jb...->b...", y.astype(complex), V[:used])

        r_all[sel] = b[sel] - matvec(x[sel], sel)
        residual[sel] = norm(r_all[sel]) / bscale[sel]
        pending = residual > tol

    converged = residual <= tol
    return x, GMRESInfo(residual=residual, iterations=iterations, converged=converged)
