"""Scattering transform ``t(k) = int e_k(x) q(x) mu(x, k) dm(x)`` and diagnostics."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cgo import CGOConfig, solve_cgo_batch
from .errors import ConfigurationError, NumericalError
from .field import Field, Grid2D

log = logging.getLogger(__name__)

__all__ = [
    "KGrid",
    "ScatteringData",
    "SmallKFit",
    "make_kgrid",
    "scattering_transform",
    "transform_points",
    "find_exceptional_rings",
    "symmetry_defect",
    "small_k_fit",
    "x_norm",
]


@dataclass(frozen=True)
class KGrid:
    """Cartesian k-lattice on ``[-k_max, k_max)^2`` plus a log-spaced ray."""

    k_max: float = 6.0
    m: int = 64
    k_min: float | None = None        # default: two cells
    ray_lo: float = 1e-3
    ray_hi: float = 1e-1
    ray_count: int = 24
    ray_angle: float = 0.3

    def __post_init__(self):
        hk = 2.0 * self.k_max / self.m
        if self.k_min is None:
            object.__setattr__(self, "k_min", 2.0 * hk)
        if self.m < 16 or self.m % 2:
            raise ConfigurationError(f"k-grid size must be even and >= 16, got {self.m}")
        if not (self.k_max > self.k_min > 0):
            raise ConfigurationError("need k_max > k_min > 0")
        if self.k_min < 2.0 * hk - 1e-12:
            raise ConfigurationError(
                f"k_min={self.k_min} excludes fewer than two cells (cell {hk})"
            )
        if self.ray_count and not (0 < self.ray_lo < self.ray_hi):
            raise ConfigurationError("ray needs 0 < ray_lo < ray_hi")

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.k_max, self.m, "k")

    @property
    def hk(self) -> float:
        return 2.0 * self.k_max / self.m

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def active(self) -> np.ndarray:
        r = np.abs(self.points)
        return (r >= self.k_min) & (r < self.k_max)

    @property
    def ray(self) -> np.ndarray:
        if not self.ray_count:
            return np.zeros(0, dtype=complex)
        r = np.geomspace(self.ray_lo, self.ray_hi, self.ray_count)
        return r * np.exp(1j * self.ray_angle)


def make_kgrid(k_max: float = 6.0, m: int = 64, k_min_cells: float = 2.0, **ray) -> KGrid:
    return KGrid(k_max=k_max, m=m, k_min=k_min_cells * 2.0 * k_max / m, **ray)


@dataclass
class ScatteringData:
    kgrid: KGrid
    t: np.ndarray                      # (m, m); 0 where masked
    exceptional: np.ndarray            # (m, m) bool
    tau: float = 0.0
    ray_t: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    ray_exceptional: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    rings: list = field(default_factory=list)     # radii of detected exceptional circles

    @property
    def mask(self) -> np.ndarray:
        """True where a sample does not take part in the inverse problem."""
        return ~self.kgrid.active | self.exceptional

    @property
    def s(self) -> np.ndarray:
        k = self.kgrid.points
        out = np.zeros_like(self.t)
        use = ~self.mask
        out[use] = self.t[use] / (np.pi * np.conj(k[use]))
        return out

    @property
    def ray_k(self) -> np.ndarray:
        return self.kgrid.ray

    def with_t(self, t, ray_t=None, tau=None) -> "ScatteringData":
        return replace(
            self,
            t=t,
            ray_t=self.ray_t if ray_t is None else ray_t,
            tau=self.tau if tau is None else tau,
        )


def _chunk_worker(args):
    qv, L, n, ks, cfg = args
    q = Field(Grid2D(L, n), qv, real=True)
    b = solve_cgo_batch(q, ks, cfg)
    return b.t, b.exceptional, b.residual, b.iterations


def transform_points(q: Field, ks, cfg: CGOConfig | None = None, workers: int = 1):
    """``t`` and exceptional flags at arbitrary nonzero ``ks`` (1-D)."""
    cfg = cfg or CGOConfig()
    ks = np.asarray(ks, dtype=complex).ravel()
    if ks.size == 0:
        return np.zeros(0, complex), np.zeros(0, bool)
    step = cfg.chunk
    jobs = [(q.values, q.grid.L, q.grid.n, ks[i:i + step], cfg) for i in range(0, ks.size, step)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_worker, jobs))
    else:
        parts = [_chunk_worker(j) for j in jobs]
    t = np.concatenate([p[0] for p in parts])
    exc = np.concatenate([p[1] for p in parts])
    iters = np.concatenate([p[3] for p in parts])
    log.debug("transform: %d points, max iterations %d", ks.size, iters.max())
    t = np.where(exc, 0.0, t)
    return t, exc


def find_exceptional_rings(q: Field, radii, angle: float = 0.3, cfg: CGOConfig | None = None,
                           t=None, max_bisect: int = 60):
    """Locate circles of exceptional points crossed by a radial sweep.

    For real radially symmetric ``q`` the amplitude is real on rays and
    ``1/t`` changes sign through an exceptional circle.  Each sign change of
    ``Re(1/t)`` is bisected until the CGO solve itself is flagged
    (non-convergence or blow-up); only confirmed radii are returned.  This is
    a heuristic and says nothing about non-radial potentials.
    """
    cfg = cfg or CGOConfig()
    radii = np.asarray(radii, dtype=float)
    direction = np.exp(1j * angle)
    if t is None:
        t, exc = transform_points(q, radii * direction, cfg)
    else:
        exc = t == 0
    rings = []
    for i in range(len(radii) - 1):
        if exc[i] or exc[i + 1]:
            continue
        a, b = 1.0 / t[i], 1.0 / t[i + 1]
        if np.sign(a.real) == np.sign(b.real):
            continue
        # pole (not a zero) of t: |t| must grow as the interval shrinks
        lo, hi, flo = radii[i], radii[i + 1], a.real
        hit = None
        for _ in range(max_bisect):
            mid = 0.5 * (lo + hi)
            batch = solve_cgo_batch(q, [mid * direction], cfg)
            if batch.exceptional[0]:
                hit = mid
                break
            fm = (1.0 / batch.t[0]).real
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        if hit is not None:
            rings.append(float(hit))
    return rings


def scattering_transform(q: Field, kgrid: KGrid, cfg: CGOConfig | None = None,
                         workers: int = 1, detect_rings: bool = True) -> ScatteringData:
    """``t`` on every active Cartesian sample and on the small-k ray."""
    cfg = cfg or CGOConfig()
    if not q.real and np.max(np.abs(q.values.imag)) > 0:
        raise ConfigurationError("potential must be real")
    kg = kgrid
    act = kg.active
    t = np.zeros((kg.m, kg.m), dtype=complex)
    exc = np.zeros((kg.m, kg.m), dtype=bool)
    tv, ev = transform_points(q, kg.points[act], cfg, workers)
    t[act], exc[act] = tv, ev

    ray_t, ray_exc = transform_points(q, kg.ray, cfg, workers)
    rings = []
    if detect_rings and ray_t.size > 1:
        rings = find_exceptional_rings(q, np.abs(kg.ray), kg.ray_angle, cfg, t=ray_t)
    nexc = int(exc.sum())
    if nexc:
        log.warning("%d exceptional samples masked", nexc)
    return ScatteringData(kg, t, exc, 0.0, ray_t, ray_exc, rings)


def _pair_index(m: int):
    """Index map k -> -k on the FFT-free ordered lattice (row 0 unmatched)."""
    i = np.arange(m)
    return (m - i) % m


def symmetry_defect(sd: ScatteringData) -> float:
    """``max |t(k) - conj t(-k)| / max |t|`` over matched, unmasked pairs."""
    t = sd.t
    m = t.shape[0]
    j = _pair_index(m)
    flip = t[j][:, j]
    ok = ~sd.mask & ~sd.mask[j][:, j]
    ok[0, :] = False
    ok[:, 0] = False
    tmax = np.max(np.abs(t[~sd.mask])) if np.any(~sd.mask) else 0.0
    if tmax == 0 or not ok.any():
        return 0.0
    return float(np.max(np.abs(t[ok] - np.conj(flip[ok]))) / tmax)


@dataclass
class SmallKFit:
    a_est: float
    slope: float
    intercept: float
    gamma_abs: float
    degenerate: bool
    decade_ratio: float


def small_k_fit(sd: ScatteringData, c_inf: float = 1.0, a_ref: float | None = None,
                gamma: float = np.euler_gamma) -> SmallKFit:
    """Fit ``1/t = A + B log|k|`` on the ray.

    For a subcritical potential ``B -> -2/pi`` and
    ``A = (2/pi)(c_inf/a - gamma)``, so ``a`` follows from ``A`` once a value
    of ``gamma`` is assumed.  With ``a_ref`` the relation is inverted for
    ``gamma`` instead.  The fit is flagged degenerate when the mean ``|t|``
    over the lowest decade of the ray is below a tenth of that over the top
    decade, the signature of a critical potential.
    """
    r = np.abs(sd.ray_k)
    t = sd.ray_t
    if r.size < 3:
        raise NumericalError("small-k ray has fewer than three samples", stage="small_k_fit")
    if np.any(sd.ray_exceptional) or np.any(t == 0):
        raise NumericalError("small-k ray contains masked samples", stage="small_k_fit")
    lo = r <= 10 * r[0]
    hi = r >= r[-1] / 10
    ratio = float(np.mean(np.abs(t[lo])) / np.mean(np.abs(t[hi])))
    degenerate = ratio < 0.1
    y = (1.0 / t).real
    B, A = np.polyfit(np.log(r), y, 1)
    a_est = c_inf / (0.5 * np.pi * A + gamma)
    gamma_abs = float("nan") if a_ref is None else c_inf / a_ref - 0.5 * np.pi * A
    return SmallKFit(float(a_est), float(B), float(A), float(gamma_abs), degenerate, ratio)


def x_norm(sd: ScatteringData, n: int = 1, r: float = 1.5, eps: float = 0.1):
    """Discrete ``||s||_2 + ||k^n s||_{r'+eps} + ||k^n s||_r`` and the relation defect.

    The second return value is ``max |conj(k) s(k) + k conj(s(-k))|`` over
    matched samples.
    """
    if not 1 < r < 2:
        raise ConfigurationError("r must lie in (1, 2)")
    s = sd.s
    k = sd.kgrid.points
    w = sd.kgrid.hk ** 2
    use = ~sd.mask
    rp = r / (r - 1.0) + eps

    def lp(f, p):
        return float((w * np.sum(np.abs(f[use]) ** p)) ** (1.0 / p))

    ks = k**n * s
    norm = lp(s, 2.0) + lp(ks, rp) + lp(ks, r)

    m = s.shape[0]
    j = _pair_index(m)
    flip = s[j][:, j]
    ok = use & use[j][:, j]
    ok[0, :] = False
    ok[:, 0] = False
    rel = np.conj(k) * s + k * np.conj(flip)
    defect = float(np.max(np.abs(rel[ok]))) if ok.any() else 0.0
    return norm, defect
