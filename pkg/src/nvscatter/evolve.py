"""Time evolution of scattering data: ``t(k, tau) = exp(i tau (k^3 + conj(k)^3)) t(k, 0)``."""

from __future__ import annotations

import numpy as np

from .scatter import ScatteringData

__all__ = ["evolve", "phase"]


def phase(k, tau: float):
    k = np.asarray(k)
    return np.exp(1j * tau * 2.0 * np.real(k**3))


def evolve(sd: ScatteringData, tau: float) -> ScatteringData:
    """Advance ``sd`` by ``tau``; repeated calls compose additively."""
    tau = float(tau)
    if tau == 0.0:
        return sd.with_t(sd.t.copy(), sd.ray_t.copy())
    t = sd.t * phase(sd.kgrid.points, tau)
    ray_t = sd.ray_t * phase(sd.ray_k, tau) if sd.ray_t.size else sd.ray_t.copy()
    return sd.with_t(t, ray_t, tau=sd.tau + tau)
