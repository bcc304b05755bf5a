"""Over-the-air computation transceiver design.

Given a receive beamformer m for channels h_k, the distortion-optimal
transmit scalars and denoising factor have closed forms:

    eta = P * min_k |m^H h_k|^2
    w_k = sqrt(eta) * (m^H h_k)^H / |m^H h_k|^2

which align every device so that m^H h_k w_k / sqrt(eta) = 1 and make
the power-limiting device transmit at full power.  The resulting
mean-squared error of the sum estimate is sigma^2 ||m||^2 / eta, and
``empirical_mse`` verifies it by simulating the transmission.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bnb import validate_channels


def effective_gains(m: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Per-device effective channels m^H h_k as a length-K complex vector."""
    m = np.asarray(m, dtype=complex).ravel()
    return m.conj() @ np.asarray(H, dtype=complex)


def denoising_factor(m, H, power: float) -> float:
    """eta = P * min_k |m^H h_k|^2."""
    m = np.asarray(m, dtype=complex).ravel()
    if not np.any(m):
        raise ValueError("beamformer must be nonzero")
    gains = effective_gains(m, validate_channels(H))
    return float(power * np.min(np.abs(gains) ** 2))


def transmit_scalars(m, H, eta: float) -> np.ndarray:
    """Distortion-optimal transmit scalars for a given beamformer.

    w_k = sqrt(eta) * conj(m^H h_k) / |m^H h_k|^2, so every aligned
    product m^H h_k w_k equals sqrt(eta) exactly.
    """
    gains = effective_gains(m, validate_channels(H))
    mags = np.abs(gains) ** 2
    if np.any(mags == 0.0):
        k = int(np.argmin(mags))
        raise ValueError(f"device {k} has zero effective channel; design invalid")
    return np.sqrt(eta) * gains.conj() / mags


def analytic_mse(m, H, power: float, noise_var: float) -> float:
    """Closed-form MSE sigma^2 ||m||^2 / (P min_k |m^H h_k|^2)."""
    m = np.asarray(m, dtype=complex).ravel()
    eta = denoising_factor(m, H, power)
    return float(noise_var * np.vdot(m, m).real / eta)


@dataclass
class AirCompDesign:
    """Complete transceiver: beamformer, denoising factor, transmit scalars."""

    m: np.ndarray
    eta: float
    w: np.ndarray
    power: float
    noise_var: float

    @classmethod
    def from_beamformer(cls, m, H, power: float, noise_var: float) -> "AirCompDesign":
        m = np.asarray(m, dtype=complex).ravel()
        eta = denoising_factor(m, H, power)
        w = transmit_scalars(m, H, eta)
        return cls(m=m, eta=eta, w=w, power=power, noise_var=noise_var)

    def validate(self, H, tol: float = 1e-9):
        """Check the power budget and the closed-form coupling to H."""
        if np.any(np.abs(self.w) ** 2 > self.power * (1.0 + tol)):
            raise ValueError("transmit scalar exceeds the power budget")
        gains = effective_gains(self.m, H)
        eta_ref = self.power * float(np.min(np.abs(gains) ** 2))
        if not np.isclose(self.eta, eta_ref, rtol=1e-6):
            raise ValueError("denoising factor is inconsistent with m and H")

    def mse(self, H) -> float:
        return analytic_mse(self.m, H, self.power, self.noise_var)


def empirical_mse(design: AirCompDesign, H, trials: int, rng_seed) -> float:
    """Monte-Carlo estimate of E|g_hat - g|^2 for a transceiver design.

    Symbols are i.i.d. circular complex Gaussian with unit power (the
    model only pins mean, power, and independence) and the receiver
    noise is CN(0, sigma^2 I).  With the closed-form scalars the signal
    terms cancel and the estimate converges to ``analytic_mse``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    H = validate_channels(H)
    N, K = H.shape
    rng = np.random.default_rng(rng_seed)
    sqrt_eta = np.sqrt(design.eta)
    # per-device coefficient of s_k in (g_hat - g)
    coeff = effective_gains(design.m, H) * design.w / sqrt_eta - 1.0

    mse_acc = 0.0
    chunk = 1 << 14
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        s = (rng.standard_normal((K, t)) + 1j * rng.standard_normal((K, t))) / np.sqrt(2.0)
        err = coeff @ s
        if design.noise_var > 0.0:
            noise = (rng.standard_normal((N, t)) + 1j * rng.standard_normal((N, t))) \
                * np.sqrt(design.noise_var / 2.0)
            err = err + (design.m.conj() @ noise) / sqrt_eta
        mse_acc += float(np.sum(np.abs(err) ** 2))
        done += t
    return mse_acc / trials
