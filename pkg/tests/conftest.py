import numpy as np
import pytest

from strainforge.config import default_config
from strainforge.spectra import Spectrum


@pytest.fixture(scope="session")
def cfg():
    return default_config()


def lorentzian(freqs, center, fwhm):
    half = 0.5 * fwhm
    return half * half / ((freqs - center) ** 2 + half * half)


def gaussian(freqs, center, fwhm):
    s = fwhm / 2.3548200450309493
    return np.exp(-0.5 * ((freqs - center) / s) ** 2)


def synth_spectrum(
    rng,
    centers_ghz,
    fwhm_ghz=20.0,
    amps=None,
    snr=20.0,
    f_lo=406000.0,
    f_hi=408000.0,
    n_points=2000,
    shape="lorentzian",
    baseline_sigmas=2.0,
    label="",
    batch_tag="",
):
    """Synthetic PL trace with known line positions; ground-truth oracle
    for the peak detection tests."""
    freqs = np.linspace(f_lo, f_hi, n_points)
    centers = np.asarray(centers_ghz, dtype=float)
    if amps is None:
        amps = np.ones(centers.size)
    line = gaussian if shape == "gaussian" else lorentzian
    signal = np.zeros_like(freqs)
    for c, a in zip(centers, amps):
        signal += a * line(freqs, c, fwhm_ghz)
    noise_sigma = (signal.max() if signal.max() > 0 else 1.0) / snr
    baseline = baseline_sigmas * noise_sigma
    intens = signal + baseline + rng.normal(0.0, noise_sigma, freqs.size)
    intens = np.clip(intens, 0.0, None)
    return Spectrum(freqs, intens, label=label, batch_tag=batch_tag)
