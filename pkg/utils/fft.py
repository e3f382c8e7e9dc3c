"""
Arbitrary-Length DFT
Chirp-z (Bluestein) transform built on power-of-two numpy FFTs
"""

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)


def next_power_of_two(n: int) -> int:
    """Smallest power of two >= n (n >= 1)."""
    return 1 << max(0, int(n - 1).bit_length())


def _chirp(length: int, sign: int) -> np.ndarray:
    # k^2 reduced mod 2L keeps the phase argument small and exact
    k = np.arange(length, dtype=np.int64)
    phase = (k * k) % (2 * length)
    return np.exp(sign * 1j * np.pi * phase / length)


def bluestein_dft(a, sign: int = -1) -> np.ndarray:
    """
    Compute X_j = sum_k a_k exp(sign * 2*pi*i * j*k / L) for any length L.

    Uses jk = (j^2 + k^2 - (j-k)^2) / 2 to turn the DFT into a linear
    convolution with a chirp, evaluated with power-of-two FFTs.

    Args:
        a: 1-D array of length L (real or complex)
        sign: -1 for the forward convention of numpy.fft.fft, +1 for the
              unnormalised inverse

    Returns:
        Complex array of length L
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError("Data must be 1-dimensional")
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")

    length = a.shape[0]
    if length == 0:
        return a.copy()
    if length == 1:
        return a.copy()

    chirp = _chirp(length, sign)
    nfft = next_power_of_two(2 * length - 1)
    logger.debug("bluestein length=%d nfft=%d", length, nfft)

    kernel = np.zeros(nfft, dtype=np.complex128)
    kernel[:length] = chirp.conj()
    kernel[nfft - length + 1:] = chirp[1:][::-1].conj()

    fy = np.fft.fft(a * chirp, nfft)
    fv = np.fft.fft(kernel)
    conv = np.fft.ifft(fy * fv)

    return chirp * conv[:length]


def dft_error_bound(length: int, l2_norm: float) -> float:
    """
    Absolute per-entry error bound for bluestein_dft in double precision.

    The chirp convolution has kernel l2-norm sqrt(2L); a floating-point FFT
    of size n perturbs an l2-norm by at most ~c*log2(n)*eps. The constant is
    taken generously.

    Args:
        length: Transform length L
        l2_norm: Euclidean norm of the input vector

    Returns:
        Bound on |X_computed - X_exact| for every entry
    """
    if length <= 1:
        return 4 * np.finfo(float).eps * l2_norm
    nfft = next_power_of_two(2 * length - 1)
    eps = np.finfo(float).eps
    return 10.0 * (math.log2(nfft) + 4) * eps * math.sqrt(2 * length) * l2_norm
