import numpy as np


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation at every lag, by zero-padded FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n]
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def effective_sample_size(x: np.ndarray) -> float:
    """
    ESS with Geyer's initial monotone sequence estimator: sums of consecutive
    autocorrelation pairs are truncated at the first negative pair and forced
    nonincreasing.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    rho = autocorrelation(x)
    if not np.any(rho):
        return float(n)
    pairs = rho[: 2 * ((n - 1) // 2)].reshape(-1, 2).sum(axis=1)
    negative = np.flatnonzero(pairs < 0)
    pairs = pairs[: negative[0]] if negative.size else pairs
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * pairs.sum()
    return float(n / max(tau, 1.0 / n))


def split_rhat(x: np.ndarray) -> float:
    """Potential scale reduction of the two halves of a single chain."""
    x = np.asarray(x, dtype=float)
    half = x.size // 2
    if half < 2:
        return float("nan")
    chains = np.stack([x[:half], x[half : 2 * half]])
    means = chains.mean(axis=1)
    within = chains.var(axis=1, ddof=1).mean()
    between = half * means.var(ddof=1)
    if within <= 0:
        return 1.0 if between <= 0 else float("inf")
    var_plus = (half - 1) / half * within + between / half
    return float(np.sqrt(var_plus / within))


def monte_carlo_standard_error(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / np.sqrt(effective_sample_size(x)))
