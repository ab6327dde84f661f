"""
Convergence diagnostics of MCMC chains: split Gelman-Rubin statistic and the effective
sample size estimated from autocorrelations truncated by Geyer's initial monotone sequence.

Both work per scalar parameter on a chains x draws x parameters array
(or on a ChainSet) and report the mean and standard deviation across parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.constants import MIN_DRAWS_PER_CHAIN
from src.errors import ContractViolationError
from src.inference.chain_set import ChainSet


@dataclass
class DiagnosticSummary:
    """
    Per-parameter values of a diagnostic with their summary across parameters.

    Attributes:
    names -- the parameter names
    values -- the diagnostic value of every parameter
    degenerate -- whether the value of a parameter was set by convention
    """

    names: list[str]
    values: np.ndarray
    degenerate: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))


def _as_draws(chains: ChainSet | np.ndarray) -> tuple[np.ndarray, list[str]]:
    if isinstance(chains, ChainSet):
        if chains.num_chains < 2:
            raise ContractViolationError(f"Diagnostics need at least 2 chains, got {chains.num_chains}")
        draws, names = chains.draws(), chains.parameter_names()
    else:
        draws = np.asarray(chains, dtype=float)
        if draws.ndim == 2:
            draws = draws[:, :, np.newaxis]
        names = [f"p{index}" for index in range(draws.shape[2])]
    if draws.ndim != 3 or draws.shape[0] < 2:
        raise ContractViolationError(f"Diagnostics need at least 2 chains, got draws of shape {draws.shape}")
    if draws.shape[1] < MIN_DRAWS_PER_CHAIN:
        raise ContractViolationError(
            f"Diagnostics need at least {MIN_DRAWS_PER_CHAIN} draws per chain, got {draws.shape[1]}"
        )
    return draws, names


def _split_chains(draws: np.ndarray) -> np.ndarray:
    """
    Return the first and last halves of every chain as separate chains, the middle draw
    of odd-length chains being dropped.
    """
    half = draws.shape[1] // 2
    return np.concatenate([draws[:, :half], draws[:, draws.shape[1] - half :]], axis=0)


def gelman_rubin(chains: ChainSet | np.ndarray) -> DiagnosticSummary:
    """
    Return the split R-hat of every scalar parameter.
    Identical chains and chains without within-chain variance get R-hat 1 flagged degenerate.

    Keyword arguments:
    chains -- a ChainSet or a chains x draws (x parameters) array
    """
    draws, names = _as_draws(chains)
    identical = np.all(draws == draws[:1], axis=(0, 1))
    split = _split_chains(draws)
    n = split.shape[1]
    within = np.mean(np.var(split, axis=1, ddof=1), axis=0)
    between = n * np.var(np.mean(split, axis=1), axis=0, ddof=1)
    degenerate = identical | (within <= 0)
    safe_within = np.where(degenerate, 1.0, within)
    pooled = (n - 1) / n * safe_within + between / n
    values = np.where(degenerate, 1.0, np.sqrt(pooled / safe_within))
    return DiagnosticSummary(names, values, degenerate)


def _autocovariance(series: np.ndarray) -> np.ndarray:
    """
    Return the biased autocovariance of every chain, along the draws axis, computed by FFT.
    """
    n = series.shape[-1]
    size = 1 << (2 * n - 1).bit_length()
    centered = series - series.mean(axis=-1, keepdims=True)
    spectrum = np.fft.rfft(centered, n=size, axis=-1)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), n=size, axis=-1)[..., :n] / n


def _ess_single(chains: np.ndarray) -> float:
    """
    Return the effective sample size of one scalar parameter given as a chains x draws array.
    """
    n_chain, n_draw = chains.shape
    acov = _autocovariance(chains)
    mean_var = np.mean(acov[:, 0]) * n_draw / (n_draw - 1)
    var_plus = mean_var * (n_draw - 1) / n_draw + np.var(chains.mean(axis=1), ddof=1)

    rho = np.zeros(n_draw)
    rho_even = 1.0
    rho[0] = rho_even
    rho_odd = 1.0 - (mean_var - np.mean(acov[:, 1])) / var_plus
    rho[1] = rho_odd

    # initial positive sequence over sums of adjacent pairs
    t = 1
    while t < n_draw - 3 and rho_even + rho_odd > 0.0:
        rho_even = 1.0 - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        rho_odd = 1.0 - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        if rho_even + rho_odd >= 0.0:
            rho[t + 1] = rho_even
            rho[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_odd > 0.0:
        rho[max_t + 1] = rho_odd

    # initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2

    total = n_chain * n_draw
    tau = -1.0 + 2.0 * np.sum(rho[: max_t + 1]) + np.sum(rho[max_t + 1 : max_t + 2])
    tau = max(tau, 1.0 / np.log10(total))
    return total / tau


def effective_sample_size(chains: ChainSet | np.ndarray) -> DiagnosticSummary:
    """
    Return the effective sample size of every scalar parameter, computed on split chains.
    Parameters without within-chain variance get the total draw count flagged degenerate.

    Keyword arguments:
    chains -- a ChainSet or a chains x draws (x parameters) array
    """
    draws, names = _as_draws(chains)
    total = draws.shape[0] * draws.shape[1]
    split = _split_chains(draws)
    constant = np.all(np.var(split, axis=1) <= 0, axis=0)
    values = np.array(
        [
            float(total) if constant[index] else _ess_single(split[:, :, index])
            for index in range(draws.shape[2])
        ]
    )
    return DiagnosticSummary(names, values, constant)
