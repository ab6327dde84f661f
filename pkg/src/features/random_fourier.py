"""
Defines RandomFourierFeatures class, the Monte Carlo features of a squared-exponential kernel:
phi(x) = sigma_f sqrt(2/n) cos(v_k^T x + b_k), with v_k drawn from the spectral density
N(0, l^-2) and b_k uniform on [0, 2 pi).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree

from src.errors import ContractViolationError
from src.features.feature_map import FeatureMap
from src.kernels.kernel import Kernel
from src.kernels.squared_exponential import SquaredExponential
from src.services.xml_encoding import array_element, format_float


class RandomFourierFeatures(FeatureMap):
    """
    Random Fourier features. The draws are fixed at construction and saved with the model.

    Keyword arguments:
    frequencies -- the n x p frequencies v_k
    phases -- the n phases b_k
    signal_std -- the signal standard deviation sigma_f
    columns -- the input columns holding the p covariates

    Attributes:
    frequencies -- the frequencies
    phases -- the phases
    signal_std -- the signal standard deviation
    """

    kind = "rff"

    def __init__(
        self, frequencies: np.ndarray, phases: np.ndarray, signal_std: float, columns: Sequence[int]
    ) -> None:
        frequencies = np.asarray(frequencies, dtype=float).reshape(len(phases), -1)
        super().__init__(frequencies.shape[0], columns)
        if frequencies.shape[1] != len(self.columns):
            raise ContractViolationError(
                f"Frequencies of dimension {frequencies.shape[1]} for {len(self.columns)} columns"
            )
        self.frequencies: np.ndarray = frequencies
        self.phases: np.ndarray = np.asarray(phases, dtype=float)
        self.signal_std: float = float(signal_std)

    @property
    def amplitude(self) -> float:
        return self.signal_std * np.sqrt(2.0 / self.output_len)

    def feature_matrix(self, inputs) -> np.ndarray:
        return self.amplitude * np.cos(self.select(inputs) @ self.frequencies.T + self.phases)

    def _save_state(self, tree: etree.Element) -> None:
        tree.set("signal_std", format_float(self.signal_std))
        tree.append(array_element("frequencies", self.frequencies))
        tree.append(array_element("phases", self.phases))


def build_rff(
    kernel: Kernel, n: int, seed: int, columns: Sequence[int] | None = None
) -> RandomFourierFeatures:
    """
    Return n random Fourier features of a squared-exponential kernel.

    Keyword arguments:
    kernel -- the squared-exponential kernel to approximate
    n -- the number of features
    seed -- the seed of the frequency and phase draws
    columns -- the input columns of the covariates, the kernel's active dimensions by default
    """
    if not isinstance(kernel, SquaredExponential):
        raise ContractViolationError(
            f"Random Fourier features need a squared-exponential kernel, got {kernel.kind}"
        )
    if n < 1:
        raise ContractViolationError(f"Feature count must be at least 1, got {n}")
    if columns is None:
        input_dim = kernel.input_dim() or 1
        columns = kernel.active_dims or tuple(range(input_dim))
    columns = tuple(columns)
    lengthscales = np.broadcast_to(kernel.lengthscales, (len(columns),))
    rng = np.random.default_rng(seed)
    frequencies = rng.normal(size=(n, len(columns))) / lengthscales
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return RandomFourierFeatures(frequencies, phases, kernel.signal_std, columns)
