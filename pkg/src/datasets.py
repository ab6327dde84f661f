"""
Defines the dataset containers shared by the model, the inference routines and the loaders:
RegressionDataset for (input, target) pairs, GridSpec for grid-structured inputs
and DataEncoder, the recipe turning raw files into model inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from lxml import etree

from src.errors import ContractViolationError
from src.services.xml_encoding import array_element, format_float


@dataclass(frozen=True)
class RegressionDataset:
    """
    N input rows of P covariates with their real targets.

    Attributes:
    inputs -- the N x P covariates
    targets -- the N targets
    columns -- the names of the covariates
    target_name -- the name of the target
    stats -- the (mean, std) used to whiten every column, targets included, when whitened
    """

    inputs: np.ndarray
    targets: np.ndarray
    columns: tuple[str, ...] = ()
    target_name: str = "y"
    stats: dict[str, tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        targets = np.asarray(self.targets, dtype=float).ravel()
        if inputs.ndim != 2 or inputs.shape[0] != targets.size:
            raise ContractViolationError(
                f"{inputs.shape[0]} input rows for {targets.size} targets"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "columns", tuple(self.columns))

    def __len__(self) -> int:
        return self.targets.size

    def subset(self, indices) -> RegressionDataset:
        return RegressionDataset(
            self.inputs[indices], self.targets[indices], self.columns, self.target_name, self.stats
        )


@dataclass(frozen=True)
class GridSpec:
    """
    The grid structure of a dataset.

    Attributes:
    axes -- the sorted unique points of every axis, an n_d x p_d matrix per axis
    indices -- the N x D multi-index of every row on the grid
    groups -- the names of the covariates forming every axis
    """

    axes: list[np.ndarray]
    indices: np.ndarray
    groups: tuple[tuple[str, ...], ...] = field(default=())

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.shape[0] for axis in self.axes)

    def values_at(self, row: int) -> list[np.ndarray]:
        """
        Return the axis points at the multi-index of the given row.
        """
        return [axis[index] for axis, index in zip(self.axes, self.indices[row])]


ENCODER_KINDS = ("ratings", "regression", "grid")


@dataclass
class DataEncoder:
    """
    Everything needed to encode new raw data exactly as the training data was encoded.

    Attributes:
    kind -- "ratings" for (user, item) indices, "regression" for whitened covariates,
    "grid" for multi-indices on grid axes
    columns -- the raw covariate names, in model input order
    target -- the raw target name
    transforms -- the transform ("log" or "identity") applied to raw columns before whitening
    stats -- the whitening (mean, std) of every covariate and of the target
    rating_mean -- the offset removed from ratings
    n_users -- the number of users of a ratings encoder
    n_items -- the number of items of a ratings encoder
    axes -- the grid axes of a grid encoder, in whitened units
    groups -- the covariates forming every grid axis
    """

    kind: str
    columns: tuple[str, ...] = ()
    target: str = "y"
    transforms: dict[str, str] = field(default_factory=dict)
    stats: dict[str, tuple[float, float]] = field(default_factory=dict)
    rating_mean: float = 0.0
    n_users: int = 0
    n_items: int = 0
    axes: list[np.ndarray] = field(default_factory=list)
    groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ENCODER_KINDS:
            raise ContractViolationError(f"Unknown encoder kind '{self.kind}'")
        self.columns = tuple(self.columns)
        self.groups = tuple(tuple(group) for group in self.groups)

    def save(self, tree_name: str = "encoder") -> etree.Element:
        """
        Save the encoder in XML format.

        Return the result of this generation.

        Keyword arguments:
        tree_name -- the name that should be given to the root element of the generated XML.
        """
        tree = etree.Element(tree_name)
        tree.set("kind", self.kind)
        tree.set("columns", ",".join(self.columns))
        tree.set("target", self.target)
        tree.set("rating_mean", format_float(self.rating_mean))
        tree.set("n_users", str(self.n_users))
        tree.set("n_items", str(self.n_items))
        for column, transform in self.transforms.items():
            etree.SubElement(tree, "transform", column=column, kind=transform)
        for column, (mean, std) in self.stats.items():
            etree.SubElement(tree, "stat", column=column, mean=format_float(mean), std=format_float(std))
        for axis, group in zip(self.axes, self.groups):
            element = array_element("axis", axis)
            element.set("group", ",".join(group))
            tree.append(element)
        return tree
