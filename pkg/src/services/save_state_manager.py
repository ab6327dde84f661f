"""
Defines SaveStateManager class and the atomic writers of every file a run produces.
"""

from __future__ import annotations

import logging
import os
import pathlib
import tempfile

import numpy as np
import pandas as pd
from lxml import etree

from src.constants import CSV_LINE_TERMINATOR, FLOAT_FORMAT, MODEL_FORMAT_TAG, VERSION
from src.datasets import DataEncoder
from src.errors import ContractViolationError
from src.inference.chain_set import ChainSet
from src.model.tgp_model import TgpModel

logger = logging.getLogger(__name__)


def write_atomic(path, content: str | bytes) -> pathlib.Path:
    """
    Write the content to a temporary file next to the destination, then rename it over the destination,
    so a reader never sees a partial file.

    Keyword arguments:
    path -- the destination
    content -- the text or bytes to write
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        if isinstance(content, bytes):
            file = os.fdopen(descriptor, "wb")
        else:
            file = os.fdopen(descriptor, "w", encoding="utf-8", newline="")
        with file:
            file.write(content)
        os.replace(temporary, path)
    except BaseException:
        pathlib.Path(temporary).unlink(missing_ok=True)
        raise
    logger.debug("wrote %s", path)
    return path


def frame_to_csv(frame: pd.DataFrame) -> str:
    """
    Return the CSV text of a frame: a header line, "\\n" line ends, floats with 17 significant
    digits and empty cells for NaN.
    """
    return frame.to_csv(index=False, float_format=f"%{FLOAT_FORMAT}", lineterminator=CSV_LINE_TERMINATOR, na_rep="")


def write_csv(path, frame: pd.DataFrame) -> pathlib.Path:
    return write_atomic(path, frame_to_csv(frame))


def write_xml(path, tree: etree.Element) -> pathlib.Path:
    return write_atomic(path, etree.tostring(tree, pretty_print=True, xml_declaration=True, encoding="utf-8"))


def matrix_frame(values: np.ndarray, prefix: str) -> pd.DataFrame:
    values = np.atleast_2d(values)
    return pd.DataFrame(values, columns=[f"{prefix}{index}" for index in range(values.shape[1])])


class SaveStateManager:
    """
    Writes trained models, with the encoder of their data and their posterior draws,
    into a single versioned XML container.

    Keyword arguments:
    model -- the trained model
    encoder -- the encoder of the training data
    chains -- the posterior draws of a sampled model

    Attributes:
    tree -- the root of the container
    """

    def __init__(self, model: TgpModel, encoder: DataEncoder, chains: ChainSet | None = None) -> None:
        self.model: TgpModel = model
        self.encoder: DataEncoder = encoder
        self.chains: ChainSet | None = chains
        self.tree: etree.Element = etree.Element("tgp")

    def build_tree(self) -> etree.Element:
        self.tree = etree.Element("tgp")
        self.tree.set("format", MODEL_FORMAT_TAG)
        self.tree.set("version", VERSION)
        self.tree.append(self.model.save("model"))
        self.tree.append(self.encoder.save("encoder"))
        if self.chains is not None:
            self.tree.append(self.chains.save("chains"))
        return self.tree

    def save_model(self, path) -> pathlib.Path:
        """
        Save the model file to the given path.

        Keyword Arguments:
        path -- the destination of the model file
        """
        return write_xml(path, self.build_tree())

    def save_chains(self, path) -> pathlib.Path:
        if self.chains is None:
            raise ContractViolationError("No chains to save")
        return write_xml(path, self.chains.save("chains"))
