"""
Helpers turning numeric arrays into XML elements and back.
Floats are written with 17 significant digits so a reload is exact.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from lxml import etree

from src.constants import FLOAT_FORMAT


def format_float(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def format_ints(values: Sequence[int]) -> str:
    return ",".join(str(int(value)) for value in values)


def parse_ints(text: str | None) -> tuple[int, ...]:
    if text is None or not text.strip():
        return ()
    return tuple(int(token) for token in text.split(","))


def parse_floats(text: str | None) -> tuple[float, ...]:
    if text is None or not text.strip():
        return ()
    return tuple(float(token) for token in text.split(","))


def array_element(tag: str, array: np.ndarray) -> etree.Element:
    """
    Return an element holding the given array.
    The shape goes to a "shape" attribute, the entries to the text in C order.

    Keyword arguments:
    tag -- the name of the generated element
    array -- the array to store
    """
    array = np.asarray(array, dtype=float)
    element = etree.Element(tag)
    element.set("shape", format_ints(array.shape))
    element.text = " ".join(format_float(value) for value in array.ravel())
    return element


def load_array(element: etree.Element) -> np.ndarray:
    shape = parse_ints(element.get("shape"))
    text = element.text or ""
    values = np.array([float(token) for token in text.split()], dtype=float)
    return values.reshape(shape)
