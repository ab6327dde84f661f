"""
Loaders rebuilding library objects from their XML form: kernels, feature maps, Tucker
parameters, models, chains and data encoders saved by the save methods, the model file
container, and run recipes.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass, field
from typing import Any

from lxml import etree

from src.constants import MODEL_FORMAT_TAG
from src.datasets import DataEncoder
from src.errors import ConfigError, DataLoadError, TgpError
from src.features.cholesky_grid import CholeskyGridFeatures
from src.features.feature_map import FeatureMap
from src.features.hashed import HashedFeatures
from src.features.identity import IdentityFeatures
from src.features.nystrom import NystromFeatures
from src.features.random_fourier import RandomFourierFeatures
from src.features.side_augmented import SideAugmentedFeatures
from src.inference.chain_set import ChainSet
from src.inference.hmc import HmcConfig
from src.inference.sgd import SgdConfig
from src.kernels.combination import Product, Sum
from src.kernels.delta import Delta
from src.kernels.kernel import Kernel
from src.kernels.linear import Linear
from src.kernels.periodic import Periodic
from src.kernels.squared_exponential import SquaredExponential
from src.model.tgp_model import TgpModel
from src.services.options_manager import SECTION_DEFAULTS
from src.services.xml_encoding import load_array, parse_floats, parse_ints
from src.tensors.dense_tensor import DenseTensor
from src.tensors.tucker_weights import TuckerWeights

MAP_SPEC_KINDS = ("identity", "hashed", "rff", "nystrom", "cholesky")


def _fail(element: etree.Element, message: str) -> ConfigError:
    return ConfigError(f"{message} (line {element.sourceline})")


def _required(element: etree.Element, name: str) -> str:
    value = element.get(name)
    if value is None:
        raise _fail(element, f"Missing attribute '{name}' of <{element.tag}>")
    return value


def _child(element: etree.Element, tag: str) -> etree.Element:
    child = element.find(tag)
    if child is None:
        raise _fail(element, f"Missing <{tag}> in <{element.tag}>")
    return child


def _flag(text: str | None) -> bool:
    return text is not None and text.strip().lower() in ("true", "1", "yes")


def load_kernel(element: etree.Element) -> Kernel:
    """
    Load a kernel from its XML element.

    Return the loaded kernel.

    Keyword arguments:
    element -- the XML node of the kernel
    """
    kind = element.get("type")
    active_dims = parse_ints(element.get("active_dims")) or None
    if kind == "se":
        return SquaredExponential(
            float(element.get("signal_var", 1.0)), parse_floats(element.get("lengthscales", "1")), active_dims
        )
    if kind == "periodic":
        return Periodic(
            float(element.get("signal_var", 1.0)),
            float(element.get("lengthscale", 1.0)),
            float(element.get("period", 1.0)),
            active_dims,
        )
    if kind == "delta":
        return Delta(active_dims)
    if kind == "linear":
        return Linear(active_dims)
    if kind == "sum":
        return Sum(
            [load_kernel(child) for child in element.findall("kernel")], parse_floats(element.get("scales")) or None
        )
    if kind == "product":
        return Product([load_kernel(child) for child in element.findall("kernel")])
    raise _fail(element, f"Unknown kernel type '{kind}'")


def load_feature_map(element: etree.Element) -> FeatureMap:
    """
    Load a built feature map, with all its state, from its XML element.

    Return the loaded feature map.

    Keyword arguments:
    element -- the XML node of the feature map
    """
    kind = element.get("type")
    columns = parse_ints(element.get("columns"))
    if kind == "identity":
        return IdentityFeatures(int(_required(element, "output_len")), columns[0])
    if kind == "hashed":
        base = load_feature_map(_child(element, "base"))
        return HashedFeatures(base, int(_required(element, "output_len")), int(_required(element, "seed")))
    if kind == "rff":
        return RandomFourierFeatures(
            load_array(_child(element, "frequencies")),
            load_array(_child(element, "phases")),
            float(_required(element, "signal_std")),
            columns,
        )
    if kind == "nystrom":
        return NystromFeatures(
            load_array(_child(element, "inducing")),
            load_kernel(_child(element, "kernel")),
            load_array(_child(element, "factor")),
            columns,
        )
    if kind == "cholesky":
        return CholeskyGridFeatures(
            load_array(_child(element, "axis_points")),
            load_kernel(_child(element, "kernel")),
            load_array(_child(element, "factor")),
            columns[0],
        )
    if kind == "side":
        return SideAugmentedFeatures(
            load_array(_child(element, "side_vectors")),
            float(_required(element, "a")),
            float(_required(element, "b")),
            columns[0],
        )
    raise _fail(element, f"Unknown feature map type '{kind}'")


def load_tucker_weights(element: etree.Element) -> TuckerWeights:
    core = DenseTensor.from_array(load_array(_child(element, "core")))
    return TuckerWeights(core, [load_array(factor) for factor in element.findall("factors/factor")])


def load_model(element: etree.Element) -> TgpModel:
    """
    Load a model from its XML element.

    Return the loaded model.

    Keyword arguments:
    element -- the XML node of the model
    """
    maps = [load_feature_map(child) for child in element.findall("feature_maps/feature_map")]
    return TgpModel(
        maps,
        load_tucker_weights(_child(element, "weights")),
        float(_required(element, "noise_var")),
        float(_required(element, "prior_u_var")),
        float(_required(element, "prior_w_var")),
        learn_u=_flag(element.get("learn_u")),
        learn_w=_flag(element.get("learn_w")),
    )


def load_chain_set(element: etree.Element) -> ChainSet:
    chains, rates, seeds, non_finite = [], [], [], []
    for chain in element.findall("chain"):
        chains.append([load_tucker_weights(draw) for draw in chain.findall("draw")])
        rates.append(float(_required(chain, "accept_rate")))
        seeds.append(int(_required(chain, "seed")))
        non_finite.append(int(chain.get("non_finite", 0)))
    return ChainSet(
        chains,
        rates,
        seeds,
        learn_u=_flag(element.get("learn_u")),
        learn_w=_flag(element.get("learn_w")),
        non_finite=non_finite,
    )


def load_encoder(element: etree.Element) -> DataEncoder:
    columns = tuple(column for column in element.get("columns", "").split(",") if column)
    return DataEncoder(
        _required(element, "kind"),
        columns,
        element.get("target", "y"),
        {child.get("column"): child.get("kind") for child in element.findall("transform")},
        {
            child.get("column"): (float(child.get("mean")), float(child.get("std")))
            for child in element.findall("stat")
        },
        float(element.get("rating_mean", 0.0)),
        int(element.get("n_users", 0)),
        int(element.get("n_items", 0)),
        [load_array(child) for child in element.findall("axis")],
        tuple(tuple(child.get("group", "").split(",")) for child in element.findall("axis")),
    )


def parse_xml(path) -> etree.Element:
    """
    Parse an XML file and return its root, turning every failure into a DataLoadError.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise DataLoadError("Missing file", path)
    try:
        return etree.parse(str(path)).getroot()
    except etree.XMLSyntaxError as error:
        raise DataLoadError(f"Malformed XML: {error.msg}", path, error.lineno) from error


@dataclass
class ModelFile:
    """
    The content of a saved model file.

    Attributes:
    model -- the model, holding the MAP estimate or the last draw of the first chain
    encoder -- the encoder of the training data
    chains -- the posterior draws of a sampled model
    """

    model: TgpModel
    encoder: DataEncoder
    chains: ChainSet | None = None


def load_model_file(path) -> ModelFile:
    """
    Load a model file written by SaveStateManager.

    Keyword arguments:
    path -- the path of the model file
    """
    root = parse_xml(path)
    if root.tag != "tgp" or root.get("format") != MODEL_FORMAT_TAG:
        raise DataLoadError(f"Not a {MODEL_FORMAT_TAG} model file", path)
    try:
        chains = root.find("chains")
        return ModelFile(
            load_model(_child(root, "model")),
            load_encoder(_child(root, "encoder")),
            load_chain_set(chains) if chains is not None else None,
        )
    except TgpError:
        raise
    except (TypeError, ValueError, IndexError) as error:
        raise DataLoadError(f"Malformed model file: {error}", path) from error


def load_chains_file(path) -> ChainSet:
    """
    Load the chains of a chains file or of a sampled model file.
    """
    root = parse_xml(path)
    element = root if root.tag == "chains" else root.find("chains")
    if element is None:
        raise DataLoadError("No chains in file", path)
    try:
        return load_chain_set(element)
    except TgpError:
        raise
    except (TypeError, ValueError, IndexError) as error:
        raise DataLoadError(f"Malformed chains: {error}", path) from error


def _convert(element: etree.Element, key: str, text: str, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            lowered = text.strip().lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if default is None or isinstance(default, float):
            return None if not text.strip() else float(text)
    except ValueError as error:
        raise _fail(element, f"Invalid value '{text}' of '{key}'") from error
    return text


def _section(element: etree.Element | None, name: str) -> dict[str, Any]:
    defaults = SECTION_DEFAULTS[name]
    values = dict(defaults)
    if element is None:
        return values
    for key, text in element.attrib.items():
        if key not in defaults:
            raise _fail(element, f"Unknown key '{key}' in <{name}>")
        values[key] = _convert(element, key, text, defaults[key])
    return values


@dataclass
class MapSpec:
    """
    The recipe of a feature map, built once the training data is known.

    Attributes:
    kind -- the feature map type
    attributes -- the raw attributes of the recipe element
    kernel -- the kernel of kernel-based maps
    base -- the wrapped recipe of a hashed map
    line -- the recipe line, for diagnostics
    """

    kind: str
    attributes: dict[str, str] = field(default_factory=dict)
    kernel: Kernel | None = None
    base: MapSpec | None = None
    line: int | None = None

    def get(self, key: str, default: Any = None) -> Any:
        return self.attributes.get(key, default)


def load_map_spec(element: etree.Element) -> MapSpec:
    kind = element.get("type")
    if kind not in MAP_SPEC_KINDS:
        raise _fail(element, f"Unknown feature map type '{kind}', expected one of {list(MAP_SPEC_KINDS)}")
    kernel_element = element.find("kernel")
    base_element = element.find("feature_map")
    if kind in ("rff", "nystrom", "cholesky") and kernel_element is None:
        raise _fail(element, f"A {kind} feature map needs a <kernel>")
    if kind == "hashed" and base_element is None:
        raise _fail(element, "A hashed feature map needs a base <feature_map>")
    try:
        kernel = load_kernel(kernel_element) if kernel_element is not None else None
    except ConfigError:
        raise
    except ValueError as error:
        raise _fail(kernel_element, str(error)) from error
    return MapSpec(
        kind,
        dict(element.attrib),
        kernel,
        load_map_spec(base_element) if base_element is not None else None,
        element.sourceline,
    )


@dataclass
class RunConfig:
    """
    A parsed run recipe.

    Attributes:
    seed -- the seed every random choice of the run derives from
    data -- the data section
    model -- the model section
    maps -- the feature map recipes, in mode order
    trainer -- "sgd" or "hmc"
    sgd -- the stochastic gradient section
    hmc -- the sampler section
    cf -- the collaborative-filtering section
    output -- the output section
    source -- the recipe root, echoed in run manifests
    """

    seed: int
    data: dict[str, Any]
    model: dict[str, Any]
    maps: list[MapSpec]
    trainer: str
    sgd: dict[str, Any]
    hmc: dict[str, Any]
    cf: dict[str, Any]
    output: dict[str, Any]
    source: etree.Element | None = None

    def sgd_config(self) -> SgdConfig:
        return SgdConfig(seed=self.seed, learn_w=self.model["learn_w"], **self.sgd)

    def hmc_config(self) -> HmcConfig:
        return HmcConfig(seed=self.seed, **self.hmc)


def parse_run_config(root: etree.Element) -> RunConfig:
    """
    Return the run recipe held by a <run> element.
    Unknown sections and keys raise ConfigError naming the offending line.
    """
    if root.tag != "run":
        raise _fail(root, f"Expected a <run> recipe, got <{root.tag}>")
    for key in root.attrib:
        if key != "seed":
            raise _fail(root, f"Unknown key '{key}' in <run>")
    model_element = root.find("model")
    for child in root:
        if not isinstance(child.tag, str):
            continue
        if child.tag not in SECTION_DEFAULTS:
            raise _fail(child, f"Unknown section <{child.tag}>")
    if model_element is not None:
        for child in model_element:
            if isinstance(child.tag, str) and child.tag != "feature_map":
                raise _fail(child, f"Unknown element <{child.tag}> in <model>")
    if root.find("sgd") is not None and root.find("hmc") is not None:
        raise _fail(root, "A recipe trains with either <sgd> or <hmc>, not both")
    data = _section(root.find("data"), "data")
    if not data["kind"]:
        raise _fail(root, "The <data> section needs a kind")
    try:
        seed = int(root.get("seed", 0))
    except ValueError as error:
        raise _fail(root, f"Invalid seed '{root.get('seed')}'") from error
    maps = [load_map_spec(child) for child in model_element.findall("feature_map")] if model_element is not None else []
    return RunConfig(
        seed,
        data,
        _section(model_element, "model"),
        maps,
        "hmc" if root.find("hmc") is not None else "sgd",
        _section(root.find("sgd"), "sgd"),
        _section(root.find("hmc"), "hmc"),
        _section(root.find("cf"), "cf"),
        _section(root.find("output"), "output"),
        root,
    )


def load_run_config(path) -> RunConfig:
    """
    Load a run recipe.

    Keyword arguments:
    path -- the path of the XML recipe
    """
    try:
        return parse_run_config(parse_xml(path))
    except DataLoadError as error:
        raise ConfigError(str(error)) from error
