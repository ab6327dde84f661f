"""
Define Command class, the base class of every command of the command line.
"""

from __future__ import annotations

import argparse
import logging
import pathlib
import subprocess
import sys
from datetime import datetime

from lxml import etree

from src.constants import VERSION
from src.services.options_manager import get_option
from src.services.save_state_manager import write_xml

logger = logging.getLogger(__name__)


def code_version() -> str:
    """
    Return the library version, followed by the git revision when running from a checkout.
    """
    try:
        revision = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            check=True,
            cwd=pathlib.Path(__file__).resolve().parent,
        ).stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        return VERSION
    return f"{VERSION}+{revision}" if revision else VERSION


class Command:
    """
    This class is the abstract base class for every command.
    It holds the parsed command line and knows where outputs go.

    Keyword arguments:
    arguments -- the parsed command line

    Attributes:
    arguments -- the parsed command line
    seeds -- the seeds used by the run, recorded in the manifest
    written -- the files written by the run
    """

    name = ""

    def __init__(self, arguments: argparse.Namespace) -> None:
        self.arguments: argparse.Namespace = arguments
        self.seeds: dict[str, int] = {}
        self.written: list[pathlib.Path] = []

    def output_directory(self, fallback: str | None = None) -> pathlib.Path:
        """
        Return the output directory: the --out-dir flag, then the given fallback,
        then a directory named after the command under the default output directory.
        """
        if getattr(self.arguments, "out_dir", None):
            return pathlib.Path(self.arguments.out_dir)
        if fallback:
            return pathlib.Path(fallback)
        return pathlib.Path(get_option("out_dir")) / self.name

    def run(self) -> None:
        """
        Execute the command. Failures are raised as TgpError.
        """
        raise NotImplementedError

    def record(self, path: pathlib.Path) -> pathlib.Path:
        self.written.append(pathlib.Path(path))
        return path

    def write_manifest(self, directory: pathlib.Path, recipe: etree.Element | None = None) -> pathlib.Path:
        """
        Write manifest.xml: the code version, the command line, the seeds, the written files
        and the recipe, enough to run the command again.

        Keyword arguments:
        directory -- the output directory
        recipe -- the recipe of the run, if any
        """
        manifest = etree.Element("manifest")
        manifest.set("command", self.name)
        manifest.set("version", code_version())
        manifest.set("timestamp", datetime.now().isoformat(timespec="seconds"))
        arguments = etree.SubElement(manifest, "argv")
        for token in sys.argv:
            etree.SubElement(arguments, "arg").text = token
        seeds = etree.SubElement(manifest, "seeds")
        for name, seed in self.seeds.items():
            etree.SubElement(seeds, "seed", name=name, value=str(seed))
        outputs = etree.SubElement(manifest, "outputs")
        for path in self.written:
            etree.SubElement(outputs, "file").text = str(path)
        if recipe is not None:
            recipe_element = etree.SubElement(manifest, "recipe")
            recipe_element.append(etree.fromstring(etree.tostring(recipe)))
        path = write_xml(directory / "manifest.xml", manifest)
        logger.info("wrote %s", path)
        return path
