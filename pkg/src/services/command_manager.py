"""
Define CommandManager class, dispatching a parsed command line to its command.
"""

from __future__ import annotations

import argparse
import logging

from src.commands.bench import BenchCommand
from src.commands.command import Command
from src.commands.decompose import DecomposeCommand
from src.commands.diagnose import DiagnoseCommand
from src.commands.evaluate import EvalCommand
from src.commands.predict import PredictCommand
from src.commands.train import TrainCommand
from src.constants import EXIT_SUCCESS
from src.errors import TgpError

logger = logging.getLogger(__name__)

COMMANDS: dict[str, type[Command]] = {
    command.name: command
    for command in (TrainCommand, EvalCommand, PredictCommand, DecomposeCommand, DiagnoseCommand, BenchCommand)
}


class CommandManager:
    """
    The command manager picks the command named on the command line and runs it,
    turning library errors into process exit codes.

    Keyword arguments:
    arguments -- the parsed command line

    Attributes:
    active_command -- the command to run
    """

    def __init__(self, arguments: argparse.Namespace) -> None:
        self.active_command: Command = COMMANDS[arguments.command](arguments)

    def execute(self) -> int:
        """
        Run the active command.

        Return the exit code of the process.
        """
        try:
            self.active_command.run()
        except TgpError as error:
            logger.error("%s failed: %s", self.active_command.name, error)
            return error.exit_code
        return EXIT_SUCCESS
