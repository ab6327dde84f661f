"""
Define DiagnoseCommand class, computing convergence diagnostics of saved chains.
"""

from __future__ import annotations

import pandas as pd

from src.commands.command import Command
from src.inference.diagnostics import effective_sample_size, gelman_rubin
from src.services.load_from_xml_manager import load_chains_file
from src.services.save_state_manager import write_csv


class DiagnoseCommand(Command):
    """
    Writes diagnostics.csv, the split R-hat and effective sample size of every parameter,
    and diagnostics_summary.csv with their mean and standard deviation across parameters.
    """

    name = "diagnose"

    def run(self) -> None:
        chains = load_chains_file(self.arguments.chains)
        rhat = gelman_rubin(chains)
        ess = effective_sample_size(chains)
        directory = self.output_directory()
        frame = pd.DataFrame(
            {
                "param": rhat.names,
                "rhat": rhat.values,
                "rhat_degenerate": rhat.degenerate,
                "ess": ess.values,
                "ess_degenerate": ess.degenerate,
            }
        )
        self.record(write_csv(directory / "diagnostics.csv", frame))
        summary = pd.DataFrame(
            {
                "statistic": ["rhat", "ess"],
                "mean": [rhat.mean, ess.mean],
                "std": [rhat.std, ess.std],
            }
        )
        self.record(write_csv(directory / "diagnostics_summary.csv", summary))
        print(summary.to_string(index=False))
        self.write_manifest(directory)
