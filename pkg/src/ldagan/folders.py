from pathlib import Path

from ldagan.config.static_config import LogsConfigItems

# Output file names
CHECKPOINT_FILE = "checkpoint.json"
METRICS_FILE = "metrics.jsonl"
MANIFEST_FILE = "manifest.json"
FAKES_FILE = "fakes.csv"
COVERAGE_FILE = "coverage.json"
SCATTER_FILE = "scatter.svg"


class RunFolders:
    """
    Output folder management for a CLI command run

    Attributes:
        root: Path instance of the output folder (created on first access)
    """

    def __init__(self, root: Path):
        self.__root = root

    @property
    def root(self) -> Path:
        """
        Output folder
        """
        self.__root.mkdir(parents=True, exist_ok=True)
        return self.__root

    @property
    def logs(self) -> Path:
        """
        Logs folder (may be absolute, or relative to output folder)
        """
        return self.root / LogsConfigItems.LOGS_FOLDER.value

    @property
    def checkpoint(self) -> Path:
        return self.root / CHECKPOINT_FILE

    @property
    def metrics(self) -> Path:
        return self.root / METRICS_FILE

    @property
    def manifest(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def fakes(self) -> Path:
        return self.root / FAKES_FILE

    @property
    def coverage(self) -> Path:
        return self.root / COVERAGE_FILE

    @property
    def scatter(self) -> Path:
        return self.root / SCATTER_FILE
