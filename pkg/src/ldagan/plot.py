from pathlib import Path

import matplotlib
import numpy as np

from ldagan.data import Dataset2D
from ldagan.errors import LdaganException, ResultCode
from ldagan.gan import FakeBatch

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # NOQA: E402

# Plot settings
FIGURE_SIZE = (6, 6)
REAL_COLOR = "red"
GENERATORS_CMAP = "tab10"


def save_scatter(path: Path, real: Dataset2D, fakes: FakeBatch, K: int):  # NOQA: N803
    """
    SVG scatter plot: real points, and fake points colored by generator
    """
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    try:
        ax.scatter(real.samples[:, 0], real.samples[:, 1], s=4, c=REAL_COLOR, alpha=0.3, label="real")
        cmap = plt.get_cmap(GENERATORS_CMAP)
        ids = np.asarray(fakes.mode_ids)
        for k in range(K):
            mine = fakes.samples[ids == k]
            if len(mine):
                ax.scatter(mine[:, 0], mine[:, 1], s=6, color=cmap(k % cmap.N), label=f"G{k}")
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize="small", markerscale=2)

        # No date metadata, for reproducible output
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise LdaganException(f"Can't write file {path}: {e}", ResultCode.ERROR_IO)
    finally:
        plt.close(fig)
