"""
Progress bars over epochs and grid members. Trainers and grid workers disable them unless
the command line asks for --progress, so logs stay readable in files and tests.
"""

from __future__ import annotations

from typing import Optional

from tqdm import tqdm

TQDM_WID = 90


class tqdm_max_ncols(tqdm):
    """
    Wrapper for tqdm progressbar with a maximum width. Default max_ncols=90.

    This allows resizing a window later on without breaking the progressbar output.
    """

    def __init__(self, *args, max_ncols: Optional[int] = TQDM_WID, **kwargs):
        super().__init__(*args, **kwargs)
        if self.disable:
            return
        if max_ncols is not None and self.ncols is not None:
            self.ncols = min(self.ncols, max_ncols)


def epoch_pbar(n_epochs: int, desc: str, show: bool = True) -> tqdm_max_ncols:
    """Progressbar over epochs 1..n_epochs, disabled when show is False (tests, workers)."""
    return tqdm_max_ncols(
        range(1, n_epochs + 1), desc=desc, total=n_epochs, disable=not show, leave=False
    )
