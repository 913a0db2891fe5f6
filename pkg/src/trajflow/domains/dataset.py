from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Trajectories ``[n, H, D]``, fixed-length contexts ``[n, C]`` and
    generator facts (``info``) such as realised detection rate."""

    trajectories: np.ndarray
    contexts: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trajectories = np.asarray(self.trajectories, dtype=np.float64)
        n = self.trajectories.shape[0]
        if self.contexts is None:
            self.contexts = np.zeros((n, 0))
        ctx = np.asarray(self.contexts, dtype=np.float64)
        if ctx.ndim != 2:
            ctx = ctx.reshape(n, -1) if n else np.zeros((0, 0))
        self.contexts = ctx

    def __len__(self):
        return self.trajectories.shape[0]

    def subset(self, idx):
        return Dataset(self.trajectories[idx], self.contexts[idx], dict(self.info))
