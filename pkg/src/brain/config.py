"""Engine configuration, read from an optional ``config.toml`` in the data dir.

Recognized keys::

    [inference]
    tau_merge = 0.6
    tau_split = 0.2
    max_path_len = 6
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_TAU_MERGE = 0.6
DEFAULT_TAU_SPLIT = 0.2
DEFAULT_MAX_PATH_LEN = 6


@dataclass(frozen=True)
class Config:
    tau_merge: float = DEFAULT_TAU_MERGE
    tau_split: float = DEFAULT_TAU_SPLIT
    max_path_len: int = DEFAULT_MAX_PATH_LEN

    @classmethod
    def load(cls, data_dir: Path | str | None) -> "Config":
        if data_dir is None:
            return cls()
        path = Path(data_dir) / "config.toml"
        if not path.exists():
            return cls()
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        inf = raw.get("inference", {})
        return cls(
            tau_merge=float(inf.get("tau_merge", DEFAULT_TAU_MERGE)),
            tau_split=float(inf.get("tau_split", DEFAULT_TAU_SPLIT)),
            max_path_len=int(inf.get("max_path_len", DEFAULT_MAX_PATH_LEN)),
        )
