import json
import logging
import os
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from lattice_gravimeter.config import Config

log = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


class ReportSerializer(json.JSONEncoder):
    """Encode value objects exposing to_dict, enums and numpy scalars."""

    def default(self, o):
        if hasattr(o, "to_dict"):
            return o.to_dict()
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return json.JSONEncoder.default(self, o)


def write_json(payload: Any, path: str) -> str:
    with open(path, "w") as f:
        json.dump(payload, f, cls=ReportSerializer, indent=2, sort_keys=True)
        f.write("\n")
    log.info(f"Wrote {path}")
    return path


def write_csv(table: pd.DataFrame, path: str, float_format: str = Config.CSV_FLOAT_FORMAT) -> str:
    """CSV with every double written to full round-trip precision."""
    table.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
    log.info(f"Wrote {path} ({len(table)} rows)")
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_manifest(
    out_dir: str,
    command: str,
    params: Optional[Dict[str, Any]] = None,
    state: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
    version: str = "unknown",
    artifacts: Optional[Dict[str, str]] = None,
) -> str:
    """Run manifest; its timestamp is the only wall-clock content of a run's outputs."""
    manifest = {
        "command": command,
        "params": params,
        "state": state,
        "seed": seed,
        "version": version,
        "artifacts": artifacts or {},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return write_json(manifest, os.path.join(out_dir, MANIFEST_FILE))
