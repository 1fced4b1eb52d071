"""Stable JSON documents, headline CSV tables and atomic writes."""

import dataclasses
import json
import os
import tempfile
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd


def to_builtin(obj: Any) -> Any:
    """Recursively convert dataclasses, numpy values and enums to JSON-ready builtins."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_builtin(obj.to_dict())
        return {f.name: to_builtin(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if hasattr(obj, "model_dump"):
        return to_builtin(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(document: Any) -> str:
    """Serialize with sorted keys so identical inputs give identical bytes."""
    return json.dumps(to_builtin(document), sort_keys=True, indent=2)


def atomic_write_text(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, document: Any) -> None:
    atomic_write_text(path, dumps(document) + "\n")


def rows_to_csv(rows: List[Dict[str, Any]], columns: Sequence[str]) -> str:
    """Render headline rows with a fixed column order."""
    frame = pd.DataFrame([to_builtin(r) for r in rows], columns=list(columns))
    return frame.to_csv(index=False, lineterminator="\n")


def write_csv(path: Path, rows: List[Dict[str, Any]], columns: Sequence[str]) -> None:
    atomic_write_text(path, rows_to_csv(rows, columns))
