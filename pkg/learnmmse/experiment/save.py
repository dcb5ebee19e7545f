from typing import Any, Dict, Iterable, Optional, Tuple

import json
from dataclasses import dataclass
from pathlib import Path

import pandas as pd
from loguru import logger

from ..errors import InvalidArgumentError

__all__ = (
    "RESULT_COLUMNS",
    "save_cls_from_short_name",
    "SaveContext",
    "ResultSaver",
    "CsvSaver",
    "results_frame",
    "emit_results",
)

RESULT_COLUMNS = ("snr_db", "method", "nmse", "seed")


@dataclass
class SaveContext:
    output: Path

    @property
    def metadata_path(self) -> Path:
        return self.output.with_name(f"{self.output.name}.meta.json")


class ResultSaver:
    """
    Encapsulates how the result table of a sweep is persisted, so that the
    runners do not need to know about file formats.
    """

    short_name: str = None

    @classmethod
    def save_results(cls, table: pd.DataFrame, metadata: Dict[str, Any], context: SaveContext):
        raise NotImplementedError

    @staticmethod
    def save_json(path: Path, data):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(str(path), "w") as f:
            json.dump(data, f, indent=2, sort_keys=True, default=str)

    @staticmethod
    def save_metadata(context: SaveContext, metadata: Dict[str, Any]):
        ResultSaver.save_json(context.metadata_path, metadata)


class CsvSaver(ResultSaver):
    short_name = "csv"

    @staticmethod
    def save_results(table: pd.DataFrame, metadata: Dict[str, Any], context: SaveContext):
        context.output.parent.mkdir(parents=True, exist_ok=True)

        text = table.to_csv(index=False, float_format="%.12g").replace("\r\n", "\n")
        with open(str(context.output), "w", newline="") as f:
            f.write(text)

        if metadata is not None:
            CsvSaver.save_metadata(context, metadata)

        logger.info(f"Wrote {len(table)} result rows to {context.output}")


_by_short_names = {cls.short_name: cls for cls in [CsvSaver]}
save_cls_from_short_name = _by_short_names.get


def results_frame(rows: Iterable[Tuple[float, str, float, int]]) -> pd.DataFrame:
    table = pd.DataFrame(list(rows), columns=list(RESULT_COLUMNS))
    return table.astype({"snr_db": float, "method": str, "nmse": float, "seed": int})


def emit_results(
    table: pd.DataFrame,
    path,
    metadata: Optional[Dict[str, Any]] = None,
    save_format: str = "csv",
) -> Path:
    """
    Writes ``snr_db,method,nmse,seed`` rows with twelve significant digits and LF line
    endings, plus a ``<path>.meta.json`` sidecar when ``metadata`` is given.
    """
    saver = save_cls_from_short_name(save_format)
    if saver is None:
        raise InvalidArgumentError(f"Unknown result format '{save_format}'")

    context = SaveContext(output=Path(path))
    saver.save_results(table[list(RESULT_COLUMNS)], metadata, context)
    return context.output
