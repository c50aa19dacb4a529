# src/storage/files.py
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from src import __version__
from src.errors import DataFileError
from src.models.chain import ChainOutput
from src.models.design import DesignSet
from src.models.experiment import BenchResult
from src.models.manifest import RunManifest
from src.prediction.intervals import Predictive, point_prediction, prediction_intervals

PathLike = Union[str, Path]

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


def header_lines(seed: Optional[int], extra: Sequence[str] = ()) -> List[str]:
    lines = [f"# gibbs-kriging {__version__}", f"# seed {seed if seed is not None else 'none'}"]
    lines.extend(f"# {line}" for line in extra)
    return lines


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(
    frame: pd.DataFrame, path: PathLike, seed: Optional[int], extra: Sequence[str] = ()
) -> Path:
    """Headered CSV: '#' lines with the library version and master seed, then the table."""
    path = _prepare(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(header_lines(seed, extra)) + "\n")
        frame.to_csv(fh, index=False, lineterminator="\n", float_format="%.17g")
    logger.success(f"Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    """Read a headered CSV, skipping '#' comment lines."""
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"data file not found: {path}")
    try:
        return pd.read_csv(path, comment="#", skip_blank_lines=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFileError(f"cannot parse {path}: {e}") from e


def _numeric(frame: pd.DataFrame, path: Path) -> np.ndarray:
    values = frame.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataFileError(
            f"{path}: non-numeric or missing value in data row {row + 1} "
            f"({frame.iloc[row].tolist()})"
        )
    return values.to_numpy(dtype=float)


def read_observations(path: PathLike, r: Optional[int] = None) -> Tuple[DesignSet, np.ndarray]:
    """Coordinates followed by the response, one point per row."""
    path = Path(path)
    frame = read_csv(path)
    if frame.shape[1] < 2:
        raise DataFileError(f"{path}: need at least one coordinate column and a response column")
    if r is not None and frame.shape[1] != r + 1:
        raise DataFileError(f"{path}: expected {r + 1} columns (r={r} plus response), got {frame.shape[1]}")
    if frame.shape[0] == 0:
        raise DataFileError(f"{path}: no data rows")
    data = _numeric(frame, path)
    try:
        design = DesignSet(points=data[:, :-1])
    except ValueError as e:
        raise DataFileError(f"{path}: {e}") from e
    logger.debug(f"Read {design.n} observations in dimension {design.r} from {path}")
    return design, data[:, -1]


def read_targets(path: PathLike, r: int) -> DesignSet:
    """Prediction targets: r coordinate columns, one point per row."""
    path = Path(path)
    frame = read_csv(path)
    if frame.shape[1] != r:
        raise DataFileError(f"{path}: expected {r} coordinate columns, got {frame.shape[1]}")
    if frame.shape[0] == 0:
        raise DataFileError(f"{path}: no target rows")
    return DesignSet(points=_numeric(frame, path))


def coordinate_names(r: int) -> List[str]:
    return [f"x{j + 1}" for j in range(r)]


def write_chain(chain: ChainOutput, path: PathLike) -> Path:
    r = chain.theta.shape[1]
    frame = pd.DataFrame(chain.theta, columns=[f"theta{j + 1}" for j in range(r)])
    frame["log_l1"] = chain.log_l1
    cfg = chain.config
    extra = [f"sweeps {cfg.n_iter}, burn-in {cfg.burn_in}, thin {cfg.thin}"]
    return write_csv(frame, path, cfg.seed, extra)


def prediction_frame(
    targets: DesignSet, dist: Predictive, level: float, method: str
) -> pd.DataFrame:
    lo, hi = prediction_intervals(dist, level)
    frame = pd.DataFrame(targets.points, columns=coordinate_names(targets.r))
    frame["prediction"] = point_prediction(dist)
    frame["lower"] = lo
    frame["upper"] = hi
    frame["level"] = level
    frame["method"] = method
    return frame


def write_predictions(
    targets: DesignSet,
    dist: Predictive,
    level: float,
    method: str,
    path: PathLike,
    seed: Optional[int],
) -> Path:
    return write_csv(prediction_frame(targets, dist, level, method), path, seed)


def bench_frame(rows: Sequence[Tuple[str, BenchResult]]) -> pd.DataFrame:
    records = []
    for label, result in rows:
        for s in result.summaries:
            records.append(
                {
                    "configuration": label,
                    "method": s.method.value,
                    "coverage": s.coverage,
                    "coverage_se": s.coverage_se,
                    "mean_length": s.mean_length,
                    "length_se": s.length_se,
                    "n_designs": s.n_designs,
                    "n_failed": s.n_failed,
                    "seed": result.config.seed,
                }
            )
    return pd.DataFrame.from_records(records)


def write_bench(rows: Sequence[Tuple[str, BenchResult]], path: PathLike, seed: int) -> Path:
    return write_csv(bench_frame(rows), path, seed)


def write_text(text: str, path: PathLike, seed: Optional[int], extra: Sequence[str] = ()) -> Path:
    """Plain-text report under the same '#' header as the CSV outputs."""
    path = _prepare(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(header_lines(seed, extra)) + "\n")
        fh.write(text)
    logger.success(f"Wrote {path}")
    return path


def _default(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(payload: Any) -> bytes:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump()
    return orjson.dumps(payload, default=_default, option=JSON_OPTIONS)


def write_json(payload: Any, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_bytes(to_json(payload))
    logger.success(f"Wrote {path}")
    return path


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return orjson.loads(path.read_bytes())
    except (OSError, orjson.JSONDecodeError) as e:
        raise DataFileError(f"cannot read JSON from {path}: {e}") from e


def write_diagnostics(chain: ChainOutput, path: PathLike) -> Path:
    payload = {
        "diagnostics": chain.diagnostics,
        "update_counts": chain.update_counts,
        "n_retained": len(chain),
        "posterior_mean": chain.theta.mean(axis=0) if len(chain) else [],
        "config": chain.config,
    }
    return write_json(payload, path)


def write_manifest(manifest: RunManifest, path: PathLike) -> Path:
    return write_json(manifest, path)


def read_manifest(path: PathLike) -> RunManifest:
    return RunManifest.model_validate(read_json(path))
