import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import ValidationError

from plaggm.core.exceptions import DataError, DatasetFormatError
from plaggm.core.models import (
    BaselineResult,
    ConfoundedDataset,
    CrossValidationResult,
    FitPath,
    Method,
    PathPoint,
    SimTruth,
    SymmetricParam,
)


def _edges_1based(theta: SymmetricParam) -> List[List[Any]]:
    return [[j + 1, k + 1, v] for j, k, v in theta.edges()]


def _param_from_json(p: int, diag: Sequence[float], edges: Iterable[Sequence[Any]], source: str) -> SymmetricParam:
    matrix = np.zeros((p, p))
    for edge in edges:
        j, k, value = int(edge[0]) - 1, int(edge[1]) - 1, float(edge[2])
        if not (0 <= j < p and 0 <= k < p) or j == k:
            raise DatasetFormatError(f"invalid edge {list(edge)} for p={p}", path=source)
        matrix[j, k] = matrix[k, j] = value
    matrix[np.diag_indices(p)] = np.asarray(diag, dtype=float)
    return SymmetricParam.from_matrix(matrix)


class ResultStore:
    """本地文件读写, 所有写入均为原子操作 (临时文件 + rename)"""

    def __init__(self, root: Path | str = "."):
        self.root = Path(root)

    def _resolve(self, key: str | Path) -> Path:
        path = Path(key)
        return path if path.is_absolute() else self.root / path

    def _write_text(self, key: str | Path, text: str) -> Path:
        """原子写入文本"""
        path = self._resolve(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise DataError(f"could not write {path}: {e}")
        logger.debug(f"Wrote {path}")
        return path

    def _read_text(self, key: str | Path) -> Tuple[Path, str]:
        path = self._resolve(key)
        if not path.is_file():
            raise DataError(f"file not found: {path}")
        try:
            return path, path.read_text(encoding="utf-8")
        except OSError as e:
            raise DataError(f"could not read {path}: {e}")

    def write_json(self, key: str | Path, payload: Dict[str, Any]) -> Path:
        """严格 JSON: NaN / Infinity 直接拒绝"""
        try:
            text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
        except ValueError as e:
            raise DataError(f"{key}: payload is not valid JSON: {e}")
        return self._write_text(key, text + "\n")

    def read_json(self, key: str | Path) -> Dict[str, Any]:
        path, text = self._read_text(key)
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(e.msg, path=str(path), line=e.lineno)

    def write_rows(self, key: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """写 CSV, 浮点数使用 repr 保证可逆"""
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
        return self._write_text(key, "\n".join(lines) + "\n")

    # 数据集

    def write_dataset(self, key: str | Path, dataset: ConfoundedDataset) -> Path:
        header = ["g"] + [f"z{j + 1}" for j in range(dataset.p)]
        rows = np.column_stack([dataset.g, dataset.Z])
        return self.write_rows(key, header, (list(map(float, row)) for row in rows))

    def read_dataset(self, key: str | Path) -> ConfoundedDataset:
        path, text = self._read_text(key)
        reader = csv.reader(text.splitlines())
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file", path=str(path), line=1)
        p = len(header) - 1
        expected = ["g"] + [f"z{j + 1}" for j in range(p)]
        if [h.strip() for h in header] != expected:
            raise DatasetFormatError(
                f"header must be {','.join(expected)}", path=str(path), line=1
            )
        values = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 1:
                raise DatasetFormatError(
                    f"expected {p + 1} fields, got {len(row)}", path=str(path), line=line_no
                )
            try:
                values.append([float(v) for v in row])
            except ValueError as e:
                raise DatasetFormatError(str(e), path=str(path), line=line_no)
        if not values:
            raise DatasetFormatError("no data rows", path=str(path), line=2)
        data = np.array(values)
        try:
            dataset = ConfoundedDataset(g=data[:, 0], Z=data[:, 1:])
        except ValidationError as e:
            raise DatasetFormatError(str(e), path=str(path))
        logger.info(f"Loaded dataset {path}: n={dataset.n}, p={dataset.p}")
        return dataset

    # 真值

    def write_truth(self, key: str | Path, truth: SimTruth) -> Path:
        theta = truth.theta0
        return self.write_json(
            key,
            {
                "p": theta.p,
                "diag": [float(v) for v in theta.diag],
                "edges": _edges_1based(theta),
                "scale": {k: float(v) for k, v in truth.scale.items()},
            },
        )

    def read_truth(self, key: str | Path) -> SymmetricParam:
        payload = self.read_json(key)
        source = str(self._resolve(key))
        try:
            return _param_from_json(int(payload["p"]), payload["diag"], payload["edges"], source)
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise DatasetFormatError(f"malformed truth file: {e}", path=source)

    # 拟合结果

    def write_path(self, key: str | Path, result: BaselineResult) -> Path:
        points = [
            {
                "lambda": pt.lam,
                "objective": pt.objective,
                "active_size": pt.active_size,
                "sweeps": pt.sweeps,
                "kkt_violation": pt.kkt_violation,
                "repairs": pt.repairs,
                "converged": pt.converged,
                "diag": [float(v) for v in pt.theta.diag],
                "edges": _edges_1based(pt.theta),
            }
            for pt in result.path.points
        ]
        p = result.path.points[0].theta.p if points else None
        return self.write_json(
            key,
            {
                "method": result.method.value,
                "p": p,
                "selected_lambda": result.selected_lambda,
                "notes": result.notes,
                "points": points,
            },
        )

    def read_path(self, key: str | Path) -> BaselineResult:
        payload = self.read_json(key)
        source = str(self._resolve(key))
        try:
            p = payload["p"]
            points = [
                PathPoint(
                    lam=pt["lambda"],
                    theta=_param_from_json(int(p), pt["diag"], pt["edges"], source),
                    objective=pt["objective"],
                    active_size=pt["active_size"],
                    sweeps=pt["sweeps"],
                    kkt_violation=pt["kkt_violation"],
                    repairs=pt["repairs"],
                    converged=pt["converged"],
                )
                for pt in payload["points"]
            ]
            return BaselineResult(
                method=Method(payload["method"]),
                path=FitPath(points=points),
                selected_lambda=payload.get("selected_lambda"),
                notes=payload.get("notes", {}),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise DatasetFormatError(f"malformed path file: {e}", path=source)

    def write_cv(self, key: str | Path, cv: CrossValidationResult) -> Path:
        rows = zip(map(float, cv.lambdas), map(float, cv.mean), map(float, cv.sd))
        return self.write_rows(key, ["lambda", "mean", "sd"], rows)

    def write_selected(self, key: str | Path, theta: SymmetricParam, lam: Optional[float]) -> Path:
        return self.write_json(
            key,
            {
                "p": theta.p,
                "lambda": lam,
                "diag": [float(v) for v in theta.diag],
                "edges": _edges_1based(theta),
            },
        )

    def read_selected(self, key: str | Path) -> SymmetricParam:
        payload = self.read_json(key)
        source = str(self._resolve(key))
        try:
            return _param_from_json(int(payload["p"]), payload["diag"], payload["edges"], source)
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise DatasetFormatError(f"malformed estimate file: {e}", path=source)

    def write_dense(self, key: str | Path, theta: SymmetricParam) -> Path:
        """p×p 稠密矩阵 CSV"""
        header = [f"z{j + 1}" for j in range(theta.p)]
        return self.write_rows(key, header, (list(map(float, row)) for row in theta.matrix()))
