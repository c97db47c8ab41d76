"""
Lectura y escritura de problemas, configuraciones, reportes, asignaciones y tablas.
"""
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar, Union

import numpy as np
import pandas as pd
import pydantic
from loguru import logger

from app.api.validation import AssignmentFile, ProblemFile, ReportFile
from app.config import PROBLEM_FILE_VERSION
from app.errors import ParseError, SchemaError, ValidationError
from app.models.core_model import (
    Assignment,
    ClipSpec,
    ProblemInstance,
    SolveReport,
    SolverConfig,
    TrackletSpec,
    build_problem,
)
from app.models.evaluation import GroundTruth
from app.models.synth import ScenarioSpec

PathLike = Union[str, Path]
Model = TypeVar("Model", bound=pydantic.BaseModel)


def pydantic_message(error: pydantic.ValidationError) -> str:
    """Mensaje de una línea con la ubicación de cada campo inválido."""
    partes = []
    for e in error.errors():
        ubicacion = ".".join(str(parte) for parte in e["loc"] if parte != "__root__")
        partes.append(f"{ubicacion}: {e['msg']}" if ubicacion else e["msg"])
    return "; ".join(partes)


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no existe el archivo {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: JSON inválido ({e.msg}, línea {e.lineno})") from e


def write_json(document: Dict[str, Any], path: PathLike):
    """Escribir JSON en orden canónico (el de inserción) con salto de línea final."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, ensure_ascii=False, allow_nan=False) + "\n", encoding="utf-8")


def parse_document(model: Type[Model], data: Any, source: str = "documento") -> Model:
    try:
        return model.parse_obj(data)
    except pydantic.ValidationError as e:
        raise SchemaError(f"{source}: {pydantic_message(e)}") from e


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


# Problemas

def problem_from_document(doc: ProblemFile) -> ProblemInstance:
    specs = [
        ClipSpec(
            clip.id,
            clip.horizon,
            tuple(TrackletSpec(tr.begin, tr.end, tr.score, tr.gt_label) for tr in clip.tracklets),
            clip.gt_action,
        )
        for clip in doc.clips
    ]
    video = np.array(doc.video_features.rows, dtype=np.float64).reshape(-1, doc.video_features.d)
    tracklets = np.array(doc.tracklet_features.rows, dtype=np.float64).reshape(-1, doc.tracklet_features.d)
    return build_problem(specs, video, tracklets)


def problem_to_document(p: ProblemInstance) -> Dict[str, Any]:
    return {
        "version": PROBLEM_FILE_VERSION,
        "clips": [
            {
                "id": clip.clip_id,
                "horizon": clip.horizon,
                "gt_action": None if clip.gt_action_interval is None else list(clip.gt_action_interval),
                "tracklets": [
                    {
                        "begin": tr.begin,
                        "end": tr.end,
                        "score": tr.detection_score,
                        "gt_label": None if tr.gt_label is None else tr.gt_label.value,
                    }
                    for tr in clip.tracklets
                ],
            }
            for clip in p.clips
        ],
        "video_features": {"d": p.d_v, "rows": p.video_features.tolist()},
        "tracklet_features": {"d": p.d_s, "rows": p.tracklet_features.tolist()},
    }


def load_problem(path: PathLike) -> Tuple[ProblemInstance, Optional[GroundTruth]]:
    """
    Cargar y validar un archivo de problema.

    Returns:
        Tupla (instancia, verdad de terreno o None si el archivo no trae etiquetas
        ni intervalos de acción)
    """
    doc = parse_document(ProblemFile, read_json(path), str(path))
    problem = problem_from_document(doc)
    gt = GroundTruth.from_problem(problem)
    con_referencia = gt.has_labels or gt.has_actions
    logger.info(f"Problema {path}: {problem.N} clips, T={problem.T}, M={problem.M}")
    return problem, gt if con_referencia else None


def save_problem(p: ProblemInstance, path: PathLike):
    write_json(problem_to_document(p), path)
    logger.info(f"Problema guardado en {path}")


# Configuraciones

def load_config(path: PathLike) -> SolverConfig:
    return parse_document(SolverConfig, read_json(path), str(path))


def load_scenario(path: PathLike) -> ScenarioSpec:
    return parse_document(ScenarioSpec, read_json(path), str(path))


def config_to_document(cfg: SolverConfig) -> Dict[str, Any]:
    return json.loads(cfg.json(by_alias=True))


# Reportes y asignaciones

def _assignment_block(a: Assignment) -> Dict[str, Any]:
    return {"z": a.z.tolist(), "y": a.y.tolist()}


def save_report(report: SolveReport, path: PathLike, timings: bool = False):
    document = {
        "version": PROBLEM_FILE_VERSION,
        "mode": report.config.solver_mode.value,
        "config": config_to_document(report.config),
        "traces": [
            {"phase": r.phase, "iteration": r.iteration, "objective": r.objective, "gap": r.gap}
            for r in report.trace
        ],
        "relaxed_final": _assignment_block(report.relaxed_final),
        "relaxed_objective": report.relaxed_objective,
        "best_integer": None if report.best_integer is None else _assignment_block(report.best_integer),
        "best_integer_objective": _finite_or_none(report.best_integer_objective),
        "wall_times": dict(report.wall_times) if timings else None,
    }
    write_json(document, path)
    logger.info(f"Reporte guardado en {path}")


def load_report(path: PathLike) -> Tuple[Assignment, SolverConfig, ReportFile]:
    """Iterado relajado final, configuración y documento completo de un reporte."""
    doc = parse_document(ReportFile, read_json(path), str(path))
    cfg = parse_document(SolverConfig, doc.config, f"{path}: config")
    relajado = Assignment(np.array(doc.relaxed_final.z), np.array(doc.relaxed_final.y).reshape(-1, 2))
    return relajado, cfg, doc


def save_assignment(a: Assignment, path: PathLike, mode: str, variant: Optional[str] = None,
                    integer_objective: Optional[float] = None, relaxed_objective: Optional[float] = None,
                    seconds: Optional[float] = None):
    document = {
        "version": PROBLEM_FILE_VERSION,
        "variant": variant,
        "mode": mode,
        "z": a.z.tolist(),
        "y": a.y.tolist(),
        "integer_objective": _finite_or_none(integer_objective),
        "relaxed_objective": _finite_or_none(relaxed_objective),
        "seconds": seconds,
    }
    write_json(document, path)
    logger.info(f"Asignación guardada en {path}")


def load_assignment(path: PathLike) -> Tuple[Assignment, AssignmentFile]:
    doc = parse_document(AssignmentFile, read_json(path), str(path))
    asignacion = Assignment(np.array(doc.z, dtype=np.float64), np.array(doc.y, dtype=np.float64).reshape(-1, 2), True)
    return asignacion, doc


# Tablas de resultados

def save_results(table: pd.DataFrame, path: PathLike):
    """CSV sin índice; los NaN quedan como celdas vacías."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Resultados guardados en {path} ({len(table)} filas)")


def load_results(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)
