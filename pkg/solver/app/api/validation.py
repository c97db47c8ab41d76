"""
Esquemas de validación de los archivos JSON del solucionador.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator

from app.config import PROBLEM_FILE_VERSION
from app.models.core_model import TrackletLabel


class TrackletEntry(BaseModel):
    """Un tracklet dentro de un clip."""
    begin: int = Field(..., ge=0, description="Primer paso de tiempo (inclusive)")
    end: int = Field(..., ge=0, description="Último paso de tiempo (inclusive)")
    score: Optional[float] = Field(None, ge=0, le=1, description="Puntaje del detector")
    gt_label: Optional[TrackletLabel] = Field(None, description="Etiqueta de referencia")

    class Config:
        extra = "forbid"

    @validator("end")
    def validate_end(cls, v, values):
        if "begin" in values and v < values["begin"]:
            raise ValueError(f"end={v} anterior a begin={values['begin']}")
        return v


class ClipEntry(BaseModel):
    id: str = Field(..., min_length=1)
    horizon: int = Field(..., ge=1)
    gt_action: Optional[Tuple[int, int]] = None
    tracklets: List[TrackletEntry]

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def validate_ranges(cls, values):
        horizon = values["horizon"]
        for k, tr in enumerate(values["tracklets"]):
            if tr.end >= horizon:
                raise ValueError(f"clip '{values['id']}': tracklet {k} termina en {tr.end} >= horizonte {horizon}")
        accion = values.get("gt_action")
        if accion is not None and not (0 <= accion[0] <= accion[1] < horizon):
            raise ValueError(f"clip '{values['id']}': gt_action {list(accion)} fuera de [0, {horizon - 1}]")
        return values


class FeatureBlock(BaseModel):
    """Matriz de características guardada por filas."""
    d: int = Field(..., ge=1)
    rows: List[List[float]]

    class Config:
        extra = "forbid"

    @validator("rows")
    def validate_rows(cls, v, values):
        d = values.get("d")
        for i, row in enumerate(v):
            if d is not None and len(row) != d:
                raise ValueError(f"fila {i} con {len(row)} columnas, se esperaban {d}")
        return v


def _missing_rows_message(kind: str, ids: List[str], sizes: List[int], available: int) -> str:
    acumulado = 0
    for clip_id, tamano in zip(ids, sizes):
        acumulado += tamano
        if acumulado > available:
            return f"clip '{clip_id}': faltan filas de {kind} ({available} filas, se esperaban {sum(sizes)})"
    return f"{kind}: {available} filas, se esperaban {sum(sizes)}"


class ProblemFile(BaseModel):
    """Documento de problema (versión 1)."""
    version: int
    clips: List[ClipEntry] = Field(..., min_items=1)
    video_features: FeatureBlock
    tracklet_features: FeatureBlock

    class Config:
        extra = "forbid"

    @validator("version")
    def validate_version(cls, v):
        if v != PROBLEM_FILE_VERSION:
            raise ValueError(f"versión {v} no soportada (se espera {PROBLEM_FILE_VERSION})")
        return v

    @validator("clips")
    def validate_ids(cls, v):
        ids = [clip.id for clip in v]
        repetidos = sorted({i for i in ids if ids.count(i) > 1})
        if repetidos:
            raise ValueError(f"identificadores de clip repetidos: {', '.join(repetidos)}")
        return v

    @root_validator(skip_on_failure=True)
    def validate_row_counts(cls, values):
        ids = [clip.id for clip in values["clips"]]
        horizontes = [clip.horizon for clip in values["clips"]]
        conteos = [len(clip.tracklets) for clip in values["clips"]]
        if len(values["video_features"].rows) != sum(horizontes):
            raise ValueError(_missing_rows_message("video_features", ids, horizontes, len(values["video_features"].rows)))
        if len(values["tracklet_features"].rows) != sum(conteos):
            raise ValueError(_missing_rows_message("tracklet_features", ids, conteos, len(values["tracklet_features"].rows)))
        return values


class TraceEntry(BaseModel):
    phase: str
    iteration: int
    objective: float
    gap: float


class AssignmentBlock(BaseModel):
    z: List[float]
    y: List[Tuple[float, float]]


class ReportFile(BaseModel):
    """Reporte de ``solve``."""
    version: int = PROBLEM_FILE_VERSION
    mode: str
    config: Dict
    traces: List[TraceEntry]
    relaxed_final: AssignmentBlock
    relaxed_objective: float
    best_integer: Optional[AssignmentBlock] = None
    best_integer_objective: Optional[float] = None
    wall_times: Optional[Dict[str, float]] = None


class AssignmentFile(BaseModel):
    """Asignación entera escrita por ``round``."""
    version: int = PROBLEM_FILE_VERSION
    variant: Optional[str] = None
    mode: str
    z: List[float]
    y: List[Tuple[float, float]]
    integer_objective: Optional[float] = None
    relaxed_objective: Optional[float] = None
    seconds: Optional[float] = None
