"""
Modelo de datos del problema conjunto de acciones y estados de objetos.

Define los clips, tracklets, instancias de problema, asignaciones (relajadas o
enteras), la configuración del solucionador y los predicados de factibilidad que
comparten el resto de los módulos.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError

from app.config import (
    DEFAULT_CONVEX_MAX_ITERS,
    DEFAULT_CONVEX_TOL,
    DEFAULT_FW_TOL,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_ITERS,
    DEFAULT_MU,
    DEFAULT_NU,
    DEFAULT_ROUNDING_CADENCE,
    DEFAULT_SEED,
)
from app.errors import DimensionMismatch, InfeasibleClip, ValidationError


class TrackletLabel(str, Enum):
    """Etiquetas de verdad de terreno de un tracklet."""
    STATE1 = "state1"
    STATE2 = "state2"
    AMBIGUOUS = "ambiguous"
    FALSE_POSITIVE = "false_positive"


class ConstraintMode(str, Enum):
    """Restricción de conteo por estado."""
    AT_LEAST_ONE = "at_least_one"
    EXACTLY_ONE = "exactly_one"


class SolverMode(str, Enum):
    """Qué partes del objetivo se optimizan."""
    STATE_ONLY = "state-only"
    ACTION_ONLY = "action-only"
    JOINT = "joint"
    CONSTRAINTS_ONLY = "constraints-only"


# Nombres de fase en las trazas de Frank-Wolfe
PHASE_ACTION = "convex_action"
PHASE_STATE = "convex_state"
PHASE_JOINT = "joint"

# Códigos de etiqueta usados en las matrices de etiquetado (K x M_n)
LABEL_NONE = 0
LABEL_STATE1 = 1
LABEL_STATE2 = 2


def tracklet_time(begin: int, end: int) -> int:
    """Punto medio con las mitades redondeadas hacia arriba (no el redondeo al par de ``round``)."""
    return (begin + end + 1) // 2


@dataclass(frozen=True)
class Tracklet:
    clip_id: str
    index_in_clip: int
    begin: int
    end: int
    time: int
    detection_score: Optional[float] = None
    gt_label: Optional[TrackletLabel] = None

    def overlaps(self, other: "Tracklet") -> bool:
        """Intervalos cerrados: comparten al menos un paso de tiempo."""
        return self.begin <= other.end and other.begin <= self.end


@dataclass(frozen=True)
class Clip:
    clip_id: str
    horizon: int
    tracklets: Tuple[Tracklet, ...]
    gt_action_interval: Optional[Tuple[int, int]] = None

    @property
    def n_tracklets(self) -> int:
        return len(self.tracklets)

    @cached_property
    def overlap_matrix(self) -> np.ndarray:
        """Matriz booleana triangular superior estricta: (i, j) con i < j que se solapan."""
        begins = np.array([tr.begin for tr in self.tracklets], dtype=np.int64)
        ends = np.array([tr.end for tr in self.tracklets], dtype=np.int64)
        solapan = (begins[:, None] <= ends[None, :]) & (begins[None, :] <= ends[:, None])
        return np.triu(solapan, k=1)


@dataclass(frozen=True)
class TrackletSpec:
    """Tracklet tal como llega de un archivo o del generador, antes de ordenar."""
    begin: int
    end: int
    score: Optional[float] = None
    gt_label: Optional[TrackletLabel] = None


@dataclass(frozen=True)
class ClipSpec:
    clip_id: str
    horizon: int
    tracklets: Sequence[TrackletSpec]
    gt_action: Optional[Tuple[int, int]] = None


def make_clip(spec: ClipSpec) -> Tuple[Clip, List[int]]:
    """
    Construir un clip con los tracklets ordenados por inicio.

    El orden es estable: empates por fin y luego por orden de entrada.

    Args:
        spec: Clip sin ordenar

    Returns:
        Tupla (clip, permutación) donde permutación[k] es el índice de entrada
        del tracklet que quedó en la posición k
    """
    orden = sorted(range(len(spec.tracklets)), key=lambda k: (spec.tracklets[k].begin, spec.tracklets[k].end, k))
    tracklets = []
    for posicion, k in enumerate(orden):
        ts = spec.tracklets[k]
        label = TrackletLabel(ts.gt_label) if ts.gt_label is not None else None
        tracklets.append(Tracklet(
            clip_id=spec.clip_id,
            index_in_clip=posicion,
            begin=int(ts.begin),
            end=int(ts.end),
            time=tracklet_time(int(ts.begin), int(ts.end)),
            detection_score=None if ts.score is None else float(ts.score),
            gt_label=label,
        ))
    gt_action = tuple(int(v) for v in spec.gt_action) if spec.gt_action is not None else None
    return Clip(spec.clip_id, int(spec.horizon), tuple(tracklets), gt_action), orden


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """
    Entrada inmutable del problema: clips, características de video (T x d_v)
    y de tracklets (M x d_s), con filas agrupadas por clip en orden de clip.
    """
    clips: Tuple[Clip, ...]
    video_features: np.ndarray
    tracklet_features: np.ndarray

    def __post_init__(self):
        if len(self.clips) == 0:
            raise ValidationError("el problema no tiene clips")
        ids = [clip.clip_id for clip in self.clips]
        if len(set(ids)) != len(ids):
            raise ValidationError("identificadores de clip repetidos")

        for clip in self.clips:
            _check_clip(clip)

        video = np.array(self.video_features, dtype=np.float64)
        tracklet = np.array(self.tracklet_features, dtype=np.float64)
        if video.ndim != 2 or tracklet.ndim != 2:
            raise ValidationError("las matrices de características deben ser bidimensionales")
        total_t = sum(clip.horizon for clip in self.clips)
        total_m = sum(clip.n_tracklets for clip in self.clips)
        if total_m < 1:
            raise ValidationError("el problema no tiene tracklets")
        if video.shape[0] != total_t:
            raise DimensionMismatch(f"video_features tiene {video.shape[0]} filas, se esperaban {total_t}")
        if tracklet.shape[0] != total_m:
            raise DimensionMismatch(f"tracklet_features tiene {tracklet.shape[0]} filas, se esperaban {total_m}")
        if video.shape[1] < 1 or tracklet.shape[1] < 1:
            raise ValidationError("las características necesitan al menos una columna")
        if not (np.all(np.isfinite(video)) and np.all(np.isfinite(tracklet))):
            raise ValidationError("características con valores no finitos")

        video.setflags(write=False)
        tracklet.setflags(write=False)
        object.__setattr__(self, "video_features", video)
        object.__setattr__(self, "tracklet_features", tracklet)

    # Dimensiones
    @property
    def N(self) -> int:
        return len(self.clips)

    @property
    def T(self) -> int:
        return int(self.video_features.shape[0])

    @property
    def M(self) -> int:
        return int(self.tracklet_features.shape[0])

    @property
    def d_v(self) -> int:
        return int(self.video_features.shape[1])

    @property
    def d_s(self) -> int:
        return int(self.tracklet_features.shape[1])

    @cached_property
    def video_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([clip.horizon for clip in self.clips])]).astype(np.int64)

    @cached_property
    def tracklet_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([clip.n_tracklets for clip in self.clips])]).astype(np.int64)

    def z_slice(self, n: int) -> slice:
        return slice(int(self.video_offsets[n]), int(self.video_offsets[n + 1]))

    def y_slice(self, n: int) -> slice:
        return slice(int(self.tracklet_offsets[n]), int(self.tracklet_offsets[n + 1]))

    @cached_property
    def tracklet_times(self) -> np.ndarray:
        return np.array([tr.time for clip in self.clips for tr in clip.tracklets], dtype=np.float64)

    @cached_property
    def detection_scores(self) -> np.ndarray:
        """Puntajes de detección (0 cuando faltan)."""
        return np.array([
            tr.detection_score if tr.detection_score is not None else 0.0
            for clip in self.clips for tr in clip.tracklets
        ], dtype=np.float64)

    def detection_bonus(self, det_score_weight: float) -> np.ndarray:
        """Bonificación κ·score/M por tracklet, en la misma escala por entrada que el costo de estados."""
        return (det_score_weight / self.M) * self.detection_scores

    @cached_property
    def time_hinges(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """
        Por clip, las matrices M_n x T_n de bisagras [t_ni - t]_+ y [t - t_ni]_+.
        """
        bloques = []
        for clip in self.clips:
            t = np.arange(clip.horizon, dtype=np.float64)
            t_ni = np.array([tr.time for tr in clip.tracklets], dtype=np.float64)
            diff = t_ni[:, None] - t[None, :]
            bloques.append((np.maximum(diff, 0.0), np.maximum(-diff, 0.0)))
        return bloques

    def replace_features(self, video_features: Optional[np.ndarray] = None,
                         tracklet_features: Optional[np.ndarray] = None) -> "ProblemInstance":
        """Copia del problema con otras características (mismos clips)."""
        return ProblemInstance(
            clips=self.clips,
            video_features=self.video_features if video_features is None else video_features,
            tracklet_features=self.tracklet_features if tracklet_features is None else tracklet_features,
        )


def _check_clip(clip: Clip):
    if clip.horizon < 1:
        raise ValidationError(f"clip '{clip.clip_id}': horizonte {clip.horizon} < 1")
    previo = None
    for k, tr in enumerate(clip.tracklets):
        if tr.index_in_clip != k or tr.clip_id != clip.clip_id:
            raise ValidationError(f"clip '{clip.clip_id}': índice de tracklet inconsistente en la posición {k}")
        if not (0 <= tr.begin <= tr.time <= tr.end < clip.horizon):
            raise ValidationError(
                f"clip '{clip.clip_id}': tracklet {k} [{tr.begin}, {tr.end}] fuera del horizonte {clip.horizon}"
            )
        if tr.detection_score is not None and not (0.0 <= tr.detection_score <= 1.0):
            raise ValidationError(f"clip '{clip.clip_id}': puntaje de detección fuera de [0, 1] en tracklet {k}")
        if previo is not None and (tr.begin, tr.end) < (previo.begin, previo.end):
            raise ValidationError(f"clip '{clip.clip_id}': tracklets no ordenados por inicio")
        previo = tr
    if clip.gt_action_interval is not None:
        start, end = clip.gt_action_interval
        if not (0 <= start <= end < clip.horizon):
            raise ValidationError(f"clip '{clip.clip_id}': intervalo de acción [{start}, {end}] inválido")


def build_problem(clip_specs: Sequence[ClipSpec], video_features, tracklet_features) -> ProblemInstance:
    """
    Construir una instancia a partir de clips sin ordenar.

    Las filas de ``tracklet_features`` vienen en el orden de entrada de cada clip
    y se permutan junto con los tracklets.
    """
    tracklet_features = np.asarray(tracklet_features, dtype=np.float64)
    total = sum(len(spec.tracklets) for spec in clip_specs)
    if tracklet_features.ndim != 2 or tracklet_features.shape[0] != total:
        raise DimensionMismatch(f"tracklet_features debe tener {total} filas")

    clips = []
    filas = []
    inicio = 0
    for spec in clip_specs:
        clip, orden = make_clip(spec)
        clips.append(clip)
        filas.extend(inicio + k for k in orden)
        inicio += len(spec.tracklets)
    return ProblemInstance(
        clips=tuple(clips),
        video_features=np.asarray(video_features, dtype=np.float64),
        tracklet_features=tracklet_features[filas] if filas else tracklet_features,
    )


@dataclass
class Assignment:
    """
    Variable de optimización (Z, Y).

    ``z`` tiene longitud T y ``y`` forma M x 2; los bloques por clip se obtienen
    con los cortes del problema.
    """
    z: np.ndarray
    y: np.ndarray
    integral: bool = False

    def copy(self) -> "Assignment":
        return Assignment(self.z.copy(), self.y.copy(), self.integral)

    def check(self, problem: ProblemInstance) -> "Assignment":
        if self.z.shape != (problem.T,):
            raise DimensionMismatch(f"z con forma {self.z.shape}, se esperaba ({problem.T},)")
        if self.y.shape != (problem.M, 2):
            raise DimensionMismatch(f"y con forma {self.y.shape}, se esperaba ({problem.M}, 2)")
        return self

    def move_towards(self, vertex: "Assignment", gamma: float) -> "Assignment":
        """Paso de Frank-Wolfe: (1 - gamma) * self + gamma * vertex."""
        if gamma == 1.0:
            return Assignment(vertex.z.copy(), vertex.y.copy(), vertex.integral)
        return Assignment(self.z + gamma * (vertex.z - self.z), self.y + gamma * (vertex.y - self.y), False)

    def z_block(self, problem: ProblemInstance, n: int) -> np.ndarray:
        return self.z[problem.z_slice(n)]

    def y_block(self, problem: ProblemInstance, n: int) -> np.ndarray:
        return self.y[problem.y_slice(n)]

    def state_sets(self, problem: ProblemInstance, n: int) -> Tuple[List[int], List[int]]:
        """Índices (dentro del clip) asignados al estado 1 y al estado 2."""
        bloque = self.y_block(problem, n)
        return list(np.flatnonzero(bloque[:, 0] > 0.5)), list(np.flatnonzero(bloque[:, 1] > 0.5))

    def action_times(self, problem: ProblemInstance) -> List[int]:
        """Paso de tiempo predicho por clip (argmax del bloque de Z)."""
        return [int(np.argmax(self.z_block(problem, n))) for n in range(problem.N)]


class SolverConfig(BaseModel):
    """Hiperparámetros y modo de resolución."""
    mu: float = Field(DEFAULT_MU, gt=0)
    lambda_: float = Field(DEFAULT_LAMBDA, alias="lambda", gt=0)
    nu: float = Field(DEFAULT_NU, ge=0)
    det_score_weight: float = Field(0.0, ge=0)
    constraint_mode: ConstraintMode = ConstraintMode.AT_LEAST_ONE
    solver_mode: SolverMode = SolverMode.JOINT
    max_iters: int = Field(DEFAULT_MAX_ITERS, ge=1)
    convex_max_iters: int = Field(DEFAULT_CONVEX_MAX_ITERS, ge=1)
    convex_tol: float = Field(DEFAULT_CONVEX_TOL, ge=0)
    fw_tol: float = Field(DEFAULT_FW_TOL, ge=0)
    rounding_cadence: int = Field(DEFAULT_ROUNDING_CADENCE, ge=1)
    seed: int = DEFAULT_SEED
    threads: int = Field(1, ge=1)
    object_cues: bool = False

    class Config:
        allow_population_by_field_name = True
        extra = "forbid"

    def with_overrides(self, **changes) -> "SolverConfig":
        """Copia validada con campos reemplazados (los None se ignoran)."""
        datos = self.dict()
        datos.update({k: v for k, v in changes.items() if v is not None})
        try:
            return SolverConfig.parse_obj(datos)
        except PydanticValidationError as e:
            raise ValidationError(f"configuración inválida: {e}") from e


@dataclass(frozen=True)
class TraceRecord:
    phase: str
    iteration: int
    objective: float
    gap: float


@dataclass
class SolveReport:
    """Resultado de ``solve``: trazas, iterado relajado y mejor solución entera."""
    config: SolverConfig
    trace: List[TraceRecord]
    relaxed_final: Assignment
    relaxed_objective: float
    best_integer: Optional[Assignment] = None
    best_integer_objective: float = float("inf")
    wall_times: Dict[str, float] = field(default_factory=dict)

    @property
    def phases(self) -> List[str]:
        vistas = []
        for record in self.trace:
            if record.phase not in vistas:
                vistas.append(record.phase)
        return vistas

    def objective_trace(self, phase: Optional[str] = None) -> List[float]:
        return [r.objective for r in self.trace if phase is None or r.phase == phase]

    def gap_trace(self, phase: Optional[str] = None) -> List[float]:
        return [r.gap for r in self.trace if phase is None or r.phase == phase]


# Factibilidad

def labels_from_y(y_n: np.ndarray) -> np.ndarray:
    """Matriz M_n x 2 binaria -> vector de códigos 0/1/2 (filas con dos unos -> -1)."""
    y_n = np.asarray(y_n)
    codigos = np.where(y_n[:, 0] > 0.5, LABEL_STATE1, LABEL_NONE) + np.where(y_n[:, 1] > 0.5, LABEL_STATE2, LABEL_NONE)
    return np.where(codigos == LABEL_STATE1 + LABEL_STATE2, -1, codigos)


def y_from_labels(labels: Sequence[int]) -> np.ndarray:
    labels = np.asarray(labels)
    y_n = np.zeros((labels.shape[0], 2), dtype=np.float64)
    y_n[labels == LABEL_STATE1, 0] = 1.0
    y_n[labels == LABEL_STATE2, 1] = 1.0
    return y_n


def labeling_feasibility(labels: np.ndarray, clip: Clip, mode: ConstraintMode) -> np.ndarray:
    """
    Factibilidad vectorizada de K etiquetados de un clip.

    Args:
        labels: Matriz K x M_n de códigos (0 ninguno, 1 estado 1, 2 estado 2;
            cualquier otro valor es infactible)
        clip: Clip dueño de los tracklets
        mode: Restricción de conteo

    Returns:
        Vector booleano de longitud K
    """
    labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
    k, m = labels.shape
    if m != clip.n_tracklets:
        raise DimensionMismatch(f"clip '{clip.clip_id}': {m} columnas para {clip.n_tracklets} tracklets")
    if m == 0:
        return np.zeros(k, dtype=bool)

    s1 = labels == LABEL_STATE1
    s2 = labels == LABEL_STATE2
    ok = np.all((labels >= LABEL_NONE) & (labels <= LABEL_STATE2), axis=1)

    # No solapamiento entre tracklets con estado
    con_estado = (s1 | s2).astype(np.int64)
    conflictos = (con_estado @ clip.overlap_matrix.astype(np.int64)) * con_estado
    ok &= ~np.any(conflictos > 0, axis=1)

    # Orden: todo estado 1 antes que todo estado 2
    idx = np.arange(m)
    ultimo_1 = np.where(s1, idx, -1).max(axis=1)
    primero_2 = np.where(s2, idx, m).min(axis=1)
    ok &= ultimo_1 < primero_2

    n1 = s1.sum(axis=1)
    n2 = s2.sum(axis=1)
    if ConstraintMode(mode) == ConstraintMode.EXACTLY_ONE:
        ok &= (n1 == 1) & (n2 == 1)
    else:
        ok &= (n1 >= 1) & (n2 >= 1)
    return ok


def is_feasible_integer(y_n: np.ndarray, clip: Clip, mode: ConstraintMode) -> bool:
    """Verdadero si el bloque binario ``y_n`` satisface todas las restricciones del clip."""
    y_n = np.asarray(y_n)
    if y_n.ndim != 2 or y_n.shape != (clip.n_tracklets, 2):
        raise DimensionMismatch(
            f"clip '{clip.clip_id}': bloque Y con forma {y_n.shape}, se esperaba ({clip.n_tracklets}, 2)"
        )
    if not np.all((y_n == 0) | (y_n == 1)):
        return False
    return bool(labeling_feasibility(labels_from_y(y_n)[None, :], clip, mode)[0])


@dataclass(frozen=True)
class ClipDiagnostic:
    clip_id: str
    horizon_ok: bool
    feasible: bool
    message: str

    @property
    def ok(self) -> bool:
        return self.horizon_ok and self.feasible


def clip_admits_states(clip: Clip) -> bool:
    """Existe un par de tracklets disjuntos (condición necesaria y suficiente)."""
    if clip.n_tracklets < 2:
        return False
    min_end = min(tr.end for tr in clip.tracklets)
    max_begin = max(tr.begin for tr in clip.tracklets)
    return min_end < max_begin


def validate_problem(problem: ProblemInstance) -> List[ClipDiagnostic]:
    """Diagnóstico por clip: horizonte válido y existencia de algún Y_n factible."""
    diagnosticos = []
    for clip in problem.clips:
        horizon_ok = clip.horizon >= 1
        feasible = clip_admits_states(clip)
        if not horizon_ok:
            mensaje = f"horizonte {clip.horizon} < 1"
        elif clip.n_tracklets < 2:
            mensaje = f"{clip.n_tracklets} tracklet(s): no alcanza para dos estados"
        elif not feasible:
            mensaje = "todos los tracklets se solapan entre sí"
        else:
            mensaje = "ok"
        diagnosticos.append(ClipDiagnostic(clip.clip_id, horizon_ok, feasible, mensaje))
    return diagnosticos


def ensure_feasible(problem: ProblemInstance):
    """Lanzar InfeasibleClip con el primer clip que no admite etiquetado."""
    for diag in validate_problem(problem):
        if not diag.ok:
            logger.error(f"Clip infactible {diag.clip_id}: {diag.message}")
            raise InfeasibleClip(diag.clip_id, diag.message)
