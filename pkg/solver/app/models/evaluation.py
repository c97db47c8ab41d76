"""
Métricas de precisión y líneas base de referencia.
"""
import itertools
import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from app.config import CHANCE_SAMPLES, KMEANS_CLUSTERS, KMEANS_RESTARTS
from app.errors import DimensionMismatch, ValidationError
from app.models.core_model import (
    LABEL_NONE,
    LABEL_STATE1,
    LABEL_STATE2,
    Assignment,
    ConstraintMode,
    ProblemInstance,
    TrackletLabel,
    labels_from_y,
    y_from_labels,
)
from app.models.oracles import build_successor_tables, tracklet_lmo


@dataclass(frozen=True)
class GroundTruth:
    """Intervalo de acción por clip y etiqueta por tracklet (en el orden ordenado del clip)."""
    clip_ids: Tuple[str, ...]
    horizons: Tuple[int, ...]
    action_intervals: Tuple[Optional[Tuple[int, int]], ...]
    labels: Tuple[Tuple[Optional[TrackletLabel], ...], ...]

    def __post_init__(self):
        if not (len(self.clip_ids) == len(self.horizons) == len(self.action_intervals) == len(self.labels)):
            raise DimensionMismatch("verdad de terreno con listas de distinta longitud")
        for clip_id, horizon, intervalo in zip(self.clip_ids, self.horizons, self.action_intervals):
            if intervalo is not None and not (0 <= intervalo[0] <= intervalo[1] < horizon):
                raise ValidationError(f"clip '{clip_id}': intervalo de acción {intervalo} fuera de [0, {horizon - 1}]")

    @classmethod
    def from_problem(cls, p: ProblemInstance) -> "GroundTruth":
        return cls(
            clip_ids=tuple(clip.clip_id for clip in p.clips),
            horizons=tuple(clip.horizon for clip in p.clips),
            action_intervals=tuple(clip.gt_action_interval for clip in p.clips),
            labels=tuple(tuple(tr.gt_label for tr in clip.tracklets) for clip in p.clips),
        )

    @property
    def has_actions(self) -> bool:
        return all(intervalo is not None for intervalo in self.action_intervals)

    @property
    def has_labels(self) -> bool:
        return all(label is not None for labels in self.labels for label in labels)

    def planted_assignment(self) -> Assignment:
        """Z en el punto medio de la acción plantada, Y con los tracklets de estado 1 y 2."""
        if not (self.has_actions and self.has_labels):
            raise ValidationError("la verdad de terreno está incompleta")
        z = []
        for horizon, (inicio, fin) in zip(self.horizons, self.action_intervals):
            z_n = np.zeros(horizon)
            z_n[(inicio + fin) // 2] = 1.0
            z.append(z_n)
        codigos = [
            LABEL_STATE1 if label == TrackletLabel.STATE1 else LABEL_STATE2 if label == TrackletLabel.STATE2 else LABEL_NONE
            for labels in self.labels for label in labels
        ]
        return Assignment(np.concatenate(z), y_from_labels(codigos), integral=True)


def _z_blocks(assign: Assignment, gt: GroundTruth):
    if assign.z.shape[0] != sum(gt.horizons):
        raise DimensionMismatch(f"z de longitud {assign.z.shape[0]}, la verdad de terreno suma {sum(gt.horizons)}")
    return np.split(assign.z, np.cumsum(gt.horizons)[:-1])


def _y_blocks(assign: Assignment, gt: GroundTruth):
    tamanos = [len(labels) for labels in gt.labels]
    if assign.y.shape != (sum(tamanos), 2):
        raise DimensionMismatch(f"y con forma {assign.y.shape}, la verdad de terreno tiene {sum(tamanos)} tracklets")
    return np.split(assign.y, np.cumsum(tamanos)[:-1])


def action_precision(assign: Assignment, gt: GroundTruth) -> float:
    """Fracción de clips cuyo paso predicho cae en el intervalo verdadero (inclusive)."""
    aciertos = 0
    for clip_id, z_n, intervalo in zip(gt.clip_ids, _z_blocks(assign, gt), gt.action_intervals):
        if intervalo is None:
            raise ValidationError(f"clip '{clip_id}' sin intervalo de acción de referencia")
        t = int(np.argmax(z_n))
        aciertos += int(intervalo[0] <= t <= intervalo[1])
    return aciertos / len(gt.clip_ids)


def state_counts(assign: Assignment, gt: GroundTruth) -> Tuple[np.ndarray, np.ndarray]:
    """Por clip: (tracklets con estado correcto, tracklets con estado asignado)."""
    correctos, totales = [], []
    for clip_id, y_n, labels in zip(gt.clip_ids, _y_blocks(assign, gt), gt.labels):
        if any(label is None for label in labels):
            raise ValidationError(f"clip '{clip_id}' con tracklets sin etiqueta de referencia")
        codigos = labels_from_y(y_n)
        esperado = np.array([
            LABEL_STATE1 if label == TrackletLabel.STATE1 else LABEL_STATE2 if label == TrackletLabel.STATE2 else -2
            for label in labels
        ], dtype=np.int64)
        asignados = codigos > LABEL_NONE
        correctos.append(int(np.sum(asignados & (codigos == esperado))))
        totales.append(int(np.sum(asignados)))
    return np.array(correctos), np.array(totales)


def state_precision(assign: Assignment, gt: GroundTruth, micro: bool = False) -> float:
    """
    Precisión de estados: los ambiguos y falsos positivos cuentan como error.

    Por defecto se promedia la precisión de cada clip (un clip sin predicciones
    aporta 0); con ``micro`` se divide el total de aciertos por el total de
    predicciones.
    """
    correctos, totales = state_counts(assign, gt)
    if micro:
        return float(correctos.sum() / totales.sum()) if totales.sum() > 0 else 0.0
    por_clip = np.divide(correctos, totales, out=np.zeros(len(totales)), where=totales > 0)
    return float(np.mean(por_clip))


def evaluate(assign: Assignment, gt: GroundTruth) -> Dict[str, float]:
    """Ambas precisiones, con NaN cuando falta la referencia correspondiente."""
    return {
        "state_precision": state_precision(assign, gt) if gt.has_labels else float("nan"),
        "action_precision": action_precision(assign, gt) if gt.has_actions else float("nan"),
    }


@dataclass(frozen=True)
class KMeansResult:
    cluster_labels: np.ndarray
    mapping: Tuple[int, int]
    assignment: Assignment
    precision: float
    inertia: float


def kmeans_baseline(p: ProblemInstance, gt: GroundTruth, k: int = KMEANS_CLUSTERS,
                    restarts: int = KMEANS_RESTARTS, seed: int = 0) -> KMeansResult:
    """
    Agrupar las características de tracklets con k-means y evaluar la mejor
    correspondencia grupo -> {estado 1, estado 2, ninguno}.

    Args:
        p: Instancia del problema
        gt: Verdad de terreno con etiquetas de tracklets
        k: Número de grupos
        restarts: Inicializaciones aleatorias; se conserva la de menor inercia
        seed: Semilla de las inicializaciones

    Returns:
        KMeansResult con las etiquetas de grupo, la correspondencia elegida
        (grupo de estado 1, grupo de estado 2) y su precisión de estados
    """
    if k < 2:
        raise ValidationError(f"k-means necesita k >= 2, se recibió {k}")
    if p.M < k:
        raise ValidationError(f"k-means con {p.M} tracklets y k={k}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        modelo = KMeans(n_clusters=k, init="random", n_init=restarts, random_state=seed).fit(p.tracklet_features)
    grupos = modelo.labels_.astype(np.int64)
    if np.unique(grupos).shape[0] < k:
        logger.warning(f"k-means degenerado: {np.unique(grupos).shape[0]} grupos distintos de {k}")

    mejor = None
    for g1, g2 in itertools.permutations(range(k), 2):
        codigos = np.where(grupos == g1, LABEL_STATE1, np.where(grupos == g2, LABEL_STATE2, LABEL_NONE))
        candidato = Assignment(np.zeros(p.T), y_from_labels(codigos), integral=True)
        precision = state_precision(candidato, gt)
        if mejor is None or precision > mejor[0]:
            mejor = (precision, (g1, g2), candidato)

    precision, mapping, asignacion = mejor
    logger.info(f"k-means (k={k}): precisión de estados {precision:.3f} con grupos {mapping}")
    return KMeansResult(grupos, mapping, asignacion, precision, float(modelo.inertia_))


def action_chance(gt: GroundTruth) -> float:
    """Proporción media del clip cubierta por el intervalo verdadero."""
    if not gt.has_actions:
        raise ValidationError("la verdad de terreno no tiene intervalos de acción")
    return float(np.mean([(fin - inicio + 1) / horizon for (inicio, fin), horizon in zip(gt.action_intervals, gt.horizons)]))


def state_chance(p: ProblemInstance, gt: GroundTruth, mode: ConstraintMode = ConstraintMode.AT_LEAST_ONE,
                 samples: int = CHANCE_SAMPLES, seed: int = 0) -> float:
    """Precisión media de etiquetados factibles obtenidos con costos uniformes aleatorios."""
    rng = np.random.default_rng(seed)
    tables = build_successor_tables(p)
    total = 0.0
    for _ in range(samples):
        y, _ = tracklet_lmo(rng.uniform(-1.0, 1.0, size=(p.M, 2)), p, tables, mode)
        total += state_precision(Assignment(np.zeros(p.T), y, integral=True), gt)
    return total / samples
