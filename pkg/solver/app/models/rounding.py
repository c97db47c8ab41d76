"""
Redondeo de soluciones relajadas a asignaciones enteras.

Con los clasificadores fijos en el iterado relajado, el objetivo entero se separa
por clip. Para Z_n fijo en un paso t el término de estados es lineal en Y_n
(usando y² = y), así que basta una llamada a la programación dinámica por cada t.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from app.errors import DimensionMismatch, ValidationError
from app.models.core_model import (
    Assignment,
    Clip,
    ConstraintMode,
    ProblemInstance,
    is_feasible_integer,
)
from app.models.diffrac import ProjectionOperator, recover_classifier
from app.models.joint_cost import eval_joint
from app.models.oracles import SuccessorTable, solve_tracklet_lp


@dataclass(frozen=True, eq=False)
class FixedClassifiers:
    """Clasificadores de acción (d_v) y de estados (d_s x 2) congelados."""
    w_v: np.ndarray
    w_s: np.ndarray

    def __post_init__(self):
        w_v = np.asarray(self.w_v, dtype=np.float64).ravel()
        w_s = np.asarray(self.w_s, dtype=np.float64)
        if w_s.ndim != 2 or w_s.shape[1] != 2:
            raise DimensionMismatch(f"w_s con forma {w_s.shape}, se esperaba d_s x 2")
        if not (np.all(np.isfinite(w_v)) and np.all(np.isfinite(w_s))):
            raise ValidationError("clasificadores con valores no finitos")
        object.__setattr__(self, "w_v", w_v)
        object.__setattr__(self, "w_s", w_s)

    @classmethod
    def zeros(cls, problem: ProblemInstance) -> "FixedClassifiers":
        return cls(np.zeros(problem.d_v), np.zeros((problem.d_s, 2)))

    def action_scores(self, problem: ProblemInstance) -> np.ndarray:
        if self.w_v.shape[0] != problem.d_v:
            raise DimensionMismatch(f"w_v de dimensión {self.w_v.shape[0]}, se esperaba {problem.d_v}")
        return problem.video_features @ self.w_v

    def state_scores(self, problem: ProblemInstance) -> np.ndarray:
        if self.w_s.shape[0] != problem.d_s:
            raise DimensionMismatch(f"w_s con {self.w_s.shape[0]} filas, se esperaban {problem.d_s}")
        return problem.tracklet_features @ self.w_s


def classifiers_at(video_op: ProjectionOperator, state_op: ProjectionOperator, a: Assignment) -> FixedClassifiers:
    """Clasificadores ridge óptimos para el iterado ``a``."""
    return FixedClassifiers(
        w_v=recover_classifier(video_op, a.z[:, None]).ravel(),
        w_s=recover_classifier(state_op, a.y),
    )


def _check_integer(z: np.ndarray, y: np.ndarray, p: ProblemInstance):
    if z.shape != (p.T,) or y.shape != (p.M, 2):
        raise DimensionMismatch(f"asignación con formas {z.shape} y {y.shape}, se esperaban ({p.T},) y ({p.M}, 2)")
    for n, clip in enumerate(p.clips):
        z_n = z[p.z_slice(n)]
        if not (np.all((z_n == 0) | (z_n == 1)) and z_n.sum() == 1):
            raise ValidationError(f"clip '{clip.clip_id}': Z no es one-hot")
        # Las restricciones de AtLeastOne contienen a las de ExactlyOne
        if not is_feasible_integer(y[p.y_slice(n)], clip, ConstraintMode.AT_LEAST_ONE):
            raise ValidationError(f"clip '{clip.clip_id}': Y no es un etiquetado factible")


def integer_objective(z: np.ndarray, y: np.ndarray, p: ProblemInstance, fc: FixedClassifiers,
                      nu: float, det_score_weight: float = 0.0) -> float:
    """
    Objetivo entero con clasificadores congelados:
    ‖Z - X_v w_v‖²/(2T) + ‖Y - X_s W_s‖²/(2M) + d(Z, Y) - (κ/M)·Σ_i score_i (y_i1 + y_i2).
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_integer(z, y, p)
    accion = float(np.sum((z - fc.action_scores(p)) ** 2)) / (2.0 * p.T)
    estados = float(np.sum((y - fc.state_scores(p)) ** 2)) / (2.0 * p.M)
    puntajes = float(np.sum(p.detection_bonus(det_score_weight)[:, None] * y))
    return accion + estados + eval_joint(z, y, p, nu) - puntajes


def state_cost_matrix(state_scores_n: np.ndarray, det_scores_n: np.ndarray, M: int,
                      det_score_weight: float) -> np.ndarray:
    """Costo lineal de estados (1 - 2 S_n)/(2M) - κ·score/M, sin el término conjunto."""
    return (1.0 - 2.0 * state_scores_n - 2.0 * det_score_weight * det_scores_n[:, None]) / (2.0 * M)


def _round_clip(clip: Clip, table: SuccessorTable, hinges: Tuple[np.ndarray, np.ndarray],
                action_scores_n: np.ndarray, state_scores_n: np.ndarray, det_scores_n: np.ndarray,
                T: int, M: int, nu: float, det_score_weight: float, mode: ConstraintMode,
                window: Optional[Tuple[int, int]]) -> Tuple[int, np.ndarray, float]:
    base = state_cost_matrix(state_scores_n, det_scores_n, M, det_score_weight)
    constante = float(np.sum(action_scores_n ** 2)) / (2.0 * T) + float(np.sum(state_scores_n ** 2)) / (2.0 * M)
    h1, h2 = hinges
    lo, hi = (0, clip.horizon - 1) if window is None else window

    mejor_t, mejor_y, mejor_valor = -1, None, np.inf
    for t in range(lo, hi + 1):
        costo = base + (nu / T) * np.stack([h1[:, t], h2[:, t]], axis=1)
        y_n, valor = solve_tracklet_lp(costo, clip, table, mode)
        total = (1.0 - 2.0 * action_scores_n[t]) / (2.0 * T) + valor + constante
        if total < mejor_valor:
            mejor_t, mejor_y, mejor_valor = t, y_n, total
    return mejor_t, mejor_y, mejor_valor


def _assemble(p: ProblemInstance, resultados) -> Tuple[Assignment, List[float]]:
    z = np.zeros(p.T)
    y = np.zeros((p.M, 2))
    for n, (t, y_n, _) in enumerate(resultados):
        z[p.z_slice(n).start + t] = 1.0
        y[p.y_slice(n)] = y_n
    return Assignment(z, y, integral=True), [valor for _, _, valor in resultados]


def joint_round(p: ProblemInstance, fc: FixedClassifiers, tables: Sequence[SuccessorTable], nu: float,
                mode: ConstraintMode, det_score_weight: float = 0.0,
                windows: Optional[Sequence[Tuple[int, int]]] = None,
                threads: int = 1) -> Tuple[Assignment, List[float]]:
    """
    Redondeo conjunto: por clip se prueban todos los pasos t y se resuelve la
    programación dinámica con el costo de estados más el término conjunto en t.

    Returns:
        Tupla (asignación entera, valor por clip); la suma de los valores es
        ``integer_objective`` de la asignación
    """
    accion = fc.action_scores(p)
    estados = fc.state_scores(p)
    tareas = [
        delayed(_round_clip)(
            clip, tables[n], p.time_hinges[n], accion[p.z_slice(n)], estados[p.y_slice(n)],
            p.detection_scores[p.y_slice(n)], p.T, p.M, nu, det_score_weight, ConstraintMode(mode),
            None if windows is None else windows[n],
        )
        for n, clip in enumerate(p.clips)
    ]
    if threads > 1 and p.N > 1:
        resultados = Parallel(n_jobs=threads, prefer="threads")(tareas)
    else:
        resultados = [funcion(*args, **kwargs) for funcion, args, kwargs in tareas]
    return _assemble(p, resultados)


def baseline_round(p: ProblemInstance, fc: FixedClassifiers, tables: Sequence[SuccessorTable],
                   mode: ConstraintMode, det_score_weight: float = 0.0,
                   windows: Optional[Sequence[Tuple[int, int]]] = None) -> Assignment:
    """Z en el argmax del puntaje de acción; Y por programación dinámica sobre los puntajes de estado."""
    accion = fc.action_scores(p)
    estados = fc.state_scores(p)
    z = np.zeros(p.T)
    y = np.zeros((p.M, 2))
    for n, clip in enumerate(p.clips):
        s_n = accion[p.z_slice(n)]
        lo, hi = (0, clip.horizon - 1) if windows is None else windows[n]
        z[p.z_slice(n).start + lo + int(np.argmax(s_n[lo:hi + 1]))] = 1.0
        costo = state_cost_matrix(estados[p.y_slice(n)], p.detection_scores[p.y_slice(n)], p.M, det_score_weight)
        y[p.y_slice(n)], _ = solve_tracklet_lp(costo, clip, tables[n], mode)
    return Assignment(z, y, integral=True)
