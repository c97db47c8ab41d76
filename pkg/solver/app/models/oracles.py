"""
Oráculos de minimización lineal sobre los politopos de restricciones.

- Z_n: símplex de saliencia (un único paso de tiempo por clip).
- Y_n: programación dinámica sobre una tabla de 5 filas (cero, estado 1, cero,
  estado 2, cero) por M_n + 2 columnas (inicio ficticio, tracklets, fin ficticio).

Incluye el oráculo exhaustivo usado como referencia en las pruebas.
"""
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from app.config import BRUTE_FORCE_MAX_TRACKLETS
from app.errors import DimensionMismatch, InfeasibleClip, InstanceTooLarge, ValidationError
from app.models.core_model import (
    LABEL_STATE1,
    LABEL_STATE2,
    Clip,
    ConstraintMode,
    ProblemInstance,
    labeling_feasibility,
    y_from_labels,
)

# Sucesor ficticio de fin de clip
END = -1

# Filas de la tabla de programación dinámica
R1, R2, R3, R4, R5 = range(5)
ROW_NAMES = ("R1", "R2", "R3", "R4", "R5")
STATE_ROWS = (R2, R4)

_ROW_MOVES = {
    ConstraintMode.AT_LEAST_ONE: {
        R1: (R1, R2),
        R2: (R2, R3, R4),
        R3: (R2, R3, R4),
        R4: (R4, R5),
        R5: (R4, R5),
    },
    ConstraintMode.EXACTLY_ONE: {
        R1: (R1, R2),
        R2: (R3, R4),
        R3: (R3, R4),
        R4: (R5,),
        R5: (R5,),
    },
}


@dataclass(frozen=True)
class SuccessorTable:
    """Sucesores válidos de cada tracklet (índices dentro del clip, END = fin)."""
    clip_id: str
    start: Tuple[int, ...]
    successors: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.successors)

    def describe(self, i: Optional[int] = None) -> str:
        nombres = self.start if i is None else self.successors[i]
        return "{" + ", ".join("y_f" if j == END else f"y_{j + 1}" for j in nombres) + "}"


def _earliest_group(clip: Clip, first: int) -> Tuple[int, ...]:
    """El tracklet ``first`` y los posteriores que se solapan con él."""
    if first >= clip.n_tracklets:
        return (END,)
    base = clip.tracklets[first]
    grupo = [first]
    for l in range(first + 1, clip.n_tracklets):
        if clip.tracklets[l].begin > base.end:
            break
        grupo.append(l)
    return tuple(grupo)


def build_successor_table(clip: Clip) -> SuccessorTable:
    sucesores = []
    for i, tr in enumerate(clip.tracklets):
        j = i + 1
        while j < clip.n_tracklets and clip.tracklets[j].begin <= tr.end:
            j += 1
        sucesores.append(_earliest_group(clip, j))
    return SuccessorTable(clip.clip_id, _earliest_group(clip, 0), tuple(sucesores))


def build_successor_tables(problem: ProblemInstance) -> List[SuccessorTable]:
    return [build_successor_table(clip) for clip in problem.clips]


def _check_costs(c: np.ndarray, clip: Clip) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (clip.n_tracklets, 2):
        raise DimensionMismatch(f"clip '{clip.clip_id}': costos con forma {c.shape}, se esperaba ({clip.n_tracklets}, 2)")
    if not np.all(np.isfinite(c)):
        raise ValidationError(f"clip '{clip.clip_id}': costos no finitos")
    return c


def solve_tracklet_lp(c: np.ndarray, clip: Clip, table: SuccessorTable,
                      mode: ConstraintMode) -> Tuple[np.ndarray, float]:
    """
    Minimizar Tr(cᵀ y) sobre los etiquetados enteros factibles del clip.

    Los caminos van de (R1, y_0) a (R5, y_f). Desde una fila de ceros se avanza
    exactamente una columna; desde una fila de estado en el tracklet i se salta a
    una columna de ``table.successors[i]``. La relajación se hace hacia adelante
    por columnas y los empates quedan con el predecesor (fila, columna)
    lexicográficamente menor.

    Args:
        c: Costos M_n x 2 (columna 0 estado 1, columna 1 estado 2)
        clip: Clip con tracklets ordenados
        table: Tabla de sucesores del clip
        mode: Restricción de conteo

    Returns:
        Tupla (y_n binaria M_n x 2, valor Tr(cᵀ y_n))
    """
    c = _check_costs(c, clip)
    mode = ConstraintMode(mode)
    m = clip.n_tracklets
    final = m + 1
    movimientos = _ROW_MOVES[mode]

    # Costo de visitar cada nodo: columna k <-> tracklet k - 1
    costo_nodo = np.zeros((5, m + 2))
    costo_nodo[R2, 1:final] = c[:, 0]
    costo_nodo[R4, 1:final] = c[:, 1]

    valor = np.full((5, m + 2), np.inf)
    previo = np.full((5, m + 2, 2), -1, dtype=np.int64)
    valor[R1, 0] = 0.0

    def relajar(fila, col, nueva_fila, nueva_col):
        if nueva_col == final and nueva_fila != R5:
            return
        candidato = valor[fila, col] + costo_nodo[nueva_fila, nueva_col]
        actual = valor[nueva_fila, nueva_col]
        if candidato < actual or (
            candidato == actual and (fila, col) < tuple(previo[nueva_fila, nueva_col])
        ):
            valor[nueva_fila, nueva_col] = candidato
            previo[nueva_fila, nueva_col] = (fila, col)

    for col in range(final):
        for fila in range(5):
            if not np.isfinite(valor[fila, col]):
                continue
            if fila in STATE_ROWS:
                columnas = [final if j == END else j + 1 for j in table.successors[col - 1]]
            else:
                columnas = [col + 1]
            for nueva_col in columnas:
                for nueva_fila in movimientos[fila]:
                    relajar(fila, col, nueva_fila, nueva_col)

    if not np.isfinite(valor[R5, final]):
        raise InfeasibleClip(clip.clip_id, f"ningún camino válido ({mode.value})")

    labels = np.zeros(m, dtype=np.int64)
    fila, col = previo[R5, final]
    while col > 0:
        if fila == R2:
            labels[col - 1] = LABEL_STATE1
        elif fila == R4:
            labels[col - 1] = LABEL_STATE2
        fila, col = previo[fila, col]

    y_n = y_from_labels(labels)
    return y_n, float(np.sum(c * y_n))


def enumerate_feasible_labelings(clip: Clip, mode: ConstraintMode) -> np.ndarray:
    """Todos los etiquetados factibles del clip (K x M_n), en orden lexicográfico."""
    m = clip.n_tracklets
    if m > BRUTE_FORCE_MAX_TRACKLETS:
        raise InstanceTooLarge(
            f"clip '{clip.clip_id}': {m} tracklets excede el máximo {BRUTE_FORCE_MAX_TRACKLETS} para enumeración"
        )
    if m == 0:
        return np.zeros((0, 0), dtype=np.int64)
    todos = np.array(list(itertools.product(range(3), repeat=m)), dtype=np.int64)
    return todos[labeling_feasibility(todos, clip, mode)]


def brute_force_tracklet_lp(c: np.ndarray, clip: Clip, mode: ConstraintMode) -> Tuple[np.ndarray, float]:
    c = _check_costs(c, clip)
    factibles = enumerate_feasible_labelings(clip, mode)
    if factibles.shape[0] == 0:
        raise InfeasibleClip(clip.clip_id, "ningún etiquetado satisface las restricciones")
    costos = np.where(factibles == LABEL_STATE1, c[:, 0], 0.0) + np.where(factibles == LABEL_STATE2, c[:, 1], 0.0)
    mejor = int(np.argmin(costos.sum(axis=1)))
    y_n = y_from_labels(factibles[mejor])
    return y_n, float(np.sum(c * y_n))


def solve_saliency_lp(c: np.ndarray, window: Optional[Tuple[int, int]] = None) -> Tuple[np.ndarray, float]:
    """
    Vértice del símplex que minimiza cᵀ z_n (empates: menor t).

    Con ``window`` (inclusive) el soporte se restringe a esa ventana.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.shape[0] == 0:
        raise ValidationError("clip vacío: el vector de costos de saliencia no tiene entradas")
    if not np.all(np.isfinite(c)):
        raise ValidationError("costos de saliencia no finitos")
    lo, hi = (0, c.shape[0] - 1) if window is None else window
    if not (0 <= lo <= hi < c.shape[0]):
        raise ValidationError(f"ventana [{lo}, {hi}] fuera del clip de longitud {c.shape[0]}")
    t = lo + int(np.argmin(c[lo:hi + 1]))
    z_n = np.zeros_like(c)
    z_n[t] = 1.0
    return z_n, float(c[t])


def object_cue_windows(problem: ProblemInstance) -> List[Tuple[int, int]]:
    """Ventana por clip entre el primer inicio y el último fin de sus tracklets."""
    ventanas = []
    for clip in problem.clips:
        if clip.n_tracklets == 0:
            ventanas.append((0, clip.horizon - 1))
        else:
            ventanas.append((min(tr.begin for tr in clip.tracklets), max(tr.end for tr in clip.tracklets)))
    return ventanas


def saliency_lmo(cost: np.ndarray, problem: ProblemInstance,
                 windows: Optional[Sequence[Tuple[int, int]]] = None) -> Tuple[np.ndarray, float]:
    """Oráculo sobre todo Z: un vértice por clip."""
    z = np.zeros(problem.T)
    total = 0.0
    for n in range(problem.N):
        sl = problem.z_slice(n)
        z[sl], valor = solve_saliency_lp(cost[sl], None if windows is None else windows[n])
        total += valor
    return z, total


def tracklet_lmo(cost: np.ndarray, problem: ProblemInstance, tables: Sequence[SuccessorTable],
                 mode: ConstraintMode, threads: int = 1) -> Tuple[np.ndarray, float]:
    """Oráculo sobre todo Y; los clips se resuelven en paralelo cuando ``threads > 1``."""
    bloques = [cost[problem.y_slice(n)] for n in range(problem.N)]
    if threads > 1 and problem.N > 1:
        resultados = Parallel(n_jobs=threads, prefer="threads")(
            delayed(solve_tracklet_lp)(bloque, clip, table, mode)
            for bloque, clip, table in zip(bloques, problem.clips, tables)
        )
    else:
        resultados = [
            solve_tracklet_lp(bloque, clip, table, mode)
            for bloque, clip, table in zip(bloques, problem.clips, tables)
        ]
    y = np.concatenate([y_n for y_n, _ in resultados], axis=0)
    logger.debug(f"Oráculo de tracklets: {problem.N} clips, modo {ConstraintMode(mode).value}")
    return y, float(sum(valor for _, valor in resultados))
