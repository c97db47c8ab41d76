"""
Costo DIFFRAC en forma cerrada.

Tras minimizar la regresión ridge sobre el clasificador lineal, el costo de una
asignación ``a`` (R x k) es ``Tr(aᵀ Q a) / (2R)`` con
``Q = I - X (XᵀX + αI)⁻¹ Xᵀ`` y ``α = R·coef``. Q nunca se materializa: se
factoriza una sola vez ``XᵀX + αI`` (d <= R) o ``XXᵀ + αI`` (d > R, forma de
Woodbury, donde ``Q = α (XXᵀ + αI)⁻¹``).
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.linalg import cho_factor, cho_solve

from app.errors import DimensionMismatch, ValidationError


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    features: np.ndarray
    ridge: float
    factor: Tuple[np.ndarray, bool]
    dual: bool

    @property
    def rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def scale(self) -> float:
        return 1.0 / (2.0 * self.rows)

    def dense_q(self) -> np.ndarray:
        """Q explícita (solo para instancias pequeñas y pruebas)."""
        return apply_q(self, np.eye(self.rows))


def build_projection(features: np.ndarray, ridge_coeff: float) -> ProjectionOperator:
    """
    Preparar el operador de proyección de una matriz de características.

    Args:
        features: Matriz R x d
        ridge_coeff: Coeficiente μ (estados) o λ (acciones); α = R·ridge_coeff

    Returns:
        ProjectionOperator con la factorización de Cholesky lista para reutilizar
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"características con forma {X.shape}, se esperaba R x d con R, d >= 1")
    if not np.all(np.isfinite(X)):
        raise ValidationError("características con valores no finitos")
    if not ridge_coeff > 0:
        raise ValidationError(f"coeficiente ridge debe ser positivo, se recibió {ridge_coeff}")

    rows, dim = X.shape
    alpha = rows * float(ridge_coeff)
    dual = dim > rows
    gram = X @ X.T if dual else X.T @ X
    gram[np.diag_indices_from(gram)] += alpha
    factor = cho_factor(gram, lower=True)
    logger.debug(f"Proyección DIFFRAC {rows}x{dim}, alpha={alpha:.3g}, forma {'dual' if dual else 'primal'}")
    return ProjectionOperator(features=X, ridge=alpha, factor=factor, dual=dual)


def _check_block(op: ProjectionOperator, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != op.rows:
        raise DimensionMismatch(f"bloque de asignación con forma {a.shape}, se esperaban {op.rows} filas")
    return a


def apply_q(op: ProjectionOperator, a: np.ndarray) -> np.ndarray:
    """Producto Q a sin construir Q."""
    a = _check_block(op, a)
    if op.dual:
        return op.ridge * cho_solve(op.factor, a)
    return a - op.features @ cho_solve(op.factor, op.features.T @ a)


def eval_cost(op: ProjectionOperator, a: np.ndarray) -> float:
    a = _check_block(op, a)
    return op.scale * float(np.sum(a * apply_q(op, a)))


def grad(op: ProjectionOperator, a: np.ndarray) -> np.ndarray:
    """Gradiente exacto de eval_cost: Q a / R, con la forma del bloque de entrada."""
    forma = np.shape(a)
    return (apply_q(op, a) / op.rows).reshape(forma)


def recover_classifier(op: ProjectionOperator, a: np.ndarray) -> np.ndarray:
    """Minimizador ridge W* = (XᵀX + αI)⁻¹ Xᵀ a (d x k)."""
    a = _check_block(op, a)
    if op.dual:
        return op.features.T @ cho_solve(op.factor, a)
    return cho_solve(op.factor, op.features.T @ a)


def ridge_objective(op: ProjectionOperator, a: np.ndarray, w: np.ndarray) -> float:
    """Objetivo completo ‖a - Xw‖² / (2R) + α‖w‖² / (2R) para un clasificador dado."""
    a = _check_block(op, a)
    w = np.asarray(w, dtype=np.float64).reshape(op.dim, a.shape[1])
    residuo = a - op.features @ w
    return op.scale * (float(np.sum(residuo ** 2)) + op.ridge * float(np.sum(w ** 2)))
