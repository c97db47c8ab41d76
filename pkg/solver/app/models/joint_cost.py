"""
Costo de consistencia entre la acción y los estados del objeto.

Penaliza, con una bisagra sobre el eje de tiempo del clip, los tracklets de
estado 1 posteriores a la acción y los de estado 2 anteriores a ella. La
relajación es bilineal en (Z, Y) y coincide con la forma entera en los vértices.
"""
import numpy as np

from app.errors import DimensionMismatch
from app.models.core_model import ProblemInstance


def _check_z(z: np.ndarray, p: ProblemInstance) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (p.T,):
        raise DimensionMismatch(f"z con forma {z.shape}, se esperaba ({p.T},)")
    return z


def _check_y(y: np.ndarray, p: ProblemInstance) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (p.M, 2):
        raise DimensionMismatch(f"y con forma {y.shape}, se esperaba ({p.M}, 2)")
    return y


def clip_linearization(z_n: np.ndarray, p: ProblemInstance, n: int) -> np.ndarray:
    """Matriz G_n (M_n x 2), sin escalar, con G_n[i] = (Σ_t z_t [t_i - t]_+, Σ_t z_t [t - t_i]_+)."""
    h1, h2 = p.time_hinges[n]
    return np.stack([h1 @ z_n, h2 @ z_n], axis=1)


def grad_y(z: np.ndarray, p: ProblemInstance, nu: float) -> np.ndarray:
    z = _check_z(z, p)
    bloques = [clip_linearization(z[p.z_slice(n)], p, n) for n in range(p.N)]
    return (nu / p.T) * np.concatenate(bloques, axis=0)


def grad_z(y: np.ndarray, p: ProblemInstance, nu: float) -> np.ndarray:
    y = _check_y(y, p)
    bloques = []
    for n in range(p.N):
        h1, h2 = p.time_hinges[n]
        y_n = y[p.y_slice(n)]
        bloques.append(h1.T @ y_n[:, 0] + h2.T @ y_n[:, 1])
    return (nu / p.T) * np.concatenate(bloques)


def eval_joint(z: np.ndarray, y: np.ndarray, p: ProblemInstance, nu: float) -> float:
    """
    Valor (ν/T)·Σ_n Σ_i Σ_t (y_i1 z_t [t_i - t]_+ + y_i2 z_t [t - t_i]_+).

    La suma se acumula en orden de clip.
    """
    z = _check_z(z, p)
    y = _check_y(y, p)
    total = 0.0
    for n in range(p.N):
        g_n = clip_linearization(z[p.z_slice(n)], p, n)
        total += float(np.sum(g_n * y[p.y_slice(n)]))
    return (nu / p.T) * total
