"""
Configuración y fixtures compartidos para pruebas del solucionador conjunto.

Incluye los oráculos de referencia: enumeración exhaustiva, diferencias finitas
centrales y evaluación explícita por regresión ridge.
"""
import itertools
import os
import sys

import numpy as np
import pytest

# Agregar directorio raíz al path para poder importar módulos del solucionador
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.models.core_model import (
    ClipSpec,
    ConstraintMode,
    SolverConfig,
    TrackletSpec,
    build_problem,
    labeling_feasibility,
    y_from_labels,
)
from app.models.synth import ScenarioSpec, generate


def build_clip_problem(intervals_per_clip, horizons=None, d_v=3, d_s=3, rng=None, scores=None):
    """Instancia con los intervalos dados y características gaussianas (o nulas sin rng)."""
    if horizons is None:
        horizons = [max(end for _, end in intervalos) + 1 for intervalos in intervals_per_clip]
    specs = []
    for n, (intervalos, horizon) in enumerate(zip(intervals_per_clip, horizons)):
        tracklets = tuple(
            TrackletSpec(b, e, None if scores is None else scores[n][k])
            for k, (b, e) in enumerate(intervalos)
        )
        specs.append(ClipSpec(f"c{n}", horizon, tracklets))
    total_t = sum(horizons)
    total_m = sum(len(intervalos) for intervalos in intervals_per_clip)
    if rng is None:
        video, tracklets = np.zeros((total_t, d_v)), np.zeros((total_m, d_s))
    else:
        video, tracklets = rng.standard_normal((total_t, d_v)), rng.standard_normal((total_m, d_s))
    return build_problem(specs, video, tracklets)


def random_intervals(rng, m, horizon, max_length=3):
    """Intervalos aleatorios dentro del horizonte (con solapamientos mezclados)."""
    intervalos = []
    for _ in range(m):
        begin = int(rng.integers(0, horizon))
        end = min(horizon - 1, begin + int(rng.integers(0, max_length)))
        intervalos.append((begin, end))
    return intervalos


def all_feasible_labelings(clip, mode=ConstraintMode.AT_LEAST_ONE):
    """Enumeración directa (sin vectorizar) de los etiquetados factibles."""
    factibles = []
    for labels in itertools.product(range(3), repeat=clip.n_tracklets):
        if labeling_feasibility(np.array([labels]), clip, mode)[0]:
            factibles.append(y_from_labels(labels))
    return factibles


def central_differences(f, x, h=1e-5):
    """Gradiente por diferencias finitas centrales de f en x (cualquier forma)."""
    x = np.array(x, dtype=np.float64)
    gradiente = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        arriba, abajo = x.copy(), x.copy()
        arriba[idx] += h
        abajo[idx] -= h
        gradiente[idx] = (f(arriba) - f(abajo)) / (2 * h)
    return gradiente


def assert_gradient_close(analitico, numerico, rel=1e-6, abs_floor=1e-8):
    """Error relativo por coordenada; las coordenadas casi nulas se comparan en absoluto."""
    analitico = np.asarray(analitico)
    numerico = np.asarray(numerico)
    pequenas = np.abs(analitico) < abs_floor
    assert np.all(np.abs(numerico[pequenas]) < 1e-6)
    grandes = ~pequenas
    error = np.abs(analitico[grandes] - numerico[grandes]) / np.abs(analitico[grandes])
    assert np.all(error < rel), f"error relativo máximo {error.max() if error.size else 0.0}"


def ridge_cost(X, a, coef):
    """Costo DIFFRAC resolviendo explícitamente las ecuaciones normales de la regresión ridge."""
    R = X.shape[0]
    alpha = R * coef
    W = np.linalg.solve(X.T @ X + alpha * np.eye(X.shape[1]), X.T @ a)
    return (np.sum((a - X @ W) ** 2) + alpha * np.sum(W ** 2)) / (2 * R)


@pytest.fixture
def rng():
    """Generador aleatorio sembrado."""
    return np.random.default_rng(0)


@pytest.fixture
def overlap_groups_problem():
    """
    Clip de cinco tracklets con dos grupos solapados:
    [0,1] [1,2] | [3,4] [4,5] | [6,6].
    """
    return build_clip_problem([[(0, 1), (1, 2), (3, 4), (4, 5), (6, 6)]])


@pytest.fixture
def small_problem(rng):
    """Dos clips pequeños con características aleatorias y puntajes de detección."""
    intervalos = [[(0, 0), (2, 3), (3, 4), (5, 5)], [(0, 1), (3, 3), (5, 6)]]
    puntajes = [[0.9, 0.2, 0.6, 0.8], [0.7, 0.4, 0.95]]
    return build_clip_problem(intervalos, horizons=[6, 7], d_v=4, d_s=3, rng=rng, scores=puntajes)


@pytest.fixture
def fast_config():
    """Configuración con presupuestos cortos para pruebas rápidas."""
    return SolverConfig(max_iters=40, convex_max_iters=40, rounding_cadence=5)


@pytest.fixture(scope="session")
def default_scenario():
    """Instancia sintética del escenario por defecto (20 clips, semilla 0)."""
    return generate(ScenarioSpec())


@pytest.fixture(scope="session")
def tiny_scenario():
    """Escenario reducido para pruebas de extremo a extremo."""
    return generate(ScenarioSpec(n_clips=3, horizon_range=(12, 14), tracklets_range=(4, 5), d_v=6, d_s=6, seed=3))
