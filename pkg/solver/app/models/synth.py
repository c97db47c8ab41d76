"""
Generador sintético de instancias con verdad de terreno plantada.

Cada clip tiene una acción plantada; los tracklets verdaderos anteriores a ella
muestran el estado 1 y los posteriores el estado 2, con una banda ambigua
alrededor de la acción. Se añaden falsos positivos desde grupos compartidos
entre clips y, en una fracción de los clips, una acción distractora más larga y
más marcada que la verdadera.
"""
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, validator

from app.config import DEFAULT_SEED
from app.errors import ScenarioError, ValidationError
from app.models.core_model import (
    ClipSpec,
    ProblemInstance,
    TrackletLabel,
    TrackletSpec,
    build_problem,
    clip_admits_states,
    make_clip,
)
from app.models.evaluation import GroundTruth


class ScenarioSpec(BaseModel):
    """Parámetros del escenario sintético."""
    n_clips: int = Field(20, ge=1)
    horizon_range: Tuple[int, int] = (18, 24)
    tracklets_range: Tuple[int, int] = (6, 10)
    d_v: int = Field(16, ge=2)
    d_s: int = Field(16, ge=2)
    cluster_separation: float = Field(4.0, gt=0)
    noise_sigma: float = Field(1.0, ge=0)
    fp_rate: float = Field(0.4, ge=0, le=1)
    distractor_action_rate: float = Field(0.7, ge=0, le=1)
    ambiguous_band: int = Field(1, ge=0)
    seed: int = DEFAULT_SEED
    n_fp_clusters: int = Field(2, ge=1)
    action_length: Tuple[int, int] = (2, 3)
    distractor_length: Tuple[int, int] = (4, 6)
    distractor_strength: float = Field(1.5, gt=0)
    fp_length: Tuple[int, int] = (1, 3)
    max_retries: int = Field(100, ge=1)

    class Config:
        extra = "forbid"

    @validator("horizon_range", "tracklets_range", "action_length", "distractor_length", "fp_length")
    def rango_valido(cls, v, field):
        lo, hi = v
        if lo < 1 or lo > hi:
            raise ValueError(f"{field.name} debe cumplir 1 <= min <= max, se recibió {v}")
        return v

    @validator("tracklets_range")
    def tracklets_suficientes(cls, v):
        if v[0] < 2:
            raise ValueError("cada clip necesita al menos 2 tracklets")
        return v

    @validator("n_fp_clusters")
    def grupos_fp(cls, v, values):
        # Las medias ocupan ejes distintos: estado 1, estado 2 y cada grupo de falsos positivos
        d_s = values.get("d_s")
        if d_s is not None and d_s < 2 + v:
            raise ValueError(f"d_s={d_s} no alcanza para 2 estados y {v} grupos de falsos positivos")
        return v


def _axis(d: int, k: int, norma: float) -> np.ndarray:
    v = np.zeros(d)
    v[k] = norma
    return v


class _ClipDraft:
    def __init__(self, clip_id: str, horizon: int, action: Tuple[int, int]):
        self.clip_id = clip_id
        self.horizon = horizon
        self.action = action
        self.tracklets: List[TrackletSpec] = []
        self.features: List[np.ndarray] = []
        self.video: Optional[np.ndarray] = None

    def spec(self) -> ClipSpec:
        return ClipSpec(self.clip_id, self.horizon, tuple(self.tracklets), self.action)


def _draw_clip(rng: np.random.Generator, spec: ScenarioSpec, clip_id: str) -> Optional[_ClipDraft]:
    sep = spec.cluster_separation
    sigma = spec.noise_sigma
    horizon = int(rng.integers(spec.horizon_range[0], spec.horizon_range[1] + 1))

    largo = int(rng.integers(spec.action_length[0], spec.action_length[1] + 1))
    margen = horizon // 3
    if horizon - margen - largo < margen:
        return None
    inicio = int(rng.integers(margen, horizon - margen - largo + 1))
    fin = inicio + largo - 1
    draft = _ClipDraft(clip_id, horizon, (inicio, fin))

    # Video: ruido de fondo, acción en su ventana y distractora opcional
    video = sigma * rng.standard_normal((horizon, spec.d_v))
    video[inicio:fin + 1] += _axis(spec.d_v, 0, sep)
    if rng.random() < spec.distractor_action_rate:
        largo_d = int(rng.integers(spec.distractor_length[0], spec.distractor_length[1] + 1))
        candidatos = [s for s in range(0, horizon - largo_d + 1) if s + largo_d - 1 < inicio or s > fin]
        if candidatos:
            s = candidatos[int(rng.integers(len(candidatos)))]
            video[s:s + largo_d] += _axis(spec.d_v, 1, spec.distractor_strength * sep)
    draft.video = video

    # Tracklets verdaderos: un paso cada uno, en tiempos distintos fuera de la acción
    m_n = int(rng.integers(spec.tracklets_range[0], spec.tracklets_range[1] + 1))
    n_fp = min(int(round(spec.fp_rate * m_n)), m_n - 2)
    n_true = m_n - n_fp
    libres = np.array([t for t in range(horizon) if t < inicio or t > fin])
    if libres.shape[0] < n_true:
        return None
    tiempos = np.sort(rng.choice(libres, size=n_true, replace=False))

    media_1 = _axis(spec.d_s, 0, sep)
    media_2 = _axis(spec.d_s, 1, sep)
    for t in tiempos:
        t = int(t)
        if inicio - spec.ambiguous_band <= t <= fin + spec.ambiguous_band:
            label, media = TrackletLabel.AMBIGUOUS, 0.5 * (media_1 + media_2)
        elif t < inicio:
            label, media = TrackletLabel.STATE1, media_1
        else:
            label, media = TrackletLabel.STATE2, media_2
        score = float(np.clip(0.7 + 0.15 * rng.standard_normal(), 0.0, 1.0))
        draft.tracklets.append(TrackletSpec(t, t, score, label))
        draft.features.append(media + sigma * rng.standard_normal(spec.d_s))

    labels = [tr.gt_label for tr in draft.tracklets]
    if TrackletLabel.STATE1 not in labels or TrackletLabel.STATE2 not in labels:
        return None

    # Falsos positivos en tiempos arbitrarios desde grupos compartidos
    for _ in range(n_fp):
        largo_fp = int(rng.integers(spec.fp_length[0], spec.fp_length[1] + 1))
        begin = int(rng.integers(0, horizon))
        end = min(horizon - 1, begin + largo_fp - 1)
        grupo = int(rng.integers(spec.n_fp_clusters))
        score = float(np.clip(0.45 + 0.15 * rng.standard_normal(), 0.0, 1.0))
        draft.tracklets.append(TrackletSpec(begin, end, score, TrackletLabel.FALSE_POSITIVE))
        draft.features.append(_axis(spec.d_s, 2 + grupo, sep) + sigma * rng.standard_normal(spec.d_s))
    return draft


def generate(spec: ScenarioSpec) -> Tuple[ProblemInstance, GroundTruth]:
    """
    Generar una instancia sintética y su verdad de terreno.

    Los clips se generan en secuencia con un único generador sembrado; un clip que
    no cumple las condiciones (espacio para la acción, al menos un tracklet de cada
    estado, factibilidad) se vuelve a sortear hasta ``max_retries`` veces.

    Args:
        spec: Parámetros del escenario

    Returns:
        Tupla (instancia, verdad de terreno)
    """
    rng = np.random.default_rng(spec.seed)
    drafts: List[_ClipDraft] = []
    for n in range(spec.n_clips):
        clip_id = f"clip_{n:03d}"
        for intento in range(spec.max_retries):
            draft = _draw_clip(rng, spec, clip_id)
            if draft is not None and clip_admits_states(make_clip(draft.spec())[0]):
                break
            logger.debug(f"{clip_id}: reintento {intento + 1}")
        else:
            raise ScenarioError(f"{clip_id}: {spec.max_retries} intentos sin un clip válido; el escenario es demasiado hostil")
        if intento > 0:
            logger.warning(f"{clip_id}: generado tras {intento + 1} intentos")
        drafts.append(draft)

    try:
        problem = build_problem(
            [draft.spec() for draft in drafts],
            np.concatenate([draft.video for draft in drafts], axis=0),
            np.array([row for draft in drafts for row in draft.features]),
        )
    except ValidationError as e:
        raise ScenarioError(f"instancia generada inválida: {e}") from e
    logger.info(f"Instancia sintética: {problem.N} clips, T={problem.T}, M={problem.M}, semilla {spec.seed}")
    return problem, GroundTruth.from_problem(problem)
