"""
Configuración global del solucionador conjunto de acciones y estados de objetos.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Cargar variables de entorno desde archivo .env si existe
load_dotenv()

# Directorio raíz del proyecto
BASE_DIR = Path(__file__).resolve().parent.parent

# Fixtures de regresión versionados junto a las pruebas
FIXTURES_DIR = os.getenv("SOLVER_FIXTURES_DIR", os.path.join(BASE_DIR, "tests", "fixtures"))

# Formato de archivo de problema
PROBLEM_FILE_VERSION = 1

# Hiperparámetros de los costos discriminativos
DEFAULT_MU = 1e-4  # estados
DEFAULT_LAMBDA = 1e-2  # acciones
DEFAULT_NU = 1.0  # peso del costo conjunto
DEFAULT_DET_SCORE_WEIGHT = 0.1  # kappa de la variante con puntajes de detección

# Configuración de Frank-Wolfe
DEFAULT_MAX_ITERS = 300
DEFAULT_CONVEX_MAX_ITERS = 200
DEFAULT_CONVEX_TOL = 1e-6
DEFAULT_FW_TOL = 1e-4
DEFAULT_ROUNDING_CADENCE = 10
DEFAULT_SEED = 0

# Paralelismo por clip; los resultados no dependen de este valor
DEFAULT_THREADS = int(os.getenv("SOLVER_THREADS", os.cpu_count() or 1))

# Oráculos y líneas base
BRUTE_FORCE_MAX_TRACKLETS = 12
CHANCE_SAMPLES = 1000
KMEANS_CLUSTERS = 3
KMEANS_RESTARTS = 10

# Configuración de logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE")
