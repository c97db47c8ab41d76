"""
Ejecutar la suite de pruebas del solucionador.

Uso:
    python solver/run_tests.py [argumentos de pytest]
"""
import os
import sys

import pytest

if __name__ == "__main__":
    raiz = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
    sys.exit(pytest.main(["-c", os.path.join(raiz, "pytest.ini"), "--rootdir", raiz, *sys.argv[1:]]))
