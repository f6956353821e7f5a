#!/usr/bin/env python3
"""
Wyjątki stepmap
Każda operacja zgłasza błąd o nazwie opisującej przyczynę; CLI zamienia je na kody wyjścia.
"""

from typing import Dict, Any, Optional


class StepMapError(Exception):
    """Wyjątek bazowy dla błędów biblioteki stepmap"""

    # Błędy dziedzinowe (mapa nie spełnia warunków) vs błędy wejścia/użycia
    domain_failure = True

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def is_domain_failure(self) -> bool:
        """Sprawdza czy błąd dotyczy obiektu matematycznego (kod wyjścia 2)"""
        return self.domain_failure

    def to_dict(self) -> Dict[str, Any]:
        return {'error': type(self).__name__, 'message': self.message, 'details': self.details}


# ========== Wejście / konfiguracja ==========

class ConfigurationError(StepMapError):
    """Niepoprawna wartość w .env lub zmiennych środowiskowych"""
    domain_failure = False


class SpecFileError(StepMapError):
    """Uszkodzony plik JSON ze specyfikacją mapy / iloczynu Blaschkego"""
    domain_failure = False


class EmptyInput(StepMapError):
    """Pusta lista łuków"""
    domain_failure = False


class InvalidPartition(StepMapError):
    """Zduplikowane kąty podziału okręgu"""
    domain_failure = False


# ========== Geometria ==========

class NotAPolygon(StepMapError):
    """Mniej niż 3 różne wartości - brak wielokąta"""


class NotSimple(StepMapError):
    """Łamana wierzchołków przecina samą siebie"""


# ========== Analiza ==========

class NearBoundary(StepMapError):
    """Punkt zbyt blisko okręgu jednostkowego dla wzoru zamkniętego"""
    domain_failure = False


class DegenerateAnalyticPart(StepMapError):
    """h' tożsamościowo równe zero - dylatacja niezdefiniowana"""


class NotASelfMap(StepMapError):
    """Parametr Schura o module > 1 - funkcja nie odwzorowuje koła w koło"""


class InvalidRho(StepMapError):
    """rho poza przedziałem (0, 1)"""
    domain_failure = False


class InvalidT(StepMapError):
    """t poza przedziałem (0, 1]"""
    domain_failure = False


class NotContracting(StepMapError):
    """|a| >= 1 tam, gdzie wymagane |a| < 1"""


class SingularDenominator(StepMapError):
    """a = 1 - zerowy mianownik we wzorach współczynników układu"""


class OnCurve(StepMapError):
    """Krzywa przechodzi przez punkt, wokół którego liczymy indeks"""


class EvalFailure(StepMapError):
    """Wartości nieskończone / znikające h' na ścieżce pomiaru"""


class DegenerateNormalization(StepMapError):
    """|a_n1| = |b_n1| - wzór normalizacyjny nieokreślony"""


class FitFailed(StepMapError):
    """Budżet optymalizatora wyczerpany, najlepszy kandydat nie jest jednolistny"""

    def __init__(self, message: str, report: Any = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.report = report


class PoorFit(StepMapError):
    """Residuum dopasowania rozwinięcia > 20% amplitudy"""

    def __init__(self, message: str, fit: Any = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.fit = fit
