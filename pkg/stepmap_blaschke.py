#!/usr/bin/env python3
"""
Skończone iloczyny Blaschkego i algorytm Schura
Konstrukcyjne przybliżanie funkcji analitycznych koła w koło (dylatacje a_n, a_{n,ρ}).
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Any

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import solve_triangular, toeplitz

from stepmap_errors import InvalidRho, NotASelfMap, SpecFileError

logger = logging.getLogger(__name__)

QUADRATURE_RADIUS = 0.5
QUADRATURE_SAMPLES = 2 ** 12
SELF_MAP_TOL = 1e-10
CIRCLE_SAMPLES = 4096


@dataclass(frozen=True)
class AnalyticFunction:
    """
    Uchwyt funkcji analitycznej w kole: ewaluator (wektorowy) + opcjonalny dostawca
    współczynników Taylora
    """
    evaluator: Callable[[np.ndarray], np.ndarray]
    taylor: Optional[Callable[[int], np.ndarray]] = None
    name: str = ""
    flags: FrozenSet[str] = field(default_factory=frozenset)

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=complex)
        out = np.asarray(self.evaluator(z_arr), dtype=complex)
        if out.shape != z_arr.shape:
            out = np.broadcast_to(out, z_arr.shape).copy()
        return complex(out) if out.ndim == 0 else out

    def taylor_coefficients(self, m: int) -> np.ndarray:
        return taylor_coefficients(self, m)


def as_analytic(fn, name: str = "") -> AnalyticFunction:
    """Opakowuje zwykłą funkcję / iloczyn Blaschkego w AnalyticFunction"""
    if isinstance(fn, AnalyticFunction):
        return fn
    if isinstance(fn, FiniteBlaschke):
        return fn.as_analytic()
    return AnalyticFunction(evaluator=fn, name=name)


def constant_function(value: complex, name: str = "") -> AnalyticFunction:
    value = complex(value)

    def coefficients(m: int) -> np.ndarray:
        c = np.zeros(m, dtype=complex)
        if m:
            c[0] = value
        return c

    return AnalyticFunction(evaluator=lambda z: np.full(np.shape(z), value, dtype=complex),
                            taylor=coefficients, name=name or f"const({value})")


def polynomial_function(coefficients: Sequence[complex], name: str = "") -> AnalyticFunction:
    """Wielomian o współczynnikach rosnąco (c_0, c_1, ...)"""
    coeffs = np.asarray(coefficients, dtype=complex)

    def provider(m: int) -> np.ndarray:
        out = np.zeros(m, dtype=complex)
        k = min(m, len(coeffs))
        out[:k] = coeffs[:k]
        return out

    return AnalyticFunction(evaluator=lambda z: P.polyval(z, coeffs), taylor=provider, name=name)


def taylor_coefficients(fn, m: int, radius: float = QUADRATURE_RADIUS,
                        samples: int = QUADRATURE_SAMPLES) -> np.ndarray:
    """
    Współczynniki Taylora c_0..c_{m-1}

    Z dostawcy, jeśli uchwyt go ma; inaczej kwadratura trapezów na okręgu |z| = radius
    (FFT z `samples` punktów).
    """
    handle = as_analytic(fn)
    if handle.taylor is not None:
        return np.asarray(handle.taylor(m), dtype=complex)[:m]
    theta = 2.0 * np.pi * np.arange(samples) / samples
    values = np.asarray(handle(radius * np.exp(1j * theta)), dtype=complex)
    coefficients = np.fft.fft(values) / samples
    k = np.arange(m)
    return coefficients[:m] / radius ** k


def series_divide(numerator: np.ndarray, denominator: np.ndarray, m: int) -> np.ndarray:
    """Iloraz szeregów potęgowych (m wyrazów); wymaga denominator[0] != 0"""
    num = np.zeros(m, dtype=complex)
    den = np.zeros(m, dtype=complex)
    num[:min(m, len(numerator))] = numerator[:m]
    den[:min(m, len(denominator))] = denominator[:m]
    matrix = toeplitz(den, np.zeros(m, dtype=complex))
    return solve_triangular(matrix, num, lower=True)


def sup_modulus(fn, radius: float = 1.0, samples: int = CIRCLE_SAMPLES) -> float:
    """max |f| na okręgu |z| = radius (próbkowanie)"""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return float(np.max(np.abs(as_analytic(fn)(radius * np.exp(1j * theta)))))


# ========== Iloczyny Blaschkego ==========

@dataclass(frozen=True)
class SchurDecomposition:
    """Parametry Schura γ_0, γ_1, ...; terminated gdy ostatni jest unimodularny"""
    params: Tuple[complex, ...]
    terminated: bool

    @property
    def degree(self) -> Optional[int]:
        return len(self.params) - 1 if self.terminated else None

    def to_dict(self) -> Dict[str, Any]:
        return {'params': [[g.real, g.imag] for g in self.params], 'terminated': self.terminated}


def _mobius_factor(alpha: complex, z: np.ndarray) -> np.ndarray:
    if alpha == 0:
        return z
    return (abs(alpha) / alpha) * (alpha - z) / (1.0 - np.conj(alpha) * z)


@dataclass(frozen=True)
class FiniteBlaschke:
    """
    Skończony iloczyn Blaschkego u·Π B_α(z)

    B_α(z) = (|α|/α)(α - z)/(1 - ᾱz) dla α != 0, B_0(z) = z - każdy czynnik ma w zerze
    wartość rzeczywistą nieujemną.
    """
    zeros: Tuple[complex, ...]
    factor: complex = 1.0 + 0j
    given_schur: Optional[Tuple[complex, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if any(abs(a) >= 1.0 for a in self.zeros):
            raise NotASelfMap("Zera iloczynu Blaschkego muszą leżeć w kole |z| < 1",
                              details={'zeros': [[a.real, a.imag] for a in self.zeros]})
        if abs(abs(self.factor) - 1.0) > 1e-12:
            raise NotASelfMap(f"Czynnik |u| = {abs(self.factor)} != 1")

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @classmethod
    def from_zeros(cls, zeros: Sequence[complex], factor: complex = 1.0) -> 'FiniteBlaschke':
        return cls(zeros=tuple(complex(a) for a in zeros), factor=complex(factor))

    @classmethod
    def from_schur(cls, params: Sequence[complex]) -> 'FiniteBlaschke':
        """
        Odtwarza iloczyn z parametrów γ_0..γ_{m-1} (|γ| < 1) i unimodularnego γ_m

        f_j = (γ_j + z f_{j+1}) / (1 + γ̄_j z f_{j+1}), f_m = γ_m.
        """
        params = [complex(g) for g in params]
        last = params[-1]
        if abs(abs(last) - 1.0) > 1e-8:
            raise NotASelfMap(f"Ostatni parametr Schura musi być unimodularny (|γ_m| = {abs(last)})")
        last = last / abs(last)
        num = np.array([last], dtype=complex)
        den = np.array([1.0], dtype=complex)
        for gamma in reversed(params[:-1]):
            if abs(gamma) >= 1.0:
                raise NotASelfMap(f"Parametr Schura |γ| = {abs(gamma)} >= 1 przed końcem ciągu")
            z_num = P.polymulx(num)
            num, den = P.polyadd(gamma * den, z_num), P.polyadd(den, np.conj(gamma) * z_num)
        zeros = P.polyroots(num) if len(num) > 1 else np.zeros(0, dtype=complex)
        zeros = tuple(complex(a) for a in np.atleast_1d(zeros))
        # czynnik u z wartości w z = 1, gdzie |B_α(1)| = 1
        product = np.prod([_mobius_factor(a, np.complex128(1.0)) for a in zeros]) if zeros else 1.0
        u = (P.polyval(1.0, num) / P.polyval(1.0, den)) / product
        return cls(zeros=zeros, factor=complex(u / abs(u)), given_schur=tuple(params[:-1]) + (last,))

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=complex)
        out = np.full(z_arr.shape, self.factor, dtype=complex)
        for alpha in self.zeros:
            out = out * _mobius_factor(alpha, z_arr)
        return complex(out) if out.ndim == 0 else out

    def __mul__(self, other: 'FiniteBlaschke') -> 'FiniteBlaschke':
        return FiniteBlaschke(zeros=self.zeros + other.zeros, factor=self.factor * other.factor)

    @cached_property
    def _polynomials(self) -> Tuple[np.ndarray, np.ndarray]:
        num = np.array([self.factor], dtype=complex)
        den = np.array([1.0], dtype=complex)
        for alpha in self.zeros:
            if alpha == 0:
                num = P.polymulx(num)
            else:
                phase = abs(alpha) / alpha
                num = P.polymul(num, phase * np.array([alpha, -1.0]))
                den = P.polymul(den, np.array([1.0, -np.conj(alpha)]))
        return num, den

    def taylor(self, m: int) -> np.ndarray:
        num, den = self._polynomials
        return series_divide(num, den, m)

    def as_analytic(self) -> AnalyticFunction:
        flags = frozenset({'ConstantUnimodular'}) if self.degree == 0 else frozenset()
        return AnalyticFunction(evaluator=self.__call__, taylor=self.taylor,
                                name=f"blaschke(deg={self.degree})", flags=flags)

    @cached_property
    def schur_params(self) -> Tuple[complex, ...]:
        if self.given_schur is not None:
            return self.given_schur
        return schur_parameters(self.as_analytic(), self.degree + 1).params

    def to_dict(self) -> Dict[str, Any]:
        return {'zeros': [[a.real, a.imag] for a in self.zeros],
                'factor': [self.factor.real, self.factor.imag]}

    @classmethod
    def from_dict(cls, data: Dict) -> 'FiniteBlaschke':
        try:
            zeros = [complex(float(re), float(im)) for re, im in data['zeros']]
            factor = complex(float(data['factor'][0]), float(data['factor'][1]))
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise SpecFileError(f"Niepoprawny format specyfikacji iloczynu Blaschkego: {e}")
        return cls.from_zeros(zeros, factor)


def eval_blaschke(b: FiniteBlaschke, z):
    return b(z)


def boundary_unimodularity(b: FiniteBlaschke, samples: int = CIRCLE_SAMPLES) -> float:
    """max ||b| - 1| na okręgu jednostkowym"""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return float(np.max(np.abs(np.abs(b(np.exp(1j * theta))) - 1.0)))


def schur_parameters(a, m: int) -> SchurDecomposition:
    """
    Pierwsze m parametrów Schura funkcji a

    f_{j+1} = (1/z)(f_j - γ_j)/(1 - γ̄_j f_j), γ_j = f_j(0); zatrzymanie przy |γ_j| = 1.

    Raises:
        NotASelfMap: |γ_j| > 1 + 1e-10
    """
    coefficients = taylor_coefficients(a, m)
    params: List[complex] = []
    terminated = False
    for j in range(m):
        gamma = complex(coefficients[0])
        modulus = abs(gamma)
        if modulus > 1.0 + SELF_MAP_TOL:
            raise NotASelfMap(f"|γ_{j}| = {modulus:.12g} > 1 - funkcja nie odwzorowuje koła w koło",
                              details={'index': j, 'modulus': modulus})
        if modulus >= 1.0 - SELF_MAP_TOL:
            params.append(gamma / modulus)
            terminated = True
            break
        params.append(gamma)
        if j == m - 1 or len(coefficients) < 2:
            break
        numerator = coefficients.copy()
        numerator[0] -= gamma
        denominator = -np.conj(gamma) * coefficients
        denominator[0] += 1.0
        coefficients = series_divide(numerator, denominator, len(coefficients))[1:]
    logger.debug(f"Schur: {len(params)} parametrów, terminated={terminated}")
    return SchurDecomposition(params=tuple(params), terminated=terminated)


def blaschke_truncation(a, m: int) -> FiniteBlaschke:
    """
    Iloczyn Blaschkego stopnia m z obcięcia ciągu Schura

    Reszta po γ_{m-1} zastąpiona stałą unimodularną o fazie γ_m (lub 1, gdy γ_m = 0).
    Zgadza się z a na współczynnikach Taylora 0..m-1.
    """
    decomposition = schur_parameters(a, m + 1)
    params = list(decomposition.params)
    if decomposition.terminated:
        return FiniteBlaschke.from_schur(params)
    if len(params) < m + 1:
        params.extend([0j] * (m + 1 - len(params)))
    tail = params[m]
    tau = tail / abs(tail) if abs(tail) > 1e-15 else 1.0 + 0j
    return FiniteBlaschke.from_schur(params[:m] + [tau])


def dilate_rho(b, rho: float) -> AnalyticFunction:
    """z -> b(ρz) dla 0 < ρ < 1"""
    if not 0.0 < rho < 1.0:
        raise InvalidRho(f"rho musi leżeć w (0, 1), podano {rho}", details={'rho': rho})
    handle = as_analytic(b)
    taylor = None
    if handle.taylor is not None:
        def taylor(m: int) -> np.ndarray:
            return handle.taylor(m) * rho ** np.arange(m)
    if 'ConstantUnimodular' in handle.flags:
        logger.warning("dilate_rho: stała unimodularna - sup pozostaje równe 1")
    return AnalyticFunction(evaluator=lambda z: handle(rho * np.asarray(z, dtype=complex)),
                            taylor=taylor, name=f"{handle.name}(rho={rho})", flags=handle.flags)


# ========== Pliki ==========

def load_blaschke(path: str) -> FiniteBlaschke:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecFileError(f"Nie można odczytać pliku {path}: {e}", details={'path': path})
    return FiniteBlaschke.from_dict(data)


def dump_blaschke(b: FiniteBlaschke, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(b.to_dict(), f, indent=2)


def export_schur_csv(decomposition: SchurDecomposition, path: str) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['j', 're', 'im', 'modulus'])
        for j, gamma in enumerate(decomposition.params):
            writer.writerow([j, repr(gamma.real), repr(gamma.imag), repr(abs(gamma))])
