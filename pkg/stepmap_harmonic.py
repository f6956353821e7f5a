#!/usr/bin/env python3
"""
Rozszerzenie Poissona funkcji schodkowej: f = c_0 + h + conj(g)

Dla punktów skoku ζ_j = e^{iθ_j} ze skokami Δ_j:
    c_k = Σ_j Δ_j e^{-ikθ_j} / (2πik)          (k != 0)
    h'(z) = Σ_j (iΔ_j / 2π) / (z - ζ_j)
    g'(z) = Σ_j (i·conj(Δ_j) / 2π) / (z - ζ_j)
Znak residuów sprawdzany w testach względem pochodnej obciętego szeregu na |z| = 1/2.
"""

import csv
import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Any

import numpy as np
from numpy.polynomial import polynomial as P

from stepmap_boundary import StepFunction, TWO_PI
from stepmap_blaschke import AnalyticFunction, series_divide
from stepmap_config import load_settings
from stepmap_errors import NearBoundary, DegenerateAnalyticPart, NotContracting

logger = logging.getLogger(__name__)

BOUNDARY_MARGIN = 1e-12
SUP_SAMPLES = 4096
SUP_RADIUS = 1.0 - 1e-6
TRIM_TOL = 1e-10
CLEAN_TOL = 1e-12
COMMON_ROOT_TOL = 1e-8
CLUSTER_TOL = 1e-6


# ========== Wielomiany pomocnicze ==========

def _trim(coefficients: np.ndarray, tol: float = TRIM_TOL) -> np.ndarray:
    """Obcina najwyższe współczynniki mniejsze niż tol·max|c|"""
    coefficients = np.asarray(coefficients, dtype=complex)
    scale = float(np.max(np.abs(coefficients))) if coefficients.size else 0.0
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = np.nonzero(np.abs(coefficients) > tol * scale)[0]
    return coefficients[:keep[-1] + 1]


def _clean(coefficients: np.ndarray, tol: float = CLEAN_TOL) -> np.ndarray:
    """Zeruje szum zaokrągleń; zwraca pustą tablicę dla wielomianu zerowego"""
    coefficients = np.array(coefficients, dtype=complex)
    scale = float(np.max(np.abs(coefficients))) if coefficients.size else 0.0
    if scale == 0.0:
        return np.zeros(0, dtype=complex)
    coefficients[np.abs(coefficients) <= tol * scale] = 0.0
    return _trim(coefficients)


def _cancel_common_roots(num: np.ndarray, den: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    while den.size > 1 and num.size > 1:
        common = None
        for root in P.polyroots(den):
            scale = np.sum(np.abs(num) * abs(root) ** np.arange(num.size))
            if abs(P.polyval(root, num)) <= tol * scale:
                common = root
                break
        if common is None:
            break
        num = _trim(P.polydiv(num, np.array([-common, 1.0]))[0])
        den = _trim(P.polydiv(den, np.array([-common, 1.0]))[0])
    return num, den


def _cluster_roots(roots: np.ndarray, tol: float = CLUSTER_TOL) -> List[Tuple[complex, int]]:
    """Grupuje pierwiastki bliższe niż tol·max(1, |r|) -> (środek, krotność)"""
    remaining = [complex(r) for r in roots]
    clusters: List[Tuple[complex, int]] = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed] + [r for r in remaining if abs(r - seed) <= tol * max(1.0, abs(seed))]
        remaining = [r for r in remaining if abs(r - seed) > tol * max(1.0, abs(seed))]
        clusters.append((complex(np.mean(group)), len(group)))
    return clusters


def _shifted(coefficients: np.ndarray, at: complex, m: int) -> np.ndarray:
    """Pierwsze m współczynników Taylora p(at + u)"""
    out = np.zeros(m, dtype=complex)
    current = np.asarray(coefficients, dtype=complex)
    for k in range(m):
        out[k] = P.polyval(at, current) / math.factorial(k)
        current = P.polyder(current)
    return out


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """
    Funkcja wymierna w postaci ułamków prostych:
        Σ_poles Σ_{m=1..order} c_m / (z - p)^m  +  wielomian (współczynniki rosnąco)
    """
    poles: Tuple[complex, ...] = ()
    orders: Tuple[int, ...] = ()
    coefficients: Tuple[Tuple[complex, ...], ...] = ()
    polynomial: Tuple[complex, ...] = ()

    @classmethod
    def zero(cls) -> 'RationalFunction':
        return cls()

    @classmethod
    def simple(cls, poles: Sequence[complex], residues: Sequence[complex]) -> 'RationalFunction':
        """Bieguny pojedyncze z podanymi residuami"""
        poles = tuple(complex(p) for p in poles)
        return cls(poles=poles, orders=(1,) * len(poles),
                   coefficients=tuple((complex(r),) for r in residues))

    @property
    def order(self) -> int:
        """Stopień mianownika = liczba biegunów z krotnościami"""
        return int(sum(self.orders))

    @property
    def residues(self) -> np.ndarray:
        return np.array([c[0] for c in self.coefficients], dtype=complex)

    @property
    def is_zero(self) -> bool:
        return all(all(c == 0 for c in cs) for cs in self.coefficients) and \
            all(c == 0 for c in self.polynomial)

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=complex)
        out = P.polyval(z_arr, np.array(self.polynomial, dtype=complex)) if self.polynomial \
            else np.zeros(z_arr.shape, dtype=complex)
        if self.poles and all(o == 1 for o in self.orders):
            # szybka ścieżka: same bieguny pojedyncze
            diff = z_arr[..., None] - np.array(self.poles, dtype=complex)
            out = out + np.sum(self.residues / diff, axis=-1)
        else:
            for pole, coeffs in zip(self.poles, self.coefficients):
                inv = 1.0 / (z_arr - pole)
                power = inv
                for c in coeffs:
                    out = out + c * power
                    power = power * inv
        return complex(out) if np.ndim(out) == 0 else out

    def derivative(self) -> 'RationalFunction':
        coefficients = []
        for coeffs in self.coefficients:
            # c/(z-p)^m -> -m c/(z-p)^{m+1}
            coefficients.append((0j,) + tuple(-m * c for m, c in enumerate(coeffs, start=1)))
        poly = tuple(complex(c) for c in P.polyder(np.array(self.polynomial, dtype=complex))) \
            if len(self.polynomial) > 1 else ()
        return RationalFunction(poles=self.poles, orders=tuple(o + 1 for o in self.orders),
                                coefficients=tuple(coefficients), polynomial=poly)

    def denominator(self) -> np.ndarray:
        """Π(z - p)^order, współczynniki rosnąco"""
        roots = [p for p, o in zip(self.poles, self.orders) for _ in range(o)]
        return P.polyfromroots(roots).astype(complex) if roots else np.ones(1, dtype=complex)

    def numerator(self) -> np.ndarray:
        """
        Współczynniki (rosnąco) licznika R(z)·Π(z - p_j) dla biegunów pojedynczych

        Wartości w M punktach okręgu jednostkowego obróconego o π/M, potem FFT;
        Π_{k≠j}(z - p_k) z iloczynów prefiksowych i sufiksowych, bez dzielenia.
        """
        if any(o != 1 for o in self.orders):
            raise ValueError("Licznik liczony tylko dla biegunów pojedynczych")
        n = len(self.poles)
        poly = np.array(self.polynomial, dtype=complex)
        if n == 0:
            return poly if poly.size else np.zeros(1, dtype=complex)
        size = n + poly.size
        s = np.exp(1j * (TWO_PI * np.arange(size) / size + np.pi / size))
        diff = s[:, None] - np.array(self.poles, dtype=complex)[None, :]
        ones = np.ones((size, 1), dtype=complex)
        prefix = np.cumprod(np.hstack([ones, diff[:, :-1]]), axis=1)
        suffix = np.cumprod(np.hstack([ones, diff[:, ::-1][:, :-1]]), axis=1)[:, ::-1]
        values = (prefix * suffix) @ self.residues
        if poly.size:
            values = values + P.polyval(s, poly) * prefix[:, -1] * diff[:, -1]
        m = np.arange(size)
        return np.fft.fft(values) / size * np.exp(-1j * np.pi * m / size)

    def zeros(self) -> np.ndarray:
        """Zera funkcji: pierwiastki licznika nad Π(z - p_j)"""
        num = _trim(self.numerator())
        if num.size <= 1:
            return np.zeros(0, dtype=complex)
        return P.polyroots(num)

    @classmethod
    def from_polynomials(cls, numerator: Sequence[complex], denominator: Sequence[complex],
                         tol: float = COMMON_ROOT_TOL) -> 'RationalFunction':
        """
        Postać skrócona num/den: wspólne pierwiastki usunięte, część wielomianowa
        i ułamki proste (pierwiastki mianownika bliższe niż 1e-6 to jeden biegun wielokrotny)
        """
        num = _trim(np.asarray(numerator, dtype=complex))
        den = _trim(np.asarray(denominator, dtype=complex))
        if not np.any(den):
            raise ZeroDivisionError("Mianownik tożsamościowo równy zero")
        num, den = _cancel_common_roots(num, den, tol)
        quotient, remainder = P.polydiv(num, den)

        poles, orders, coefficients = [], [], []
        if den.size > 1:
            clusters = _cluster_roots(P.polyroots(den))
            for index, (root, multiplicity) in enumerate(clusters):
                others = [r for i, (r, m) in enumerate(clusters) if i != index for _ in range(m)]
                rest = den[-1] * (P.polyfromroots(others) if others else np.ones(1))
                # c_{m-k} przy 1/(z - root)^{m-k} to k-ty wyraz Taylora remainder/rest w root
                local = series_divide(_shifted(remainder, root, multiplicity),
                                      _shifted(rest, root, multiplicity), multiplicity)
                poles.append(complex(root))
                orders.append(multiplicity)
                coefficients.append(tuple(complex(c) for c in local[::-1]))
        return cls(poles=tuple(poles), orders=tuple(orders), coefficients=tuple(coefficients),
                   polynomial=tuple(complex(c) for c in _clean(quotient)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'poles': [[p.real, p.imag] for p in self.poles],
            'orders': list(self.orders),
            'coefficients': [[[c.real, c.imag] for c in cs] for cs in self.coefficients],
            'polynomial': [[c.real, c.imag] for c in self.polynomial],
        }


@dataclass(frozen=True, eq=False)
class HarmonicStepMap:
    """Rozszerzenie Poissona funkcji schodkowej wraz z danymi analitycznymi"""
    source: StepFunction
    truncation: int
    h_series: np.ndarray
    g_series: np.ndarray
    hprime: RationalFunction
    gprime: RationalFunction
    constant_term: complex

    def __call__(self, z):
        return eval_poisson_extension(self.source, z)

    def evaluate(self, z):
        return eval_poisson_extension(self.source, z)

    def _logs(self, z) -> np.ndarray:
        z_arr = np.asarray(z, dtype=complex)
        return np.log(1.0 - z_arr[..., None] * np.conj(self.source.zetas))

    def h(self, z):
        """h(z) = Σ_j (iΔ_j/2π) Log(1 - z ζ̄_j), h(0) = 0"""
        out = self._logs(z) @ (1j * self.source.jumps / TWO_PI)
        return complex(out) if np.ndim(out) == 0 else out

    def g(self, z):
        out = self._logs(z) @ (1j * np.conj(self.source.jumps) / TWO_PI)
        return complex(out) if np.ndim(out) == 0 else out

    def closed_form(self, z):
        """c_0 + h + conj(g) - ta sama funkcja co rozszerzenie Poissona"""
        return self.constant_term + self.h(z) + np.conj(self.g(z))

    def series_h(self, z):
        return P.polyval(np.asarray(z, dtype=complex), self.h_series)

    def series_g(self, z):
        return P.polyval(np.asarray(z, dtype=complex), self.g_series)

    def series_hprime(self, z):
        return P.polyval(np.asarray(z, dtype=complex), P.polyder(self.h_series))

    def series_gprime(self, z):
        return P.polyval(np.asarray(z, dtype=complex), P.polyder(self.g_series))

    def jacobian(self, z):
        """|h'|² - |g'|² (dodatni dla odwzorowań zachowujących orientację)"""
        return np.abs(self.hprime(z)) ** 2 - np.abs(self.gprime(z)) ** 2

    @property
    def a1(self) -> complex:
        """h'(0)"""
        return complex(self.hprime(0j))

    @property
    def b1(self) -> complex:
        """g'(0)"""
        return complex(self.gprime(0j))


@dataclass(frozen=True, eq=False)
class Dilatation:
    """
    a = g'/h' (konwencja conj(f_z̄) = a·f_z)

    Obie pochodne mają wspólny mianownik Π(z - ζ_j), więc a = N_g/N_h; `value` to ten iloraz
    po skróceniu wspólnych pierwiastków. Wywołanie liczy iloraz ułamków prostych (stabilny przy
    brzegu), w samych biegunach zwraca iloraz residuów.
    """
    numerator: RationalFunction
    denominator: RationalFunction
    sup_bound_estimate: float
    exceeds_one: bool = field(default=False)

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=complex)
        if self.numerator.is_zero:
            out = np.zeros(z_arr.shape, dtype=complex)
            return complex(out) if out.ndim == 0 else out
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.asarray(self.numerator(z_arr) / self.denominator(z_arr), dtype=complex)
        poles = np.array(self.denominator.poles, dtype=complex)
        if poles.size:
            dist = np.abs(z_arr[..., None] - poles)
            hit = dist.min(axis=-1) < 1e-14
            if np.any(hit):
                ratio = self.numerator.residues / self.denominator.residues
                out = np.where(hit, ratio[np.argmin(dist, axis=-1)], out)
        return complex(out) if out.ndim == 0 else out

    @cached_property
    def value(self) -> RationalFunction:
        """g'/h' w postaci skróconej; n-kąt foremny daje λ·z^{n-2}"""
        if self.numerator.is_zero:
            return RationalFunction.zero()
        return RationalFunction.from_polynomials(self.numerator.numerator(), self.denominator.numerator())

    def as_analytic(self) -> AnalyticFunction:
        return AnalyticFunction(evaluator=self.__call__, name="dilatation")

    def to_dict(self) -> Dict[str, Any]:
        return {'sup_bound_estimate': self.sup_bound_estimate, 'exceeds_one': self.exceeds_one}


# ========== Operacje ==========

def harmonic_measures(sf: StepFunction, z) -> np.ndarray:
    """
    Miara harmoniczna każdego łuku w punktach z -> tablica (..., n)

    ω_j(z) = θ_j(z)/π - |I_j|/2π, gdzie θ_j(z) ∈ [0, 2π) to kąt (przeciwnie do wskazówek)
    pod jakim z widzi końce łuku - arg ilorazu Möbiusa (e^{iβ} - z)/(e^{iα} - z).
    """
    z_arr = np.asarray(z, dtype=complex)
    n = sf.step_count
    if n == 1:
        return np.ones(z_arr.shape + (1,))
    start = np.exp(1j * sf.angles)
    end = np.roll(start, -1)
    ratio = (end - z_arr[..., None]) / (start - z_arr[..., None])
    # θ_j(z) leży w (|I_j|/2, |I_j|/2 + π); cięcie gałęzi przesunięte na środek dopełnienia,
    # więc łuk prawie pełny (e^{iα} == e^{iβ} w arytmetyce) daje 2π, a nie 0
    low = sf.arc_lengths / 2.0 - np.pi / 2.0
    theta = low + np.mod(np.arctan2(ratio.imag, ratio.real) - low, TWO_PI)
    weights = theta / np.pi - sf.arc_lengths / TWO_PI
    # w środku koła wartości dokładne
    centre = (z_arr == 0)
    if np.any(centre):
        weights = np.where(centre[..., None], sf.arc_lengths / TWO_PI, weights)
    return np.clip(weights, 0.0, 1.0)


def eval_poisson_extension(sf: StepFunction, z):
    """
    Wartość całki Poissona funkcji schodkowej w |z| < 1

    Raises:
        NearBoundary: |z| > 1 - 1e-12
    """
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > 1.0 - BOUNDARY_MARGIN):
        raise NearBoundary("Punkt zbyt blisko okręgu jednostkowego - użyj granic radialnych",
                           details={'max_modulus': float(np.max(np.abs(z_arr)))})
    out = harmonic_measures(sf, z_arr) @ sf.values
    return complex(out) if np.ndim(out) == 0 else out


def _fourier(sf: StepFunction, ks: np.ndarray) -> np.ndarray:
    ks = np.asarray(ks, dtype=int)
    out = np.zeros(ks.shape, dtype=complex)
    zero = ks == 0
    out[zero] = sf.mean()
    nz = ~zero
    if sf.step_count > 1 and np.any(nz):
        k = ks[nz].astype(float)
        phases = np.exp(-1j * np.outer(k, sf.jump_angles))
        out[nz] = (phases @ sf.jumps) / (2j * np.pi * k)
    return out


def fourier_coefficients(sf: StepFunction, k_range: Iterable[int]) -> Dict[int, complex]:
    """c_k = (1/2π)∫φ e^{-ikt}dt ze wzoru na skokach"""
    ks = np.array(list(k_range), dtype=int)
    return {int(k): complex(c) for k, c in zip(ks, _fourier(sf, ks))}


def analytic_derivatives(sf: StepFunction) -> Tuple[RationalFunction, RationalFunction]:
    """h', g' jako ułamki proste z biegunami w punktach skoku (bez szeregów)"""
    if sf.step_count == 1:
        return RationalFunction.zero(), RationalFunction.zero()
    return (RationalFunction.simple(sf.zetas, 1j * sf.jumps / TWO_PI),
            RationalFunction.simple(sf.zetas, 1j * np.conj(sf.jumps) / TWO_PI))


def decompose(sf: StepFunction, N: Optional[int] = None) -> HarmonicStepMap:
    """
    Rozkład f = c_0 + h + conj(g)

    Args:
        sf: funkcja schodkowa
        N: stopień obcięcia szeregów (domyślnie STEPMAP_TRUNCATION = 512)
    """
    if N is None:
        N = load_settings().truncation
    if N < 1:
        raise ValueError(f"Stopień obcięcia musi być >= 1 (podano {N})")
    ks = np.arange(1, N + 1)
    h_series = np.concatenate([[0j], _fourier(sf, ks)])
    g_series = np.concatenate([[0j], np.conj(_fourier(sf, -ks))])
    hprime, gprime = analytic_derivatives(sf)
    return HarmonicStepMap(source=sf, truncation=N, h_series=h_series, g_series=g_series,
                           hprime=hprime, gprime=gprime, constant_term=sf.mean())


def dilatation(map: HarmonicStepMap, samples: int = SUP_SAMPLES, radius: float = SUP_RADIUS) -> Dilatation:
    """
    Dylatacja g'/h' i oszacowanie sup |a| na okręgu |z| = 1 - 1e-6

    Raises:
        DegenerateAnalyticPart: h' ≡ 0
    """
    if map.hprime.is_zero:
        raise DegenerateAnalyticPart("h' ≡ 0 - dylatacja nieokreślona (mapa stała?)")
    partial = Dilatation(numerator=map.gprime, denominator=map.hprime, sup_bound_estimate=0.0)
    theta = TWO_PI * np.arange(samples) / samples
    sup = float(np.max(np.abs(partial(radius * np.exp(1j * theta)))))
    if sup >= 1.0:
        logger.info(f"sup|a| ≈ {sup:.6f} >= 1 - mapa nie zachowuje orientacji wszędzie")
    return Dilatation(numerator=map.gprime, denominator=map.hprime,
                      sup_bound_estimate=sup, exceeds_one=sup >= 1.0)


def closure_member(map: HarmonicStepMap, c: complex) -> HarmonicStepMap:
    """f_o + c·conj(f_o), |c| <= 1 - element domknięcia klasy"""
    if abs(c) > 1.0:
        raise NotContracting(f"|c| = {abs(c)} > 1", details={'c': [complex(c).real, complex(c).imag]})
    return decompose(map.source.map_values(lambda w: w + c * np.conj(w)), map.truncation)


# ========== Eksport ==========

def export_coefficients_csv(coefficients: Dict[int, complex], path: str) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['k', 're', 'im'])
        for k in sorted(coefficients):
            writer.writerow([k, repr(coefficients[k].real), repr(coefficients[k].imag)])


def export_grid_csv(z, values, path: str) -> None:
    z = np.ravel(np.asarray(z, dtype=complex))
    values = np.ravel(np.asarray(values, dtype=complex))
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['re_z', 'im_z', 're_f', 'im_f'])
        for zi, wi in zip(z, values):
            writer.writerow([repr(float(zi.real)), repr(float(zi.imag)),
                             repr(float(wi.real)), repr(float(wi.imag))])
