#!/usr/bin/env python3
"""
Układ eliptyczny pierwszego rzędu dla f = u + iv z dylatacją a = a1 + i·a2

    u_x = a11 v_x + a12 v_y
   -u_y = a21 v_x + a22 v_y

Konwencja: conj(f_z̄) = a·f_z. W zwykłej konwencji Beltramiego ω = f_z̄ / f_z mamy
ω = conj(a)·conj(f_z)/f_z, więc |ω| = |a|.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Dict, Any

import numpy as np
from scipy.stats import linregress

from stepmap_errors import NotContracting, SingularDenominator

logger = logging.getLogger(__name__)

DEFAULT_SPACINGS = (1e-2, 5e-3, 2.5e-3)
EVALUATION_RADIUS = 0.8


class SystemCoefficients(NamedTuple):
    a11: float
    a12: float
    a21: float
    a22: float


@dataclass(frozen=True)
class ResidualReport:
    """Maksymalne residua obu równań dla kolejnych kroków różnic centralnych"""
    spacings: Tuple[float, ...]
    max_residual_eq1: Tuple[float, ...]
    max_residual_eq2: Tuple[float, ...]
    convergence_slope: Optional[float]
    slope_r2: Optional[float]
    point_count: int
    points: np.ndarray = field(default=None, repr=False, compare=False)
    point_residuals: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def grid_spacing(self) -> float:
        """Najmniejszy użyty krok"""
        return min(self.spacings)

    @property
    def max_residual(self) -> float:
        return max(max(self.max_residual_eq1), max(self.max_residual_eq2))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'spacings': list(self.spacings),
            'grid_spacing': self.grid_spacing,
            'max_residual_eq1': list(self.max_residual_eq1),
            'max_residual_eq2': list(self.max_residual_eq2),
            'convergence_slope': self.convergence_slope,
            'slope_r2': self.slope_r2,
            'point_count': self.point_count,
        }


def _check_contracting(a: np.ndarray) -> None:
    if np.any(a == 1.0):
        raise SingularDenominator("a = 1 - zerowy mianownik a2² + (1 - a1)²")
    worst = float(np.max(np.abs(a))) if a.size else 0.0
    if not np.all(np.isfinite(a)) or worst >= 1.0:
        raise NotContracting(f"|a| = {worst:.6g} >= 1 - układ nie jest eliptyczny",
                             details={'max_abs_a': worst})


def _coefficient_arrays(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    a1, a2 = a.real, a.imag
    denominator = a2 ** 2 + (1.0 - a1) ** 2
    a11 = 2.0 * a2 / (-a2 ** 2 - (1.0 - a1) ** 2)
    a12 = (a1 ** 2 - 1.0 + a2 ** 2) / (-a2 ** 2 - (1.0 - a1) ** 2)
    a21 = (-a2 ** 2 + 1.0 - a1 ** 2) / denominator
    a22 = 2.0 * a2 / denominator
    return a11, a12, a21, a22


def system_coefficients(a_value: complex) -> SystemCoefficients:
    """
    Współczynniki a11, a12, a21, a22 w punkcie o dylatacji a

    Raises:
        SingularDenominator: a = 1
        NotContracting: |a| >= 1
    """
    a = np.asarray(complex(a_value))
    _check_contracting(a)
    return SystemCoefficients(*(float(c) for c in _coefficient_arrays(a)))


def ellipticity_margin(coeffs: Sequence[float]) -> Tuple[float, bool]:
    """4·a12·a21 - (a11 + a22)² oraz czy a12 > 0 (bez zgłaszania błędów)"""
    a11, a12, a21, a22 = coeffs
    return 4.0 * a12 * a21 - (a11 + a22) ** 2, a12 > 0


def intermediate_relations(a_value: complex, gradient: Sequence[float]) -> Tuple[float, float]:
    """
    Residua dwóch relacji pośrednich dla gradientu (u_x, u_y, v_x, v_y):
        u_x - v_y = a1(u_x + v_y) - a2(v_x - u_y)
       -u_y - v_x = a1(v_x - u_y) + a2(u_x + v_y)
    """
    a1, a2 = complex(a_value).real, complex(a_value).imag
    u_x, u_y, v_x, v_y = gradient
    first = (u_x - v_y) - (a1 * (u_x + v_y) - a2 * (v_x - u_y))
    second = (-u_y - v_x) - (a1 * (v_x - u_y) + a2 * (u_x + v_y))
    return first, second


def affine_dilatation(alpha: complex, beta: complex) -> complex:
    """Dylatacja f = αz + βz̄: conj(f_z̄) = conj(β) = a·α"""
    if alpha == 0:
        raise SingularDenominator("α = 0 - f_z ≡ 0")
    return complex(np.conj(beta) / alpha)


def _evaluation_grid(radius: float = EVALUATION_RADIUS, n_radii: int = 9, n_angles: int = 32) -> np.ndarray:
    r = np.linspace(0.0, radius, n_radii)
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    return np.concatenate([[0j], (r[1:, None] * np.exp(1j * theta)[None, :]).ravel()])


def _residuals_at(f: Callable, z: np.ndarray, coeffs, h: float) -> Tuple[np.ndarray, np.ndarray]:
    dx = (np.asarray(f(z + h)) - np.asarray(f(z - h))) / (2.0 * h)
    dy = (np.asarray(f(z + 1j * h)) - np.asarray(f(z - 1j * h))) / (2.0 * h)
    u_x, v_x = dx.real, dx.imag
    u_y, v_y = dy.real, dy.imag
    a11, a12, a21, a22 = coeffs
    eq1 = np.abs(u_x - a11 * v_x - a12 * v_y)
    eq2 = np.abs(-u_y - a21 * v_x - a22 * v_y)
    return eq1, eq2


def system_residual(map: Callable, a: Callable, spacings: Sequence[float] = DEFAULT_SPACINGS) -> ResidualReport:
    """
    Sprawdza numerycznie, że f spełnia układ ze współczynnikami z a(z)

    Różnice centralne na siatce biegunowej w |z| <= 0.8; nachylenie log(residuum)
    względem log(h) z regresji liniowej (oczekiwane ~2).
    """
    z = _evaluation_grid()
    a_values = np.asarray(a(z), dtype=complex)
    if a_values.shape != z.shape:
        a_values = np.broadcast_to(a_values, z.shape)
    _check_contracting(a_values)
    coeffs = _coefficient_arrays(a_values)

    spacings = tuple(sorted((float(h) for h in spacings), reverse=True))
    eq1_max, eq2_max = [], []
    finest = None
    for h in spacings:
        eq1, eq2 = _residuals_at(map, z, coeffs, h)
        eq1_max.append(float(np.max(eq1)))
        eq2_max.append(float(np.max(eq2)))
        finest = np.stack([eq1, eq2], axis=-1)
        logger.debug(f"residuum h={h:g}: eq1={eq1_max[-1]:.3e}, eq2={eq2_max[-1]:.3e}")

    combined = np.maximum(eq1_max, eq2_max)
    slope, r2 = None, None
    if len(spacings) >= 2 and np.all(combined > 0):
        fit = linregress(np.log(spacings), np.log(combined))
        slope, r2 = float(fit.slope), float(fit.rvalue ** 2)

    return ResidualReport(spacings=spacings, max_residual_eq1=tuple(eq1_max), max_residual_eq2=tuple(eq2_max),
                          convergence_slope=slope, slope_r2=r2, point_count=int(z.size),
                          points=z, point_residuals=finest)


def export_residual_json(report: ResidualReport, path: str, extra: Dict[str, Any] = None) -> None:
    payload = dict(extra or {})
    payload['residual'] = report.to_dict()
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)


def export_residual_csv(report: ResidualReport, path: str) -> None:
    """Residua w punktach siatki dla najmniejszego kroku"""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['re', 'im', 'residual_eq1', 'residual_eq2'])
        for z, (r1, r2) in zip(report.points, report.point_residuals):
            writer.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(r1)), repr(float(r2))])
