#!/usr/bin/env python3
"""
Bieguny na brzegu: rząd bieguna h w punkcie skoku, rozwinięcie wiodące
w = 2e^{iφ1} cos(kφ - φ0) / r^k, rodziny ze zlewającymi się skokami oraz test |g'/h'| -> 1.
"""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Any

import numpy as np
from scipy.optimize import least_squares, minimize_scalar
from scipy.stats import linregress

from stepmap_boundary import StepFunction, TWO_PI
from stepmap_config import VERSION, worker_count
from stepmap_errors import DegenerateNormalization, EvalFailure, PoorFit
from stepmap_harmonic import HarmonicStepMap, decompose
from stepmap_pipeline import normalize
from stepmap_univalence import UnivalenceCertificate, Verdict, certify

logger = logging.getLogger(__name__)

POOR_FIT_RATIO = 0.2
K_BOUNDS = (0.5, 16.0)


def default_radii() -> np.ndarray:
    """16 promieni geometrycznie od 1e-2 do 1e-5"""
    return np.geomspace(1e-2, 1e-5, 16)


# ========== Rząd bieguna ==========

def _order_slope(hprime: Callable, zeta: complex, radii: Sequence[float]) -> float:
    radii = np.asarray(radii if radii is not None else default_radii(), dtype=float)
    if radii.size < 2:
        raise ValueError("Potrzebne co najmniej dwa promienie")
    if np.any(radii < 1e-6):
        raise ValueError(f"Promienie muszą być >= 1e-6 (min = {radii.min():.3g})")
    z = complex(zeta) * (1.0 - radii)
    with np.errstate(all='ignore'):
        values = np.abs(np.asarray(hprime(z), dtype=complex))
    if not np.all(np.isfinite(values)) or np.any(values == 0):
        raise EvalFailure(f"Nieskończone lub zerowe wartości h' na promieniu do {zeta}",
                          details={'zeta': [complex(zeta).real, complex(zeta).imag]})
    return float(linregress(np.log(radii), np.log(values)).slope)


def pole_order_fit(hprime: Callable, zeta: complex, radii: Sequence[float] = None) -> float:
    """
    Rząd bieguna h w ζ: nachylenie s log|h'(ζ(1 - r))| względem log r, rząd = -s - 1

    Raises:
        EvalFailure: wartości nieskończone / zerowe
    """
    return -_order_slope(hprime, zeta, radii) - 1.0


# ========== Rozwinięcie wiodące ==========

@dataclass(frozen=True)
class ExpansionFit:
    """w ≈ 2·amplitude·e^{iφ1} cos(kφ - φ0) / r^k, φ - kąt z - ζ (gałąź ciągła wokół normalnej wewnętrznej)"""
    k_estimate: float
    phi0: float
    phi1: float
    amplitude: float
    fit_residual: float
    radius: float
    poor_fit: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k_estimate': self.k_estimate,
            'phi0': self.phi0,
            'phi1': self.phi1,
            'amplitude': self.amplitude,
            'fit_residual': self.fit_residual,
            'radius': self.radius,
            'poor_fit': self.poor_fit,
        }


def _inward_angles(zeta: complex, count: int, margin: float) -> np.ndarray:
    """Kąty φ łuku |z - ζ| = r wewnątrz koła: normalna wewnętrzna ± (π/2 - margin)"""
    inward = np.angle(-complex(zeta))
    return inward + np.linspace(-np.pi / 2 + margin, np.pi / 2 - margin, count)


def _ring_values(f: Callable, zeta: complex, r: float, phi: np.ndarray) -> np.ndarray:
    z = complex(zeta) + r * np.exp(1j * phi)
    with np.errstate(all='ignore'):
        values = np.asarray(f(z), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise EvalFailure(f"Nieskończone wartości f na okręgu r={r} wokół {zeta}")
    return values


def _linear_fit(k: float, phi: np.ndarray, signal: np.ndarray) -> Tuple[float, np.ndarray]:
    design = np.column_stack([np.cos(k * phi), np.sin(k * phi)])
    coeffs, *_ = np.linalg.lstsq(design, signal, rcond=None)
    residual = signal - design @ coeffs
    return float(residual @ residual), coeffs


def _wrap(angle: float) -> float:
    """Redukcja do (-π, π]"""
    wrapped = float(np.mod(angle + np.pi, TWO_PI) - np.pi)
    return np.pi if wrapped == -np.pi else wrapped


def expansion_fit(f: Callable, zeta: complex, ring: Tuple[float, int] = (1e-3, 256),
                  strict: bool = False) -> ExpansionFit:
    """
    Dopasowanie k, φ0, φ1 i amplitudy do oscylacji f na łuku |z - ζ| = r

    Ziarno k: nachylenie max|f| na okręgach r/2, r, 2r oraz dominująca częstość FFT;
    przegląd k z liniowym LS po (cos kφ, sin kφ), minimize_scalar, na końcu least_squares
    po wszystkich parametrach.

    Raises:
        PoorFit: residuum > 20% amplitudy i strict=True (inaczej tylko flaga poor_fit)
    """
    r, count = float(ring[0]), int(ring[1])
    phi = _inward_angles(zeta, count, margin=0.05 + r)
    w = _ring_values(f, zeta, r, phi)

    spread = float(np.max(np.abs(w - w.mean())))
    if spread <= 1e-12 * max(1.0, float(np.max(np.abs(w)))):
        fit = ExpansionFit(k_estimate=0.0, phi0=0.0, phi1=0.0, amplitude=0.0, fit_residual=1.0,
                           radius=r, poor_fit=True)
        logger.warning(f"expansion_fit: funkcja stała na okręgu wokół {zeta} - zerowa amplituda")
        if strict:
            raise PoorFit("Zerowa amplituda - brak bieguna", fit=fit)
        return fit

    # e^{iφ1} z fazy Σw² (sygnał rzeczywisty s: w = e^{iφ1}·s)
    phi1 = float(np.angle(np.sum(w ** 2))) / 2.0
    signal = np.real(w * np.exp(-1j * phi1))

    seeds = []
    maxima = [np.max(np.abs(_ring_values(f, zeta, rr, phi))) for rr in (r / 2.0, r, 2.0 * r)]
    seeds.append(-linregress(np.log([r / 2.0, r, 2.0 * r]), np.log(maxima)).slope)
    spectrum = np.abs(np.fft.rfft(signal - signal.mean()))
    arc = phi[-1] - phi[0]
    seeds.append(TWO_PI * int(np.argmax(spectrum[1:]) + 1) / arc)

    grid = np.arange(K_BOUNDS[0], K_BOUNDS[1] + 1e-9, 0.05)
    for seed in seeds:
        if np.isfinite(seed):
            grid = np.union1d(grid, np.clip(seed + np.arange(-1.0, 1.0 + 1e-9, 0.01), *K_BOUNDS))
    scores = [_linear_fit(k, phi, signal)[0] for k in grid]
    k_best = float(grid[int(np.argmin(scores))])
    refined = minimize_scalar(lambda k: _linear_fit(k, phi, signal)[0], method='bounded',
                              bounds=(max(K_BOUNDS[0], k_best - 0.05), min(K_BOUNDS[1], k_best + 0.05)))
    k_best = float(refined.x)
    _, (a, b) = _linear_fit(k_best, phi, signal)
    scale = float(np.hypot(a, b))
    phi0 = float(np.arctan2(b, a))

    def residuals(params: np.ndarray) -> np.ndarray:
        k, p0, p1, c = params
        diff = w - c * np.exp(1j * p1) * np.cos(k * phi - p0)
        return np.concatenate([diff.real, diff.imag]) / max(scale, 1e-300)

    polished = least_squares(residuals, x0=[k_best, phi0, phi1, scale],
                             bounds=([K_BOUNDS[0], -np.inf, -np.inf, 0.0], [K_BOUNDS[1], np.inf, np.inf, np.inf]),
                             x_scale='jac')
    k_best, phi0, phi1, scale = (float(v) for v in polished.x)

    # postać kanoniczna: φ1 ∈ (-π/2, π/2], C > 0, φ0 ∈ (-π, π]
    phi1 = _wrap(phi1)
    if phi1 > np.pi / 2:
        phi1 -= np.pi
        phi0 += np.pi
    elif phi1 <= -np.pi / 2:
        phi1 += np.pi
        phi0 += np.pi
    phi0 = _wrap(phi0)

    model = scale * np.exp(1j * phi1) * np.cos(k_best * phi - phi0)
    relative = float(np.sqrt(np.mean(np.abs(w - model) ** 2)) / scale) if scale > 0 else 1.0
    fit = ExpansionFit(k_estimate=k_best, phi0=phi0, phi1=phi1, amplitude=scale * r ** k_best / 2.0,
                       fit_residual=relative, radius=r, poor_fit=relative > POOR_FIT_RATIO)
    logger.debug(f"expansion_fit ζ={zeta}: k={k_best:.4f}, φ0={phi0:.4f}, φ1={phi1:.4f}, res={relative:.2e}")
    if fit.poor_fit:
        logger.warning(f"expansion_fit: residuum {relative:.1%} amplitudy > 20%")
        if strict:
            raise PoorFit(f"Residuum dopasowania {relative:.1%} > 20% amplitudy", fit=fit)
    return fit


def leading_term_map(k: float, phi0: float, phi1: float, zeta: complex = 1.0) -> Callable:
    """
    e^{iα}(z - ζ)^{-k} + e^{iβ}conj(z - ζ)^{-k}, α = φ1 + φ0, β = φ1 - φ0

    Potęgi liczone na gałęzi ciągłej wokół normalnej wewnętrznej w ζ, więc k nie musi być
    całkowite ani parzyste.
    """
    zeta = complex(zeta)
    inward = np.angle(-zeta)

    def evaluate(z):
        d = np.asarray(z, dtype=complex) - zeta
        r = np.abs(d)
        phi = inward + np.angle(d * np.exp(-1j * inward))
        out = 2.0 * np.exp(1j * phi1) * np.cos(k * phi - phi0) / r ** k
        return complex(out) if np.ndim(out) == 0 else out

    return evaluate


# ========== Rodziny ze zlewającymi się skokami ==========

@dataclass(frozen=True)
class FamilyMember:
    delta: float
    map: HarmonicStepMap
    certificate: Optional[UnivalenceCertificate]
    h_orders: Dict[str, float]
    hprime_orders: Dict[str, float]
    flag: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'delta': self.delta,
            'verdict': self.certificate.verdict.value if self.certificate else None,
            'h_orders': self.h_orders,
            'hprime_orders': self.hprime_orders,
            'flag': self.flag,
            'step_function': self.map.source.to_dict(),
        }


@dataclass(frozen=True)
class CoalescingFamily:
    """Rodzina map z odstępem δ między dwoma sąsiednimi skokami"""
    base: StepFunction
    merge_pair: Tuple[int, int]
    members: Tuple[FamilyMember, ...]
    truncated: bool = False
    flags: Tuple[str, ...] = ()

    @property
    def deltas(self) -> Tuple[float, ...]:
        return tuple(m.delta for m in self.members)

    def max_h_order(self) -> float:
        return max((v for m in self.members for v in m.h_orders.values()), default=float('nan'))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'version': VERSION,
            'base': self.base.to_dict(),
            'merge_pair': list(self.merge_pair),
            'truncated': self.truncated,
            'flags': list(self.flags),
            'members': [m.to_dict() for m in self.members],
        }


def _merged_angles(base: StepFunction, i: int, j: int, delta: float) -> np.ndarray:
    angles = base.jump_angles.copy()
    gap = float(np.mod(angles[j] - angles[i], TWO_PI))
    middle = angles[i] + gap / 2.0
    n = base.step_count
    before = float(np.mod(angles[i] - angles[(i - 1) % n], TWO_PI))
    after = float(np.mod(angles[(j + 1) % n] - angles[j], TWO_PI))
    shift = (gap - delta) / 2.0
    if delta <= 0 or shift <= -after or shift <= -before:
        raise ValueError(f"δ = {delta} zmienia kolejność skoków (odstęp {gap:.4g})")
    angles[i] = middle - delta / 2.0
    angles[j] = middle + delta / 2.0
    return angles


def _member(base: StepFunction, pair: Tuple[int, int], delta: float, radii: np.ndarray) -> FamilyMember:
    i, j = pair
    angles = _merged_angles(base, i, j, delta)
    sf = base.with_jump_angles(angles)
    try:
        member_map = normalize(decompose(sf))
    except DegenerateNormalization as e:
        return FamilyMember(delta=delta, map=decompose(sf), certificate=None, h_orders={}, hprime_orders={},
                            flag=f"degenerate_normalization: {e}")
    certificate = certify(member_map)
    locations = {
        'jump_i': np.exp(1j * angles[i]),
        'jump_j': np.exp(1j * angles[j]),
        'midpoint': np.exp(1j * (angles[i] + delta / 2.0)),
    }
    slopes = {name: _order_slope(member_map.hprime, zeta, radii) for name, zeta in locations.items()}
    return FamilyMember(delta=delta, map=member_map, certificate=certificate,
                        h_orders={name: -s - 1.0 for name, s in slopes.items()},
                        hprime_orders={name: -s for name, s in slopes.items()})


def coalescing_family(base: StepFunction, merge_pair: Tuple[int, int], delta_schedule: Sequence[float],
                      radii: Sequence[float] = None) -> CoalescingFamily:
    """
    Przesuwa dwa sąsiednie skoki symetrycznie wokół ich środka na odstęp δ

    Każdy element: normalizacja, certyfikat, rzędy biegunów w obu skokach i w środku.
    Pierwszy element bez certyfikatu univalent obcina rodzinę (flaga left_class).
    """
    n = base.step_count
    i, j = (int(merge_pair[0]) % n, int(merge_pair[1]) % n)
    if j != (i + 1) % n:
        raise ValueError(f"Skoki {merge_pair} nie są sąsiednie (n = {n})")
    deltas = [float(d) for d in delta_schedule]
    if any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError(f"Harmonogram δ musi być dodatni i malejący: {deltas}")
    radii = np.asarray(radii if radii is not None else default_radii(), dtype=float)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        members = list(pool.map(lambda d: _member(base, (i, j), d, radii), deltas))

    kept: List[FamilyMember] = []
    flags: List[str] = []
    for member in members:
        if member.flag is not None or member.certificate.verdict != Verdict.UNIVALENT:
            flags.append('left_class')
            reason = member.flag or member.certificate.verdict.value
            logger.warning(f"Rodzina obcięta przy δ={member.delta}: {reason}")
            break
        kept.append(member)
    truncated = len(kept) < len(members)
    logger.info(f"coalescing_family {merge_pair}: {len(kept)}/{len(members)} elementów, "
                f"max rząd h = {max((v for m in kept for v in m.h_orders.values()), default=float('nan')):.3f}")
    return CoalescingFamily(base=base, merge_pair=(i, j), members=tuple(kept), truncated=truncated,
                            flags=tuple(flags))


def export_family_csv(family: CoalescingFamily, path: str) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['delta', 'member', 'verdict', 'h_order_jump_i', 'h_order_jump_j', 'h_order_midpoint'])
        for index, member in enumerate(family.members):
            writer.writerow([repr(member.delta), index, member.certificate.verdict.value,
                             repr(member.h_orders['jump_i']), repr(member.h_orders['jump_j']),
                             repr(member.h_orders['midpoint'])])


def export_family_json(family: CoalescingFamily, path: str, extra: Dict[str, Any] = None) -> None:
    payload = dict(extra or {})
    payload.update(family.to_dict())
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)


# ========== |g'/h'| przy brzegu ==========

def boundary_ratio_probe(map, zeta: complex, radii: Sequence[float] = None) -> List[float]:
    """
    |g'/h'| wzdłuż promienia ζ(1 - r); dla dylatacji będących iloczynami Blaschkego -> 1

    Raises:
        EvalFailure: h' znika lub wartości nieskończone
    """
    radii = np.asarray(radii if radii is not None else default_radii(), dtype=float)
    z = complex(zeta) * (1.0 - radii)
    with np.errstate(all='ignore'):
        hp = np.asarray(map.hprime(z), dtype=complex)
        gp = np.asarray(map.gprime(z), dtype=complex)
    if np.any(hp == 0) or not np.all(np.isfinite(hp)) or not np.all(np.isfinite(gp)):
        raise EvalFailure(f"h' znika lub jest nieskończone na promieniu do {zeta}")
    return [float(v) for v in np.abs(gp / hp)]
