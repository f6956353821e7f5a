#!/usr/bin/env python3
"""
Certyfikacja jednolistności odwzorowań harmonicznych
Indeksy (winding numbers) na okręgach współśrodkowych, oszacowanie dylatacji,
znak jakobianu i poszukiwanie świadków kolizji f(p) = f(q).
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Any

import numpy as np

from stepmap_boundary import StepFunction
from stepmap_config import worker_count
from stepmap_errors import OnCurve
from stepmap_harmonic import HarmonicStepMap, analytic_derivatives, dilatation

logger = logging.getLogger(__name__)

ON_CURVE_TOL = 1e-9
MAX_INCREMENT = np.pi / 2
WITNESS_TOL = 1e-10
WITNESS_SEPARATION = 1e-6
DAMPING_THRESHOLD = 1e-8
DAMPING = 1e-6
BUCKET_CAP = 48
ZERO_MARGIN = 1e-8


class Verdict(Enum):
    """Wynik certyfikacji"""
    UNIVALENT = "univalent"
    NOT_UNIVALENT = "not_univalent"
    INCONCLUSIVE = "inconclusive"

    @property
    def exit_code(self) -> int:
        return {'univalent': 0, 'inconclusive': 1, 'not_univalent': 2}[self.value]


@dataclass(frozen=True)
class WindingQuery:
    """Zapytanie o indeks: obraz okręgu |z| = radius wokół punktu center"""
    center: complex
    radius: float
    samples: int = 64

    def __post_init__(self):
        if self.samples < 64:
            raise ValueError(f"WindingQuery wymaga samples >= 64 (podano {self.samples})")


@dataclass(frozen=True)
class CertifyConfig:
    radii: Tuple[float, ...] = (0.5, 0.9, 0.99)
    probe_grid: int = 11
    samples: int = 64
    max_refinements: int = 24
    orientation_grid: Tuple[int, int] = (32, 128)
    collision_grid: int = 65
    collision_radius: float = 0.98
    max_newton_attempts: int = 400

    def to_dict(self) -> Dict[str, Any]:
        return {
            'radii': list(self.radii),
            'probe_grid': self.probe_grid,
            'samples': self.samples,
            'max_refinements': self.max_refinements,
            'orientation_grid': list(self.orientation_grid),
            'collision_grid': self.collision_grid,
            'collision_radius': self.collision_radius,
            'max_newton_attempts': self.max_newton_attempts,
        }


@dataclass(frozen=True)
class UnivalenceCertificate:
    """Materiał dowodowy stojący za werdyktem"""
    verdict: Verdict
    radii_tested: Tuple[float, ...]
    winding_numbers: Tuple[Tuple[int, ...], ...]
    dilatation_sup: float
    orientation: str
    witnesses: Optional[Tuple[complex, complex]] = None
    flags: Tuple[str, ...] = ()
    skipped_probes: int = 0

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code

    def to_dict(self) -> Dict[str, Any]:
        witnesses = None
        if self.witnesses is not None:
            witnesses = [[w.real, w.imag] for w in self.witnesses]
        return {
            'verdict': self.verdict.value,
            'radii_tested': list(self.radii_tested),
            'winding_numbers': [list(row) for row in self.winding_numbers],
            'dilatation_sup': self.dilatation_sup,
            'orientation': self.orientation,
            'witnesses': witnesses,
            'flags': list(self.flags),
            'skipped_probes': self.skipped_probes,
        }


# ========== Indeks krzywej ==========

def winding_number(map: Callable, radius: float, around: complex,
                   samples: int = 64, max_refinements: int = 24) -> int:
    """
    Indeks obrazu okręgu |z| = radius względem punktu `around`

    Suma przyrostów argumentu (gałąź główna); odcinki z przyrostem >= π/2 są dzielone
    na pół aż do skutku.

    Raises:
        OnCurve: krzywa przechodzi w odległości < 1e-9 od punktu (lub brak zbieżności podziału)
    """
    query = WindingQuery(center=complex(around), radius=radius, samples=samples)
    t = 2.0 * np.pi * np.arange(query.samples) / query.samples
    values = np.asarray(map(radius * np.exp(1j * t)), dtype=complex) - query.center

    for round_no in range(max_refinements + 1):
        if np.min(np.abs(values)) < ON_CURVE_TOL:
            raise OnCurve(f"Krzywa przechodzi przez punkt {query.center} (r = {radius})",
                          details={'radius': radius, 'around': [query.center.real, query.center.imag]})
        closed = np.append(values, values[0])
        increments = np.angle(closed[1:] / closed[:-1])
        bad = np.abs(increments) >= MAX_INCREMENT
        if not np.any(bad):
            total = increments.sum() / (2.0 * np.pi)
            logger.debug(f"winding r={radius}: {total:.6f} po {round_no} podziałach, {len(t)} próbek")
            return int(np.rint(total))
        t_next = np.append(t[1:], 2.0 * np.pi)
        midpoints = 0.5 * (t[bad] + t_next[bad])
        new_values = np.asarray(map(radius * np.exp(1j * midpoints)), dtype=complex) - query.center
        positions = np.nonzero(bad)[0] + 1
        t = np.insert(t, positions, midpoints)
        values = np.insert(values, positions, new_values)

    raise OnCurve(f"Podział nie zbiegł po {max_refinements} rundach (r = {radius})",
                  details={'radius': radius, 'samples': len(t)})


# ========== Orientacja i kolizje ==========

def orientation_check(map: HarmonicStepMap, radius: float, grid: Tuple[int, int] = (32, 128)) -> str:
    """Znak |h'|² - |g'|² na siatce biegunowej: preserving / reversing / mixed"""
    r = np.linspace(0.0, radius, grid[0])
    theta = 2.0 * np.pi * np.arange(grid[1]) / grid[1]
    z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    jac = map.jacobian(z)
    if np.all(jac > 0):
        return 'preserving'
    if np.all(jac < 0):
        return 'reversing'
    return 'mixed'


def sense_defect(sf: StepFunction, margin: float = ZERO_MARGIN) -> float:
    """
    Liczba zer h' w |z| < 1 - margin plus ich głębokość Σ(1 - |z_k|); 0 dla map zachowujących orientację

    Na okręgu |g'| = |h'|, więc dylatacja g'/h' jest ograniczona przez 1 w kole dokładnie wtedy,
    gdy h' nie ma tam zer.
    """
    zeros = analytic_derivatives(sf)[0].zeros()
    depth = 1.0 - np.abs(zeros)
    inside = depth > margin
    return float(np.count_nonzero(inside) + np.sum(depth[inside]))


def _newton_preimage(map: HarmonicStepMap, start: complex, target: complex,
                     max_iter: int = 60) -> Optional[complex]:
    """
    Rozwiązuje f(p) = target metodą Newtona (df = h'dz + conj(g')conj(dz))

    Przy prawie osobliwym jakobianie (fałd) krok tłumiony: (JᵀJ + μI)⁻¹Jᵀe.
    """
    p = complex(start)
    for _ in range(max_iter):
        error = target - map(p)
        if abs(error) <= 1e-13 * max(1.0, abs(target)):
            return p
        a = complex(map.hprime(p))
        b = np.conj(complex(map.gprime(p)))
        scale = abs(a) ** 2 + abs(b) ** 2
        if scale < 1e-300:
            return None
        det = abs(a) ** 2 - abs(b) ** 2
        if abs(det) > DAMPING_THRESHOLD * scale:
            step = (np.conj(a) * error - b * np.conj(error)) / det
        else:
            # f(p + dx + i dy) ≈ f(p) + (a + b) dx + i(a - b) dy
            c1, c2 = a + b, 1j * (a - b)
            jac = np.array([[c1.real, c2.real], [c1.imag, c2.imag]])
            rhs = np.array([error.real, error.imag])
            dx, dy = np.linalg.solve(jac.T @ jac + DAMPING * scale * np.eye(2), jac.T @ rhs)
            step = complex(dx, dy)
        if abs(step) > 0.1:
            step *= 0.1 / abs(step)
        p = p + step
        if abs(p) >= 1.0 - 1e-9:
            return None
    return p if abs(target - map(p)) <= WITNESS_TOL else None


def _grouped(keys: Tuple[np.ndarray, np.ndarray]) -> List[np.ndarray]:
    """Indeksy punktów o tym samym kluczu komórki (grupy co najmniej dwuelementowe)"""
    buckets: Dict[Tuple[int, int], List[int]] = {}
    for idx, key in enumerate(zip(keys[0].tolist(), keys[1].tolist())):
        buckets.setdefault(key, []).append(idx)
    return [np.array(members) for members in buckets.values() if len(members) > 1]


def _exact_collision(flat_z: np.ndarray, flat_w: np.ndarray) -> Optional[Tuple[complex, complex]]:
    """Dwa punkty siatki z wartościami równymi do WITNESS_TOL (najbardziej odległe w dziedzinie)"""
    cell = WITNESS_TOL / 2.0
    keys = np.round(flat_w.real / cell).astype(np.int64), np.round(flat_w.imag / cell).astype(np.int64)
    best = None
    for members in _grouped(keys):
        if len(members) > BUCKET_CAP:
            members = members[np.linspace(0, len(members) - 1, BUCKET_CAP).astype(int)]
        z = flat_z[members]
        separation = np.abs(z[:, None] - z[None, :])
        i, j = np.unravel_index(np.argmax(separation), separation.shape)
        if separation[i, j] >= WITNESS_SEPARATION and (best is None or separation[i, j] > abs(best[0] - best[1])):
            best = (complex(z[i]), complex(z[j]))
    return best


def _bucket_pairs(flat_z: np.ndarray, flat_w: np.ndarray, cells: int,
                  min_separation: float) -> List[Tuple[complex, complex]]:
    """Pary punktów z tej samej komórki obrazu, od najbardziej odległych w dziedzinie"""
    extent = max(np.ptp(flat_w.real), np.ptp(flat_w.imag), 1e-300)
    cell = extent / cells
    keys = np.floor(flat_w.real / cell).astype(np.int64), np.floor(flat_w.imag / cell).astype(np.int64)
    ranked: List[Tuple[float, int, int]] = []
    for members in _grouped(keys):
        if len(members) > BUCKET_CAP:
            members = members[np.linspace(0, len(members) - 1, BUCKET_CAP).astype(int)]
        z = flat_z[members]
        separation = np.abs(z[:, None] - z[None, :])
        for i, j in zip(*np.nonzero(np.triu(separation > min_separation))):
            ranked.append((-float(separation[i, j]), int(members[i]), int(members[j])))
    ranked.sort()
    return [(flat_z[i], flat_z[j]) for _, i, j in ranked]


def find_collision(map: HarmonicStepMap, grid: int = 65, radius: float = 0.98,
                   max_attempts: int = 400) -> Optional[Tuple[complex, complex]]:
    """
    Szuka pary p != q z f(p) = f(q)

    1. punkty siatki o wartościach równych do 1e-10 (sprawdzane wprost),
    2. pary z tej samej komórki obrazu, od najdalszych w dziedzinie, jako starty metody Newtona,
    3. sąsiedzi na siatce po przeciwnych stronach zmiany znaku jakobianu (fałd).
    Siatka nieparzysta zawiera osie.
    """
    axis = np.linspace(-radius, radius, grid)
    zz = axis[None, :] + 1j * axis[:, None]
    inside = np.abs(zz) < radius
    values = np.full(zz.shape, np.nan + 0j)
    values[inside] = map(zz[inside])
    jac = np.full(zz.shape, np.nan)
    jac[inside] = map.jacobian(zz[inside])
    spacing = axis[1] - axis[0]
    flat_z, flat_w = zz[inside], values[inside]

    exact = _exact_collision(flat_z, flat_w)
    if exact is not None and abs(complex(map(exact[0])) - complex(map(exact[1]))) <= WITNESS_TOL:
        logger.info(f"Świadek kolizji wprost z siatki: p={exact[0]:.6g}, q={exact[1]:.6g}")
        return exact

    candidates = _bucket_pairs(flat_z, flat_w, grid, 3.0 * spacing)
    for di, dj in ((0, 1), (1, 0)):
        a_sign = np.sign(jac[:zz.shape[0] - di, :zz.shape[1] - dj])
        b_sign = np.sign(jac[di:, dj:])
        fold = (a_sign * b_sign) < 0
        for i, j in zip(*np.nonzero(fold)):
            q = zz[i, j]
            p0 = zz[i + di, j + dj]
            candidates.append((p0, q))
            candidates.append((q, p0))

    for attempt, (start, q) in enumerate(candidates[:max_attempts]):
        target = complex(map(q))
        p = _newton_preimage(map, start, target)
        if p is None:
            continue
        if abs(p - q) >= WITNESS_SEPARATION and abs(map(p) - target) <= WITNESS_TOL:
            logger.info(f"Świadek kolizji po {attempt + 1} próbach: p={p:.6g}, q={q:.6g}")
            return complex(p), complex(q)
    return None


# ========== Certyfikat ==========

def _probe_points(radius: float, grid: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, grid)
    square = (axis[None, :] + 1j * axis[:, None]).ravel()
    return 0.9 * radius * square[np.abs(square) <= 1.0]


def _windings_for_radius(map: HarmonicStepMap, radius: float, config: CertifyConfig) -> Tuple[List[int], int]:
    probes = map(_probe_points(radius, config.probe_grid))
    windings: List[int] = []
    skipped = 0
    for w in np.atleast_1d(probes):
        try:
            windings.append(winding_number(map, radius, complex(w), config.samples, config.max_refinements))
        except OnCurve as e:
            skipped += 1
            logger.warning(f"Pominięto punkt próbny: {e}")
    return windings, skipped


def certify(map: HarmonicStepMap, config: Optional[CertifyConfig] = None) -> UnivalenceCertificate:
    """
    Zbiera dowody jednolistności mapy schodkowej

    univalent: wszystkie indeksy = 1, sup|a| < 1, orientacja zachowana;
    not_univalent: znaleziony świadek kolizji; inconclusive: pozostałe przypadki.
    """
    config = config or CertifyConfig()
    radii = tuple(float(r) for r in config.radii)

    if map.hprime.is_zero:
        logger.info("Mapa stała - brak wnętrza obrazu, werdykt inconclusive")
        return UnivalenceCertificate(verdict=Verdict.INCONCLUSIVE, radii_tested=radii,
                                     winding_numbers=tuple(() for _ in radii), dilatation_sup=0.0,
                                     orientation='mixed', flags=('degenerate',))

    dil = dilatation(map)
    orientation = orientation_check(map, max(radii), config.orientation_grid)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        per_radius = list(pool.map(lambda r: _windings_for_radius(map, r, config), radii))

    windings = tuple(tuple(w) for w, _ in per_radius)
    skipped = sum(s for _, s in per_radius)
    all_one = skipped == 0 and all(w == 1 for row in windings for w in row)

    flags: List[str] = []
    if skipped:
        flags.append('probes_skipped')
    if dil.exceeds_one:
        flags.append('dilatation_sup_ge_1')

    if all_one and not dil.exceeds_one and orientation == 'preserving':
        verdict, witness = Verdict.UNIVALENT, None
    else:
        witness = find_collision(map, config.collision_grid, config.collision_radius,
                                 config.max_newton_attempts)
        verdict = Verdict.NOT_UNIVALENT if witness is not None else Verdict.INCONCLUSIVE

    logger.info(f"Certyfikat: {verdict.value} (sup|a|={dil.sup_bound_estimate:.6f}, orientacja={orientation})")
    return UnivalenceCertificate(verdict=verdict, radii_tested=radii, winding_numbers=windings,
                                 dilatation_sup=dil.sup_bound_estimate, orientation=orientation,
                                 witnesses=witness, flags=tuple(flags), skipped_probes=skipped)


def export_certificate(certificate: UnivalenceCertificate, path: str, extra: Dict[str, Any] = None) -> None:
    payload = dict(extra or {})
    payload['certificate'] = certificate.to_dict()
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)
