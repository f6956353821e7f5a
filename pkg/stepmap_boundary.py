#!/usr/bin/env python3
"""
Funkcje schodkowe na okręgu jednostkowym i wielokąty Jordana
Postać kanoniczna funkcji schodkowej: kąty w [0, 2π) rosnąco, sąsiednie równe wartości scalone.
"""

import json
import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Any

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from stepmap_errors import EmptyInput, InvalidPartition, NotAPolygon, NotSimple, SpecFileError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
SEGMENT_TOL = 1e-12


def _reduce_angle(theta: float) -> float:
    reduced = math.fmod(float(theta), TWO_PI)
    if reduced < 0.0:
        reduced += TWO_PI
    # fmod + dodawanie potrafi dać dokładnie 2π
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


@dataclass(frozen=True)
class StepFunction:
    """
    Funkcja schodkowa: wartość value_j na łuku od theta_j do theta_{j+1} (cyklicznie)

    raw_count i degeneracy_note nie biorą udziału w porównaniu - dwie funkcje są równe,
    gdy mają te same łuki.
    """
    arcs: Tuple[Tuple[float, complex], ...]
    raw_count: int = field(default=0, compare=False)
    degeneracy_note: Optional[str] = field(default=None, compare=False)

    @cached_property
    def angles(self) -> np.ndarray:
        return np.array([theta for theta, _ in self.arcs], dtype=float)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([value for _, value in self.arcs], dtype=complex)

    @property
    def step_count(self) -> int:
        """Liczba łuków po scaleniu"""
        return len(self.arcs)

    @property
    def is_degenerate(self) -> bool:
        return self.degeneracy_note is not None

    @cached_property
    def arc_lengths(self) -> np.ndarray:
        ends = np.append(self.angles[1:], self.angles[0] + TWO_PI)
        return ends - self.angles

    @cached_property
    def jumps(self) -> np.ndarray:
        """Δ_j = value_j - value_{j-1} w punkcie theta_j; pusta tablica dla funkcji stałej"""
        if self.step_count == 1:
            return np.zeros(0, dtype=complex)
        return self.values - np.roll(self.values, 1)

    @cached_property
    def jump_angles(self) -> np.ndarray:
        if self.step_count == 1:
            return np.zeros(0, dtype=float)
        return self.angles.copy()

    @cached_property
    def zetas(self) -> np.ndarray:
        """Punkty skoku ζ_j = e^{i theta_j}"""
        return np.exp(1j * self.jump_angles)

    def mean(self) -> complex:
        """Średnia ważona długością łuków = f(0)"""
        return complex(np.sum(self.values * self.arc_lengths) / TWO_PI)

    def value_at(self, theta) -> np.ndarray:
        """Wartość brzegowa w kątach theta (wektorowo)"""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        index = np.searchsorted(self.angles, theta, side='right') - 1
        # przed pierwszym kątem jesteśmy jeszcze na ostatnim łuku
        index = np.where(index < 0, self.step_count - 1, index)
        return self.values[index]

    def conjugate(self) -> 'StepFunction':
        return self.map_values(np.conj)

    def map_values(self, fn: Callable[[complex], complex]) -> 'StepFunction':
        """Przekształca wartości łuków, zachowując podział"""
        return validate_step_function([(theta, complex(fn(value))) for theta, value in self.arcs])

    def rotated(self, psi: float) -> 'StepFunction':
        """Obrót dziedziny: φ(θ - ψ)"""
        return validate_step_function([(theta + psi, value) for theta, value in self.arcs])

    def with_jump_angles(self, angles: Sequence[float]) -> 'StepFunction':
        """Te same wartości (w tej samej kolejności), nowe kąty początkowe łuków"""
        if len(angles) != self.step_count:
            raise InvalidPartition(
                f"Oczekiwano {self.step_count} kątów, podano {len(angles)}",
                details={'expected': self.step_count, 'given': len(angles)})
        return validate_step_function(list(zip(angles, self.values.tolist())))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'arcs': [{'theta': float(theta), 'value': [value.real, value.imag]}
                     for theta, value in self.arcs]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'StepFunction':
        try:
            raw = [(float(item['theta']), complex(float(item['value'][0]), float(item['value'][1])))
                   for item in data['arcs']]
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise SpecFileError(f"Niepoprawny format specyfikacji mapy: {e}")
        return validate_step_function(raw)


@dataclass(frozen=True)
class VariationReport:
    """Wariacja całkowita funkcji schodkowej"""
    total_variation: float
    jump_magnitudes: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {'total_variation': self.total_variation, 'jump_magnitudes': list(self.jump_magnitudes)}


@dataclass(frozen=True)
class JordanPolygon:
    """Wielokąt Jordana; wierzchołki mogą leżeć we wnętrzu boków (współliniowe)"""
    vertices: Tuple[complex, ...]
    orientation: str
    source_angles: Optional[Tuple[float, ...]] = field(default=None, compare=False)

    @cached_property
    def points(self) -> np.ndarray:
        return np.array(self.vertices, dtype=complex)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @cached_property
    def signed_area(self) -> float:
        return _signed_area(self.points)

    @classmethod
    def from_vertices(cls, vertices: Sequence[complex],
                      source_angles: Optional[Sequence[float]] = None,
                      tol: float = SEGMENT_TOL) -> 'JordanPolygon':
        """
        Tworzy wielokąt i sprawdza, że jest prosty

        Raises:
            NotAPolygon: mniej niż 3 różne wierzchołki lub powtórzony wierzchołek sąsiedni
            NotSimple: krawędzie się przecinają
        """
        points = np.asarray(vertices, dtype=complex)
        if len(set(points.tolist())) < 3:
            raise NotAPolygon(f"Wielokąt wymaga co najmniej 3 różnych wierzchołków (jest {len(set(points.tolist()))})",
                              details={'distinct_vertices': len(set(points.tolist()))})
        if np.any(points == np.roll(points, -1)):
            raise NotAPolygon("Dwa kolejne wierzchołki są równe")

        crossing = _first_crossing(points, tol)
        if crossing is not None:
            raise NotSimple(f"Krawędzie {crossing[0]} i {crossing[1]} przecinają się",
                            details={'edges': list(crossing)})

        area = _signed_area(points)
        orientation = 'positive' if area > 0 else 'negative'
        angles = tuple(float(a) for a in source_angles) if source_angles is not None else None
        return cls(vertices=tuple(complex(p) for p in points), orientation=orientation,
                   source_angles=angles)

    def edge_samples(self, per_edge: int = 32) -> np.ndarray:
        """Punkty rozłożone równomiernie na brzegu (bez powtórzeń wierzchołków)"""
        a = self.points
        b = np.roll(a, -1)
        s = np.arange(per_edge) / per_edge
        return (a[:, None] + (b - a)[:, None] * s[None, :]).ravel()

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """Punkt wewnątrz wielokąta lub w odległości <= tol od brzegu"""
        p = np.atleast_1d(np.asarray(points, dtype=complex))
        a = self.points[None, :] - p[:, None]
        b = np.roll(self.points, -1)[None, :] - p[:, None]
        on_edge = _segment_distance(p, self.points, np.roll(self.points, -1)).min(axis=1) <= tol
        with np.errstate(divide='ignore', invalid='ignore'):
            turning = np.angle(b / a).sum(axis=1) / TWO_PI
        inside = np.abs(np.nan_to_num(turning)) > 0.5
        return on_edge | inside

    def to_dict(self) -> Dict[str, Any]:
        return {
            'vertices': [[v.real, v.imag] for v in self.vertices],
            'orientation': self.orientation,
            'signed_area': self.signed_area,
            'source_angles': list(self.source_angles) if self.source_angles is not None else None,
        }


# ========== Geometria pomocnicza ==========

def _cross(u, v):
    return (np.conj(u) * v).imag


def _signed_area(points: np.ndarray) -> float:
    return float(0.5 * np.sum(_cross(points, np.roll(points, -1))))


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Odległości punktów p (P,) od odcinków [a, b] (K,) -> (P, K)"""
    d = (b - a)[None, :]
    rel = p[:, None] - a[None, :]
    length2 = np.abs(d) ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.where(length2 > 0, (np.conj(d) * rel).real / length2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(rel - t * d)


def _first_crossing(points: np.ndarray, tol: float) -> Optional[Tuple[int, int]]:
    """Pierwsza para krawędzi, które się przecinają (lub nakładają), albo None"""
    k = len(points)
    a = points
    b = np.roll(points, -1)
    r = b - a
    length = np.abs(r)

    # sąsiednie krawędzie: jedyny dopuszczalny punkt wspólny to wierzchołek
    nxt = np.roll(r, -1)
    backtrack = (np.abs(_cross(r, nxt)) <= tol * length * np.roll(length, -1)) & \
                ((np.conj(r) * nxt).real < 0)
    if np.any(backtrack):
        i = int(np.argmax(backtrack))
        return i, (i + 1) % k

    if k < 4:
        return None

    A1, B1, R1, L1 = a[:, None], b[:, None], r[:, None], length[:, None]
    A2, B2, R2, L2 = a[None, :], b[None, :], r[None, :], length[None, :]

    # odległości ze znakiem końców jednej krawędzi od prostej drugiej
    d1 = _cross(R2, A1 - A2) / L2
    d2 = _cross(R2, B1 - A2) / L2
    d3 = _cross(R1, A2 - A1) / L1
    d4 = _cross(R1, B2 - A1) / L1

    straddle_1 = (np.minimum(d1, d2) <= tol) & (np.maximum(d1, d2) >= -tol)
    straddle_2 = (np.minimum(d3, d4) <= tol) & (np.maximum(d3, d4) >= -tol)
    collinear = (np.abs(d1) <= tol) & (np.abs(d2) <= tol)

    t_a = (np.conj(R2) * (A1 - A2)).real / (L2 ** 2)
    t_b = (np.conj(R2) * (B1 - A2)).real / (L2 ** 2)
    slack = tol / L2
    overlap = (np.maximum(t_a, t_b) >= -slack) & (np.minimum(t_a, t_b) <= 1 + slack)

    hits = np.where(collinear, overlap, straddle_1 & straddle_2)

    i_idx, j_idx = np.triu_indices(k, k=2)
    non_adjacent = ~((i_idx == 0) & (j_idx == k - 1))
    i_idx, j_idx = i_idx[non_adjacent], j_idx[non_adjacent]
    found = hits[i_idx, j_idx]
    if np.any(found):
        first = int(np.argmax(found))
        return int(i_idx[first]), int(j_idx[first])
    return None


# ========== Operacje ==========

def validate_step_function(raw) -> StepFunction:
    """
    Normalizuje surową listę (kąt, wartość) do postaci kanonicznej

    Kąty redukowane mod 2π i sortowane; kolejne równe wartości (także cyklicznie,
    ostatnia z pierwszą) są scalane z notatką o degeneracji.

    Args:
        raw: sekwencja par (radiany, liczba zespolona) albo StepFunction

    Returns:
        StepFunction: postać kanoniczna

    Raises:
        EmptyInput: pusta lista
        InvalidPartition: powtórzony kąt
    """
    carried_raw_count = None
    carried_note = None
    if isinstance(raw, StepFunction):
        carried_raw_count, carried_note = raw.raw_count, raw.degeneracy_note
        raw = raw.arcs

    items = [(_reduce_angle(theta), complex(value)) for theta, value in raw]
    if not items:
        raise EmptyInput("Funkcja schodkowa wymaga co najmniej jednego łuku")

    items.sort(key=lambda item: item[0])
    for (t0, _), (t1, _) in zip(items, items[1:]):
        if t0 == t1:
            raise InvalidPartition(f"Powtórzony kąt podziału: {t0!r}", details={'theta': t0})

    merged: List[Tuple[float, complex]] = []
    for theta, value in items:
        if merged and merged[-1][1] == value:
            continue
        merged.append((theta, value))
    if len(merged) > 1 and merged[-1][1] == merged[0][1]:
        # łuk ostatni przechodzi przez 0 i łączy się z pierwszym
        merged.pop(0)

    raw_count = len(items) if carried_raw_count is None else carried_raw_count
    note = carried_note
    if len(merged) < len(items):
        note = f"scalono {len(items) - len(merged)} łuk(i) o równych sąsiednich wartościach ({len(items)} -> {len(merged)})"
        logger.debug(note)
    return StepFunction(arcs=tuple(merged), raw_count=raw_count, degeneracy_note=note)


def polygon_from_step(sf: StepFunction) -> JordanPolygon:
    """Wielokąt o wierzchołkach równych wartościom łuków (w kolejności łuków)"""
    if len(set(sf.values.tolist())) < 3:
        raise NotAPolygon(f"Funkcja ma {len(set(sf.values.tolist()))} różne wartości - za mało na wielokąt",
                          details={'step_count': sf.step_count})
    midpoints = sf.angles + sf.arc_lengths / 2.0
    return JordanPolygon.from_vertices(sf.values, source_angles=np.mod(midpoints, TWO_PI))


def total_variation(sf: StepFunction) -> VariationReport:
    magnitudes = tuple(float(m) for m in np.abs(sf.jumps))
    return VariationReport(total_variation=math.fsum(magnitudes), jump_magnitudes=magnitudes)


def jump_points(sf: StepFunction) -> List[Tuple[float, complex]]:
    """Lista (kąt skoku, Δ_j)"""
    return [(float(t), complex(d)) for t, d in zip(sf.jump_angles, sf.jumps)]


def linear_combination(alpha: complex, sf1: StepFunction, beta: complex, sf2: StepFunction) -> StepFunction:
    """α·φ1 + β·φ2 na wspólnym rozdrobnieniu podziałów"""
    angles = np.union1d(sf1.angles, sf2.angles)
    values = alpha * sf1.value_at(angles) + beta * sf2.value_at(angles)
    return validate_step_function(list(zip(angles.tolist(), values.tolist())))


def regular_polygon_step(n: int, rotation: float = 0.0) -> StepFunction:
    """n równych łuków z wartościami e^{i(2πj/n + rotation)} - n-kąt foremny"""
    angles = TWO_PI * np.arange(n) / n
    values = np.exp(1j * (angles + rotation))
    return validate_step_function(list(zip(angles.tolist(), values.tolist())))


def polygon_distance(p: JordanPolygon, q: JordanPolygon, per_edge: int = 64) -> float:
    """Symetryczna odległość Hausdorffa brzegów dwóch wielokątów"""
    a = p.edge_samples(per_edge)
    b = q.edge_samples(per_edge)
    u = np.column_stack([a.real, a.imag])
    v = np.column_stack([b.real, b.imag])
    return float(max(directed_hausdorff(u, v)[0], directed_hausdorff(v, u)[0]))


# ========== Plik specyfikacji mapy ==========

def load_step_function(path: str) -> StepFunction:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecFileError(f"Nie można odczytać specyfikacji mapy {path}: {e}", details={'path': path})
    return StepFunction.from_dict(data)


def dump_step_function(sf: StepFunction, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(sf.to_dict(), f, indent=2)
