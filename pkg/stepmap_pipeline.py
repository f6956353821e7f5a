#!/usr/bin/env python3
"""
Eksperyment aproksymacji: odwzorowanie docelowe F -> f_t -> wielokąty P_n -> mapy schodkowe

Dla każdego n z harmonogramu:
1. wielokąt wpisany w brzeg f_t (z trzema punktami normalizacji),
2. dopasowanie kątów skoków (Nelder-Mead, wartości przypięte do wierzchołków),
3. certyfikat jednolistności,
4. normalizacja afiniczna i błędy sup na dyskach |z| <= 0.25, 0.5, 0.75.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union, Any

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize

from stepmap_blaschke import (AnalyticFunction, as_analytic, blaschke_truncation, constant_function,
                              dilate_rho, polynomial_function, series_divide, sup_modulus,
                              taylor_coefficients)
from stepmap_boundary import JordanPolygon, StepFunction, TWO_PI, validate_step_function
from stepmap_config import VERSION, load_settings, worker_count
from stepmap_errors import (DegenerateAnalyticPart, DegenerateNormalization, FitFailed, InvalidPartition,
                            InvalidRho, InvalidT, NotAPolygon, NotASelfMap, NotContracting, NotSimple)
from stepmap_harmonic import HarmonicStepMap, decompose, dilatation, harmonic_measures
from stepmap_univalence import CertifyConfig, UnivalenceCertificate, Verdict, certify, sense_defect

logger = logging.getLogger(__name__)

DEFAULT_NORMALIZATION_POINTS = (0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0)
BOUNDARY_RADII = (1.0 - 1e-6, 1.0 - 2e-6)
SHEAR_TERMS = 1024
NORMALIZATION_TOL = 1e-12
CATALOG = ('koebe_harmonic', 'analytic_koebe', 'polygon_identity')
OBJECTIVE_GRID = (16, 64)
SENSE_WEIGHT = 10.0
RESTARTS = 2
BISECTION_STEPS = 40
BUDGET_BLOCK = 8


# ========== Odwzorowanie docelowe ==========

@dataclass(frozen=True)
class TargetMap:
    """Znormalizowane odwzorowanie F = h + conj(g) z dylatacją A = g'/h'"""
    name: str
    h: AnalyticFunction
    g: AnalyticFunction
    dilatation: AnalyticFunction

    def __post_init__(self):
        hc = taylor_coefficients(self.h, 2)
        gc = taylor_coefficients(self.g, 2)
        checks = {'h(0)': hc[0], "h'(0) - 1": hc[1] - 1.0, 'g(0)': gc[0], "g'(0)": gc[1]}
        bad = {k: abs(v) for k, v in checks.items() if abs(v) > NORMALIZATION_TOL}
        if bad:
            raise ValueError(f"Odwzorowanie {self.name} nie jest znormalizowane: {bad}")

    def __call__(self, z):
        return self.h(z) + np.conj(self.g(z))

    def boundary(self, theta) -> np.ndarray:
        """f(e^{iθ}) z ekstrapolacji liniowej wzdłuż promienia (r = 1 - 1e-6, 1 - 2e-6)"""
        e = np.exp(1j * np.asarray(theta, dtype=float))
        r1, r2 = BOUNDARY_RADII
        near, far = np.asarray(self(r1 * e)), np.asarray(self(r2 * e))
        return near + (near - far) * (1.0 - r1) / (r1 - r2)


def _integrate(derivative: np.ndarray) -> np.ndarray:
    """Współczynniki funkcji pierwotnej znikającej w zerze"""
    return np.concatenate([[0j], derivative / np.arange(1, len(derivative) + 1)])


def _series_function(coefficients: np.ndarray, name: str) -> AnalyticFunction:
    def provider(m: int) -> np.ndarray:
        out = np.zeros(m, dtype=complex)
        k = min(m, len(coefficients))
        out[:k] = coefficients[:k]
        return out

    return AnalyticFunction(evaluator=lambda z: P.polyval(z, coefficients), taylor=provider, name=name)


def shear_construct(phi, a, terms: int = SHEAR_TERMS, name: str = "shear") -> TargetMap:
    """
    Ścinanie: h - g = φ, g' = a·h'  =>  h' = φ'/(1 - a)

    Całkowanie po współczynnikach Taylora (terms wyrazów).

    Raises:
        NotContracting: sup|a| >= 1 na okręgu r = 1 - 1e-6
    """
    phi = as_analytic(phi, name="phi")
    a = as_analytic(a, name="a")
    sup = sup_modulus(a, radius=BOUNDARY_RADII[0])
    if sup >= 1.0:
        raise NotContracting(f"sup|a| = {sup:.6g} >= 1 - ścinanie wymaga |a| < 1", details={'sup': sup})

    a_coeffs = taylor_coefficients(a, terms)
    if np.all(np.abs(a_coeffs) == 0):
        return TargetMap(name=name, h=phi, g=constant_function(0j, name="0"), dilatation=a)

    phi_coeffs = taylor_coefficients(phi, terms + 1)
    phi_prime = phi_coeffs[1:] * np.arange(1, terms + 1)
    one_minus_a = -a_coeffs
    one_minus_a[0] += 1.0
    h_prime = series_divide(phi_prime, one_minus_a, terms)
    g_prime = np.convolve(a_coeffs, h_prime)[:terms]
    h = _series_function(_integrate(h_prime), f"{name}.h")
    g = _series_function(_integrate(g_prime), f"{name}.g")
    logger.debug(f"shear_construct {name}: {terms} wyrazów, sup|a| = {sup:.6f}")
    return TargetMap(name=name, h=h, g=g, dilatation=a)


def _koebe() -> AnalyticFunction:
    return AnalyticFunction(evaluator=lambda z: z / (1.0 - z) ** 2,
                            taylor=lambda m: np.arange(m).astype(complex), name="koebe")


def catalog_target(name: str) -> TargetMap:
    """Wbudowane odwzorowania docelowe: koebe_harmonic, analytic_koebe, polygon_identity"""
    if name == 'koebe_harmonic':
        sheared = shear_construct(_koebe(), polynomial_function([0, 1], name="z"), name=name)
        # wzory zamknięte zamiast szeregu przy brzegu
        h = replace(sheared.h, evaluator=lambda z: (z - z ** 2 / 2 + z ** 3 / 6) / (1.0 - z) ** 3)
        g = replace(sheared.g, evaluator=lambda z: (z ** 2 / 2 + z ** 3 / 6) / (1.0 - z) ** 3)
        return replace(sheared, h=h, g=g)
    if name == 'analytic_koebe':
        return shear_construct(_koebe(), constant_function(0j), name=name)
    if name == 'polygon_identity':
        return shear_construct(polynomial_function([0, 1], name="z"), constant_function(0j), name=name)
    raise ValueError(f"Nieznane odwzorowanie docelowe {name!r} (dostępne: {', '.join(CATALOG)})")


def step_target(sf: StepFunction, name: str = "step") -> TargetMap:
    """Znormalizowana mapa schodkowa jako odwzorowanie docelowe"""
    m = normalize(decompose(sf))
    const = m.constant_term
    h = AnalyticFunction(evaluator=lambda z: m.h(z) + const,
                         taylor=lambda k: np.concatenate([[const], m.h_series[1:k]])[:k], name=f"{name}.h")
    g = AnalyticFunction(evaluator=m.g, taylor=lambda k: m.g_series[:k], name=f"{name}.g")
    dil = dilatation(m)
    return TargetMap(name=name, h=h, g=g, dilatation=AnalyticFunction(evaluator=dil, name=f"{name}.a"))


def t_dilate(F: TargetMap, t: float) -> TargetMap:
    """
    f_t(z) = F(tz)/t, dylatacja A(tz)

    Raises:
        InvalidT: t poza (0, 1]
    """
    if not 0.0 < t <= 1.0:
        raise InvalidT(f"t musi leżeć w (0, 1], podano {t}", details={'t': t})
    if t == 1.0:
        return F

    def scaled(fn: AnalyticFunction, shift: int) -> AnalyticFunction:
        taylor = None
        if fn.taylor is not None:
            def taylor(m: int) -> np.ndarray:
                return fn.taylor(m) * t ** (np.arange(m) - shift)
        return AnalyticFunction(evaluator=lambda z: fn(t * np.asarray(z, dtype=complex)) / t ** shift,
                                taylor=taylor, name=f"{fn.name}@t={t}", flags=fn.flags)

    return TargetMap(name=f"{F.name}@t={t}", h=scaled(F.h, 1), g=scaled(F.g, 1),
                     dilatation=scaled(F.dilatation, 0))


# ========== Konfiguracja i raport ==========

@dataclass(frozen=True)
class PipelineConfig:
    t: float = 0.9
    n_schedule: Tuple[int, ...] = (8, 16, 32, 64)
    rho: float = 0.9
    blaschke_degree: Optional[int] = None       # None = n - 2
    normalization_points: Tuple[float, float, float] = DEFAULT_NORMALIZATION_POINTS
    budget: int = 2000
    seed: int = 0
    objective_radius: float = 0.75
    error_radii: Tuple[float, ...] = (0.25, 0.5, 0.75)
    penalty_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise InvalidT(f"t musi leżeć w (0, 1), podano {self.t}", details={'t': self.t})
        if not 0.0 < self.rho < 1.0:
            raise InvalidRho(f"rho musi leżeć w (0, 1), podano {self.rho}", details={'rho': self.rho})
        small = [n for n in self.n_schedule if n < 3]
        if small:
            raise NotAPolygon(f"Harmonogram zawiera n < 3: {small}", details={'n': small})
        if any(b <= a for a, b in zip(self.n_schedule, self.n_schedule[1:])):
            raise ValueError(f"Harmonogram n musi być rosnący: {list(self.n_schedule)}")
        z1, z2, z3 = self.normalization_points
        if not (z1 < z2 < z3 < z1 + TWO_PI):
            raise ValueError(f"Punkty normalizacji muszą rosnąć w obrębie jednego okresu: {self.normalization_points}")
        if self.budget < 1:
            raise ValueError("Budżet optymalizatora musi być dodatni")

    def degree_for(self, n: int) -> int:
        return self.blaschke_degree if self.blaschke_degree is not None else n - 2

    def budget_for(self, n: int) -> int:
        """Limit ewaluacji dla n skoków: budget na każde pełne BUDGET_BLOCK skoków"""
        return self.budget * max(1, n // BUDGET_BLOCK)

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'n_schedule': list(self.n_schedule),
            'rho': self.rho,
            'blaschke_degree': self.blaschke_degree,
            'normalization_points': list(self.normalization_points),
            'budget': self.budget,
            'seed': self.seed,
            'objective_radius': self.objective_radius,
            'error_radii': list(self.error_radii),
            'penalty_weight': self.penalty_weight,
        }


@dataclass(frozen=True)
class NormalizationConstants:
    """a_{n0} = f(0), a_{n1} = h'(0), b_{n1} = g'(0)"""
    a0: complex
    a1: complex
    b1: complex

    @classmethod
    def from_map(cls, f: HarmonicStepMap) -> 'NormalizationConstants':
        constants = cls(a0=complex(f.constant_term), a1=f.a1, b1=f.b1)
        if abs(abs(constants.a1) - abs(constants.b1)) <= 1e-14:
            raise DegenerateNormalization(
                f"|a1| = |b1| = {abs(constants.a1):.6g} - normalizacja nieokreślona",
                details=constants.to_dict())
        return constants

    @property
    def denominator(self) -> float:
        return abs(self.a1) ** 2 - abs(self.b1) ** 2

    def apply(self, w):
        """(ā1(w - a0) - b̄1·conj(w - a0)) / (|a1|² - |b1|²)"""
        shifted = np.asarray(w, dtype=complex) - self.a0
        out = (np.conj(self.a1) * shifted - np.conj(self.b1) * np.conj(shifted)) / self.denominator
        return complex(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {name: [value.real, value.imag] for name, value in
                (('a0', self.a0), ('a1', self.a1), ('b1', self.b1))}


@dataclass(frozen=True)
class FitResult:
    step_function: StepFunction
    certificate: UnivalenceCertificate
    map: HarmonicStepMap
    objective: float
    penalty: float
    evaluations: int
    dilatation_gap: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step_function': self.step_function.to_dict(),
            'certificate': self.certificate.to_dict(),
            'objective': self.objective,
            'penalty': self.penalty,
            'evaluations': self.evaluations,
            'dilatation_gap': self.dilatation_gap,
        }


@dataclass(frozen=True)
class PipelineRecord:
    n: int
    polygon: JordanPolygon
    fit: FitResult
    constants: NormalizationConstants
    normalized: HarmonicStepMap
    sup_errors: Dict[float, float]
    normalized_sup_errors: Dict[float, float]
    seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'polygon': self.polygon.to_dict(),
            'fit': self.fit.to_dict(),
            'normalization_constants': self.constants.to_dict(),
            'normalized_step_function': self.normalized.source.to_dict(),
            'sup_errors': {str(r): e for r, e in self.sup_errors.items()},
            'normalized_sup_errors': {str(r): e for r, e in self.normalized_sup_errors.items()},
        }


@dataclass(frozen=True)
class RejectedIterate:
    n: int
    reason: str
    message: str
    certificate: Optional[UnivalenceCertificate] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'reason': self.reason, 'message': self.message,
                'certificate': self.certificate.to_dict() if self.certificate else None}


@dataclass
class PipelineReport:
    target: str
    config: PipelineConfig
    records: List[PipelineRecord] = field(default_factory=list)
    rejected: List[RejectedIterate] = field(default_factory=list)
    total_seconds: float = 0.0

    def record_for(self, n: int) -> Optional[PipelineRecord]:
        return next((r for r in self.records if r.n == n), None)

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = {
            'version': VERSION,
            'target': self.target,
            'config': self.config.to_dict(),
            'settings': load_settings().to_dict(),
            'records': [r.to_dict() for r in self.records],
            'rejected': [r.to_dict() for r in self.rejected],
        }
        if include_timing:
            data['timing'] = {'total_seconds': self.total_seconds,
                              'per_n': {str(r.n): r.seconds for r in self.records}}
        return data

    def export_json(self, path: str, include_timing: bool = False) -> None:
        with open(path, 'w') as f:
            json.dump(self.to_dict(include_timing), f, indent=2)


# ========== Operacje ==========

def _polar_grid(radius: float, n_radii: int, n_angles: int) -> np.ndarray:
    r = np.linspace(0.0, radius, n_radii)
    theta = TWO_PI * np.arange(n_angles) / n_angles
    return (r[:, None] * np.exp(1j * theta)[None, :]).ravel()


def sup_error(f: Callable, g: Callable, radius: float) -> float:
    """max |f - g| na siatce biegunowej 64 promienie × 256 kątów w |z| <= radius"""
    if radius >= 1.0:
        raise ValueError(f"Promień musi być < 1 (podano {radius})")
    z = _polar_grid(radius, 64, 256)
    return float(np.max(np.abs(np.asarray(f(z)) - np.asarray(g(z)))))


def _cyclic_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def inscribe_polygon(f_t: TargetMap, n: int,
                     normalization_points: Sequence[float] = DEFAULT_NORMALIZATION_POINTS) -> JordanPolygon:
    """
    Wielokąt o wierzchołkach f_t(e^{iθ_j}) dla n kątów równomiernych, z których najbliższe
    punktom normalizacji są na nie przesunięte

    Raises:
        NotAPolygon: n < 3
        NotSimple: łamana przecina się (trzeba zwiększyć n)
    """
    if n < 3:
        raise NotAPolygon(f"Wielokąt wymaga n >= 3 (podano {n})", details={'n': n})
    angles = TWO_PI * np.arange(n) / n
    used = set()
    for alpha in normalization_points:
        alpha = float(np.mod(alpha, TWO_PI))
        order = np.argsort(_cyclic_distance(angles, alpha), kind='stable')
        index = next(int(i) for i in order if int(i) not in used)
        used.add(index)
        angles[index] = alpha
    angles = np.sort(angles)
    vertices = f_t.boundary(angles)
    polygon = JordanPolygon.from_vertices(vertices, source_angles=angles)
    logger.debug(f"inscribe_polygon n={n}: orientacja {polygon.orientation}, pole {polygon.signed_area:.6g}")
    return polygon


def _angles_from_params(x: np.ndarray) -> np.ndarray:
    logits = np.clip(np.append(x[1:], 0.0), -30.0, 30.0)
    weights = np.exp(logits - logits.max())
    increments = TWO_PI * weights / weights.sum()
    return x[0] + np.concatenate([[0.0], np.cumsum(increments[:-1])])


def _params_from_angles(thetas: np.ndarray) -> np.ndarray:
    increments = np.diff(np.append(thetas, thetas[0] + TWO_PI))
    logits = np.log(increments) - np.log(increments[-1])
    return np.concatenate([[thetas[0]], logits[:-1]])


def _arc_penalty(thetas: np.ndarray, polygon: JordanPolygon, normalization_points: Sequence[float]) -> float:
    """Suma odległości kątowych z_k od łuku niosącego w_k (0 gdy z_k leży na tym łuku)"""
    sources = np.asarray(polygon.source_angles)
    starts = np.mod(thetas, TWO_PI)
    lengths = np.diff(np.append(thetas, thetas[0] + TWO_PI))
    total = 0.0
    for alpha in normalization_points:
        j = int(np.argmin(_cyclic_distance(sources, alpha)))
        offset = np.mod(alpha - starts[j], TWO_PI)
        if offset > lengths[j]:
            total += min(offset - lengths[j], TWO_PI - offset)
    return total


def dilatation_gap(f_t: TargetMap, fitted: HarmonicStepMap, degree: int, rho: float,
                   radius: float = 0.75) -> float:
    """sup |a_fit - a_n(ρz)| na |z| <= radius, a_n - obcięcie Blaschkego stopnia `degree` dylatacji f_t"""
    approximant = dilate_rho(blaschke_truncation(f_t.dilatation, degree), rho)
    return sup_error(dilatation(fitted), approximant, radius)


def _starting_partitions(f_t: TargetMap, sources: np.ndarray, values: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Kąty początkowe łuków: środki między kątami wierzchołków, punkty brzegu f_t równo odległe
    od sąsiednich wierzchołków (bisekcja) i ich średnia
    """
    previous = np.roll(sources, 1)
    previous[0] -= TWO_PI
    before = np.roll(values, 1)
    lo, hi = previous.copy(), sources.copy()
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (lo + hi)
        w = f_t.boundary(middle)
        nearer_before = np.abs(w - before) < np.abs(w - values)
        lo = np.where(nearer_before, middle, lo)
        hi = np.where(nearer_before, hi, middle)
    midpoint = 0.5 * (previous + sources)
    nearest = 0.5 * (lo + hi)
    return {'midpoint': midpoint, 'nearest_vertex': nearest, 'blend': 0.5 * (midpoint + nearest)}


def fit_step_map(f_t: TargetMap, polygon: JordanPolygon, config: PipelineConfig = None,
                 degree: Optional[int] = None, certify_config: CertifyConfig = None) -> FitResult:
    """
    Dobiera kąty skoków (wartości = wierzchołki P_n) minimalizując sup |P[φ] - f_t| na |z| <= 0.75

    Parametryzacja: kąt początkowy + przyrosty 2π·softmax (n - 1 swobodnych logitów).
    Cel = błąd sup + kara za łuki omijające punkty normalizacji + bariera sense_defect (zera h' w kole).
    Start z najlepszego z podziałów _starting_partitions, dwa przebiegi adaptacyjnego Nelder-Mead
    z budżetem config.budget_for(n). Gdy wynik nie ma certyfikatu univalent, certyfikowane są
    kolejno punkty startowe.

    Raises:
        FitFailed: żaden kandydat nie ma certyfikatu univalent (report = FitResult najlepszego)
    """
    config = config or PipelineConfig()
    if polygon.orientation != 'positive':
        raise NotAPolygon("Wielokąt musi być zorientowany dodatnio", details={'orientation': polygon.orientation})
    n = polygon.vertex_count
    values = polygon.points
    sources = np.asarray(polygon.source_angles if polygon.source_angles is not None
                         else TWO_PI * (np.arange(n) + 0.5) / n)
    sources = sources[0] + np.mod(sources - sources[0], TWO_PI)

    z = _polar_grid(config.objective_radius, *OBJECTIVE_GRID)
    target = np.asarray(f_t(z))
    barrier = SENSE_WEIGHT * max(float(np.max(np.abs(target))), 1.0)

    def build(thetas: np.ndarray) -> StepFunction:
        return validate_step_function(list(zip(thetas.tolist(), values.tolist())))

    def objective(x: np.ndarray) -> float:
        thetas = _angles_from_params(x)
        try:
            sf = build(thetas)
        except InvalidPartition:
            return 1e30
        error = float(np.max(np.abs(harmonic_measures(sf, z) @ sf.values - target)))
        return (error + config.penalty_weight * _arc_penalty(thetas, polygon, config.normalization_points)
                + barrier * sense_defect(sf))

    starts = []
    for name, thetas in _starting_partitions(f_t, sources, values).items():
        x = _params_from_angles(thetas)
        starts.append((objective(x), name, x))
    starts.sort(key=lambda item: item[0])
    best_value, best_name, best_x = starts[0]
    evaluations = len(starts)
    rng = np.random.default_rng(config.seed)
    budget = config.budget_for(n)
    for _ in range(RESTARTS):
        steps = 0.05 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0, size=n))
        simplex = np.vstack([best_x, best_x + np.diag(steps)])
        result = minimize(objective, best_x, method='Nelder-Mead',
                          options={'maxfev': max(budget // RESTARTS, 1), 'initial_simplex': simplex,
                                   'adaptive': True, 'xatol': 1e-12, 'fatol': 1e-14})
        evaluations += int(result.nfev)
        if result.fun < best_value:
            best_value, best_name, best_x = float(result.fun), 'nelder_mead', result.x
    logger.debug(f"fit n={n}: cel {best_value:.6g} ({best_name}), {evaluations} ewaluacji")

    candidates = [best_x] + [x for _, _, x in starts if not np.array_equal(x, best_x)]
    chosen = None
    for x in candidates:
        thetas = _angles_from_params(x)
        try:
            sf = build(thetas)
        except InvalidPartition:
            continue
        fitted = decompose(sf)
        certificate = certify(fitted, certify_config)
        if chosen is None or certificate.verdict == Verdict.UNIVALENT:
            chosen = (sf, fitted, certificate, thetas)
        if certificate.verdict == Verdict.UNIVALENT:
            break
        logger.debug(f"fit n={n}: kandydat odrzucony ({certificate.verdict.value})")

    sf, fitted, certificate, thetas = chosen
    sup = float(np.max(np.abs(fitted(z) - target)))
    penalty = _arc_penalty(thetas, polygon, config.normalization_points)
    gap = None
    try:
        gap = dilatation_gap(f_t, fitted, degree if degree is not None else config.degree_for(n), config.rho)
    except (DegenerateAnalyticPart, NotContracting, NotASelfMap) as e:
        logger.warning(f"Pominięto porównanie dylatacji: {e}")

    fit = FitResult(step_function=sf, certificate=certificate, map=fitted, objective=sup, penalty=penalty,
                    evaluations=evaluations, dilatation_gap=gap)
    logger.debug(f"fit n={n}: sup={sup:.6g}, kara={penalty:.3g}, {certificate.verdict.value}")
    if certificate.verdict != Verdict.UNIVALENT:
        raise FitFailed(f"Żaden kandydat dla n={n} nie jest jednolistny ({certificate.verdict.value})",
                        report=fit, details={'n': n, 'verdict': certificate.verdict.value})
    return fit


def normalize(f_n: HarmonicStepMap) -> HarmonicStepMap:
    """
    g_n = (ā1(f_n - a0) - b̄1·conj(f_n - a0)) / (|a1|² - |b1|²)

    Przekształcenie afiniczne stosowane do wartości łuków; całka Poissona z nim komutuje.

    Raises:
        DegenerateNormalization: |a1| = |b1|
    """
    constants = NormalizationConstants.from_map(f_n)
    return decompose(f_n.source.map_values(constants.apply), f_n.truncation)


def _run_single(f_t: TargetMap, n: int, config: PipelineConfig):
    started = time.perf_counter()
    try:
        polygon = inscribe_polygon(f_t, n, config.normalization_points)
        fit = fit_step_map(f_t, polygon, config)
        constants = NormalizationConstants.from_map(fit.map)
        normalized = normalize(fit.map)
    except NotSimple as e:
        logger.warning(f"n={n}: wielokąt nie jest prosty - {e}")
        return RejectedIterate(n=n, reason='not_simple', message=str(e))
    except NotAPolygon as e:
        logger.warning(f"n={n}: {e}")
        return RejectedIterate(n=n, reason='not_a_polygon', message=str(e))
    except FitFailed as e:
        logger.warning(f"n={n}: {e}")
        return RejectedIterate(n=n, reason='fit_failed', message=str(e), certificate=e.report.certificate)
    except DegenerateNormalization as e:
        logger.warning(f"n={n}: {e}")
        return RejectedIterate(n=n, reason='degenerate_normalization', message=str(e))

    errors = {float(r): sup_error(fit.map, f_t, r) for r in config.error_radii}
    normalized_errors = {float(r): sup_error(normalized, f_t, r) for r in config.error_radii}
    seconds = time.perf_counter() - started
    logger.info(f"n={n}: sup błąd (|z|<=0.5) = {errors.get(0.5, float('nan')):.6g}, {seconds:.2f}s")
    return PipelineRecord(n=n, polygon=polygon, fit=fit, constants=constants, normalized=normalized,
                          sup_errors=errors, normalized_sup_errors=normalized_errors, seconds=seconds)


def run_pipeline(target: Union[str, TargetMap], config: PipelineConfig = None) -> PipelineReport:
    """Pełny eksperyment dla harmonogramu n; przebiegi dla różnych n są niezależne"""
    config = config or PipelineConfig()
    F = catalog_target(target) if isinstance(target, str) else target
    f_t = t_dilate(F, config.t)
    report = PipelineReport(target=F.name, config=config)
    started = time.perf_counter()

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(lambda n: _run_single(f_t, n, config), config.n_schedule))

    for outcome in outcomes:
        if isinstance(outcome, PipelineRecord):
            report.records.append(outcome)
        else:
            report.rejected.append(outcome)
    report.total_seconds = time.perf_counter() - started
    logger.info(f"Pipeline {F.name}: {len(report.records)} zaakceptowanych, {len(report.rejected)} odrzuconych "
                f"({report.total_seconds:.1f}s)")
    return report
