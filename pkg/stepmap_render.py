#!/usr/bin/env python3
"""
Rysunki SVG: obrazy okręgów i promieni, brzeg obrazu, wielokąt, mapa błędu
Współrzędne zaokrąglane do 6 miejsc - ten sam wynik bajt w bajt przy tych samych danych.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from stepmap_boundary import JordanPolygon, TWO_PI, polygon_from_step

logger = logging.getLogger(__name__)

RENDER_KINDS = ('boundary_image', 'circle_images', 'polygon_overlay', 'error_heatmap')
BOUNDARY_RADIUS = 1.0 - 1e-4
MARGIN = 0.05

PREAMBLE = """\
<?xml version="1.0" standalone="no"?>
<svg width="%(width)d" height="%(height)d" viewBox="%(min_x).6f %(min_y).6f %(span_x).6f %(span_y).6f" version="1.1" xmlns="http://www.w3.org/2000/svg">
<rect x="%(min_x).6f" y="%(min_y).6f" width="%(span_x).6f" height="%(span_y).6f" style="fill:#ffffff"/>
"""

POSTAMBLE = """\
</svg>
"""


@dataclass(frozen=True)
class RenderSpec:
    what: str
    radii: Tuple[float, ...] = (0.5, 0.9)
    resolution: int = 512
    output: str = "render.svg"
    polygon: Optional[JordanPolygon] = None
    target: Optional[Callable] = None
    samples: int = 720

    def __post_init__(self):
        if self.what not in RENDER_KINDS:
            raise ValueError(f"Nieznany rodzaj rysunku {self.what!r} (dostępne: {', '.join(RENDER_KINDS)})")
        if self.resolution < 64:
            raise ValueError(f"Rozdzielczość musi być >= 64 (podano {self.resolution})")
        if any(not 0.0 < r < 1.0 for r in self.radii):
            raise ValueError(f"Promienie muszą leżeć w (0, 1): {list(self.radii)}")
        if self.what == 'error_heatmap' and self.target is None:
            raise ValueError("error_heatmap wymaga odwzorowania docelowego (target)")


class SVG:
    def __init__(self):
        self.min_x = None
        self.max_x = None
        self.min_y = None
        self.max_y = None
        self.commands: List[str] = []

    def require(self, xs: np.ndarray, ys: np.ndarray):
        lo_x, hi_x, lo_y, hi_y = float(np.min(xs)), float(np.max(xs)), float(np.min(ys)), float(np.max(ys))
        if self.min_x is None:
            self.min_x, self.max_x, self.min_y, self.max_y = lo_x, hi_x, lo_y, hi_y
        else:
            self.min_x = min(self.min_x, lo_x)
            self.max_x = max(self.max_x, hi_x)
            self.min_y = min(self.min_y, lo_y)
            self.max_y = max(self.max_y, hi_y)

    @staticmethod
    def _points(w: np.ndarray) -> str:
        # oś y w SVG rośnie w dół
        return ' '.join('%.6f,%.6f' % (p.real, -p.imag) for p in w)

    def polyline(self, w: np.ndarray, kind: str, color: str = '#000000', closed: bool = False):
        w = np.asarray(w, dtype=complex)
        self.require(w.real, -w.imag)
        tag = 'polygon' if closed else 'polyline'
        self.commands.append('<%s class="%s" points="%s" style="fill:none;stroke:%s;stroke-width:0.5" '
                             'vector-effect="non-scaling-stroke"/>' % (tag, kind, self._points(w), color))

    def cell(self, corners: np.ndarray, color: str):
        corners = np.asarray(corners, dtype=complex)
        self.require(corners.real, -corners.imag)
        self.commands.append('<polygon class="cell" points="%s" style="fill:%s;stroke:none"/>'
                             % (self._points(corners), color))

    def render(self, resolution: int) -> str:
        span_x = max(self.max_x - self.min_x, 1e-12)
        span_y = max(self.max_y - self.min_y, 1e-12)
        pad_x, pad_y = span_x * MARGIN, span_y * MARGIN
        min_x, min_y = self.min_x - pad_x, self.min_y - pad_y
        span_x, span_y = span_x + 2 * pad_x, span_y + 2 * pad_y
        width = resolution
        height = max(1, int(round(resolution * span_y / span_x)))
        return PREAMBLE % locals() + ''.join(item + '\n' for item in self.commands) + POSTAMBLE

    def save(self, filename: str, resolution: int):
        with open(filename, 'w') as f:
            f.write(self.render(resolution))


def _circle(radius: float, samples: int) -> np.ndarray:
    theta = TWO_PI * np.arange(samples + 1) / samples
    return radius * np.exp(1j * theta)


def _heat_color(value: float) -> str:
    """Biały -> czerwony"""
    level = int(round(255 * (1.0 - min(max(value, 0.0), 1.0))))
    return '#ff%02x%02x' % (level, level)


def image_curves(map: Callable, spec: RenderSpec) -> List[Tuple[str, np.ndarray]]:
    """Krzywe (rodzaj, punkty obrazu) rysowane dla danej specyfikacji"""
    curves: List[Tuple[str, np.ndarray]] = []
    if spec.what == 'circle_images':
        for r in spec.radii:
            curves.append(('circle', np.asarray(map(_circle(r, spec.samples)))))
        rays = np.linspace(0.0, max(spec.radii), 64)
        for j in range(12):
            curves.append(('radial', np.asarray(map(rays * np.exp(1j * TWO_PI * j / 12)))))
    elif spec.what in ('boundary_image', 'polygon_overlay'):
        curves.append(('boundary', np.asarray(map(_circle(BOUNDARY_RADIUS, spec.samples)))))
    return curves


def render_svg(map: Callable, spec: RenderSpec) -> str:
    """
    Zapisuje rysunek SVG do spec.output i zwraca ścieżkę

    Raises:
        OSError: nie można zapisać pliku
    """
    svg = SVG()
    for kind, points in image_curves(map, spec):
        svg.polyline(points, kind, color='#1f4e9c' if kind != 'radial' else '#9c9c9c')

    if spec.what == 'polygon_overlay':
        polygon = spec.polygon
        if polygon is None and hasattr(map, 'source'):
            polygon = polygon_from_step(map.source)
        if polygon is not None:
            svg.polyline(polygon.points, 'polygon', color='#c0392b', closed=True)

    if spec.what == 'error_heatmap':
        radius = max(spec.radii)
        cells = max(8, spec.resolution // 8)
        edges = np.linspace(-radius, radius, cells + 1)
        centres = 0.5 * (edges[:-1] + edges[1:])
        zz = centres[None, :] + 1j * centres[:, None]
        inside = np.abs(zz) <= radius
        errors = np.zeros(zz.shape)
        errors[inside] = np.abs(np.asarray(map(zz[inside])) - np.asarray(spec.target(zz[inside])))
        top = float(errors.max()) or 1.0
        half = (edges[1] - edges[0]) / 2.0
        offsets = np.array([-half - 1j * half, half - 1j * half, half + 1j * half, -half + 1j * half])
        for z, err in zip(zz[inside], errors[inside]):
            svg.cell(z + offsets, _heat_color(err / top))
        svg.polyline(_circle(radius, spec.samples), 'circle')
        logger.info(f"error_heatmap: max błąd {top:.6g} na |z| <= {radius}")

    svg.save(spec.output, spec.resolution)
    logger.debug(f"Zapisano {spec.output} ({len(svg.commands)} elementów)")
    return spec.output
