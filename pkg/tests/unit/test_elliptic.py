#!/usr/bin/env python3
"""
Testy jednostkowe układu eliptycznego:
- współczynniki a11..a22 i margines eliptyczności
- relacje pośrednie dla odwzorowań afinicznych
- residuum różnic centralnych (afiniczne ~ 0, pięciokąt - zbieżność rzędu 2)
"""

import os
import sys
import csv
import json
import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from stepmap_boundary import regular_polygon_step
from stepmap_harmonic import decompose, dilatation
from stepmap_elliptic import (
    system_coefficients, ellipticity_margin, intermediate_relations, affine_dilatation,
    system_residual, export_residual_json, export_residual_csv,
)
from stepmap_errors import NotContracting, SingularDenominator


# ========== Helpery ==========

def affine(alpha: complex, beta: complex):
    return lambda z: alpha * np.asarray(z) + beta * np.conj(z)


def affine_gradient(alpha: complex, beta: complex):
    """(u_x, u_y, v_x, v_y) dla f = αz + βz̄"""
    f_x = alpha + beta
    f_y = 1j * (alpha - beta)
    return f_x.real, f_y.real, f_x.imag, f_y.imag


# ========== Współczynniki ==========

class TestCoefficients:

    def test_jedna_trzecia(self):
        coeffs = system_coefficients(1.0 / 3.0)
        assert coeffs.a11 == pytest.approx(0.0, abs=1e-15)
        assert coeffs.a12 == pytest.approx(2.0)
        assert coeffs.a21 == pytest.approx(2.0)
        assert coeffs.a22 == pytest.approx(0.0, abs=1e-15)
        margin, a12_positive = ellipticity_margin(coeffs)
        assert margin == pytest.approx(16.0)
        assert a12_positive

    def test_zero(self):
        coeffs = system_coefficients(0j)
        assert tuple(coeffs) == pytest.approx((0.0, 1.0, 1.0, 0.0))
        assert ellipticity_margin(coeffs)[0] == pytest.approx(4.0)

    def test_margines_ujemny_bez_wyjatku(self):
        margin, a12_positive = ellipticity_margin((0.0, 1.0, -1.0, 0.0))
        assert margin == -4.0
        assert a12_positive

    @pytest.mark.parametrize("a", [0.5j, -0.3 + 0.4j, 0.9, 0.2 - 0.7j])
    def test_eliptycznosc_dla_kontrakcji(self, a):
        margin, a12_positive = ellipticity_margin(system_coefficients(a))
        assert margin > 0
        assert a12_positive

    def test_a_rowne_jeden(self):
        with pytest.raises(SingularDenominator):
            system_coefficients(1.0)

    @pytest.mark.parametrize("a", [2.0, -1.0, 1j, 0.8 + 0.8j])
    def test_brak_kontrakcji(self, a):
        with pytest.raises(NotContracting) as exc_info:
            system_coefficients(a)
        assert exc_info.value.is_domain_failure()


# ========== Relacje pośrednie ==========

class TestIntermediateRelations:

    @pytest.mark.parametrize("alpha,beta", [(1.0, 0.3 + 0.2j), (2 - 1j, 0.5j), (0.7j, -0.1)])
    def test_odwzorowanie_afiniczne(self, alpha, beta):
        a = affine_dilatation(alpha, beta)
        first, second = intermediate_relations(a, affine_gradient(alpha, beta))
        assert abs(first) < 1e-14
        assert abs(second) < 1e-14

    def test_dylatacja_afiniczna(self):
        assert affine_dilatation(2.0, 1j) == pytest.approx(-0.5j)

    def test_zerowe_alpha(self):
        with pytest.raises(SingularDenominator):
            affine_dilatation(0, 0.5)


# ========== Residuum ==========

class TestResidual:

    def test_afiniczne_dokladnie(self):
        alpha, beta = 1.0, 0.3 + 0.2j
        a = affine_dilatation(alpha, beta)
        report = system_residual(affine(alpha, beta), lambda z: a)
        assert report.max_residual < 1e-12
        assert report.point_count == 1 + 8 * 32

    def test_pieciokat_rzad_zbieznosci(self):
        m = decompose(regular_polygon_step(5), 64)
        report = system_residual(m, dilatation(m))
        assert 1.7 <= report.convergence_slope <= 2.3
        assert report.slope_r2 > 0.99
        assert report.grid_spacing == 2.5e-3
        assert report.max_residual_eq1[0] > report.max_residual_eq1[-1]

    def test_dylatacja_poza_kolem(self):
        m = decompose(regular_polygon_step(4).conjugate(), 64)
        with pytest.raises(NotContracting):
            system_residual(m, dilatation(m))

    def test_eksport(self, tmp_path):
        m = decompose(regular_polygon_step(5), 64)
        report = system_residual(m, dilatation(m))
        json_path = tmp_path / "residual.json"
        csv_path = tmp_path / "residual.csv"
        export_residual_json(report, str(json_path), extra={'version': 'test'})
        export_residual_csv(report, str(csv_path))
        data = json.loads(json_path.read_text())
        assert data['residual']['spacings'] == [1e-2, 5e-3, 2.5e-3]
        with open(csv_path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['re', 'im', 'residual_eq1', 'residual_eq2']
        assert len(rows) == 1 + report.point_count


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
