#!/usr/bin/env python3
"""
Testy jednostkowe iloczynów Blaschkego i algorytmu Schura:
- wartości i unimodularność na okręgu
- parametry Schura znanych funkcji (z, z², Möbius)
- odtwarzanie iloczynu z parametrów, obcięcie stopnia m
- dylatacja z -> b(ρz), współczynniki Taylora z kwadratury FFT
"""

import os
import sys
import math
import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from stepmap_blaschke import (
    FiniteBlaschke, AnalyticFunction, constant_function, polynomial_function, taylor_coefficients,
    series_divide, sup_modulus, eval_blaschke, boundary_unimodularity, schur_parameters,
    blaschke_truncation, dilate_rho, load_blaschke, dump_blaschke, export_schur_csv,
)
from stepmap_errors import InvalidRho, NotASelfMap, SpecFileError


# ========== Iloczyny Blaschkego ==========

class TestFiniteBlaschke:

    def test_wartosc_w_zerze(self):
        b = FiniteBlaschke.from_zeros([0.5, -0.5])
        assert eval_blaschke(b, 0j) == pytest.approx(0.25, abs=1e-15)

    def test_unimodularnosc_na_okregu(self):
        b = FiniteBlaschke.from_zeros([0.3 + 0.4j, -0.6, 0.1j], factor=1j)
        assert boundary_unimodularity(b) < 1e-12

    def test_zera(self):
        zeros = [0.3 + 0.4j, -0.6]
        b = FiniteBlaschke.from_zeros(zeros)
        np.testing.assert_allclose(b(np.array(zeros)), 0.0, atol=1e-15)

    def test_zero_poza_kolem(self):
        with pytest.raises(NotASelfMap):
            FiniteBlaschke.from_zeros([1.2])

    def test_czynnik_nieunimodularny(self):
        with pytest.raises(NotASelfMap):
            FiniteBlaschke.from_zeros([0.1], factor=2.0)

    def test_iloczyn(self):
        b1 = FiniteBlaschke.from_zeros([0.2])
        b2 = FiniteBlaschke.from_zeros([-0.4j], factor=-1)
        z = np.array([0.1, 0.5j, -0.3 + 0.3j])
        np.testing.assert_allclose((b1 * b2)(z), b1(z) * b2(z), atol=1e-15)
        assert (b1 * b2).degree == 2

    def test_taylor_vs_wartosci(self):
        b = FiniteBlaschke.from_zeros([0.3 + 0.4j, -0.6])
        coefficients = b.taylor(80)
        z = 0.4 * np.exp(1j * np.linspace(0.0, 2 * np.pi, 12))
        np.testing.assert_allclose(np.polynomial.polynomial.polyval(z, coefficients), b(z), atol=1e-12)


# ========== Parametry Schura ==========

class TestSchur:

    def test_identycznosc(self):
        decomposition = schur_parameters(polynomial_function([0, 1]), 4)
        assert decomposition.params == (0j, 1 + 0j)
        assert decomposition.terminated
        assert decomposition.degree == 1

    def test_kwadrat(self):
        decomposition = schur_parameters(polynomial_function([0, 0, 1]), 5)
        assert decomposition.params == (0j, 0j, 1 + 0j)

    def test_mobius(self):
        # (0.5 + z)/(1 + 0.5z) = B_{-0.5}
        b = FiniteBlaschke.from_zeros([-0.5])
        z = np.array([0.2, -0.7j])
        np.testing.assert_allclose(b(z), (0.5 + z) / (1 + 0.5 * z), atol=1e-15)
        params = schur_parameters(b.as_analytic(), 4).params
        assert len(params) == 2
        assert params[0] == pytest.approx(0.5, abs=1e-14)
        assert params[1] == pytest.approx(1.0, abs=1e-12)

    def test_odtworzenie_z_parametrow(self):
        params = (0.3, 0.2j, -0.5 + 0.1j, 1j)
        b = FiniteBlaschke.from_schur(params)
        assert b.degree == 3
        assert boundary_unimodularity(b) < 1e-10
        recovered = schur_parameters(b.as_analytic(), 5)
        assert recovered.terminated
        np.testing.assert_allclose(recovered.params, params, atol=1e-9)

    def test_nie_odwzorowuje_kola_w_kolo(self):
        with pytest.raises(NotASelfMap) as exc_info:
            schur_parameters(polynomial_function([0, 2]), 4)
        assert exc_info.value.is_domain_failure()

    def test_stala_unimodularna(self):
        decomposition = schur_parameters(constant_function(1j), 3)
        assert decomposition.params == (1j,)
        assert decomposition.degree == 0

    def test_ostatni_parametr_nieunimodularny(self):
        with pytest.raises(NotASelfMap):
            FiniteBlaschke.from_schur([0.1, 0.5])


# ========== Obcięcie i ρ ==========

class TestTruncation:

    def test_obciecie_zgadza_sie_na_wspolczynnikach(self):
        a = polynomial_function([0.1, 0.3, -0.2j, 0.1])
        b = blaschke_truncation(a, 3)
        assert b.degree == 3
        np.testing.assert_allclose(b.taylor(3), [0.1, 0.3, -0.2j], atol=1e-10)
        assert boundary_unimodularity(b) < 1e-10

    def test_obciecie_polowy_z(self):
        b = blaschke_truncation(polynomial_function([0, 0.5]), 2)
        assert b.degree == 2
        np.testing.assert_allclose(b.taylor(2), [0, 0.5], atol=1e-12)

    @pytest.mark.parametrize("m", [1, 2, 4, 8, 16])
    def test_obciecie_mobiusa_wspolczynniki(self, m):
        a = AnalyticFunction(evaluator=lambda z: 0.9 * (z + 0.3) / (1 + 0.3 * z), name="0.9·mobius")
        b = blaschke_truncation(a, m)
        np.testing.assert_allclose(b.taylor(m), taylor_coefficients(a, m), atol=1e-9)

    def test_obciecie_mobiusa_blad_maleje(self):
        a = AnalyticFunction(evaluator=lambda z: 0.9 * (z + 0.3) / (1 + 0.3 * z), name="0.9·mobius")
        r = np.linspace(0.0, 0.5, 32)
        z = (r[:, None] * np.exp(2j * np.pi * np.arange(128) / 128)[None, :]).ravel()
        errors = [np.max(np.abs(blaschke_truncation(a, m)(z) - a(z))) for m in (2, 4, 8)]
        assert errors[0] > errors[1] > errors[2]

    def test_obciecie_iloczynu_blaschkego(self):
        original = FiniteBlaschke.from_zeros([0.2, -0.3j])
        b = blaschke_truncation(original.as_analytic(), 5)
        assert b.degree == 2
        z = np.array([0.1, 0.6j, -0.5])
        np.testing.assert_allclose(b(z), original(z), atol=1e-10)

    def test_dilate_rho(self):
        a = dilate_rho(FiniteBlaschke.from_zeros([0.0]), 0.9)
        assert a(0.9) == pytest.approx(0.81)
        np.testing.assert_allclose(a.taylor_coefficients(3), [0, 0.9, 0], atol=1e-15)

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.5, 1.5])
    def test_niepoprawne_rho(self, rho):
        with pytest.raises(InvalidRho):
            dilate_rho(FiniteBlaschke.from_zeros([0.0]), rho)

    def test_stala_unimodularna_po_dylatacji(self):
        b = FiniteBlaschke.from_zeros([], factor=1j)
        assert sup_modulus(dilate_rho(b, 0.5)) == pytest.approx(1.0)

    def test_sup_ponizej_jeden_po_dylatacji(self):
        b = FiniteBlaschke.from_zeros([0.5, -0.2j])
        assert sup_modulus(dilate_rho(b, 0.8)) < 1.0


# ========== Szeregi ==========

class TestSeries:

    def test_kwadratura_fft(self):
        coefficients = taylor_coefficients(AnalyticFunction(evaluator=np.exp), 10)
        expected = [1.0 / math.factorial(k) for k in range(10)]
        np.testing.assert_allclose(coefficients, expected, atol=1e-12)

    def test_dzielenie_szeregow(self):
        # 1/(1 - z) = 1 + z + z² + ...
        np.testing.assert_allclose(series_divide(np.array([1.0]), np.array([1.0, -1.0]), 6), np.ones(6))


# ========== Pliki ==========

class TestFiles:

    def test_zapis_i_odczyt(self, tmp_path):
        b = FiniteBlaschke.from_zeros([0.3 + 0.4j, -0.6], factor=-1j)
        path = str(tmp_path / "b.json")
        dump_blaschke(b, path)
        assert load_blaschke(path) == b

    def test_uszkodzony_plik(self, tmp_path):
        path = tmp_path / "b.json"
        path.write_text('{"zeros": [[0.1]]}')
        with pytest.raises(SpecFileError):
            load_blaschke(str(path))

    def test_eksport_schur_csv(self, tmp_path):
        path = tmp_path / "schur.csv"
        export_schur_csv(schur_parameters(polynomial_function([0, 0, 1]), 5), str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == 'j,re,im,modulus'
        assert len(lines) == 4


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
