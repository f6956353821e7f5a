#!/usr/bin/env python3
"""
Testy jednostkowe eksperymentu aproksymacji:
- odwzorowania docelowe (katalog, ścinanie, f_t)
- wielokąty wpisane z punktami normalizacji
- normalizacja afiniczna i błąd sup
- pełny przebieg dla identyczności (wielokąty wypukłe) i struktura raportu dla Koebe
"""

import os
import sys
import json
import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from stepmap_blaschke import constant_function, polynomial_function
from stepmap_boundary import TWO_PI, JordanPolygon, polygon_from_step, regular_polygon_step, validate_step_function
from stepmap_harmonic import decompose
from stepmap_pipeline import (
    CATALOG, DEFAULT_NORMALIZATION_POINTS, PipelineConfig, NormalizationConstants, TargetMap,
    catalog_target, shear_construct, step_target, t_dilate, sup_error, inscribe_polygon,
    fit_step_map, normalize, run_pipeline,
)
from stepmap_errors import DegenerateNormalization, InvalidRho, InvalidT, NotAPolygon, NotContracting
from stepmap_poles import pole_order_fit
from stepmap_univalence import Verdict


# ========== Helpery ==========

REJECT_REASONS = {'not_simple', 'not_a_polygon', 'fit_failed', 'degenerate_normalization'}


def quick_config(**overrides) -> PipelineConfig:
    values = dict(n_schedule=(6, 12), budget=300, seed=1)
    values.update(overrides)
    return PipelineConfig(**values)


# ========== Odwzorowania docelowe ==========

class TestTargets:

    def test_koebe_po_dylatacji_t(self):
        f_t = t_dilate(catalog_target('analytic_koebe'), 0.5)
        z = np.array([0.3, -0.5j, 0.7 + 0.2j])
        np.testing.assert_allclose(f_t(z), z / (1 - 0.5 * z) ** 2, atol=1e-12)

    def test_koebe_harmoniczne_wzor_zamkniety_vs_szereg(self):
        F = catalog_target('koebe_harmonic')
        series = shear_construct(catalog_target('analytic_koebe').h, polynomial_function([0, 1]))
        z = np.array([0.3, -0.4j, 0.2 + 0.2j])
        np.testing.assert_allclose(F.h(z), series.h(z), atol=1e-10)
        np.testing.assert_allclose(F.g(z), series.g(z), atol=1e-10)
        # h - g = z/(1-z)²
        np.testing.assert_allclose(F.h(z) - F.g(z), z / (1 - z) ** 2, atol=1e-12)

    def test_dylatacja_koebe_harmonicznego(self):
        F = catalog_target('koebe_harmonic')
        assert F.dilatation(0.5) == pytest.approx(0.5)

    def test_scinanie_wymaga_kontrakcji(self):
        with pytest.raises(NotContracting):
            shear_construct(polynomial_function([0, 1]), polynomial_function([0, 2]))

    def test_scinanie_z_zerowa_dylatacja(self):
        target = shear_construct(polynomial_function([0, 1]), constant_function(0j))
        assert target(0.3 + 0.1j) == pytest.approx(0.3 + 0.1j)

    def test_katalog(self):
        for name in CATALOG:
            assert catalog_target(name).name == name
        with pytest.raises(ValueError):
            catalog_target('nieznane')

    def test_niepoprawne_t(self):
        F = catalog_target('polygon_identity')
        with pytest.raises(InvalidT):
            t_dilate(F, 0.0)
        with pytest.raises(InvalidT):
            t_dilate(F, 1.5)
        assert t_dilate(F, 1.0) is F

    def test_nieznormalizowane_odwzorowanie(self):
        with pytest.raises(ValueError):
            TargetMap(name='bad', h=polynomial_function([0, 2]), g=constant_function(0j),
                      dilatation=constant_function(0j))

    def test_brzeg_identycznosci(self):
        F = catalog_target('polygon_identity')
        theta = np.linspace(0.0, TWO_PI, 9)
        np.testing.assert_allclose(F.boundary(theta), np.exp(1j * theta), atol=1e-9)

    def test_mapa_schodkowa_jako_cel(self):
        target = step_target(regular_polygon_step(5))
        assert target(0j) == pytest.approx(0.0, abs=1e-12)


# ========== Konfiguracja ==========

class TestConfig:

    def test_domyslne(self):
        config = PipelineConfig()
        assert config.n_schedule == (8, 16, 32, 64)
        assert config.degree_for(16) == 14
        assert PipelineConfig(blaschke_degree=3).degree_for(16) == 3

    @pytest.mark.parametrize("t", [0.0, 1.0, -0.2])
    def test_niepoprawne_t(self, t):
        with pytest.raises(InvalidT):
            PipelineConfig(t=t)

    def test_niepoprawne_rho(self):
        with pytest.raises(InvalidRho):
            PipelineConfig(rho=1.0)

    def test_za_male_n(self):
        with pytest.raises(NotAPolygon):
            PipelineConfig(n_schedule=(2, 8))

    def test_harmonogram_rosnacy(self):
        with pytest.raises(ValueError):
            PipelineConfig(n_schedule=(16, 8))

    def test_to_dict(self):
        data = quick_config().to_dict()
        assert data['n_schedule'] == [6, 12]
        assert data['seed'] == 1

    def test_budzet_rosnie_z_n(self):
        config = PipelineConfig(budget=100)
        assert [config.budget_for(n) for n in (3, 8, 15, 16, 64)] == [100, 100, 100, 200, 800]


# ========== Wielokąty i normalizacja ==========

class TestPolygonAndNormalization:

    def test_wielokat_wpisany_zawiera_punkty_normalizacji(self):
        polygon = inscribe_polygon(catalog_target('polygon_identity'), 8)
        assert polygon.vertex_count == 8
        assert polygon.orientation == 'positive'
        for alpha in DEFAULT_NORMALIZATION_POINTS:
            assert np.min(np.abs(np.asarray(polygon.source_angles) - alpha)) < 1e-15

    def test_wielokat_za_malo_bokow(self):
        with pytest.raises(NotAPolygon):
            inscribe_polygon(catalog_target('polygon_identity'), 2)

    def test_stale_normalizacji_odwracaja_afiniczne(self):
        constants = NormalizationConstants(a0=2 + 1j, a1=1 + 1j, b1=0.3 - 0.1j)
        z = np.array([0.1, 0.5j, -0.2 + 0.3j])
        w = constants.a0 + constants.a1 * z + np.conj(constants.b1) * np.conj(z)
        np.testing.assert_allclose(constants.apply(w), z, atol=1e-14)

    def test_normalizacja_mapy(self):
        sf = validate_step_function([(0.0, 2 + 1j), (1.5, 3 + 2j), (3.0, 1 + 3j), (4.5, 0.5 + 1.5j)])
        g = normalize(decompose(sf, 64))
        assert g.constant_term == pytest.approx(0.0, abs=1e-13)
        assert g.a1 == pytest.approx(1.0, abs=1e-12)
        assert g.b1 == pytest.approx(0.0, abs=1e-12)

    def test_normalizacja_zdegenerowana(self):
        # wartości rzeczywiste: h' = g'
        sf = validate_step_function([(0.0, 1), (np.pi, -1)])
        with pytest.raises(DegenerateNormalization):
            normalize(decompose(sf, 64))

    def test_sup_error(self):
        err = sup_error(lambda z: z, lambda z: z + 0.01 * np.conj(z), 0.5)
        assert err == pytest.approx(0.005, rel=1e-12)

    def test_sup_error_promien(self):
        with pytest.raises(ValueError):
            sup_error(lambda z: z, lambda z: z, 1.0)

    def test_dopasowanie_wymaga_dodatniej_orientacji(self):
        polygon = JordanPolygon.from_vertices([1, 1j, -1][::-1])
        with pytest.raises(NotAPolygon):
            fit_step_map(catalog_target('polygon_identity'), polygon, quick_config())

    def test_punkt_staly_dopasowania(self):
        # cel jest mapą schodkową na ten sam wielokąt - dopasowanie odtwarza ją dokładnie
        target = step_target(regular_polygon_step(5))
        m = normalize(decompose(regular_polygon_step(5)))
        fit = fit_step_map(target, polygon_from_step(m.source), quick_config())
        assert fit.certificate.verdict == Verdict.UNIVALENT
        assert sup_error(fit.map, target, 0.75) < 1e-8


# ========== Pełny przebieg ==========

class TestRunPipeline:

    def test_identycznosc_zbiega(self):
        report = run_pipeline('polygon_identity', quick_config())
        assert [r.n for r in report.records] == [6, 12]
        assert report.rejected == []
        coarse, fine = report.record_for(6), report.record_for(12)
        assert fine.sup_errors[0.5] < coarse.sup_errors[0.5]
        for record in report.records:
            assert record.fit.certificate.verdict == Verdict.UNIVALENT
            assert record.normalized.a1 == pytest.approx(1.0, abs=1e-10)
            assert record.fit.dilatation_gap is not None

    def test_raport_deterministyczny(self, tmp_path):
        first = run_pipeline('polygon_identity', quick_config(n_schedule=(6,)))
        second = run_pipeline('polygon_identity', quick_config(n_schedule=(6,)))
        assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())
        assert 'timing' not in first.to_dict()
        path = tmp_path / "report.json"
        first.export_json(str(path), include_timing=True)
        assert 'timing' in json.loads(path.read_text())

    def test_normalizacja_idempotentna(self):
        report = run_pipeline('polygon_identity', quick_config())
        for record in report.records:
            again = normalize(record.normalized)
            scale = np.max(np.abs(record.normalized.source.values))
            assert np.max(np.abs(again.source.values - record.normalized.source.values)) <= 1e-14 * scale

    def test_rzad_biegunow_w_skokach(self):
        report = run_pipeline('polygon_identity', quick_config())
        for record in report.records:
            for zeta in record.normalized.source.zetas:
                # rząd h' = rząd h + 1
                assert pole_order_fit(record.normalized.hprime, zeta) + 1.0 <= 1.1


# ========== Koebe harmoniczne, t = 0.9 ==========

@pytest.fixture(scope="module")
def koebe_report():
    return run_pipeline('koebe_harmonic', PipelineConfig(t=0.9, n_schedule=(8, 16, 32, 64)))


class TestKoebe:

    def test_wszystkie_n_zaakceptowane(self, koebe_report):
        assert [(r.n, r.reason) for r in koebe_report.rejected] == []
        assert [r.n for r in koebe_report.records] == [8, 16, 32, 64]
        for record in koebe_report.records:
            assert record.fit.certificate.verdict == Verdict.UNIVALENT

    def test_blad_maleje_z_n(self, koebe_report):
        coarse, fine = koebe_report.record_for(8), koebe_report.record_for(64)
        assert fine.sup_errors[0.5] <= 0.5 * coarse.sup_errors[0.5]

    def test_normalizacja(self, koebe_report):
        for record in koebe_report.records:
            assert record.normalized.constant_term == pytest.approx(0.0, abs=1e-11)
            assert record.normalized.a1 == pytest.approx(1.0, abs=1e-11)
            assert record.normalized.b1 == pytest.approx(0.0, abs=1e-11)

    def test_struktura_raportu(self, koebe_report):
        assert koebe_report.target == 'koebe_harmonic'
        data = koebe_report.to_dict()
        assert data['config']['n_schedule'] == [8, 16, 32, 64]
        assert 'settings' in data and 'version' in data
        assert len(data['records']) + len(data['rejected']) == 4
        for rejected in koebe_report.rejected:
            assert rejected.reason in REJECT_REASONS


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
