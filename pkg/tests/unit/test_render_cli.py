#!/usr/bin/env python3
"""
Testy jednostkowe rysunków SVG i interfejsu wiersza poleceń:
- walidacja RenderSpec, powtarzalność plików SVG
- kody wyjścia run_command (0 sukces, 1 błąd użycia / inconclusive, 2 porażka dziedzinowa)
- pliki wynikowe poszczególnych komend
"""

import os
import sys
import csv
import json
import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from stepmap_blaschke import FiniteBlaschke, dump_blaschke
from stepmap_boundary import regular_polygon_step, validate_step_function, dump_step_function, polygon_from_step
from stepmap_harmonic import decompose
from stepmap_pipeline import catalog_target
from stepmap_render import RenderSpec, image_curves, render_svg
from cli import run_command


# ========== Helpery ==========

@pytest.fixture
def square_spec(tmp_path):
    path = str(tmp_path / "square.json")
    dump_step_function(regular_polygon_step(4), path)
    return path


@pytest.fixture
def crossing_spec(tmp_path):
    path = str(tmp_path / "crossing.json")
    sf = validate_step_function([(0.0, 1), (np.pi / 2, -1), (np.pi, 1j), (3 * np.pi / 2, -1j)])
    dump_step_function(sf, path)
    return path


# ========== Rysunki ==========

class TestRender:

    def test_walidacja(self):
        with pytest.raises(ValueError):
            RenderSpec(what='histogram')
        with pytest.raises(ValueError):
            RenderSpec(what='circle_images', resolution=32)
        with pytest.raises(ValueError):
            RenderSpec(what='circle_images', radii=(0.5, 1.0))
        with pytest.raises(ValueError):
            RenderSpec(what='error_heatmap')

    def test_obrazy_okregow(self, tmp_path):
        m = decompose(regular_polygon_step(5), 64)
        path = render_svg(m, RenderSpec(what='circle_images', radii=(0.3, 0.6, 0.9),
                                        output=str(tmp_path / "c.svg")))
        text = open(path).read()
        assert text.startswith('<?xml')
        assert text.count('class="circle"') == 3
        assert text.count('class="radial"') == 12

    def test_powtarzalnosc(self, tmp_path):
        m = decompose(regular_polygon_step(6), 64)
        first = render_svg(m, RenderSpec(what='boundary_image', output=str(tmp_path / "a.svg")))
        second = render_svg(m, RenderSpec(what='boundary_image', output=str(tmp_path / "b.svg")))
        assert open(first).read() == open(second).read()

    def test_nakladka_wielokata(self, tmp_path):
        m = decompose(regular_polygon_step(4), 64)
        text = open(render_svg(m, RenderSpec(what='polygon_overlay', output=str(tmp_path / "p.svg")))).read()
        assert 'class="polygon"' in text
        assert 'class="boundary"' in text

    def test_nakladka_pieciokata_obraz_w_wielokacie(self, tmp_path):
        m = decompose(regular_polygon_step(5), 64)
        spec = RenderSpec(what='polygon_overlay', output=str(tmp_path / "p5.svg"))
        render_svg(m, spec)
        polygon = polygon_from_step(m.source)
        for kind, points in image_curves(m, spec):
            assert polygon.contains(points, tol=1e-6).all(), kind

    def test_mapa_bledu(self, tmp_path):
        m = decompose(regular_polygon_step(8), 64)
        spec = RenderSpec(what='error_heatmap', radii=(0.5,), resolution=64,
                          output=str(tmp_path / "e.svg"), target=catalog_target('polygon_identity'))
        text = open(render_svg(m, spec)).read()
        assert text.count('class="cell"') > 0


# ========== Kody wyjścia CLI ==========

class TestRunCommand:

    def test_bez_argumentow(self):
        assert run_command([]) == 1

    def test_wersja(self):
        assert run_command(['--version']) == 0

    def test_nieznana_komenda(self):
        assert run_command(['nieistniejaca']) == 1

    def test_brak_pliku(self, tmp_path):
        assert run_command(['eval', str(tmp_path / "missing.json"), '-p', '0']) == 1

    def test_uszkodzony_plik(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"arcs": 5}')
        assert run_command(['eval', str(path), '-p', '0']) == 1

    def test_eval_do_csv(self, square_spec, tmp_path):
        out = str(tmp_path / "values.csv")
        assert run_command(['eval', square_spec, '-p', '0', '-p', '0.1+0.2j', '-o', out]) == 0
        with open(out) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['re_z', 'im_z', 're_f', 'im_f']
        assert len(rows) == 3
        assert abs(float(rows[1][2])) < 1e-14

    def test_eval_bez_punktow(self, square_spec):
        assert run_command(['eval', square_spec]) == 1

    def test_certify_kwadrat(self, square_spec, tmp_path):
        out = str(tmp_path / "cert.json")
        residual = str(tmp_path / "residual.json")
        assert run_command(['certify', square_spec, '-o', out, '--residual', residual]) == 0
        data = json.loads(open(out).read())
        assert data['certificate']['verdict'] == 'univalent'
        assert data['config']['radii'] == [0.5, 0.9, 0.99]
        assert 'convergence_slope' in json.loads(open(residual).read())['residual']

    def test_certify_przeciecie(self, crossing_spec):
        assert run_command(['certify', crossing_spec]) == 2

    def test_certify_mapa_stala(self, tmp_path):
        path = str(tmp_path / "const.json")
        dump_step_function(validate_step_function([(0.0, 1j)]), path)
        assert run_command(['certify', path]) == 1

    def test_coeffs(self, square_spec, tmp_path):
        out = str(tmp_path / "coeffs.csv")
        assert run_command(['coeffs', square_spec, '--kmax', '4', '-o', out]) == 0
        with open(out) as f:
            assert len(list(csv.reader(f))) == 1 + 9

    def test_coeffs_blaschke(self, tmp_path):
        b_path = str(tmp_path / "b.json")
        schur = str(tmp_path / "schur.csv")
        dump_blaschke(FiniteBlaschke.from_zeros([0.0, 0.0]), b_path)
        assert run_command(['coeffs', '--blaschke', b_path, '--schur-out', schur]) == 0
        with open(schur) as f:
            rows = list(csv.reader(f))
        assert len(rows) == 1 + 3

    def test_coeffs_bez_wejscia(self):
        assert run_command(['coeffs']) == 1

    def test_approx(self, tmp_path):
        out = str(tmp_path / "report.json")
        code = run_command(['approx', '--target', 'polygon_identity', '--n', '6', '--budget', '100',
                            '--seed', '3', '-o', out])
        assert code == 0
        data = json.loads(open(out).read())
        assert data['config']['seed'] == 3
        assert 'timing' not in data

    def test_approx_niepoprawne_t(self):
        assert run_command(['approx', '--target', 'polygon_identity', '--t', '1.5', '--n', '6']) == 1

    def test_poles(self, tmp_path):
        base = str(tmp_path / "hex.json")
        dump_step_function(regular_polygon_step(6), base)
        out_csv = str(tmp_path / "family.csv")
        assert run_command(['poles', '--family', base, '--merge', '0,1', '--deltas', '0.5,0.2',
                            '--csv', out_csv]) == 0
        with open(out_csv) as f:
            assert len(list(csv.reader(f))) == 3

    def test_poles_zla_para(self, tmp_path):
        base = str(tmp_path / "hex.json")
        dump_step_function(regular_polygon_step(6), base)
        assert run_command(['poles', '--family', base, '--merge', '0,3']) == 1

    def test_render_powtarzalny(self, square_spec, tmp_path):
        first, second = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
        assert run_command(['render', square_spec, '--what', 'circle_images', '-o', first]) == 0
        assert run_command(['render', square_spec, '--what', 'circle_images', '-o', second]) == 0
        assert open(first).read() == open(second).read()

    def test_render_wielokat_z_przecieciem(self, crossing_spec, tmp_path):
        out = str(tmp_path / "x.svg")
        assert run_command(['render', crossing_spec, '--what', 'polygon_overlay', '-o', out]) == 2


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
