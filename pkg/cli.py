#!/usr/bin/env python3
"""
CLI dla stepmap
Interfejs wiersza poleceń: ewaluacja, współczynniki, certyfikacja, aproksymacja, bieguny, rysunki
"""

import os
import sys
from typing import List, Sequence

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from stepmap_blaschke import SchurDecomposition, boundary_unimodularity, export_schur_csv, load_blaschke
from stepmap_boundary import load_step_function, polygon_from_step, total_variation
from stepmap_config import VERSION, load_settings, setup_logging
from stepmap_elliptic import export_residual_json, system_residual
from stepmap_errors import StepMapError
from stepmap_harmonic import decompose, dilatation, export_coefficients_csv, export_grid_csv, fourier_coefficients
from stepmap_pipeline import CATALOG, PipelineConfig, catalog_target, run_pipeline, t_dilate
from stepmap_poles import coalescing_family, export_family_csv, export_family_json
from stepmap_render import RENDER_KINDS, RenderSpec, render_svg
from stepmap_univalence import CertifyConfig, certify, export_certificate

console = Console()


def _float_list(value: str) -> List[float]:
    try:
        return [float(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise click.BadParameter(f"Oczekiwano listy liczb oddzielonych przecinkami: {value!r}")


def _int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise click.BadParameter(f"Oczekiwano listy liczb całkowitych oddzielonych przecinkami: {value!r}")


def _output(ctx, path):
    """Względne ścieżki wyjściowe trafiają do STEPMAP_OUTPUT_DIR"""
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(ctx.obj['settings'].output_dir, path)


@click.group()
@click.option('--log-level', '-l', default=None, help='Poziom logowania (domyślnie STEPMAP_LOG_LEVEL)')
@click.version_option(VERSION, prog_name='stepmap')
@click.pass_context
def cli(ctx, log_level):
    """stepmap - jednolistne odwzorowania harmoniczne z funkcji schodkowych"""
    ctx.ensure_object(dict)
    settings = load_settings()
    setup_logging(log_level or settings.log_level)
    ctx.obj['settings'] = settings


@cli.command(name='eval')
@click.argument('map_spec', type=click.Path(exists=True, dir_okay=False))
@click.option('--point', '-p', 'points', multiple=True, help='Punkt z, np. 0.1+0.2j (można powtarzać)')
@click.option('--grid', '-g', type=int, default=0, help='Siatka g×g w |z| <= radius zamiast punktów')
@click.option('--radius', '-r', type=float, default=0.9, help='Promień siatki')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Plik CSV z wartościami')
@click.pass_context
def eval_command(ctx, map_spec, points, grid, radius, out):
    """Wartości rozszerzenia Poissona w podanych punktach"""
    out = _output(ctx, out)
    sf = load_step_function(map_spec)
    if grid:
        axis = np.linspace(-radius, radius, grid)
        zz = (axis[None, :] + 1j * axis[:, None]).ravel()
        z = zz[np.abs(zz) <= radius]
    else:
        try:
            z = np.array([complex(p.replace(' ', '')) for p in points], dtype=complex)
        except ValueError as e:
            raise click.BadParameter(f"Niepoprawny punkt: {e}")
        if z.size == 0:
            raise click.UsageError("Podaj --point albo --grid")
    m = decompose(sf, ctx.obj['settings'].truncation)
    values = np.atleast_1d(m(z))

    if out:
        export_grid_csv(z, values, out)
        console.print(f"[green]Zapisano {len(z)} wartości do {out}[/green]")
    if not out or len(z) <= 20:
        table = Table(title=f"f(z) - {sf.step_count} łuków")
        table.add_column("z", style="cyan")
        table.add_column("f(z)", style="green")
        for zi, wi in zip(z[:20], values[:20]):
            table.add_row(f"{zi:.6g}", f"{wi:.12g}")
        console.print(table)
    if sf.is_degenerate:
        console.print(f"[yellow]{sf.degeneracy_note}[/yellow]")
    return 0


@cli.command()
@click.argument('map_spec', type=click.Path(exists=True, dir_okay=False), required=False)
@click.option('--kmax', '-k', type=int, default=16, help='Współczynniki c_k dla |k| <= kmax')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Plik CSV (k, re, im)')
@click.option('--blaschke', '-b', type=click.Path(exists=True, dir_okay=False),
              help='Plik iloczynu Blaschkego - eksport parametrów Schura')
@click.option('--schur-out', type=click.Path(dir_okay=False), help='Plik CSV z parametrami Schura')
@click.pass_context
def coeffs(ctx, map_spec, kmax, out, blaschke, schur_out):
    """Współczynniki Fouriera funkcji schodkowej / parametry Schura iloczynu Blaschkego"""
    out, schur_out = _output(ctx, out), _output(ctx, schur_out)
    if not map_spec and not blaschke:
        raise click.UsageError("Podaj plik mapy albo --blaschke")

    if map_spec:
        sf = load_step_function(map_spec)
        coefficients = fourier_coefficients(sf, range(-kmax, kmax + 1))
        variation = total_variation(sf)
        if out:
            export_coefficients_csv(coefficients, out)
            console.print(f"[green]Zapisano {len(coefficients)} współczynników do {out}[/green]")
        table = Table(title=f"c_k (wariacja całkowita {variation.total_variation:.6g})")
        table.add_column("k", justify="right", style="cyan")
        table.add_column("c_k", style="green")
        for k in sorted(coefficients)[:2 * min(kmax, 8) + 1]:
            table.add_row(str(k), f"{coefficients[k]:.12g}")
        console.print(table)

    if blaschke:
        b = load_blaschke(blaschke)
        decomposition = b.schur_params
        console.print(f"[bold]Iloczyn Blaschkego stopnia {b.degree}[/bold], "
                      f"max||b|-1| na okręgu = {boundary_unimodularity(b):.2e}")
        for j, gamma in enumerate(decomposition):
            console.print(f"  γ_{j} = {gamma:.12g}  (|γ| = {abs(gamma):.12g})")
        if schur_out:
            export_schur_csv(SchurDecomposition(params=tuple(decomposition), terminated=True), schur_out)
            console.print(f"[green]Zapisano parametry Schura do {schur_out}[/green]")
    return 0


@cli.command(name='certify')
@click.argument('map_spec', type=click.Path(exists=True, dir_okay=False))
@click.option('--radii', default='0.5,0.9,0.99', help='Promienie okręgów (lista)')
@click.option('--probe-grid', type=int, default=11, help='Siatka punktów próbnych')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Plik JSON z certyfikatem')
@click.option('--residual', type=click.Path(dir_okay=False), help='Plik JSON z residuum układu eliptycznego')
@click.pass_context
def certify_command(ctx, map_spec, radii, probe_grid, out, residual):
    """Certyfikat jednolistności (kod wyjścia 0/1/2 = univalent/inconclusive/not_univalent)"""
    out, residual = _output(ctx, out), _output(ctx, residual)
    sf = load_step_function(map_spec)
    settings = ctx.obj['settings']
    m = decompose(sf, settings.truncation)
    config = CertifyConfig(radii=tuple(_float_list(radii)), probe_grid=probe_grid)
    certificate = certify(m, config)

    colour = {'univalent': 'green', 'inconclusive': 'yellow', 'not_univalent': 'red'}[certificate.verdict.value]
    console.print(f"[bold {colour}]Werdykt: {certificate.verdict.value}[/bold {colour}]")
    console.print(f"  sup|a| ≈ {certificate.dilatation_sup:.9f}, orientacja: {certificate.orientation}")
    for r, row in zip(certificate.radii_tested, certificate.winding_numbers):
        console.print(f"  r = {r}: indeksy {sorted(set(row))} ({len(row)} punktów)")
    if certificate.witnesses is not None:
        p, q = certificate.witnesses
        console.print(f"  [red]Świadek kolizji: f({p:.9g}) = f({q:.9g})[/red]")

    if out:
        export_certificate(certificate, out, extra={'version': VERSION, 'settings': settings.to_dict(),
                                                    'config': config.to_dict(), 'map': sf.to_dict()})
        console.print(f"[green]Zapisano certyfikat do {out}[/green]")
    if residual:
        if certificate.dilatation_sup >= 1.0:
            console.print("[yellow]sup|a| >= 1 - pomijam residuum układu eliptycznego[/yellow]")
        else:
            report = system_residual(m, dilatation(m))
            export_residual_json(report, residual, extra={'version': VERSION, 'settings': settings.to_dict()})
            console.print(f"[green]Residuum układu: nachylenie {report.convergence_slope}, zapisano do {residual}[/green]")
    return certificate.exit_code


@cli.command()
@click.option('--target', type=click.Choice(CATALOG), default='koebe_harmonic', help='Odwzorowanie docelowe')
@click.option('--t', 't', type=float, default=0.9, help='Parametr t w f_t(z) = F(tz)/t')
@click.option('--n', 'n_schedule', default='8,16,32,64', help='Harmonogram liczby boków (lista)')
@click.option('--rho', type=float, default=0.9, help='ρ w a_n(ρz)')
@click.option('--degree', type=int, default=None, help='Stopień obcięcia Blaschkego (domyślnie n - 2)')
@click.option('--budget', type=int, default=2000, help='Limit ewaluacji Nelder-Mead na każde 8 skoków')
@click.option('--seed', type=int, default=None, help='Ziarno (domyślnie STEPMAP_SEED)')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Plik JSON z raportem')
@click.option('--svg-dir', type=click.Path(file_okay=False), help='Katalog na rysunki P_n vs obraz brzegu')
@click.option('--timing/--no-timing', default=False, help='Dołącz czasy do raportu JSON')
@click.pass_context
def approx(ctx, target, t, n_schedule, rho, degree, budget, seed, out, svg_dir, timing):
    """Aproksymacja odwzorowania docelowego mapami schodkowymi"""
    out, svg_dir = _output(ctx, out), _output(ctx, svg_dir)
    settings = ctx.obj['settings']
    config = PipelineConfig(t=t, n_schedule=tuple(_int_list(n_schedule)), rho=rho, blaschke_degree=degree,
                            budget=budget, seed=settings.seed if seed is None else seed)
    report = run_pipeline(target, config)

    table = Table(title=f"{report.target}, t = {t}")
    table.add_column("n", justify="right", style="cyan")
    table.add_column("certyfikat")
    for r in config.error_radii:
        table.add_column(f"sup |z|<={r}", justify="right")
    table.add_column("|a - a_n(ρz)|", justify="right")
    for record in report.records:
        gap = record.fit.dilatation_gap
        table.add_row(str(record.n), f"[green]{record.fit.certificate.verdict.value}[/green]",
                      *[f"{record.sup_errors[float(r)]:.4g}" for r in config.error_radii],
                      f"{gap:.4g}" if gap is not None else "-")
    for rejected in report.rejected:
        table.add_row(str(rejected.n), f"[red]{rejected.reason}[/red]", *["-"] * (len(config.error_radii) + 1))
    console.print(table)

    if out:
        report.export_json(out, include_timing=timing)
        console.print(f"[green]Zapisano raport do {out}[/green]")
    if svg_dir:
        os.makedirs(svg_dir, exist_ok=True)
        for record in report.records:
            path = os.path.join(svg_dir, f"overlay_n{record.n}.svg")
            render_svg(record.fit.map, RenderSpec(what='polygon_overlay', output=path, polygon=record.polygon))
        console.print(f"[green]Zapisano rysunki do {svg_dir}[/green]")
    return 0 if report.records else 2


@cli.command()
@click.option('--family', 'family_spec', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Plik mapy bazowej rodziny')
@click.option('--merge', required=True, help='Para sąsiednich skoków i,j')
@click.option('--deltas', default='0.2,0.1,0.05,0.025', help='Malejące odstępy δ (lista)')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Plik JSON z raportem')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), help='Tabela rząd vs δ (CSV)')
@click.pass_context
def poles(ctx, family_spec, merge, deltas, out, csv_path):
    """Rzędy biegunów w rodzinie ze zlewającymi się skokami"""
    out, csv_path = _output(ctx, out), _output(ctx, csv_path)
    pair = _int_list(merge)
    if len(pair) != 2:
        raise click.BadParameter("--merge wymaga dokładnie dwóch indeksów i,j")
    base = load_step_function(family_spec)
    family = coalescing_family(base, (pair[0], pair[1]), _float_list(deltas))

    table = Table(title=f"Rodzina {tuple(pair)}: {len(family.members)} elementów")
    table.add_column("δ", justify="right", style="cyan")
    table.add_column("werdykt")
    for name in ('jump_i', 'jump_j', 'midpoint'):
        table.add_column(f"rząd h ({name})", justify="right")
    for member in family.members:
        table.add_row(f"{member.delta:g}", member.certificate.verdict.value,
                      *[f"{member.h_orders[name]:.3f}" for name in ('jump_i', 'jump_j', 'midpoint')])
    console.print(table)
    if family.truncated:
        console.print(f"[yellow]Rodzina obcięta: {', '.join(family.flags)}[/yellow]")

    if out:
        export_family_json(family, out, extra={'settings': ctx.obj['settings'].to_dict(),
                                               'deltas': _float_list(deltas)})
        console.print(f"[green]Zapisano raport do {out}[/green]")
    if csv_path:
        export_family_csv(family, csv_path)
        console.print(f"[green]Zapisano tabelę do {csv_path}[/green]")
    return 0


@cli.command()
@click.argument('map_spec', type=click.Path(exists=True, dir_okay=False))
@click.option('--what', type=click.Choice(RENDER_KINDS), default='circle_images', help='Rodzaj rysunku')
@click.option('--radii', default='0.5,0.9', help='Promienie okręgów (lista)')
@click.option('--resolution', type=int, default=512, help='Szerokość w pikselach (>= 64)')
@click.option('--target', type=click.Choice(CATALOG), default=None, help='Odwzorowanie docelowe dla error_heatmap')
@click.option('--t', 't', type=float, default=0.9, help='Parametr t odwzorowania docelowego')
@click.option('--out', '-o', type=click.Path(dir_okay=False), default='render.svg', help='Plik SVG')
@click.pass_context
def render(ctx, map_spec, what, radii, resolution, target, t, out):
    """Rysunek SVG mapy schodkowej"""
    out = _output(ctx, out)
    sf = load_step_function(map_spec)
    m = decompose(sf, ctx.obj['settings'].truncation)
    target_map = t_dilate(catalog_target(target), t) if target else None
    polygon = polygon_from_step(sf) if what == 'polygon_overlay' else None
    spec = RenderSpec(what=what, radii=tuple(_float_list(radii)), resolution=resolution, output=out,
                      polygon=polygon, target=target_map)
    render_svg(m, spec)
    console.print(f"[green]Zapisano {out}[/green]")
    return 0


def run_command(argv: Sequence[str]) -> int:
    """
    Uruchamia CLI i zwraca kod wyjścia

    0 - sukces, 1 - błąd użycia / wejścia-wyjścia (także inconclusive), 2 - porażka dziedzinowa
    """
    argv = list(argv)
    if not argv:
        with click.Context(cli, info_name='stepmap') as ctx:
            console.print(cli.get_help(ctx))
        return 1
    try:
        result = cli.main(args=argv, prog_name='stepmap', standalone_mode=False)
    except click.exceptions.UsageError as e:
        console.print(f"[red]{e.format_message()}[/red]")
        if e.ctx is not None:
            console.print(e.ctx.get_usage())
        return 1
    except click.exceptions.Abort:
        return 1
    except StepMapError as e:
        console.print(f"[red]{type(e).__name__}: {e.message}[/red]")
        return 2 if e.is_domain_failure() else 1
    except (OSError, ValueError) as e:
        console.print(f"[red]Błąd: {e}[/red]")
        return 1
    return result if isinstance(result, int) else 0


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':
    main()
