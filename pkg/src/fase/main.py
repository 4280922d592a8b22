import json
import logging
import sys
import time
from contextlib import nullcontext

import click
from dotenv import load_dotenv
from threadpoolctl import threadpool_limits

from fase.bench import run_bench, write_csv
from fase.concealment import area_shape, conceal_image, make_grid_loss, parse_block
from fase.dictionary import GENERATED_FAMILIES, generate_dictionary, parse_dictionary_spec, save_dictionary
from fase.errors import FaseError
from fase.fast import GramTable, tables_for
from fase.grid import ExtrapConfig, LossMask, build_weight_field, psnr_over_region
from fase.pgm import mask_from_pgm, mask_to_pgm, read_pgm, write_pgm
from fase.report import ConcealReport
from fase.settings import get_settings
from fase.verify import check_area, check_caps, verify_equivalence


load_dotenv()

logger = logging.getLogger(__name__)

SETTINGS = get_settings()

EXIT_VERIFY_FAILED = 2


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(',') if v]
    except ValueError as e:
        raise click.BadParameter(f'expected comma separated integers, got {value!r}') from e


def _size(value: str) -> tuple[int, int]:
    rows, _, cols = value.lower().partition('x')
    try:
        return int(rows), int(cols or rows)
    except ValueError as e:
        raise click.BadParameter(f'expected MxN, got {value!r}') from e


def _config(iters: int, gamma: float, rho: float) -> ExtrapConfig:
    return ExtrapConfig.build(iterations=iters, gamma=gamma, rho_hat=rho)


def extrapolation_options(fn):
    fn = click.option('--rho', 'rho', type=float, default=SETTINGS.rho_hat, show_default=True,
                      help='Decay of the isotropic weighting function.')(fn)
    fn = click.option('--gamma', 'gamma', type=float, default=SETTINGS.gamma, show_default=True,
                      help='Fraction of the projection taken as expansion coefficient.')(fn)
    fn = click.option('--iters', 'iters', type=int, default=SETTINGS.iterations, show_default=True,
                      help='Number of model generation iterations.')(fn)
    fn = click.option('--dict', 'dict_spec', default='dct', show_default=True,
                      help='dft | dct | wht | bdft | union:a+b | file:path')(fn)
    return fn


@click.group()
@click.option('--log-level', 'log_level', default=SETTINGS.log_level, show_default=True)
def cli(log_level: str):
    """Selective Extrapolation and Fast Selective Extrapolation tools."""
    logging.basicConfig(level=log_level.upper())


@cli.command()
@click.argument('image', type=click.Path(exists=True, dir_okay=False))
@click.argument('mask', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False))
@extrapolation_options
@click.option('--block', 'block', default=f'{SETTINGS.block}x{SETTINGS.block}', show_default=True,
              help='Conceal block-wise with WxH blocks centred on the lost regions.')
@click.option('--whole-image', 'whole_image', is_flag=True, help='Extrapolate the whole image as one area.')
@click.option('--support', 'support', type=int, default=SETTINGS.support, show_default=True,
              help='Width of the support ring around each block.')
@click.option('--tables', 'tables_path', type=click.Path(dir_okay=False), default=None,
              help='FGRM table file to load, or to create when missing.')
@click.option('--fft/--no-fft', 'use_fft', default=None, help='Force or forbid FFT table construction.')
@click.option('--reference', 'reference_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Undistorted image for PSNR reporting.')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None,
              help='Write the JSON report here instead of stdout.')
@click.option('--single-thread', 'single_thread', is_flag=True, help='Conceal blocks sequentially on one core.')
def conceal(image, mask, output, dict_spec, iters, gamma, rho, block, whole_image, support, tables_path, use_fft,
            reference_path, report_path, single_thread):
    """Conceal the samples marked 0 in MASK and write the restored image."""
    try:
        cfg = _config(iters, gamma, rho)
        pixels = read_pgm(image)
        lost = mask_from_pgm(read_pgm(mask))
        if lost.shape != pixels.shape:
            raise click.ClickException(f'Mask {lost.shape} and image {pixels.shape} differ in size')
        reference = read_pgm(reference_path) if reference_path else None
        block_shape = None if whole_image else parse_block(block)
        area = area_shape(pixels.shape, block_shape, support)
        check_area(*area, SETTINGS.max_area)
        dictionary = parse_dictionary_spec(dict_spec, *area)
        check_caps(dictionary, SETTINGS.max_area, SETTINGS.max_dict)

        start = time.perf_counter()
        limits = threadpool_limits(limits=1) if single_thread else nullcontext()
        with limits:
            restored, areas = conceal_image(
                pixels, lost, dictionary, cfg,
                block=block_shape, support=support, reference=reference, tables_path=tables_path,
                use_fft=use_fft, fft_threshold=SETTINGS.fft_threshold, workers=SETTINGS.workers,
                single_thread=single_thread,
            )
        write_pgm(output, restored)
        report = ConcealReport(
            image=str(image),
            mask=str(mask),
            reference=str(reference_path) if reference_path else None,
            rows=pixels.shape[0],
            cols=pixels.shape[1],
            dictionary=dict_spec,
            dict_size=dictionary.size,
            iterations=cfg.iterations,
            gamma=cfg.gamma,
            rho_hat=cfg.rho_hat,
            block=block_shape,
            support=support if block_shape else None,
            lost=int(lost.sum()),
            psnr=psnr_over_region(reference, restored, lost) if reference is not None and lost.any() else None,
            seconds=time.perf_counter() - start,
            areas=areas,
        )
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    payload = report.model_dump_json(indent=2)
    if report_path:
        with open(report_path, 'w') as fh:
            fh.write(payload)
    else:
        click.echo(payload)


@cli.command()
@click.option('--size', 'size', default='8x8', show_default=True, help='Extrapolation area MxN.')
@extrapolation_options
@click.option('--loss', 'loss', default='4x4', show_default=True, help='Central loss block MxN.')
@click.option('--trials', 'trials', type=int, default=20, show_default=True)
@click.option('--seed', 'seed', type=int, default=0, show_default=True)
@click.option('--signal', 'signal', type=click.Choice(['random', 'zero']), default='random', show_default=True)
@click.option('--tables', 'tables_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Use this FGRM table instead of building one.')
@click.option('--tolerance', 'tolerance', type=float, default=1e-9, show_default=True)
def verify(size, dict_spec, iters, gamma, rho, loss, trials, seed, signal, tables_path, tolerance):
    """Check that FaSE reproduces SE on seeded random signals."""
    try:
        cfg = _config(iters, gamma, rho)
        rows, cols = _size(size)
        loss_rows, loss_cols = _size(loss)
        check_area(rows, cols, SETTINGS.max_area)
        dictionary = parse_dictionary_spec(dict_spec, rows, cols)
        check_caps(dictionary, SETTINGS.max_area, SETTINGS.max_dict)
        mask = LossMask.central_block(rows, cols, loss_rows, loss_cols)
        tables = GramTable.load(tables_path) if tables_path else None
        report = verify_equivalence(
            dictionary, mask, cfg,
            trials=trials, seed=seed, signal=signal, tables=tables, tolerance=tolerance,
            dictionary_label=dict_spec,
        )
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    click.echo(report.model_dump_json(indent=2))
    if not report.passed:
        sys.exit(EXIT_VERIFY_FAILED)


@cli.command()
@click.option('--sizes', 'sizes', default='16', show_default=True, help='Comma separated M=N values.')
@click.option('--iters', 'iters', default='25,250', show_default=True, help='Comma separated iteration counts.')
@click.option('--dict', 'dict_spec', default='dct', show_default=True)
@click.option('--dict-sizes', 'dict_sizes', default=None, help='Comma separated leading-atom counts.')
@click.option('--algos', 'algos', default='se,fase', show_default=True)
@click.option('--gamma', 'gamma', type=float, default=SETTINGS.gamma, show_default=True)
@click.option('--rho', 'rho', type=float, default=SETTINGS.rho_hat, show_default=True)
@click.option('--warmup', 'warmup', type=int, default=1, show_default=True)
@click.option('--repeat', 'repeat', type=int, default=3, show_default=True)
@click.option('--seed', 'seed', type=int, default=0, show_default=True)
@click.option('--measure/--no-measure', 'measure', default=True, show_default=True,
              help='Add instrumented operation counts.')
@click.option('--tables-rows', 'table_rows', is_flag=True, help='Add table generation timing rows.')
@click.option('--fft', 'use_fft', is_flag=True, help='Build Gram tables by FFT (DFT dictionaries).')
@click.option('--single-thread', 'single_thread', is_flag=True, help='Limit numerical libraries to one thread.')
@click.option('--output', 'output', type=click.File('w'), default='-')
def bench(sizes, iters, dict_spec, dict_sizes, algos, gamma, rho, warmup, repeat, seed, measure, table_rows,
          use_fft, single_thread, output):
    """Time SE and FaSE over a parameter grid and emit CSV."""
    try:
        limits = threadpool_limits(limits=1) if single_thread else nullcontext()
        with limits:
            rows = run_bench(
                _int_list(sizes), _int_list(iters),
                dict_spec=dict_spec,
                dict_sizes=_int_list(dict_sizes) if dict_sizes else (None,),
                algos=[a for a in algos.split(',') if a],
                gamma=gamma, rho_hat=rho, warmup=warmup, repeat=repeat, seed=seed,
                measure=measure, table_rows=table_rows, use_fft=use_fft,
            )
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    write_csv(rows, output)


@cli.command()
@click.argument('output', type=click.Path(dir_okay=False))
@click.option('--dict', 'dict_spec', default='dct', show_default=True)
@click.option('--size', 'size', default=None, help='Area MxN with a central loss (see --loss).')
@click.option('--loss', 'loss', default=None, help='Central loss block MxN.')
@click.option('--mask', 'mask_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='PGM mask of the extrapolation area (0 marks lost samples).')
@click.option('--rho', 'rho', type=float, default=SETTINGS.rho_hat, show_default=True)
@click.option('--fft', 'use_fft', is_flag=True, help='Build by FFT (pure DFT dictionaries).')
def tables(output, dict_spec, size, loss, mask_path, rho, use_fft):
    """Build the Gram table for one dictionary and loss pattern and write it as FGRM."""
    try:
        if mask_path:
            mask = LossMask(mask_from_pgm(read_pgm(mask_path)))
        elif size and loss:
            rows, cols = _size(size)
            mask = LossMask.central_block(rows, cols, *_size(loss))
        else:
            raise click.UsageError('Give either --mask or both --size and --loss')
        check_area(*mask.shape, SETTINGS.max_area)
        dictionary = parse_dictionary_spec(dict_spec, *mask.shape)
        check_caps(dictionary, SETTINGS.max_area, SETTINGS.max_dict)
        weight = build_weight_field(mask, rho)
        table = tables_for(dictionary, weight, use_fft=use_fft, workers=SETTINGS.workers)
        table.save(output)
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    click.echo(json.dumps({'path': str(output), 'size': table.size, 'provenance': f'{table.provenance:#018x}'}))


@cli.command('make-mask')
@click.argument('output', type=click.Path(dir_okay=False))
@click.option('--size', 'size', required=True, help='Image size MxN (rows x cols).')
@click.option('--block', 'block', type=int, default=SETTINGS.block, show_default=True)
@click.option('--spacing', 'spacing', type=int, default=48, show_default=True)
@click.option('--margin', 'margin', type=int, default=24, show_default=True)
def make_mask(output, size, block, spacing, margin):
    """Write a PGM mask with a regular lattice of lost blocks."""
    try:
        lost = make_grid_loss(*_size(size), block=block, spacing=spacing, margin=margin)
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    write_pgm(output, mask_to_pgm(lost))
    click.echo(json.dumps({'path': str(output), 'lost': int(lost.sum()), 'blocks': int(lost.sum()) // block ** 2}))


@cli.command('dict')
@click.argument('output', type=click.Path(dir_okay=False))
@click.option('--kind', 'kind', type=click.Choice(GENERATED_FAMILIES), default='dct', show_default=True)
@click.option('--size', 'size', default='8x8', show_default=True)
def dictionary_command(output, kind, size):
    """Write a generated dictionary as an FDIC file."""
    try:
        dictionary = generate_dictionary(kind, *_size(size))
    except FaseError as e:
        raise click.ClickException(str(e)) from e
    save_dictionary(dictionary, output)
    click.echo(json.dumps({'path': str(output), 'atoms': dictionary.size}))


if __name__ == '__main__':
    cli()
