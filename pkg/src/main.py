#!/usr/bin/env python3
"""
Main CLI for the AM quality monitor.

Commands:
    gen         - Render a synthetic layer-image dataset (or a monitor stream)
    train       - Train the CNN on a dataset; writes checkpoint and trace
    eval        - Confusion matrix and metric reports for a checkpoint
    sweep       - Accuracy vs epoch, learning rate or batch size
    monitor     - Go/no-go monitoring of a frame stream
"""

import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import ValidationError
from tabulate import tabulate

from imagegen import GenerationConfig, ProcessState, generate_dataset, load_dataset, render_stream
from imagegen.process import GRADE_NAMES, QualityGrade, set_point_to_grade_mapping
from metrics import (
    cell_accuracies,
    collapse_classes,
    confusion_matrix,
    grid_region_report,
    macro_report,
    predicted_grade_grid,
    write_confusion_csv,
    write_report_csv,
)
from monitor import MonitorConfig, MonitorSession, run_stream
from nn import Hyperparams, ModelConfig, evaluate, load_checkpoint, save_checkpoint, train, write_trace_csv
from sweep import SweepSpec, batch_sweep, compare_epoch_traces, emit_csv, lr_sweep, write_epoch_csv
from utils import AMQError, Config, ConfigurationError, atomic_path
from utils.logger import setup_logger

logger = setup_logger(__name__)

CHECKPOINT_NAME = 'model.amqm'
TRACE_NAME = 'trace.csv'
SIGNAL_LOG_NAME = 'signals.tsv'


def _progress() -> bool:
    return sys.stderr.isatty()


def _banner(title: str) -> None:
    logger.info("=" * 80)
    logger.info(title)
    logger.info("=" * 80)


def _show_config(title: str, params: Dict[str, object], seed: Optional[int]) -> None:
    """Log the resolved settings and master seed before a command acts."""
    _banner(title)
    rows = [(name, value) for name, value in sorted(params.items()) if name != 'config']
    for line in tabulate(rows, headers=['setting', 'value'], tablefmt='simple').splitlines():
        logger.info(line)
    logger.info(f"Master seed: {seed if seed is not None else 'not used'}")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(';', ',').split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config_file(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[str]:
    """
    key=value file of defaults for the invoked subcommand; flags given on
    the command line still win.
    """
    if value is None:
        return value
    entries = dotenv_values(value)
    ctx.meta['config_entries'] = {k.strip().lower().replace('-', '_'): v for k, v in entries.items()}
    return value


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('--config', 'config', type=click.Path(exists=True, dir_okay=False), callback=_load_config_file,
              expose_value=True, is_eager=True, help='key=value file of option defaults for the subcommand')
@click.pass_context
def cli(ctx, config):
    """AM quality monitor - synthetic data, CNN training, evaluation and monitoring"""
    entries = ctx.meta.get('config_entries')
    if not entries or ctx.invoked_subcommand is None:
        return
    command = cli.get_command(ctx, ctx.invoked_subcommand)
    params = {p.name: p for p in command.params if isinstance(p, click.Option)}
    unknown = sorted(set(entries) - set(params))
    if unknown:
        raise click.BadParameter(f"unknown keys for '{ctx.invoked_subcommand}': {', '.join(unknown)}",
                                 param_hint='--config')
    defaults = {}
    for key, raw in entries.items():
        option = params[key]
        if option.multiple:
            defaults[key] = [v.strip() for v in (raw or '').split(';') if v.strip()]
        elif option.nargs > 1:
            defaults[key] = (raw or '').replace(',', ' ').split()
        else:
            defaults[key] = raw
    ctx.default_map = {ctx.invoked_subcommand: defaults}


def out_option(f):
    return click.option('--out', default=lambda: Config.AMQ_OUT, show_default='$AMQ_OUT or out',
                        help='Output directory')(f)


@cli.command()
@click.option('--train-per-class', default=50, show_default=True, type=int, help='Train images per class')
@click.option('--test-per-class', default=10, show_default=True, type=int, help='Test images per class')
@click.option('--labels', type=click.Choice(['grade', 'setpoint']), default='grade', show_default=True)
@click.option('--image-size', default=64, show_default=True, type=int)
@click.option('--layers-per-run', default=10, show_default=True, type=int, help='Minimum layers per print run')
@click.option('--seed', default=0, show_default=True, type=int)
@click.option('--noise-sigma', default=0.02, show_default=True, type=float)
@click.option('--grade-override', multiple=True, metavar='SPEED,TEMP=GRADE',
              help='Replace the grade of one grid cell (repeatable)')
@click.option('--stream-at', nargs=2, type=float, default=None, metavar='SPEED TEMP',
              help='Render a monitor frame stream at this set point instead of a dataset')
@click.option('--frames', default=100, show_default=True, type=int, help='Stream length for --stream-at')
@click.option('--jobs', default=1, show_default=True, type=int, help='Parallel render workers')
@out_option
@click.pass_context
def gen(ctx, train_per_class, test_per_class, labels, image_size, layers_per_run, seed, noise_sigma,
        grade_override, stream_at, frames, jobs, out):
    """Generate a synthetic dataset and manifest."""
    _show_config("GENERATING SYNTHETIC LAYER IMAGES", ctx.params, seed)
    out_dir = _out_dir(out)

    if stream_at:
        state = ProcessState(*stream_at)
        paths = render_stream(state, frames, seed, out_dir, image_size=image_size, noise_sigma=noise_sigma)
        logger.info(f"✓ {len(paths)} frames in {out_dir}")
        return 0

    overrides = {}
    for item in grade_override:
        key, sep, grade = item.partition('=')
        if not sep:
            raise click.BadParameter(f"expected SPEED,TEMP=GRADE, got {item!r}", param_hint='--grade-override')
        overrides[key.strip()] = grade.strip()
    config = GenerationConfig(
        out_dir=out_dir, train_per_class=train_per_class, test_per_class=test_per_class, labels=labels,
        image_size=image_size, layers_per_run=layers_per_run, seed=seed, noise_sigma=noise_sigma,
        grade_overrides=overrides, n_jobs=jobs,
    )
    manifest = generate_dataset(config, progress=_progress())
    logger.info(f"✓ Manifest with {len(manifest)} rows in {out_dir}")
    return 0


@cli.command('train')
@click.option('--data', required=True, type=click.Path(exists=True, file_okay=False), help='Dataset directory')
@click.option('--labels', type=click.Choice(['grade', 'setpoint']), default='grade', show_default=True)
@click.option('--epochs', default=50, show_default=True, type=int)
@click.option('--lr', default=0.01, show_default=True, type=float, help='Learning rate')
@click.option('--batch-size', default=32, show_default=True, type=int)
@click.option('--seed', default=0, show_default=True, type=int)
@click.option('--conv-method', type=click.Choice(['im2col', 'direct']), default='im2col', show_default=True)
@click.option('--jobs', default=1, show_default=True, type=int, help='Threads per batch')
@out_option
@click.pass_context
def train_cmd(ctx, data, labels, epochs, lr, batch_size, seed, conv_method, jobs, out):
    """Train the CNN; writes model.amqm and trace.csv."""
    _show_config("TRAINING", ctx.params, seed)
    out_dir = _out_dir(out)
    dataset = load_dataset(Path(data), labels)
    model = ModelConfig.default(n_classes=dataset.n_classes, image_size=dataset.input_shape[-1])
    model = model.model_copy(update={'conv_method': conv_method})
    hyperparams = Hyperparams(epochs=epochs, learning_rate=lr, batch_size=batch_size, seed=seed)

    params, trace = train(model, dataset, hyperparams, n_jobs=jobs, progress=_progress())
    save_checkpoint(model, params, out_dir / CHECKPOINT_NAME)
    write_trace_csv(trace, out_dir / TRACE_NAME)
    if trace.diverged:
        logger.warning("Training diverged; the checkpoint holds the last finite parameters")
    logger.info(f"✓ Final test accuracy {trace.final.test_accuracy:.3f}")
    return 0


def _write_reports(cm, out_dir: Path, suffix: str, weighted: bool) -> None:
    report = macro_report(cm, weighted=weighted)
    write_confusion_csv(cm, out_dir / f"confusion_{suffix}.csv")
    write_report_csv(report, out_dir / f"metrics_{suffix}.csv")
    rows = [[name, *m.as_dict().values()] for name, m in zip(report.class_names, report.per_class)]
    rows.append(['macro', *report.macro.values()])
    table = tabulate(rows, headers=['class', 'precision', 'sensitivity', 'specificity', 'f_score', 'accuracy'],
                     floatfmt='.3f')
    logger.info(f"\n{suffix} classes (total accuracy {report.total_accuracy:.3f}):\n{table}")


@cli.command('eval')
@click.option('--data', required=True, type=click.Path(exists=True, file_okay=False), help='Dataset directory')
@click.option('--checkpoint', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--classes', type=click.Choice(['5', '21']), default=None,
              help='Label set; defaults to the checkpoint class count')
@click.option('--collapse', is_flag=True, help='Also report 21-class predictions merged into grades')
@click.option('--grid-report', is_flag=True, help='Per-cell accuracy over the speed x temperature grid')
@click.option('--weighted', is_flag=True, help='Support-weighted instead of macro averages')
@click.option('--jobs', default=1, show_default=True, type=int)
@out_option
@click.pass_context
def eval_cmd(ctx, data, checkpoint, classes, collapse, grid_report, weighted, jobs, out):
    """Evaluate a checkpoint on the test split."""
    _show_config("EVALUATION", ctx.params, None)
    out_dir = _out_dir(out)
    model, params = load_checkpoint(checkpoint)
    n_classes = int(classes) if classes else model.n_classes
    if n_classes != model.n_classes:
        raise ConfigurationError(f"--classes {n_classes} but the checkpoint predicts {model.n_classes} classes")
    if collapse and n_classes != 21:
        raise ConfigurationError("--collapse needs a 21-class checkpoint")

    dataset = load_dataset(Path(data), 'setpoint' if n_classes == 21 else 'grade')
    predicted = evaluate(model, params, dataset.x_test, n_jobs=jobs).argmax(axis=1)
    cm = confusion_matrix(dataset.y_test, predicted, n_classes, dataset.class_names)
    _write_reports(cm, out_dir, str(n_classes), weighted)

    predictions = pd.DataFrame({
        'filename': dataset.test_rows['filename'],
        'true': [dataset.class_names[i] for i in dataset.y_test],
        'predicted': [dataset.class_names[i] for i in predicted],
    })
    with atomic_path(out_dir / 'predictions.csv') as tmp:
        predictions.to_csv(tmp, index=False, lineterminator='\n')

    mapping = np.asarray(set_point_to_grade_mapping()) if n_classes == 21 else np.arange(n_classes)
    if collapse:
        merged = collapse_classes(cm, mapping, list(GRADE_NAMES))
        _write_reports(merged, out_dir, '5_collapsed', weighted)
        logger.info(f"Collapsing raised total accuracy {cm.total_accuracy():.3f} -> {merged.total_accuracy():.3f}")

    if grid_report:
        setpoints = dataset.test_rows['setpoint_class'].to_numpy()
        per_cell = cell_accuracies(setpoints, predicted == dataset.y_test)
        region = grid_region_report(per_cell)
        with atomic_path(out_dir / 'grid_report.csv') as tmp:
            region.cells.to_csv(tmp, index=False, lineterminator='\n', float_format='%.6f')
        with atomic_path(out_dir / 'predicted_grades.csv') as tmp:
            predicted_grade_grid(setpoints, mapping[predicted]).to_csv(tmp, lineterminator='\n')
        logger.info(f"Grid accuracy: {region.inside_mean:.3f} inside the high-accuracy region, "
                    f"{region.outside_mean:.3f} outside")
    logger.info(f"✓ Reports in {out_dir}")
    return 0


@cli.command()
@click.option('--data', required=True, type=click.Path(exists=True, file_okay=False), help='Dataset directory')
@click.option('--axis', type=click.Choice(['epoch', 'learning_rate', 'batch_size']), required=True)
@click.option('--values', required=True, help='Comma-separated, strictly increasing')
@click.option('--repetitions', default=3, show_default=True, type=int)
@click.option('--labels', type=click.Choice(['grade', 'setpoint']), default='grade', show_default=True)
@click.option('--epochs', default=50, show_default=True, type=int)
@click.option('--lr', default=0.01, show_default=True, type=float)
@click.option('--batch-size', default=32, show_default=True, type=int)
@click.option('--seed', default=0, show_default=True, type=int)
@click.option('--compare-lrs', default='', help='Extra learning rates overlaid on an epoch sweep')
@click.option('--jobs', default=1, show_default=True, type=int, help='Sweep points run in parallel')
@out_option
@click.pass_context
def sweep(ctx, data, axis, values, repetitions, labels, epochs, lr, batch_size, seed, compare_lrs, jobs, out):
    """Sweep one hyperparameter; writes a CSV."""
    _show_config(f"SWEEP OVER {axis.upper()}", ctx.params, seed)
    out_dir = _out_dir(out)
    spec = SweepSpec(
        axis=axis, values=_floats(values), repetitions=repetitions, labels=labels, dataset_dir=Path(data),
        hyperparams=Hyperparams(epochs=epochs, learning_rate=lr, batch_size=batch_size, seed=seed),
        compare_learning_rates=_floats(compare_lrs),
    )
    dataset = load_dataset(spec.dataset_dir, spec.labels)
    if axis == 'epoch':
        traces = compare_epoch_traces(spec, dataset, n_jobs=jobs, progress=_progress())
        path = write_epoch_csv(traces, out_dir / 'sweep_epoch.csv')
    else:
        run = lr_sweep if axis == 'learning_rate' else batch_sweep
        result = run(spec, dataset, n_jobs=jobs, progress=_progress())
        path = emit_csv(result, out_dir / f"sweep_{axis}.csv")
    logger.info(f"✓ Sweep written to {path}")
    return 0


@cli.command()
@click.option('--checkpoint', required=True, type=click.Path(dir_okay=False))
@click.option('--frames', default='-', show_default=True,
              help="Frame directory, or '-' for newline-separated paths on stdin")
@click.option('--window', default=15, show_default=True, type=int, help='Frames per quality signal')
@click.option('--stop-after', default=5, show_default=True, type=int, help='Consecutive no-go windows to latch')
@click.option('--no-go', default='D,E', show_default=True, help='Grades that count toward no-go')
@click.option('--set-point', nargs=2, type=float, default=None, metavar='SPEED TEMP',
              help='Current machine set point; enables remedy suggestions')
@click.option('--prefer-worse', is_flag=True, help='Break exact grade ties toward the worse grade')
@out_option
@click.pass_context
def monitor(ctx, checkpoint, frames, window, stop_after, no_go, set_point, prefer_worse, out):
    """Monitor a frame stream; exit 0 on go, 2 on no_go."""
    _show_config("MONITORING", ctx.params, None)
    out_dir = _out_dir(out)
    config = MonitorConfig(
        window_size=window, stop_after=stop_after, checkpoint=Path(checkpoint),
        no_go_grades=frozenset(QualityGrade.parse(g) for g in no_go.split(',') if g.strip()),
        set_point=tuple(set_point) if set_point else None, prefer_better_grade=not prefer_worse,
    )
    session = MonitorSession.from_checkpoint(config)
    source = sys.stdin if frames == '-' else Path(frames)
    # Signals go out as they happen, so the log is appended live rather than renamed into place.
    with open(out_dir / SIGNAL_LOG_NAME, 'w', encoding='utf-8', newline='\n') as log:
        code = run_stream(config, source, log, session=session)
    logger.info(f"Decision: {'go' if code == 0 else 'no_go'} (signals in {out_dir / SIGNAL_LOG_NAME})")
    return code


def _module_of(error: BaseException) -> str:
    tb = error.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    return tb.tb_frame.f_globals.get('__name__', '?') if tb is not None else '?'


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI and return its exit code.

    0 success or go, 2 monitor no_go, 1 usage, configuration or domain error.
    """
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name='amq', standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except ValidationError as e:
        logger.error(f"Invalid settings ({_module_of(e)}): {e}")
        return 1
    except (AMQError, OSError) as e:
        logger.error(f"{type(e).__name__} in {_module_of(e)}: {e}")
        return 1
    return result if isinstance(result, int) else 0


if __name__ == '__main__':
    sys.exit(run(sys.argv[1:]))
