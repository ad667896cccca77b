"""Command-line front end: run, check, sample and validate schedules.

Exit codes: 0 success, 1 check failure or invalid schedule, 2 input error,
3 engine error.
"""

from __future__ import annotations

import json
import os
import sys
from importlib import resources

import click

from .engine import (
    InvalidSchedule,
    MaxRoundsExceeded,
    RunConfig,
    compile_schedule,
    run,
    sample_many,
)
from .engine.checkpoints import check_checkpoints
from .engine.run import outcome_label
from .hilbert import HilbertError
from .protocol import (
    DSLSyntaxError,
    SemanticError,
    TimeStamp,
    canonical_fr_schedule,
    parse_schedule,
    validate,
)
from .protocol.tokens import ScheduleError

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_ENGINE = 0, 1, 2, 3
BUILTINS = {"fr": canonical_fr_schedule}


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


class EngineFailure(click.ClickException):
    exit_code = EXIT_ENGINE


def _color() -> bool:
    return not os.environ.get("WIGNERBOX_NO_COLOR")


def _style(text: str, ok: bool) -> str:
    return click.style(text, fg="green" if ok else "red") if _color() else text


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _load(path: str | None, builtin: str | None):
    if path and builtin:
        raise InputError("give either a schedule file or --builtin, not both")
    if builtin:
        return BUILTINS[builtin]()
    if not path:
        raise InputError("no schedule given (use --builtin fr or a file)")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_schedule(text)
    except (DSLSyntaxError, SemanticError) as exc:
        for d in getattr(exc, "diagnostics", []):
            click.echo(f"  {d}", err=True)
        raise InputError(f"{path}: {exc}") from exc


def _compile(schedule):
    try:
        return compile_schedule(schedule)
    except InvalidSchedule as exc:
        raise InputError(str(exc)) from exc
    except (ScheduleError, HilbertError) as exc:
        raise EngineFailure(str(exc)) from exc


def _checkpoints(text: str | None, schedule) -> tuple[TimeStamp, ...]:
    if not text:
        return ()
    if text.strip() == "all":
        return tuple(t for t, _ in schedule.events())
    try:
        return tuple(sorted({TimeStamp.parse(part.strip()) for part in text.split(",") if part.strip()}))
    except ValueError as exc:
        raise InputError(f"bad --checkpoints value: {exc}") from exc


def schedule_options(fn):
    fn = click.option("--builtin", type=click.Choice(sorted(BUILTINS)), help="Use a built-in schedule.")(fn)
    fn = click.option("--file", "file_opt", type=click.Path(), help="Schedule file in the protocol DSL.")(fn)
    fn = click.argument("path", required=False, type=click.Path())(fn)
    return fn


def format_option(fn):
    return click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table", show_default=True)(fn)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Exact simulator for extended Wigner's-friend protocols."""


# -- run ----------------------------------------------------------------------


def _print_state(psi) -> None:
    width = max((len(", ".join(f"{n}={t}" for n, t in psi.labels(k).items())) for k in psi.terms), default=0)
    for key, amp in psi.items():
        labels = ", ".join(f"{n}={t}" for n, t in psi.labels(key).items())
        exact = amp.to_string() if hasattr(amp, "to_string") else ""
        click.echo(f"    {labels:<{width}}  {exact:>16}  {float(amp):+.12f}")


def _print_report(report) -> None:
    cfg = report.config
    click.echo(f"mode: {cfg.mode}")
    for t, psi in sorted(report.checkpoints.items()):
        click.echo(f"state at {t.label}:")
        _print_state(psi)
    click.echo("outcome distribution:")
    for key, p in report.distribution.items():
        exact = p.to_string() if hasattr(p, "to_string") else ""
        click.echo(f"    {outcome_label(key):<16} {exact:>8}  {float(p):.12f}")
    if cfg.mode != "collapse":
        click.echo(f"rule-S violations: {len(report.violations)}")
        for v in report.violations:
            labels = ", ".join(f"{n}={t}" for n, t in v.labels.items())
            click.echo(f"    branch {labels} (probability {v.probability.to_string() if hasattr(v.probability, 'to_string') else float(v.probability)})")
            for a, b in v.rule_s_violations:
                click.echo(_style(f"      {a.describe()}  vs  {b.describe()}", False))
    if report.sampling is not None:
        s = report.sampling
        halted = s.halting_round if s.halting_round is not None else f"not within {len(s.draws)} rounds"
        click.echo(f"sampled halting round (seed {cfg.seed}): {halted}")


@main.command("run")
@schedule_options
@click.option("--mode", type=click.Choice(["exact", "float", "collapse"]), default="exact", show_default=True)
@click.option("--checkpoints", help="Comma-separated times such as n:02,n:31, or 'all'.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Also sample rounds until the halt outcome.")
@click.option("--max-rounds", type=click.IntRange(min=1), default=1000, show_default=True)
@format_option
def cmd_run(path, file_opt, builtin, mode, checkpoints, seed, max_rounds, fmt) -> None:
    """Evolve one round and report checkpoints, outcomes and violations."""
    schedule = _load(path or file_opt, builtin)
    compiled = _compile(schedule)
    config = RunConfig(mode, max_rounds, seed, _checkpoints(checkpoints, schedule))
    try:
        report = run(compiled, config)
    except (HilbertError, ValueError) as exc:
        raise EngineFailure(str(exc)) from exc
    if fmt == "json":
        _emit(report.to_json())
    else:
        _print_report(report)


# -- check --------------------------------------------------------------------


@main.command("check")
@schedule_options
@click.option("--mode", type=click.Choice(["exact", "float", "collapse"]), default="exact", show_default=True)
@click.option("--expected", type=click.Path(), help="Expected-state JSON (default: the bundled file).")
@format_option
def cmd_check(path, file_opt, builtin, mode, expected, fmt) -> None:
    """Compare exact checkpoint snapshots against expected states."""
    if mode != "exact":
        raise InputError("check compares exact amplitudes; use --mode exact")
    schedule = _load(path or file_opt, builtin)
    compiled = _compile(schedule)
    text = None
    if expected:
        try:
            with open(expected, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {expected}: {exc.strerror}") from exc
    try:
        results = check_checkpoints(compiled, text)
    except (HilbertError, KeyError, ValueError) as exc:
        raise EngineFailure(f"checkpoint comparison failed: {exc}") from exc
    passed = all(r.passed for r in results)
    if fmt == "json":
        _emit({"passed": passed, "checkpoints": [r.to_json() for r in results]})
    else:
        for r in results:
            click.echo(_style(r.describe(), r.passed))
            for label, d in (("missing", r.missing), ("unexpected", r.unexpected)):
                for k, v in sorted(d.items(), key=lambda kv: sorted(kv[0])):
                    click.echo(f"    {label}: {dict(sorted(k))} {v.to_string()}")
            for k, (got, want) in sorted(r.mismatched.items(), key=lambda kv: sorted(kv[0])):
                click.echo(f"    amplitude {dict(sorted(k))}: got {got.to_string()}, expected {want.to_string()}")
    if not passed:
        sys.exit(EXIT_CHECK)


# -- sample -------------------------------------------------------------------


@main.command("sample")
@schedule_options
@click.option("--runs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), required=True)
@click.option("--max-rounds", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "float"]), default="exact", show_default=True)
@click.option("--allow-partial", is_flag=True, help="Report runs that hit --max-rounds instead of failing.")
@format_option
def cmd_sample(path, file_opt, builtin, runs, seed, max_rounds, mode, allow_partial, fmt) -> None:
    """Repeat rounds until the halting outcome, for several seeded runs."""
    schedule = _load(path or file_opt, builtin)
    compiled = _compile(schedule)
    config = RunConfig(mode, max_rounds, seed)
    try:
        stats = sample_many(compiled, config, runs, allow_partial)
    except MaxRoundsExceeded as exc:
        raise EngineFailure(f"run {exc.result.run_index}: {exc}") from exc
    freqs = stats.frequencies()
    if fmt == "json":
        _emit({
            "runs": runs,
            "seed": seed,
            "max_rounds": max_rounds,
            "halting_rounds": stats.halting_rounds,
            "mean_halting_round": stats.mean_halting_round,
            "total_rounds": stats.total_rounds,
            "frequencies": {outcome_label(k): v for k, v in freqs.items()},
        })
        return
    click.echo(f"runs: {runs}  seed: {seed}  rounds drawn: {stats.total_rounds}")
    incomplete = runs - len(stats.completed)
    mean = stats.mean_halting_round
    click.echo(f"mean halting round: {mean:.4f}" if mean is not None else "mean halting round: n/a")
    if incomplete:
        click.echo(_style(f"runs without halt: {incomplete}", False))
    if runs <= 20:
        click.echo("halting rounds: " + " ".join("-" if h is None else str(h) for h in stats.halting_rounds))
    click.echo("per-round outcome frequencies:")
    for k, v in freqs.items():
        click.echo(f"    {outcome_label(k):<16} {v:.6f}")


# -- validate -----------------------------------------------------------------


@main.command("validate")
@schedule_options
@format_option
def cmd_validate(path, file_opt, builtin, fmt) -> None:
    """Parse a schedule file and list validation diagnostics."""
    source = path or file_opt
    if builtin:
        schedule = BUILTINS[builtin]()
        diagnostics = [str(d) for d in validate(schedule)]
    else:
        if not source:
            raise InputError("no schedule given (use --builtin fr or a file)")
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc.strerror}") from exc
        try:
            diagnostics = [str(d) for d in validate(parse_schedule(text, check=False))]
        except DSLSyntaxError as exc:
            if fmt == "json":
                _emit({"valid": False, "syntax_error": {"line": exc.line, "column": exc.col, "message": str(exc)}, "diagnostics": []})
                sys.exit(EXIT_INPUT)
            raise InputError(f"{source}: {exc}") from exc
        except SemanticError as exc:
            diagnostics = [str(exc)] + [str(d) for d in exc.diagnostics]
    if fmt == "json":
        _emit({"valid": not diagnostics, "syntax_error": None, "diagnostics": diagnostics})
    else:
        for d in diagnostics:
            click.echo(_style(d, False))
        click.echo(_style("valid", True) if not diagnostics else f"{len(diagnostics)} problem(s)")
    if diagnostics:
        sys.exit(EXIT_CHECK)


@main.command("dump")
@click.option("--builtin", type=click.Choice(sorted(BUILTINS)), default="fr", show_default=True)
def cmd_dump(builtin) -> None:
    """Print a built-in schedule as DSL text."""
    if builtin == "fr":
        click.echo(resources.files("wignerbox.data").joinpath("canonical.fr").read_text(), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
