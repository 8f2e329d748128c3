"""Command-line entry point: translate, models, refine, pushout.

Exit codes: 0 success / refinement holds, 1 parse error, 2 semantic or
enumeration error, 3 refinement fails.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import click

from .errors import EvtForgeError, ParseError, SpecError
from .eventb import parse_text
from .fopeq import Bounds
from .institution import INIT
from .refinement import (
    RefinementVerdict, check_refinement_morphism, resolve_refinement,
)
from .rodin import parse_rodin_paths
from .specs import Evaluator
from .sugar import (
    RefinementText, parse_document, parse_signature_document, print_library,
    print_signature,
)
from .translate import TranslationOutput, translate


@dataclass
class RunConfig:
    inputs: tuple[str, ...] = ()
    input_format: str = "auto"  # text | rodin | auto (by extension)
    bound: int = 3
    carriers: tuple[tuple[str, int], ...] = ()
    pins: tuple[tuple[str, object], ...] = ()
    ceiling: int = 2 ** 20
    machine_output: bool = False
    elide_identity: bool = True

    def bounds(self) -> Bounds:
        return Bounds(int_bound=self.bound, carrier_sizes=self.carriers,
                      pins=self.pins, pair_ceiling=self.ceiling)


@dataclass
class LoadedWorkspace:
    output: TranslationOutput
    refinements: list[RefinementText] = field(default_factory=list)
    sugar_specs: list[tuple[str, object]] = field(default_factory=list)


def load_workspace(cfg: RunConfig) -> LoadedWorkspace:
    """Load the input files in order: machine/context sources translate into
    the library; sugared spec files add specs and refinement declarations."""
    out = TranslationOutput()
    ws = LoadedWorkspace(out)
    rodin_batch: list[str] = []

    def flush_rodin():
        nonlocal out
        if rodin_batch:
            out = translate(parse_rodin_paths(rodin_batch), out)
            ws.output = out
            rodin_batch.clear()

    for raw in cfg.inputs:
        path = Path(raw)
        suffix = path.suffix.lower()
        fmt = cfg.input_format
        if fmt == "auto":
            fmt = ("rodin" if suffix in (".bum", ".buc") else
                   "sugar" if suffix == ".evt" else "text")
        if fmt == "rodin":
            rodin_batch.append(raw)
            continue
        flush_rodin()
        text = path.read_text(encoding="utf-8")
        if fmt == "sugar":
            specs, refs = parse_document(text, out.library)
            ws.sugar_specs.extend(specs)
            out.order.extend(("spec", n) for n, _ in specs)
            ws.refinements.extend(refs)
        else:
            out = translate(parse_text(text), out)
            ws.output = out
    flush_rodin()
    ws.output = out
    return ws


def _pin_value(text: str):
    if text in ("TRUE", "true"):
        return True
    if text in ("FALSE", "false"):
        return False
    try:
        return int(text)
    except ValueError:
        return text


def _parse_kv(pairs: Sequence[str], value_parser) -> tuple:
    out = []
    for p in pairs:
        if "=" not in p:
            raise click.BadParameter(f"expected NAME=VALUE, got {p!r}")
        k, v = p.split("=", 1)
        out.append((k, value_parser(v)))
    return tuple(out)


def _fail(e: Exception) -> None:
    click.echo(f"error: {e}", err=True)
    if isinstance(e, ParseError):
        sys.exit(1)
    sys.exit(2)


def bound_options(fn):
    fn = click.option("--bound", type=int, envvar="EVTFORGE_BOUND", default=3,
                      show_default=True, help="integer carrier bound B")(fn)
    fn = click.option("--carrier", "carriers", multiple=True, metavar="SORT=N",
                      help="carrier size for an enumerated sort")(fn)
    fn = click.option("--pin", "pins", multiple=True, metavar="NAME=V",
                      help="fix a constant's interpretation")(fn)
    fn = click.option("--ceiling", type=int, default=2 ** 20, show_default=True,
                      help="maximum state pairs enumerated per event")(fn)
    fn = click.option("--format", "input_format",
                      type=click.Choice(["auto", "text", "rodin"]),
                      default="auto", show_default=True)(fn)
    return fn


def _config(files, input_format, bound=3, carriers=(), pins=(), ceiling=2 ** 20,
            **kw) -> RunConfig:
    return RunConfig(
        inputs=tuple(files),
        input_format=input_format,
        bound=bound,
        carriers=_parse_kv(carriers, int),
        pins=_parse_kv(pins, _pin_value),
        ceiling=ceiling,
        **kw,
    )


@click.group()
def main():
    """Machines and contexts as structured specifications with bounded
    model-class semantics."""


@main.command("translate")
@click.argument("files", nargs=-1, required=True)
@click.option("--format", "input_format",
              type=click.Choice(["auto", "text", "rodin"]), default="auto")
@click.option("--no-elide", is_flag=True,
              help="print same-name refinement imports explicitly")
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_translate(files, input_format, no_elide, out_path):
    """Translate machines/contexts into the sugared spec notation."""
    cfg = _config(files, input_format, elide_identity=not no_elide)
    try:
        ws = load_workspace(cfg)
        if not ws.output.order:
            raise ParseError("no machines or contexts in the inputs")
        text = print_library(ws.output.library, ws.output.order,
                             elide_identity=cfg.elide_identity)
    except EvtForgeError as e:
        _fail(e)
        return
    for d in ws.output.diagnostics:
        click.echo(f"note: {d}", err=True)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    return str(v)


def _format_state(s) -> str:
    return "(" + ", ".join(f"{k}={_format_value(v)}" for k, v in s) + ")"


@main.command("models")
@click.argument("name")
@click.argument("files", nargs=-1, required=True)
@bound_options
@click.option("--event", "event_name", default=None,
              help="restrict the report to one event")
@click.option("--list", "list_pairs", is_flag=True,
              help="list initial states / relation pairs")
@click.option("--json", "as_json", is_flag=True)
def cmd_models(name, files, bound, carriers, pins, ceiling, input_format,
               event_name, list_pairs, as_json):
    """Report admissible algebras and maximal relations of a specification."""
    cfg = _config(files, input_format, bound, carriers, pins, ceiling)
    try:
        ws = load_workspace(cfg)
        lib = ws.output.library
        spec = lib.lookup(name)
        evaluator = Evaluator(lib, cfg.bounds())
        rep = evaluator.model_class(spec)
        if event_name is not None and event_name not in rep.signature.event_map:
            raise SpecError(f"{name} has no event named {event_name}")
    except EvtForgeError as e:
        _fail(e)
        return

    if as_json:
        payload = {"spec": name, "bound": bound, "algebras": []}
        for sl in rep.slices:
            entry = {
                "algebra": sl.algebra.describe(),
                "initial_states": len(sl.l_max),
                "events": {e: len(p) for e, p in sl.r_max},
            }
            if list_pairs:
                entry["init"] = [dict(s) for s in sorted(sl.l_max)]
                entry["relations"] = {
                    e: [[dict(s), dict(t)] for s, t in sorted(p)]
                    for e, p in sl.r_max}
            payload["algebras"].append(entry)
        click.echo(json.dumps(payload, indent=2, default=str))
        return

    click.echo(f"spec {name}  [bound {bound}"
               + (f", pins {', '.join(f'{k}={v}' for k, v in cfg.pins)}" if cfg.pins else "")
               + "]")
    if not rep.slices:
        click.echo("  no admissible algebras (empty model class)")
    for sl in rep.slices:
        click.echo(f"algebra {sl.algebra.describe()}")
        if event_name is None or event_name == INIT:
            click.echo(f"  Init: {len(sl.l_max)} initial state(s)")
            if list_pairs:
                for s in sorted(sl.l_max):
                    click.echo(f"    {_format_state(s)}")
        for e, pairs in sl.r_max:
            if event_name is not None and e != event_name:
                continue
            click.echo(f"  {e}: {len(pairs)} pair(s)")
            if list_pairs:
                for s, t in sorted(pairs):
                    click.echo(f"    {_format_state(s)} -> {_format_state(t)}")


@main.command("refine")
@click.argument("files", nargs=-1, required=True)
@bound_options
@click.option("--allow-status-drop", is_flag=True,
              help="accept event maps that lower a status (with a warning)")
@click.option("--json", "as_json", is_flag=True)
def cmd_refine(files, bound, carriers, pins, ceiling, input_format,
               allow_status_drop, as_json):
    """Check every refinement declaration found in the input files."""
    cfg = _config(files, input_format, bound, carriers, pins, ceiling)
    try:
        ws = load_workspace(cfg)
        if not ws.refinements:
            raise SpecError("no refinement declarations in the inputs")
        lib = ws.output.library
        evaluator = Evaluator(lib, cfg.bounds())
        verdicts: list[RefinementVerdict] = []
        warnings: list[str] = []
        for rt in ws.refinements:
            decl = resolve_refinement(rt, lib, allow_status_drop, warnings)
            verdicts.append(check_refinement_morphism(decl, evaluator))
    except EvtForgeError as e:
        _fail(e)
        return

    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    if as_json:
        click.echo(json.dumps([v.as_dict() for v in verdicts], indent=2, default=str))
    else:
        for v in verdicts:
            if v.holds:
                click.echo(f"{v.name}: holds "
                           f"({v.stats['algebras']} algebra(s), "
                           f"{v.stats['pairs']} pair(s) checked)")
            else:
                c = v.counterexample
                if c.event is None:
                    click.echo(f"{v.name}: FAILS — algebra {c.algebra} is not "
                               "admissible on the abstract side")
                elif c.event == INIT:
                    click.echo(f"{v.name}: FAILS — algebra {c.algebra}, initial "
                               f"state {_format_state(c.after)} not abstract-initial")
                else:
                    click.echo(f"{v.name}: FAILS — algebra {c.algebra}, event "
                               f"{c.event}: {_format_state(c.before)} -> "
                               f"{_format_state(c.after)} is outside the "
                               "abstract relation")
    sys.exit(0 if all(v.holds for v in verdicts) else 3)


@main.command("pushout")
@click.argument("file1", type=click.Path(exists=True))
@click.argument("file2", type=click.Path(exists=True))
def cmd_pushout(file1, file2):
    """Pushout of two signature morphisms with a common source."""
    from .institution import evt_pushout

    try:
        _, ms1 = parse_signature_document(Path(file1).read_text(encoding="utf-8"))
        _, ms2 = parse_signature_document(Path(file2).read_text(encoding="utf-8"))
        if not ms1 or not ms2:
            raise SpecError("each input file must define a morphism")
        n1, m1 = ms1[-1]
        n2, m2 = ms2[-1]
        merged, inj1, inj2 = evt_pushout(m1, m2)
    except EvtForgeError as e:
        _fail(e)
        return

    click.echo("pushout signature:")
    click.echo(print_signature(merged))

    def show(name, inj):
        bits = [f"{a} ↦ {b}" for a, b in inj.event_map if a != INIT]
        bits += [f"{a} ↦ {b}" for a, b in inj.var_map]
        bits += [f"{a} ↦ {b}" for a, b in inj.fopeq.sort_map]
        bits += [f"{a} ↦ {b}" for a, b in inj.fopeq.op_map]
        click.echo(f"injection {name}: {{{', '.join(bits)}}}")

    show(n1, inj1)
    show(n2, inj2)


if __name__ == "__main__":
    main()
