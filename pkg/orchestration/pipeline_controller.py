#!/usr/bin/env python3
"""
csergo Control Interface
Command-line front end: model validation, analysis reports, DSC export, speedup,
simulation, Boltzmann diagnostics, brute-force oracles and presets
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from src import __version__
from src.analysis_pipeline import ErgodicAnalysisPipeline, rounded
from src.dsc_graph import to_dot
from src.ergodic_suite import boltzmann_convergence, hitting_chain, sample_trajectory, speedup_estimate
from src.exceptions import CsergoError, LetterNeverHit, ParseError, UnknownState
from src.model_document import dumps_document, load_model
from src.oracle_bruteforce import (
    census,
    census_by_normal_forms,
    mobius_roundtrip_check,
    series_check,
    stability_cross_check,
)
from src.presets import PRESET_NAMES, build_preset
from src.settings import Settings, configure_logging
from src.system_model import ConcurrentSystem, irreducibility_report, mobius_matrix

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.12g'


def status(message: str) -> None:
    """Human-facing status line; stdout is kept for JSON"""
    print(message, file=sys.stderr)


class AnalysisPipelineController:
    """Control interface for the csergo analysis commands"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.from_env()

    def load(self, source: str) -> ConcurrentSystem:
        return load_model(source)

    def pipeline(self, source: str) -> ErgodicAnalysisPipeline:
        return ErgodicAnalysisPipeline(self.load(source), self.settings)

    def cmd_validate(self, source: str) -> Dict[str, Any]:
        system = self.load(source)
        report = irreducibility_report(system)
        status(f"✅ {system.name or source} is a valid concurrent system "
               f"({len(system.states)} states, {system.alphabet.size} letters)")
        if not report.irreducible:
            status(f"⚠️ not irreducible: {', '.join(report.failed_clauses())}")
        return {
            'status': 'ok',
            'model': system.name,
            'states': len(system.states),
            'letters': list(system.alphabet.letters),
            'exact': system.exact,
            'irreducibility': report.to_dict(),
        }

    def cmd_analyze(self, source: str) -> Dict[str, Any]:
        report = self.pipeline(source).report()
        status(f"📊 rho = {report['rho']}, {report['speedup']['label']} = {report['speedup']['value']}")
        return report

    def cmd_dsc(self, source: str, dot: Optional[str] = None) -> Dict[str, Any]:
        pipeline = self.pipeline(source)
        dsc = pipeline.dsc
        if dot:
            Path(dot).write_text(to_dot(dsc, name='dsc'), encoding='utf-8')
            status(f"🕸️ DOT written to {dot}")
        status(f"🕸️ {len(dsc.vertices)} state-and-cliques, {len(dsc.stable_vertices())} stable, "
               f"{len(dsc.basic_components())} basic component(s)")
        return {
            'vertices': [dsc.label(v) for v in dsc.vertices],
            'edges': sorted([dsc.label(u), dsc.label(v)] for u, v in dsc.graph.edges),
            'stable': [dsc.label(v) for v in dsc.stable_vertices()],
            'unstable': [dsc.label(v) for v in dsc.unstable_vertices()],
            'components': pipeline.components(),
            'umbrella': dsc.umbrella,
            'unstable_radius': rounded(dsc.unstable_radius),
        }

    def cmd_speedup(self, source: str) -> Dict[str, Any]:
        pipeline = self.pipeline(source)
        report = pipeline.speedup
        table = report.table(pipeline.kernel)
        status(f"⚡ {pipeline.speedup_label} s = {report.speedup:.12g}")
        status(table.to_string(index=False))
        return {
            'label': pipeline.speedup_label,
            'speedup': rounded(report.speedup),
            'discrepancy': rounded(report.discrepancy),
            'components': [{'component': int(row['component']), 'size': int(row['size']),
                            'speedup': rounded(row['speedup']), 'vertices': row['vertices']}
                           for row in table.to_dict(orient='records')],
        }

    def cmd_simulate(self, source: str, state: Optional[str] = None, steps: int = 100000,
                     seed: Optional[int] = None, csv: Optional[str] = None) -> Dict[str, Any]:
        pipeline = self.pipeline(source)
        system = pipeline.system
        start = state or system.initial_state
        if start not in system.state_index:
            raise UnknownState(start)
        if steps < 1:
            raise ParseError(f"must be at least 1, got {steps}", location='--steps')
        seed = self.settings.seed if seed is None else seed
        trajectory = sample_trajectory(pipeline.kernel, start, steps, seed)
        estimate, stderr = speedup_estimate(trajectory, self.settings.sim_batches)

        hits = {}
        for letter in system.alphabet.letters:
            try:
                chain = hitting_chain(trajectory, letter)
                hits[letter] = {'hits': chain.hits, 'closed_classes': [list(c) for c in chain.closed_classes]}
            except LetterNeverHit as e:
                logger.warning(e.message)
                hits[letter] = {'hits': 0, 'closed_classes': []}

        if csv:
            trajectory.frame().to_csv(csv, index=False, float_format=CSV_FLOAT_FORMAT)
            status(f"💾 {steps} steps written to {csv}")
        status(f"🎲 speedup estimate {estimate:.6f} ± {stderr:.2g} (analytic {pipeline.speedup.speedup:.6f})")
        return {
            'start': start,
            'steps': steps,
            'seed': seed,
            'speedup_estimate': rounded(estimate),
            'speedup_stderr': rounded(stderr),
            'speedup_analytic': rounded(pipeline.speedup.speedup),
            'letter_counts': trajectory.letter_counts(),
            'hitting': hits,
        }

    def cmd_boltzmann(self, source: str, grid: int = 5, max_len: int = 4) -> Dict[str, Any]:
        pipeline = self.pipeline(source)
        table = boltzmann_convergence(pipeline.system, pipeline.spectrum, ks=range(1, grid + 1), max_len=max_len)
        status(table.frame.to_string(index=False))
        return {
            'rows': [{key: (int(value) if key == 'k' else rounded(value)) for key, value in row.items()}
                     for row in table.frame.to_dict(orient='records')],
            'monotone': table.monotone,
            'final_error': rounded(table.final_error),
            'final_ratio_error': rounded(table.final_ratio_error),
        }

    def cmd_oracle(self, source: str, max_len: int = 8, depth: int = 8) -> Dict[str, Any]:
        system = self.load(source)
        by_words = census(system, max_len)
        by_cliques = census_by_normal_forms(system, max_len)
        check = series_check(by_words, mobius_matrix(system), max_len)
        roundtrip = mobius_roundtrip_check(system.alphabet, seed=self.settings.seed)
        status(f"🔎 series_check: {'PASS' if check.passed else 'FAIL'} ({check.checked} coefficients)")
        result: Dict[str, Any] = {
            'max_len': max_len,
            'traces_by_length': by_words.totals_by_length(),
            'series_check': 'PASS' if check.passed else 'FAIL',
            'first_mismatch': list(check.first_mismatch) if check.first_mismatch else None,
            'census_agreement': by_words.counts == by_cliques.counts,
            'mobius_roundtrip': roundtrip,
        }
        if irreducibility_report(system).irreducible:
            pipeline = ErgodicAnalysisPipeline(system, self.settings)
            cross = stability_cross_check(system, pipeline.transform, depth, self.settings.tol)
            result['stability'] = {
                'certified': [f"{a}-{c}" for a, c in cross.certified],
                'unstable': [f"{a}-{c}" for a, c in cross.unstable],
                'passed': cross.passed,
            }
        return result

    def cmd_preset(self, name: str, n: Optional[int] = None, alphabet: Optional[str] = None,
                   emit: Optional[str] = None) -> str:
        system = build_preset(name, n=n, alphabet_path=alphabet)
        document = dumps_document(system)
        if emit:
            Path(emit).write_text(document, encoding='utf-8')
            status(f"💾 preset {system.name} written to {emit}")
        return document


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='csergo', description='Ergodic analysis of probabilistic concurrent systems')
    parser.add_argument('--version', action='version', version=f"csergo {__version__}")
    parser.add_argument('--tol', type=float, help='zero-classification tolerance (overrides CSERGO_TOL)')
    parser.add_argument('--seed', type=int, help='simulation seed (overrides CSERGO_SEED)')
    parser.add_argument('--log-level', help='logging level (overrides CSERGO_LOG_LEVEL)')
    commands = parser.add_subparsers(dest='command', required=True)

    model_help = 'model file, or preset:name[:n]'
    validate = commands.add_parser('validate', help='check a model document')
    validate.add_argument('model', help=model_help)

    analyze = commands.add_parser('analyze', help='full analysis report')
    analyze.add_argument('model', help=model_help)
    analyze.add_argument('--json', action='store_true', help='print the full JSON report')

    dsc = commands.add_parser('dsc', help='digraph of state-and-cliques')
    dsc.add_argument('model', help=model_help)
    dsc.add_argument('--dot', help='write a Graphviz file')

    speedup = commands.add_parser('speedup', help='speedup per final component')
    speedup.add_argument('model', help=model_help)

    simulate = commands.add_parser('simulate', help='sample a trajectory of the chain')
    simulate.add_argument('model', help=model_help)
    simulate.add_argument('--state', help='initial state (defaults to the first state)')
    simulate.add_argument('--steps', type=int, default=100000)
    simulate.add_argument('--csv', help='write the trajectory as CSV')

    boltzmann = commands.add_parser('boltzmann', help='Boltzmann convergence table')
    boltzmann.add_argument('model', help=model_help)
    boltzmann.add_argument('--grid', type=int, default=5, help='largest k in s = rho (1 - 10^-k)')
    boltzmann.add_argument('--max-len', type=int, default=4)

    oracle = commands.add_parser('oracle', help='brute-force cross-checks')
    oracle.add_argument('model', help=model_help)
    oracle.add_argument('--max-len', type=int, default=8)
    oracle.add_argument('--depth', type=int, default=8, help='protection search depth')

    preset = commands.add_parser('preset', help='emit a preset model document')
    preset.add_argument('name', choices=PRESET_NAMES)
    preset.add_argument('--n', type=int)
    preset.add_argument('--alphabet', help='alphabet document for the doubled preset')
    preset.add_argument('--emit', help='write the document to a file')
    return parser


def emit_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def main(argv=None) -> int:
    """Command-line interface for csergo"""
    args = build_parser().parse_args(argv)
    settings = Settings.from_env().override(tol=args.tol, seed=args.seed)
    configure_logging(args.log_level or settings.log_level)
    controller = AnalysisPipelineController(settings)

    try:
        if args.command == 'validate':
            emit_json(controller.cmd_validate(args.model))
        elif args.command == 'analyze':
            report = controller.cmd_analyze(args.model)
            if args.json:
                emit_json(report)
            else:
                emit_json({key: report[key] for key in ('model', 'rho', 'kernel', 'speedup', 'unstable')})
        elif args.command == 'dsc':
            emit_json(controller.cmd_dsc(args.model, dot=args.dot))
        elif args.command == 'speedup':
            emit_json(controller.cmd_speedup(args.model))
        elif args.command == 'simulate':
            emit_json(controller.cmd_simulate(args.model, state=args.state, steps=args.steps,
                                              seed=args.seed, csv=args.csv))
        elif args.command == 'boltzmann':
            emit_json(controller.cmd_boltzmann(args.model, grid=args.grid, max_len=args.max_len))
        elif args.command == 'oracle':
            emit_json(controller.cmd_oracle(args.model, max_len=args.max_len, depth=args.depth))
        elif args.command == 'preset':
            document = controller.cmd_preset(args.name, n=args.n, alphabet=args.alphabet, emit=args.emit)
            if not args.emit:
                sys.stdout.write(document)
    except CsergoError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        status(f"❌ {type(e).__name__}: {e.message}")
        emit_json(e.to_dict())
        return e.exit_code
    except Exception:
        logger.exception(f"Unexpected failure in '{args.command}'")
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
