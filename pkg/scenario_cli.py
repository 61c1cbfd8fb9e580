"""Command-line front end: sectioned config files, CSV outputs and replayable run manifests."""

import argparse
import configparser
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from config import (AUTO_KEY_TYPES, CONFIG_SECTIONS, CSV_FLOAT_FORMAT, THREADS_ENV_VAR,
                    TOOL_VERSION)
from crossroad_model import (CrossroadGeometry, mean_vacancy_mc, occupation_grid,
                             sample_typical_angles)
from econo_model import (AdoptionParams, CostScenario, cumulated_revenue, tuning_check,
                         user_density)
from enums import AdoptionCurve, CrossingDirection, OpexStart, RemainderPolicy, SurfaceKind
from errors import ConfigError, ReplayMismatchError, exit_status
from network_realization import NetworkParams, realize_network, realize_streets
from percolation_engine import estimate_p_star, finite_size_check
from relay_planner import (PercolationSettings, cached_p_star, compensation_lambda,
                           minimal_relay_proportion, relay_curve, relay_curve_frame)
from street_geometry import Window, default_margin, street_stats

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
MANIFEST_NAME = "manifest.json"
RESOLVED_NAME = "resolved.ini"
# Sub-stream of the master seed for the occupation Monte Carlo column
MC_STREAM = (2 ** 32 - 2,)

COMMANDS = ('occupation', 'pstar', 'relay-curve', 'econ', 'dump-streets')


# Config loading

def parse_grid(text: str) -> np.ndarray:
    """Comma list "0, 10, 20" or inclusive range "start:stop:step" """
    text = text.strip()
    try:
        if ':' in text:
            start, stop, step = (float(part) for part in text.split(':'))
            if not step > 0 or stop < start:
                raise ConfigError(f"grid {text!r} needs step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return np.round(start + step * np.arange(count), 12)
        values = np.array([float(part) for part in text.split(',') if part.strip()])
    except ValueError as exc:
        raise ConfigError(f"malformed grid {text!r}: {exc}") from exc
    if len(values) == 0:
        raise ConfigError("empty grid")
    return values


def _coerce(section: str, key: str, raw: str):
    default = CONFIG_SECTIONS[section][key]
    raw = raw.strip()
    if default is None:
        if raw == '' or raw.lower() == 'auto':
            return None
        kind = AUTO_KEY_TYPES[key]
    else:
        kind = type(default)
    if kind is bool:
        states = configparser.ConfigParser.BOOLEAN_STATES
        if raw.lower() not in states:
            raise ValueError(f"expected a boolean, got {raw!r}")
        return states[raw.lower()]
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


@dataclass(frozen=True)
class ResolvedConfig:
    """Every config key with its typed value, defaults filled in"""

    values: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def with_overrides(self, section: str, **overrides) -> "ResolvedConfig":
        values = {name: dict(keys) for name, keys in self.values.items()}
        values[section].update(overrides)
        return ResolvedConfig(values)

    def as_strings(self) -> dict[str, dict[str, str]]:
        def render(value) -> str:
            if value is None:
                return ''
            if isinstance(value, bool):
                return 'true' if value else 'false'
            return repr(value) if isinstance(value, float) else str(value)
        return {name: {key: render(value) for key, value in keys.items()}
                for name, keys in self.values.items()}

    def write_ini(self, path: Path) -> None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_dict(self.as_strings())
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            parser.write(handle)

    # Domain objects

    @property
    def range_r(self) -> float:
        return self['network']['range_m'] / 1000.0

    @property
    def gamma(self) -> float:
        return self['street']['gamma']

    def window(self) -> Window:
        street = self['street']
        margin = street['margin_km']
        if margin is None:
            margin = default_margin(self.gamma, self.range_r)
        return Window(0.0, 0.0, street['window_width_km'], street['window_height_km'], margin)

    def geometry(self) -> CrossroadGeometry:
        crossroad = self['crossroad']
        return CrossroadGeometry(crossroad['street_width_m'], SurfaceKind(crossroad['surface_kind']))

    def percolation_settings(self, threads: int, window: Window | None = None) -> PercolationSettings:
        perc = self['percolation']
        return PercolationSettings(
            gamma=self.gamma,
            window=window or self.window(),
            replicates=perc['replicates'],
            master_seed=perc['seed'],
            direction=CrossingDirection(perc['direction']),
            contact_band=perc['contact_band_km'],
            bootstrap=perc['bootstrap'],
            threads=threads,
            progress=perc['progress'],
        )

    def scenario(self) -> CostScenario:
        econ = self['economics']
        adoption = AdoptionParams(
            curve=AdoptionCurve(econ['adoption_curve']),
            **{name: econ[f'adoption_{name}'] for name in (
                'scale', 'early_cap', 'early_spread', 'early_rate', 'onset_lag',
                'late_cap', 'late_tau', 'slope', 'cap')},
        )
        return CostScenario(
            c_capex=econ['c_capex'], eta=econ['eta'], g_revenue=econ['g_revenue'],
            t_dep=econ['t_dep'], t_launch=econ['t_launch'], t_critical=econ['t_critical'],
            p_min=econ['p_min'], p_max=econ['p_max'], gamma=econ['gamma'], area=econ['area_km2'],
            horizon=econ['horizon'], adoption=adoption,
            remainder_policy=RemainderPolicy(econ['remainder_policy']),
            opex_start=OpexStart(econ['opex_start']),
        )


def _enum_problem(enum_type, value: str, name: str) -> list[str]:
    choices = [member.value for member in enum_type]
    return [] if value in choices else [f"{name} must be one of {', '.join(choices)}"]


def validate_config(config: ResolvedConfig) -> None:
    """Raise a ConfigError listing every constraint the configuration violates"""
    problems = []
    street, network, crossroad = config['street'], config['network'], config['crossroad']
    perc, econ = config['percolation'], config['economics']

    if not street['gamma'] > 0:
        problems.append("street gamma > 0")
    if not (street['window_width_km'] > 0 and street['window_height_km'] > 0):
        problems.append("window dimensions > 0")
    if street['margin_km'] is not None and street['margin_km'] < 0:
        problems.append("margin_km ≥ 0")
    if not network['lambda'] >= 0:
        problems.append("lambda ≥ 0")
    if not network['range_m'] >= 0:
        problems.append("range_m ≥ 0")
    if not 0 <= network['occupation_p'] <= 1:
        problems.append("0 ≤ occupation_p ≤ 1")
    if not crossroad['street_width_m'] > 0:
        problems.append("street_width_m > 0")
    if crossroad['mc_samples'] < 0:
        problems.append("mc_samples ≥ 0")
    problems += _enum_problem(SurfaceKind, crossroad['surface_kind'], 'surface_kind')
    for key, low, high in (('lambda_grid', 0.0, math.inf), ('p_grid', 0.0, 1.0)):
        try:
            grid = parse_grid(crossroad[key])
        except ConfigError as exc:
            problems.append(f"{key}: {exc}")
            continue
        if grid.min() < low or grid.max() > high:
            problems.append(f"{key} values within [{low}, {high}]")

    if perc['seed'] < 0:
        problems.append("seed ≥ 0")
    if perc['replicates'] < 1:
        problems.append("replicates ≥ 1")
    if perc['bootstrap'] < 0:
        problems.append("bootstrap ≥ 0")
    if perc['threads'] is not None and perc['threads'] < 1:
        problems.append("threads ≥ 1")
    if perc['p_star'] is not None and not 0 <= perc['p_star'] <= 1:
        problems.append("0 ≤ p_star ≤ 1")
    if perc['contact_band_km'] is not None and not perc['contact_band_km'] > 0:
        problems.append("contact_band_km > 0")
    if perc['stability_window_km'] is not None and not perc['stability_window_km'] > 0:
        problems.append("stability_window_km > 0")
    problems += _enum_problem(CrossingDirection, perc['direction'], 'direction')

    problems += _enum_problem(AdoptionCurve, econ['adoption_curve'], 'adoption_curve')
    problems += _enum_problem(RemainderPolicy, econ['remainder_policy'], 'remainder_policy')
    problems += _enum_problem(OpexStart, econ['opex_start'], 'opex_start')
    if not problems:
        try:
            config.scenario()
        except ConfigError as exc:
            problems += exc.problems

    if problems:
        raise ConfigError("invalid configuration", problems=problems)


def _parse_error(exc: configparser.Error) -> ConfigError:
    line = getattr(exc, 'lineno', None)
    if line is None and isinstance(exc, configparser.ParsingError) and exc.errors:
        line, text = exc.errors[0]
        return ConfigError(f"cannot parse {text.strip()!r}", line=line)
    return ConfigError(exc.message.splitlines()[0], line=line)


def resolve_parser(parser: configparser.ConfigParser) -> ResolvedConfig:
    problems = []
    values = {name: dict(defaults) for name, defaults in CONFIG_SECTIONS.items()}
    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in CONFIG_SECTIONS[section]:
                problems.append(f"unknown key {key!r} in [{section}]")
                continue
            try:
                values[section][key] = _coerce(section, key, raw)
            except ValueError as exc:
                problems.append(f"[{section}] {key}: {exc}")
    if problems:
        raise ConfigError("invalid configuration", problems=problems)
    config = ResolvedConfig(values)
    validate_config(config)
    return config


def _new_parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(strict=True, interpolation=None,
                                     inline_comment_prefixes=('#', ';'), default_section='__defaults__')


def load_config(path: str | Path | None) -> ResolvedConfig:
    """Parse a sectioned key=value file; a missing path yields the defaults"""
    parser = _new_parser()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            parser.read_string(path.read_text(encoding='utf-8'), source=str(path))
        except configparser.Error as exc:
            raise _parse_error(exc) from exc
    config = resolve_parser(parser)
    logger.debug("resolved configuration: %s", config.as_strings())
    return config


def config_from_strings(sections: dict[str, dict[str, str]]) -> ResolvedConfig:
    parser = _new_parser()
    parser.read_dict(sections)
    return resolve_parser(parser)


def resolve_threads(flag: int | None, config: ResolvedConfig) -> int:
    """--threads, then the environment, then the config file, then the CPU count"""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV_VAR}={env!r} is not an integer") from exc
    if config['percolation']['threads'] is not None:
        return config['percolation']['threads']
    return os.cpu_count() or 1


# Outputs

def write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int
    tool_version: str
    duration_s: float
    outputs: dict
    options: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + '\n', encoding='utf-8')

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
            return cls(**data)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"unreadable manifest {path}: {exc}") from exc


@dataclass
class CommandResult:
    outputs: list[Path]
    summary: list[str]


# Commands

def cmd_occupation(config: ResolvedConfig, out_dir: Path, threads: int = 1) -> CommandResult:
    crossroad = config['crossroad']
    geometry = config.geometry()
    lambdas = parse_grid(crossroad['lambda_grid'])
    ps = parse_grid(crossroad['p_grid'])
    frame = occupation_grid(lambdas, ps, geometry)

    n_samples = crossroad['mc_samples']
    if n_samples:
        rng = np.random.default_rng(np.random.SeedSequence(config['percolation']['seed'], spawn_key=MC_STREAM))
        alpha, beta = sample_typical_angles(n_samples, rng)
        vacancy = {float(lam): mean_vacancy_mc(float(lam), geometry, alpha, beta)[0] for lam in lambdas}
        frame['F_mc'] = 1.0 - (1.0 - frame['p']) * frame['lambda'].map(vacancy)

    path = out_dir / 'occupation.csv'
    write_csv(frame, path)
    return CommandResult([path], [f"rows={len(frame)}"])


def cmd_pstar(config: ResolvedConfig, out_dir: Path, threads: int = 1) -> CommandResult:
    settings = config.percolation_settings(threads)
    lam, r = config['network']['lambda'], config.range_r
    estimate = cached_p_star(lam, r, settings)
    path = out_dir / 'crossing_curve.csv'
    write_csv(estimate.to_frame(), path)
    summary = [estimate.summary()]

    side = config['percolation']['stability_window_km']
    if side is not None:
        other = estimate_p_star(settings.gamma, lam, r, Window.square(side), settings.replicates,
                                settings.master_seed, spec=settings.crossing_spec(r), threads=threads,
                                bootstrap=settings.bootstrap, progress=settings.progress)
        report = finite_size_check(estimate, other)
        summary.append(f"finite_size p_star_2={other.p_star_hat:.9g} difference={report.difference:.9g} "
                       f"bound={report.bound:.9g} stable={'yes' if report.stable else 'no'}")
    return CommandResult([path], summary)


def _supplied_p_star(config: ResolvedConfig) -> float | None:
    return config['percolation']['p_star']


def cmd_relay_curve(config: ResolvedConfig, out_dir: Path, threads: int = 1) -> CommandResult:
    lambdas = parse_grid(config['crossroad']['lambda_grid'])
    p_star = _supplied_p_star(config)
    settings = None if p_star is not None else config.percolation_settings(threads)
    rows = relay_curve(lambdas, config.range_r, config['crossroad']['street_width_m'],
                       settings=settings, p_star=p_star)
    path = out_dir / 'relay_curve.csv'
    write_csv(relay_curve_frame(rows), path)
    compensation = compensation_lambda(rows)
    label = 'never' if math.isinf(compensation) else f"{compensation:.9g}"
    return CommandResult([path], [f"compensation_lambda={label}"])


def cmd_econ(config: ResolvedConfig, out_dir: Path, threads: int = 1) -> CommandResult:
    econ = config['economics']
    scenario = config.scenario()
    series = cumulated_revenue(scenario)
    path = out_dir / 'cash_flow.csv'
    write_csv(series.to_frame(), path)
    summary = [series.summary()]

    p_star = _supplied_p_star(config)
    if p_star is None and not econ['estimate_p_star']:
        logger.info("tuning check skipped: set [percolation] p_star or [economics] estimate_p_star")
        return CommandResult([path], summary)
    lam_critical = user_density(scenario.t_critical, scenario)
    settings = config.percolation_settings(threads) if p_star is None else None
    plan = minimal_relay_proportion(lam_critical, config.range_r, config.geometry(),
                                    p_star=p_star, settings=settings)
    report = tuning_check(scenario, plan, tolerance=econ['tuning_tolerance'])
    summary.append(report.summary())
    return CommandResult([path], summary)


def cmd_dump_streets(config: ResolvedConfig, out_dir: Path, threads: int = 1,
                     with_network: bool = False) -> CommandResult:
    seed = config['percolation']['seed']
    streets = realize_streets(config.gamma, config.window(), seed)
    vertices, edges = streets.to_frames()
    outputs = [out_dir / 'streets_vertices.csv', out_dir / 'streets_edges.csv']
    write_csv(vertices, outputs[0])
    write_csv(edges, outputs[1])
    stats = street_stats(streets)
    summary = [f"vertex_intensity={stats.vertex_intensity_hat:.9g} "
               f"length_intensity={stats.length_intensity_hat:.9g}"]

    if with_network:
        network = config['network']
        params = NetworkParams(network['lambda'], network['occupation_p'], config.range_r)
        graph = realize_network(streets, params, seed).graph()
        nodes, links = graph.to_frames()
        outputs += [out_dir / 'network_nodes.csv', out_dir / 'network_links.csv']
        write_csv(nodes, outputs[2])
        write_csv(links, outputs[3])
        summary.append(f"nodes={graph.n_nodes} links={len(graph.links)}")
    return CommandResult(outputs, summary)


HANDLERS = {
    'occupation': cmd_occupation,
    'pstar': cmd_pstar,
    'relay-curve': cmd_relay_curve,
    'econ': cmd_econ,
    'dump-streets': cmd_dump_streets,
}


def run_command(command: str, config: ResolvedConfig, out_dir: Path, threads: int,
                options: dict | None = None) -> RunManifest:
    """Run one command, write its outputs, resolved.ini and the manifest"""
    options = dict(options or {})
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    result = HANDLERS[command](config, out_dir, threads, **options)
    duration = time.perf_counter() - started

    for line in result.summary:
        print(line)
    config.write_ini(out_dir / RESOLVED_NAME)
    manifest = RunManifest(
        command=command,
        parameters=config.as_strings(),
        seed=config['percolation']['seed'],
        tool_version=TOOL_VERSION,
        duration_s=round(duration, 3),
        outputs={path.name: file_digest(path) for path in result.outputs},
        options=options,
    )
    manifest.write(out_dir / MANIFEST_NAME)
    logger.info("%s finished in %.2f s, outputs in %s", command, duration, out_dir)
    return manifest


def replay(manifest_path: Path, out_dir: Path, threads: int) -> RunManifest:
    """Re-run a manifest and check that every output is byte-identical"""
    original = RunManifest.read(manifest_path)
    if original.command not in HANDLERS:
        raise ConfigError(f"manifest names unknown command {original.command!r}")
    if original.tool_version != TOOL_VERSION:
        logger.warning("manifest written by version %s, replaying with %s", original.tool_version, TOOL_VERSION)
    config = config_from_strings(original.parameters)
    rerun = run_command(original.command, config, out_dir, threads, original.options)

    mismatched = sorted(name for name, digest in original.outputs.items()
                        if rerun.outputs.get(name) != digest)
    if mismatched:
        raise ReplayMismatchError(f"replayed outputs differ: {', '.join(mismatched)}")
    print(f"replay ok: {len(original.outputs)} outputs identical")
    return rerun


# Argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help="sectioned key=value configuration file")
    common.add_argument('--seed', type=int, help="master seed, overrides [percolation] seed")
    common.add_argument('--out', type=Path, default=Path('out'), help="output directory")
    common.add_argument('--threads', type=int, help=f"worker processes (env {THREADS_ENV_VAR})")
    common.add_argument('--progress', action='store_true', help="show replicate progress")
    common.add_argument('--verbose', action='store_true', help="debug logging")

    parser = argparse.ArgumentParser(
        prog='relay-planner',
        description="Relay proportion and business case of a D2D network on Poisson-Voronoi streets")
    parser.add_argument('--version', action='version', version=f"%(prog)s {TOOL_VERSION}")
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('occupation', parents=[common], help="occupation probability grid F(lambda, p)")
    commands.add_parser('pstar', parents=[common], help="estimate the critical occupation probability")
    commands.add_parser('relay-curve', parents=[common], help="minimal relay proportion along lambda")
    commands.add_parser('econ', parents=[common], help="cash flow, cumulated revenue and ROI")
    dump = commands.add_parser('dump-streets', parents=[common], help="write a street system realization")
    dump.add_argument('--with-network', action='store_true', help="also write users, relays and links")
    replay_cmd = commands.add_parser('replay', parents=[common], help="re-run a manifest and compare outputs")
    replay_cmd.add_argument('manifest', type=Path)
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.command == 'replay':
            threads = resolve_threads(args.threads, load_config(None))
            replay(args.manifest, args.out, threads)
            return exit_status(None)

        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            config = config.with_overrides('percolation', seed=args.seed)
        if args.progress:
            config = config.with_overrides('percolation', progress=True)
        threads = resolve_threads(args.threads, config)
        options = {'with_network': True} if getattr(args, 'with_network', False) else {}
        run_command(args.command, config, args.out, threads, options)
        return exit_status(None)
    except Exception as exc:
        status = exit_status(exc)
        logger.error("%s", exc)
        return status
