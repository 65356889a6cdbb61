import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Tuple

from lattice_gravimeter.config import ENVVAR_CONFIG, load_settings
from lattice_gravimeter.errors import ConfigError, GravimeterError
from lattice_gravimeter.lattice import params as lattice_params
from lattice_gravimeter.lattice.phasebook import closed_form_phase, ledger, phase_sensitivity
from lattice_gravimeter.lattice.validation import validate_moments
from lattice_gravimeter.metrology import report, sensitivity
from lattice_gravimeter.runconfig import RunConfig
from lattice_gravimeter.spin.dicke import state_options

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2


def setup_logging(logfile=None, loglevel=logging.INFO) -> None:
    logging.basicConfig(
        filename=logfile or None,
        level=loglevel,
        format="[%(levelname)-7s %(asctime)s %(name)s,%(filename)s:%(lineno)d] %(message)s",
    )


# Each command returns the artifacts it wrote and whether the run succeeded
CommandResult = Tuple[Dict[str, str], bool]


def cmd_derive(cfg: RunConfig, out_dir: str, seed: int, settings) -> CommandResult:
    p = cfg.params
    payload = {
        "params": p,
        "derived": lattice_params.derive(p),
        "ledger": ledger(p),
        "closed_form_phase": closed_form_phase(p),
        "phase_sensitivity": phase_sensitivity(p),
        "warnings": lattice_params.validate(p),
    }
    return {"derive": report.write_json(payload, os.path.join(out_dir, "derive.json"))}, True


def cmd_fringe(cfg: RunConfig, out_dir: str, seed: int, settings) -> CommandResult:
    table = sensitivity.fringe_scan(cfg.params, cfg.state.build(settings), cfg.phi_grid)
    path = report.write_csv(table, os.path.join(out_dir, "fringe.csv"), settings["CSV_FLOAT_FORMAT"])
    return {"fringe": path}, True


def cmd_scaling(cfg: RunConfig, out_dir: str, seed: int, settings) -> CommandResult:
    kind = cfg.scaling_kind or cfg.state.kind
    table = sensitivity.scaling_table(cfg.params, cfg.n_list, kind, **state_options(settings))
    fit = sensitivity.fit_scaling(table["N"], table["dg_over_g"])
    chi_fit = sensitivity.fit_scaling(table["N"], table["chi"]) if table["chi"].nunique() > 1 else None
    log.info(f"Scaling exponent of dg/g for {kind.value}: {fit.exponent:.6f} (r^2 = {fit.r_squared:.6f})")
    csv_path = report.write_csv(
        table[["N", "dg_over_g"]], os.path.join(out_dir, "scaling.csv"), settings["CSV_FLOAT_FORMAT"]
    )
    fit_payload = {"kind": kind, "fit": fit, "chi_fit": chi_fit, "chi": table["chi"].tolist()}
    json_path = report.write_json(fit_payload, os.path.join(out_dir, "scaling_fit.json"))
    return {"scaling": csv_path, "fit": json_path}, True


def cmd_validate(cfg: RunConfig, out_dir: str, seed: int, settings) -> CommandResult:
    result = validate_moments(
        cfg.params,
        cfg.state.build(settings),
        cfg.options,
        draws=cfg.validation_draws,
        seed=seed,
        tolerance=settings["VALIDATION_TOLERANCE"],
        cap=settings["ORACLE_CAP"],
        norm_tolerance=settings["NORM_TOLERANCE"],
    )
    path = report.write_json(result, os.path.join(out_dir, "validation.json"))
    if not result.passed:
        log.error(f"Validation failed: worst deviation {result.worst:.3g} > {result.tolerance:.3g}")
    return {"validation": path}, result.passed


def cmd_robustness(cfg: RunConfig, out_dir: str, seed: int, settings) -> CommandResult:
    if not cfg.delta_list:
        raise ConfigError(
            "robustness needs 'robustness.delta_list' when params.hold_time is 0", key="robustness.delta_list"
        )
    table = sensitivity.robustness(
        cfg.params, cfg.state.build(settings), cfg.delta_list, settings["PEAK_GRID_POINTS"], settings["ORACLE_CAP"]
    )
    path = report.write_csv(table, os.path.join(out_dir, "robustness.csv"), settings["CSV_FLOAT_FORMAT"])
    return {"robustness": path}, True


COMMANDS: Dict[str, Callable[..., CommandResult]] = {
    "derive": cmd_derive,
    "fringe": cmd_fringe,
    "scaling": cmd_scaling,
    "validate": cmd_validate,
    "robustness": cmd_robustness,
}


def run(
    config_path: str, command: str, out_dir: Optional[str] = None, seed: Optional[int] = None, settings=None
) -> int:
    """Run one command on one configuration file, return the process exit code."""
    settings = settings or load_settings()
    seed = settings["DEFAULT_SEED"] if seed is None else seed
    try:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command '{command}', expected one of {', '.join(COMMANDS)}")
        cfg = RunConfig.from_file(config_path, settings)
        lattice_params.validate(cfg.params)
        out_dir = out_dir or cfg.out_dir or os.getcwd()
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory {out_dir} is not writable: {e}")
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")

        log.info(f"Running '{command}' on {config_path} into {out_dir}")
        artifacts, ok = COMMANDS[command](cfg, out_dir, seed, settings)
        report.write_manifest(
            out_dir,
            command,
            params=cfg.params.to_dict(),
            state=cfg.state.to_dict(),
            seed=seed,
            version=settings["VERSION"],
            artifacts=artifacts,
        )
    except GravimeterError as e:
        log.error(f"{command}: {e}")
        return EXIT_CONFIG_ERROR
    log.info(f"Finished '{command}'")
    return EXIT_OK if ok else EXIT_VALIDATION_FAILED


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="lattice_gravimeter",
        description="Lattice atom-interferometer gravimeter simulations. "
        f"Tool settings can be overridden by the python file named in ${ENVVAR_CONFIG}.",
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--command", required=True, choices=sorted(COMMANDS), help="what to compute")
    parser.add_argument("--out", default=None, help="output directory (default: config out_dir, else cwd)")
    parser.add_argument("--seed", type=int, default=None, help="seed of the randomized validation draws (default 42)")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point."""
    args = parse_args(argv)
    settings = load_settings()
    setup_logging(logfile=settings["LOG_FILE"], loglevel=settings.get("LOG_LEVEL"))
    log.info(f"Started lattice_gravimeter {settings['VERSION']}")
    sys.exit(run(args.config, args.command, args.out, args.seed, settings))


if __name__ == "__main__":
    main()
