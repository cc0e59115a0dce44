from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from app.gap_lab.core.config import load_lab_config
from app.gap_lab.core.errors import GapLabError
from app.gap_lab.core.reporting import build_metadata, default_output_path, write_csv, write_json
from app.gap_lab.models.schemas import RunConfig
from app.gap_lab.services import run_status
from app.gap_lab.services.pipeline import PipelineService

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 2, 3
_RUN_KEYS = {"format", "out", "output_path", "jobs", "command"}


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="JSON file with parameters; flags override it")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", type=Path, help="output file (default: $GAP_LAB_OUTPUT_DIR/<command>.<format>)")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="gap-lab", description="Fundamental-gap numerical lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text, argument_default=argparse.SUPPRESS)

    p = command("airy-table", "tabulate Ai, Ai', Bi, Bi' and the Wronskian")
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--step", type=float)

    p = command("eigen", "eigenpairs of the reduced problem")
    p.add_argument("--phi0", type=float, help="radians")
    p.add_argument("--mu", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--j", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--backend", choices=["shooting", "matrix"])

    p = command("rescale-sweep", "rescaled eigenvalues over a mu sweep")
    p.add_argument("--phi0", type=float, help="radians")
    p.add_argument("--mu", type=_float_list, help="comma-separated, e.g. 1e4,1e5,1e6")
    p.add_argument("--n", type=int)
    p.add_argument("--K", type=int)

    p = command("corollary-sweep", "scaled gap-derivative integral over a mu sweep")
    p.add_argument("--phi0", type=float, help="radians")
    p.add_argument("--mu", type=_float_list, help="comma-separated, e.g. 1e4,1e5,1e6")
    p.add_argument("--n", type=int)

    p = command("perturb-battery", "randomised perturbation-bound battery")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-dim", dest="max_dim", type=int)
    p.add_argument("--scale", type=float)

    p = command("theorem", "full gap-comparison pipeline at diameter D0")
    p.add_argument("--D0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--mu-ladder", dest="mu_ladder", type=_float_list)
    return parser


def _lab_defaults(command: str, cfg: dict[str, Any]) -> dict[str, Any]:
    if command == "eigen":
        solver = cfg["solver"]
        return {"tol": float(solver["tol"]), "grid_points": int(solver["grid_points"]), "backend": solver["backend"]}
    if command == "perturb-battery":
        pert = cfg["perturbation"]
        return {
            "instances": int(pert["instances"]),
            "seed": int(pert["seed"]),
            "max_dim": int(pert["max_dim"]),
            "scale": float(pert["scale"]),
        }
    if command == "theorem":
        return {"mu_ladder": tuple(float(mu) for mu in cfg["theorem"]["mu_ladder"])}
    return {}


def _read_config_file(path: Path) -> dict[str, Any]:
    with path.open("r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return data


def resolve_run_config(args: argparse.Namespace, cfg: dict[str, Any]) -> RunConfig:
    """lab.yaml defaults, then the --config file, then flags."""
    flags = dict(vars(args))
    command = flags.pop("command")
    file_cfg = _read_config_file(flags.pop("config")) if "config" in flags else {}
    for key in ("verbose", "quiet"):
        flags.pop(key, None)

    if "parameters" in file_cfg:
        file_params = dict(file_cfg["parameters"])
    else:
        file_params = {k: v for k, v in file_cfg.items() if k not in _RUN_KEYS}
    run_keys = {k: flags.pop(k) for k in ("format", "out", "jobs") if k in flags}
    parameters = {**_lab_defaults(command, cfg), **file_params, **flags}

    out = run_keys.get("out") or file_cfg.get("out") or file_cfg.get("output_path")
    fmt = run_keys.get("format") or file_cfg.get("format")
    if fmt is None and out is not None and Path(out).suffix in {".csv", ".json"}:
        fmt = Path(out).suffix[1:]
    fmt = fmt or cfg["output"]["default_format"]
    jobs = run_keys.get("jobs") or file_cfg.get("jobs") or int(cfg["sweeps"]["jobs"])
    return RunConfig(
        command=command,
        parameters=parameters,
        output_path=Path(out) if out is not None else default_output_path(command, fmt),
        format=fmt,
        jobs=jobs,
    )


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING if getattr(args, "quiet", False) else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _fail(code: int, payload: dict[str, Any]) -> int:
    print(json.dumps(payload, default=str, sort_keys=True), file=sys.stderr)
    return code


def run(config: RunConfig, cfg: dict[str, Any]) -> Path:
    payload = PipelineService(cfg).run(config)
    path = config.output_path or default_output_path(config.command, config.format)
    extra: dict[str, Any] = {} if config.format == "json" else {"summary": payload["summary"]}
    progress = run_status.get_run_status()
    if progress["command"] == config.command:
        extra["progress"] = progress
    metadata = build_metadata(
        config.command,
        {"parameters": config.params.to_dict(), "format": config.format, "jobs": config.jobs},
        int(cfg["output"]["schema_version"]),
        extra,
    )
    if config.format == "csv":
        return write_csv(path, metadata, payload["rows"])
    return write_json(path, metadata, payload)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        cfg = load_lab_config()
        config = resolve_run_config(args, cfg)
    except ValidationError as exc:
        return _fail(EXIT_USAGE, {"error": "ValidationError", "message": str(exc), "diagnostics": {"errors": exc.errors()}})
    except (ValueError, OSError) as exc:
        diag = exc.to_dict() if isinstance(exc, GapLabError) else {"error": type(exc).__name__, "message": str(exc)}
        return _fail(EXIT_USAGE, diag)

    try:
        path = run(config, cfg)
    except ValidationError as exc:
        return _fail(EXIT_USAGE, {"error": "ValidationError", "message": str(exc), "diagnostics": {"errors": exc.errors()}})
    except GapLabError as exc:
        logger.error("%s failed: %s", config.command, exc)
        return _fail(EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAILURE, exc.to_dict())
    except ValueError as exc:
        return _fail(EXIT_USAGE, {"error": type(exc).__name__, "message": str(exc)})
    except RuntimeError as exc:
        logger.error("%s failed: %s", config.command, exc)
        return _fail(EXIT_FAILURE, {"error": type(exc).__name__, "message": str(exc)})

    print(f"{config.command}: wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
