"""Command-line entry point: every workflow without the service.

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as cfgmod
from . import persistence
from .errors import InvalidConfig, PnrlError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnrl", description="Multiagent RL training workflows")
    sub = p.add_subparsers(dest="command", required=True)

    for name, doc in (
        ("train", "round-robin / self-play training from a config file"),
        ("adapt", "finetune a saved ego policy against static partners"),
        ("eval", "zero-shot pairing of saved policies"),
        ("crossplay", "pairwise evaluation matrix over saved policies"),
    ):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("config", help="TOML or JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="override master_seed")
        sp.add_argument("--out-dir", default=None, help="override output directory")
        sp.add_argument("--timesteps", type=int, default=None, help="override total_timesteps")
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("serve", help="start the experiment service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=None, help="default $PNRL_PORT or 8640")
    sp.add_argument("--data-dir", default=None, help="default $PNRL_DATA_DIR or ./pnrl_data")
    sp.add_argument("--max-parallel", type=int, default=None, help="default $PNRL_MAX_PARALLEL or 4")

    sp = sub.add_parser("inspect", help="show the header of a policy or trajectory file")
    sp.add_argument("file")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    return p


def _load_and_validate(args) -> cfgmod.RunConfig:
    try:
        raw = cfgmod.load_config_file(args.config)
    except FileNotFoundError:
        raise InvalidConfig([cfgmod.ConfigFieldError("config", f"file not found: {args.config}")])
    except (ValueError, OSError) as e:
        raise InvalidConfig([cfgmod.ConfigFieldError("config", f"unreadable config: {e}")])
    if not isinstance(raw, dict):
        raise InvalidConfig([cfgmod.ConfigFieldError("config", "top level must be a table")])
    raw.setdefault("mode", args.command)
    if raw["mode"] != args.command:
        raise InvalidConfig(
            [cfgmod.ConfigFieldError("mode", f"config says {raw['mode']!r} but command is {args.command!r}")]
        )
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.timesteps is not None:
        raw["total_timesteps"] = args.timesteps
    if args.out_dir is not None:
        raw["out_dir"] = args.out_dir
    return cfgmod.validate_config(raw)


def _print_config_errors(e: InvalidConfig) -> None:
    print("config error:", file=sys.stderr)
    for err in e.errors:
        print(f"  {err.field}: {err.message}", file=sys.stderr)


def _run_workflow(args) -> int:
    try:
        cfg = _load_and_validate(args)
    except InvalidConfig as e:
        _print_config_errors(e)
        return EXIT_CONFIG
    out_dir = cfg.out_dir or os.path.join("pnrl_out", cfg.mode)
    try:
        from .runner import run_config

        result = run_config(cfg, out_dir)
    except InvalidConfig as e:
        _print_config_errors(e)
        return EXIT_CONFIG
    except PnrlError as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.format == "json":
        print(json.dumps(result, sort_keys=True))
        return EXIT_OK
    if cfg.mode in (cfgmod.TRAIN, cfgmod.ADAPT):
        print(f"{cfg.mode}: {result['env_steps']} env steps, {result['episodes']} episodes")
        for k, v in result["update_counts"].items():
            print(f"  updates {k}: {v}")
    elif cfg.mode == cfgmod.EVAL:
        means = ", ".join(f"{m:+.4f}" for m in result["mean_returns"])
        stds = ", ".join(f"{s:.4f}" for s in result["std_returns"])
        print(f"eval over {result['episodes']} episodes: mean returns [{means}] std [{stds}]")
    else:
        print(f"cross-play over {result['episodes_per_cell']} episodes/cell:")
        for pid, row in zip(result["policy_ids"], result["row_means"]):
            cells = "  ".join(f"{x:+.3f}" for x in row)
            print(f"  {pid}: {cells}")
    for a in result.get("artifacts", []):
        print(f"wrote {a}")
    return EXIT_OK


def _inspect(args) -> int:
    path = args.file
    try:
        if path.endswith(persistence.POLICY_EXT):
            params, metadata = persistence.load_policy(path)
            info = {
                "file_kind": "policy",
                "policy_kind": params.kind,
                "algo": params.algo,
                "eps": params.eps,
                "metadata": metadata,
            }
            if params.kind == "table":
                info["dims"] = [params.n_states, params.n_actions]
                info["has_critic"] = params.vtable is not None
            else:
                info["layers"] = list(params.layers)
                info["has_critic"] = params.critic is not None
        elif path.endswith(persistence.TRAJECTORY_EXT):
            steps, spec, metadata = persistence.load_trajectory(path)
            info = {
                "file_kind": "trajectory",
                "env_id": spec.env_id,
                "n_agents": spec.n_agents,
                "horizon": spec.horizon,
                "n_steps": len(steps),
                "total_rewards": [float(sum(js.rewards[i] for js in steps)) for i in range(spec.n_agents)],
                "metadata": metadata,
            }
        else:
            print(f"config error: unknown file extension on {path}", file=sys.stderr)
            return EXIT_CONFIG
    except FileNotFoundError:
        print(f"config error: file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    except PnrlError as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.format == "json":
        print(json.dumps(info, sort_keys=True))
    else:
        for k, v in info.items():
            print(f"{k}: {v}")
    return EXIT_OK


def _serve(args) -> int:
    port = args.port if args.port is not None else int(os.environ.get("PNRL_PORT", "8640"))
    data_dir = args.data_dir or os.environ.get("PNRL_DATA_DIR", "pnrl_data")
    max_parallel = (
        args.max_parallel
        if args.max_parallel is not None
        else int(os.environ.get("PNRL_MAX_PARALLEL", "4"))
    )
    try:
        import uvicorn

        from .service.api import create_app
    except ImportError as e:
        print(f"runtime failure: service dependencies missing: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    app = create_app(data_dir=data_dir, max_parallel=max_parallel)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command in ("train", "adapt", "eval", "crossplay"):
        return _run_workflow(args)
    if args.command == "inspect":
        return _inspect(args)
    return _serve(args)


if __name__ == "__main__":
    sys.exit(main())
