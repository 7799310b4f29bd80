"""Command line interface of the coflow switch simulator"""
import pathlib
import sys
from typing import Any, Dict, List, Optional, Sequence

import click
import inquirer
import pandas as pd
from dotenv import load_dotenv

sys.path.append(pathlib.Path.cwd().as_posix())
from src.analysis.lib.results import (  # pylint: disable=wrong-import-position
    read_rows,
    record_to_row,
    rows_to_csv,
    write_rows,
)
from src.analysis.lib.scaling import FAMILIES, clearance_scaling  # pylint: disable=wrong-import-position
from src.analysis.pipeline.checks import oracle_check  # pylint: disable=wrong-import-position
from src.analysis.pipeline.sweep import (  # pylint: disable=wrong-import-position
    dilation_report,
    report_to_csv,
    sweep,
    trend_report,
)
from src.engine.lib.config import (  # pylint: disable=wrong-import-position
    POLICIES,
    POLICY_MODES,
    ExperimentPlan,
    SimConfig,
    dump_sim_config,
    load_experiment_plan,
    load_sim_config,
    sim_config_from_dict,
    sim_config_to_dict,
)
from src.engine.pipeline.simulate import Simulator  # pylint: disable=wrong-import-position
from src.switch.lib.traffic import FAMILIES as FLOW_FAMILIES, PLACEMENTS  # pylint: disable=wrong-import-position
from src.switch.lib.utils import make_streams, parse_list_string  # pylint: disable=wrong-import-position
from src.tuning.lib.mgf import model_mgf  # pylint: disable=wrong-import-position
from src.tuning.lib.params import heavy_traffic_frame_size  # pylint: disable=wrong-import-position
from src.tuning.pipeline.tune import (  # pylint: disable=wrong-import-position
    FrameOverflowProbe,
    auto_tune,
    empirical_gamma_tune,
)

DEFAULT_TRAFFIC = {"n": 16, "lambda": 0.3, "beta": 2.5}


def run_options(func):
    """Options shared by every command that builds a SimConfig"""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), envvar="COFLOW_CONFIG", help="TOML run configuration"),
        click.option("--seed", type=click.INT, envvar="COFLOW_SEED", help="Run seed"),
        click.option("--out", type=click.Path(dir_okay=False), envvar="COFLOW_OUT", help="CSV file rows are appended to"),
        click.option("--policy", type=click.Choice(POLICIES), envvar="COFLOW_POLICY", help="Scheduling policy"),
        click.option("--n", "n", type=click.INT, envvar="COFLOW_N", help="Switch ports"),
        click.option("--lambda", "lam", type=click.FLOAT, envvar="COFLOW_LAMBDA", help="Coflow arrival rate per slot"),
        click.option("--beta", type=click.FLOAT, envvar="COFLOW_BETA", help="Mean packets per port per coflow"),
        click.option("--horizon", type=click.INT, envvar="COFLOW_HORIZON", help="Simulated slots"),
        click.option("--warmup", type=click.INT, envvar="COFLOW_WARMUP", help="Slots left out of the metrics"),
        click.option("--placement", type=click.Choice(PLACEMENTS), help="Flow placement"),
        click.option("--flow-size", "family", type=click.Choice(FLOW_FAMILIES), help="Flow size law"),
        click.option("--epsilon", type=click.FLOAT, help="Power law tail parameter"),
        click.option("--frame-size", type=click.INT, help="CAB frame size, tuned when omitted"),
        click.option("--sctf/--no-sctf", default=None, help="CAB shortest-clearance-time-first"),
        click.option("--dynamic-frames/--no-dynamic-frames", default=None, help="CAB dynamic frame sizing"),
        click.option("--mode", type=click.Choice(POLICY_MODES), help="Randomized/periodic matching source"),
        click.option("--period", type=click.INT, help="Periodic BvN cycle length"),
        click.option("--percentiles", type=click.STRING, help="Coflow delay quantiles, e.g. 0.99,0.999"),
        click.option("--dilation/--no-dilation", default=None, help="Report the dilation factor"),
        click.option("--trace-samples", type=click.INT, help="Backlog trace windows used by the stability check"),
        click.option("--non-stationary", is_flag=True, default=False, help="Allow rho >= 1 runs"),
        click.option("--debug", is_flag=True, default=False, help="Check packet conservation every slot"),
        click.option("--progress", is_flag=True, default=False, help="Show progress bars"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_sim_config(options: Dict[str, Any]) -> SimConfig:
    """
    Builds a SimConfig: flags override the config file, which overrides the defaults.

    Args:
        options (dict): Parsed run_options values.

    Returns:
        SimConfig: the validated configuration.
    """
    data: Dict[str, Any] = {}
    if options.get("config_path"):
        data = sim_config_to_dict(load_sim_config(options["config_path"]))
    traffic = data.setdefault("traffic", {})
    flow_size = traffic.setdefault("flow_size", {})
    policy = data.setdefault("policy", {})
    metrics = data.setdefault("metrics", {})
    run = data.setdefault("run", {})
    for key, value in DEFAULT_TRAFFIC.items():
        traffic.setdefault(key, value)

    overrides = [
        (traffic, "n", options.get("n")),
        (traffic, "lambda", options.get("lam")),
        (traffic, "beta", options.get("beta")),
        (traffic, "placement", options.get("placement")),
        (flow_size, "family", options.get("family")),
        (flow_size, "epsilon", options.get("epsilon")),
        (policy, "name", options.get("policy")),
        (policy, "frame_size", options.get("frame_size")),
        (policy, "sctf", options.get("sctf")),
        (policy, "dynamic_frames", options.get("dynamic_frames")),
        (policy, "mode", options.get("mode")),
        (policy, "period", options.get("period")),
        (metrics, "dilation", options.get("dilation")),
        (metrics, "trace_samples", options.get("trace_samples")),
        (run, "horizon", options.get("horizon")),
        (run, "warmup", options.get("warmup")),
        (run, "seed", options.get("seed")),
    ]
    for table, key, value in overrides:
        if value is not None:
            table[key] = value
    # a new horizon without a new warmup falls back to the default share
    if options.get("horizon") is not None and options.get("warmup") is None:
        run.pop("warmup", None)
    if options.get("percentiles"):
        metrics["percentiles"] = parse_list_string(options["percentiles"], cast=float)
    if options.get("non_stationary"):
        metrics["stationary"] = False
    if options.get("debug"):
        run["debug"] = True
    return sim_config_from_dict(data)


@click.group()
def cli():
    """Coflow scheduling simulator for input-queued switches."""


@cli.command()
@run_options
@click.option("--header/--no-header", default=False, help="Print the CSV header before the row")
def simulate(header, **options):
    """Runs one simulation and prints its CSV row."""
    config = build_sim_config(options)
    click.echo(f"[1] Simulating {config.policy.name} on {config.n} ports, rho={config.model.rho:.4f}...", err=True)
    simulator = Simulator(config, progress=options["progress"])
    if simulator.params is not None:
        params = simulator.params
        click.echo(f"--- Tuned gamma={params.gamma} delta={params.delta} frame_size={params.frame_size}", err=True)
    record = simulator.run()
    if record.stable is None:
        click.echo("Warning: backlog trace too short, stability not assessed", err=True)
    row = record_to_row(record)
    click.echo(rows_to_csv([row], header=header), nl=False)
    if options.get("out"):
        write_rows(options["out"], [row])
    click.echo("--- Simulation finished", err=True)


def _run_sweep(plan: ExperimentPlan, progress: bool) -> None:
    click.echo(f"[1] Sweeping {plan.kind} over {plan.grid}...", err=True)
    rows = sweep(plan, progress=progress)
    failed = sum(row.get("status") == "error" for row in rows)
    if failed:
        click.echo(f"Warning: {failed} of {len(rows)} runs failed", err=True)
    click.echo(rows_to_csv(rows), nl=False)
    click.echo("--- Sweep finished", err=True)


def _sweep_command(kind: str, grid_default: str, cast):
    swept = "port counts" if kind == "n" else "offered loads"

    @cli.command(name=f"sweep-{kind}", help=f"Sweeps {swept} and prints one row per run.")
    @run_options
    @click.option("--grid", type=click.STRING, default=grid_default, show_default=True, help=f"{kind} values, comma separated")
    @click.option("--policies", type=click.STRING, default="cab", show_default=True, help="Policies run at every point")
    @click.option("--replications", type=click.INT, default=1, show_default=True, help="Seeds per point")
    @click.option("--workers", type=click.INT, default=1, envvar="COFLOW_WORKERS", show_default=True)
    def command(grid, policies, replications, workers, **options):
        plan = ExperimentPlan(
            base=build_sim_config(options),
            kind=kind,
            grid=parse_list_string(grid, cast=cast),
            policies=parse_list_string(policies, cast=str),
            replications=replications,
            output=options.get("out"),
            workers=workers,
        )
        _run_sweep(plan, options["progress"])

    return command


sweep_n = _sweep_command("n", "16,32,64,128,256", int)
sweep_rho = _sweep_command("rho", "0.5,0.75,0.9", float)


@cli.command(name="sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True, help="TOML plan with a [sweep] table")
@click.option("--out", type=click.Path(dir_okay=False), envvar="COFLOW_OUT", help="Overrides the plan output")
@click.option("--workers", type=click.INT, envvar="COFLOW_WORKERS")
@click.option("--progress", is_flag=True, default=False)
def sweep_plan(config_path, out, workers, progress):
    """Runs the sweep described by a plan file."""
    plan = load_experiment_plan(config_path)
    if out is not None:
        plan.output = out
    if workers is not None:
        plan.workers = workers
    _run_sweep(plan, progress)


@cli.command()
@click.option("--results", type=click.Path(exists=True, dir_okay=False), required=True, help="Results CSV")
@click.option("--kind", type=click.Choice(["dilation", "trend"]), default="dilation", show_default=True)
def report(results, kind):
    """Summarizes a results CSV into dilation factors or scaling trends."""
    rows = read_rows(results)
    summary = dilation_report(rows) if kind == "dilation" else trend_report(rows)
    click.echo(report_to_csv(summary), nl=False)


@cli.command()
@run_options
@click.option("--empirical", is_flag=True, default=False, help="Refine gamma against measured overflow")
@click.option("--frames", type=click.INT, default=10_000, show_default=True, help="Frames per measurement round")
@click.option("--heavy-traffic", is_flag=True, default=False, help="Also print the frame size of the heavy-traffic exponent")
def tune(empirical, frames, heavy_traffic, **options):
    """Prints the CAB parameters gamma, delta and T for a traffic model."""
    config = build_sim_config(options)
    rng = make_streams(config.seed).tuning
    click.echo("[1] Computing analytic parameters...", err=True)
    params = auto_tune(config.model, rng, verbose=True)
    click.echo("--- Analytic parameters computed", err=True)
    if empirical:
        click.echo("[2] Refining gamma empirically...", err=True)
        result = empirical_gamma_tune(FrameOverflowProbe(config.model, rng), params.gamma, frames=frames)
        if not result.converged:
            click.echo("Warning: empirical tuner did not converge, keeping the best-so-far gamma", err=True)
        params = result.params
        click.echo(f"--- Gamma refined in {result.rounds} rounds, measured overflow {result.measured}", err=True)
    click.echo(f"gamma={params.gamma} delta={params.delta} frame_size={params.frame_size}")
    if heavy_traffic:
        mgf = model_mgf(config.model, rng)
        frame_size = heavy_traffic_frame_size(config.model.lam, mgf.mean, mgf.variance, config.n, mgf)
        click.echo(f"heavy_traffic_frame_size={frame_size}")


@cli.command()
@click.option("--family", type=click.Choice(FAMILIES), default="diagonal-geometric", show_default=True)
@click.option("--grid", type=click.STRING, default="8,16,32,64,128,256", show_default=True, help="Port counts")
@click.option("--samples", type=click.INT, default=10_000, show_default=True, help="Coflows per port count")
@click.option("--beta", type=click.FLOAT, default=2.5, show_default=True)
@click.option("--epsilon", type=click.FLOAT, default=1.0, show_default=True)
@click.option("--seed", type=click.INT, default=1, envvar="COFLOW_SEED", show_default=True)
def scaling(family, grid, samples, beta, epsilon, seed):
    """Estimates how the clearance time grows with the port count."""
    rng = make_streams(seed).arrivals
    click.echo(f"[1] Sampling {family} clearance times...", err=True)
    estimate = clearance_scaling(family, parse_list_string(grid), samples, rng, beta=beta, epsilon=epsilon)
    fit = estimate.fit
    frame = pd.DataFrame(
        {
            "family": family,
            "n": estimate.grid,
            "mean_clearance": estimate.means,
            "std_error": estimate.std_errors,
            "fit": fit.kind,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "theory": fit.theory,
        }
    )
    click.echo(frame.to_csv(index=False, lineterminator="\n"), nl=False)
    click.echo(f"--- Fit {fit.kind}: slope={fit.slope:.4f} r_squared={fit.r_squared:.4f}", err=True)


@cli.command(name="oracle-check")
@click.option("--horizon", type=click.INT, default=1_000_000, envvar="COFLOW_HORIZON", show_default=True)
@click.option("--customers", type=click.INT, default=200_000, show_default=True, help="FIFO customers")
@click.option("--seed", type=click.INT, default=1, envvar="COFLOW_SEED", show_default=True)
@click.option("--progress", is_flag=True, default=False)
def oracle_check_command(horizon, customers, seed, progress):
    """Compares simulated queues with the M/G/1, GI/GI/1 and CAB delay formulas."""
    click.echo("[1] Running oracle comparisons...", err=True)
    comparisons = oracle_check(horizon=horizon, seed=seed, customers=customers, progress=progress)
    frame = pd.DataFrame(
        [
            {
                "check": c.name,
                "measured": c.measured,
                "predicted": c.predicted,
                "relative_error": c.relative_error,
                "tolerance": c.tolerance,
                "passed": c.passed,
            }
            for c in comparisons
        ]
    )
    click.echo(frame.to_csv(index=False, lineterminator="\n"), nl=False)
    for comparison in comparisons:
        if not comparison.passed:
            click.echo(f"Warning: {comparison.name} missed its oracle", err=True)
    click.echo("--- Oracle comparisons finished", err=True)


def start_prompt():
    """
    Prompts the user for a simulation configuration.

    Returns:
        answer (dict): Raw answers, every value a string or bool.
    """

    q = [
        inquirer.Text("n", message="Switch ports", default="16"),
        inquirer.Text("lambda", message="Coflow arrival rate", default="0.3"),
        inquirer.Text("beta", message="Mean packets per port", default="2.5"),
        inquirer.List("placement", message="Flow placement", choices=list(PLACEMENTS), default="uniform"),
        inquirer.List("family", message="Flow size law", choices=list(FLOW_FAMILIES), default="geometric"),
        inquirer.Text(
            "epsilon",
            message="Power law epsilon",
            default="1.0",
            ignore=lambda x: x["family"] != "powerlaw",
        ),
        inquirer.List("policy", message="Policy", choices=list(POLICIES), default="cab"),
        inquirer.Confirm(
            "tune_frame",
            message="Tune the frame size?",
            default=True,
            ignore=lambda x: x["policy"] != "cab",
        ),
        inquirer.Text(
            "frame_size",
            message="Frame size",
            default="100",
            ignore=lambda x: x["policy"] != "cab" or x["tune_frame"],
        ),
        inquirer.Confirm("sctf", message="Use SCTF?", default=False, ignore=lambda x: x["policy"] != "cab"),
        inquirer.Confirm(
            "dynamic_frames",
            message="Use dynamic frames?",
            default=False,
            ignore=lambda x: x["policy"] != "cab",
        ),
        inquirer.List(
            "mode",
            message="Matching source",
            choices=list(POLICY_MODES),
            default="auto",
            ignore=lambda x: x["policy"] not in ["randomized", "periodic"],
        ),
        inquirer.Text("period", message="BvN cycle length", default="1000", ignore=lambda x: x["policy"] != "periodic"),
        inquirer.Text("percentiles", message="Coflow delay quantiles", default="0.999"),
        inquirer.Text("horizon", message="Horizon (slots)", default="1000000"),
        inquirer.Text("seed", message="Seed", default="1"),
    ]

    try:
        answer = inquirer.prompt(q)
    except KeyboardInterrupt:
        sys.exit(1)

    return answer


def prompt_parser(answer) -> dict:
    """
    Turns raw prompt answers into the nested tables of a config file.

    Args:
        answer (dict): Answers from start_prompt.

    Returns:
        parsed_answer (dict): Tables "traffic", "policy", "metrics" and "run".
    """
    flow_size = {"family": answer["family"]}
    if answer["family"] == "powerlaw":
        flow_size["epsilon"] = float(answer["epsilon"])

    policy = {"name": answer["policy"]}
    if answer["policy"] == "cab":
        if not answer["tune_frame"]:
            policy["frame_size"] = int(answer["frame_size"])
        policy["sctf"] = bool(answer["sctf"])
        policy["dynamic_frames"] = bool(answer["dynamic_frames"])
    if answer["policy"] in ("randomized", "periodic"):
        policy["mode"] = answer["mode"]
    if answer["policy"] == "periodic":
        policy["period"] = int(answer["period"])

    return {
        "traffic": {
            "n": int(answer["n"]),
            "lambda": float(answer["lambda"]),
            "beta": float(answer["beta"]),
            "placement": answer["placement"],
            "flow_size": flow_size,
        },
        "policy": policy,
        "metrics": {"percentiles": parse_list_string(answer["percentiles"], cast=float)},
        "run": {"horizon": int(answer["horizon"]), "seed": int(answer["seed"])},
    }


@cli.command()
@click.option("--out", type=click.Path(dir_okay=False), default="configs/simulation.toml", show_default=True)
def configure(out):
    """Writes a TOML run configuration from an interactive prompt."""
    answer = start_prompt()
    if answer is None:
        raise click.Abort()
    config = sim_config_from_dict(prompt_parser(answer))
    dump_sim_config(config, out)
    click.echo(f"--- Configuration written to {out}", err=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point: runs the CLI and maps failures to exit codes.

    Returns:
        int: 0 on success, 1 on usage errors, 2 on runtime errors.
    """
    load_dotenv()
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    if not args:
        with click.Context(cli, info_name="coflow") as ctx:
            click.echo(cli.get_help(ctx), err=True)
        return 1
    try:
        code = cli.main(args=args, prog_name="coflow", standalone_mode=False)
    except click.UsageError as error:
        error.show()
        return 1
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as error:
        error.show()
        return 2
    except Exception as error:  # pylint: disable=broad-except
        click.echo(f"Error: {error}", err=True)
        return 2
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
