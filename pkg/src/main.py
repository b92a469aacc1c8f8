import logging
import sys

import click
import yaml

from src.errors import SpectraError
from src.models import VERIFY_SUITES, RunConfig
from src.runner import execute_run
from src.ulam_spectra import BIN_POLICIES
from src.utils.helpers import get_config

ERROR_EXIT = 2
FAILED_EXIT = 1


def load_config():
    """
    Loads the configuration from config.yaml, falling back to the sample.
    """
    try:
        return get_config()
    except FileNotFoundError:
        logging.error("Error: config.yaml not found. Please copy config.yaml.sample and adjust it.")
        sys.exit(ERROR_EXIT)
    except yaml.YAMLError as e:
        logging.error(f"Error parsing config.yaml: {e}")
        sys.exit(ERROR_EXIT)


def common_options(func):
    """Options shared by every command; unset ones fall back to config.yaml."""
    options = [
        click.option("--map", "map_source", default=None,
                     help="builtin:<name> or a path to a map JSON file."),
        click.option("--weight", "weight_mode", default=None,
                     help="srb, constant:<c>, pieces:<a,b,...>, two-orbit or custom:<file.json>."),
        click.option("--depth", type=int, default=None, help="Orbit depth K."),
        click.option("--n-range", default=None, help="Iterate range, e.g. 1..64."),
        click.option("--precision-bits", type=int, default=None,
                     help="Use interval arithmetic at this precision."),
        click.option("--output-dir", type=click.Path(file_okay=False), default=None,
                     help="Directory for the exported artifacts."),
        click.option("--format", "formats", multiple=True,
                     type=click.Choice(["md", "html", "json", "csv", "excel", "svg"]),
                     help="Export format; repeat for several."),
        click.option("--seed", type=int, default=None, help="Seed for the random observable suites."),
        click.option("--bv-n", type=int, default=None, help="Iterate count for the BV radius estimate."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _run(command, **overrides):
    config = load_config()
    overrides["formats"] = tuple(overrides.get("formats") or ()) or None
    try:
        run_config = RunConfig.from_settings(command, config, **overrides)
        outcome = execute_run(config, command, run_config.as_options())
    except (SpectraError, ValueError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        click.echo(f"error: {e}", err=True)
        sys.exit(ERROR_EXIT)

    for message in outcome["summary"]:
        print(message)  # Print summary to console for CLI usage
    if not outcome["passed"]:
        sys.exit(FAILED_EXIT)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level.")
def cli(verbose):
    """
    Transfer-operator spectra of piecewise monotone interval maps: discontinuity
    orbits, Lambda bounds, BV radius, verification suites and Ulam spectra.
    """
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@cli.command(name="orbits", help="Compute the discontinuity orbit table.")
@common_options
def orbits(**options):
    _run("orbits", **options)


@cli.command(name="lambda", help="Estimate Lambda^inf and Lambda^sup over the discontinuity orbits.")
@common_options
def lambda_(**options):
    _run("lambda", **options)


@cli.command(name="bv-radius", help="Estimate the BV essential spectral radius.")
@common_options
def bv_radius(**options):
    _run("bv-radius", **options)


@cli.command(name="example-gap", help="Check the radius gap of the example family T_{m,rho}.")
@click.option("--m", "m", type=int, default=None, help="Family parameter m (>= 4).")
@click.option("--c", "c", default=None, help="Required lower bound on the gap, e.g. 0.5.")
@click.option("--itinerary", default=None,
              help="thue-morse, fibonacci or word:<0/1 letters> for the itinerary rho.")
@common_options
def example_gap(**options):
    _run("example-gap", **options)


@cli.command(name="verify", help="Run a verification suite.")
@click.argument("suite", type=click.Choice(VERIFY_SUITES))
@click.option("--k", "k_range", default=None, help="Orbit index range for jump-shift, e.g. 1..32.")
@common_options
def verify(suite, **options):
    _run("verify", suite=suite, **options)


@cli.command(name="ulam", help="Compute Ulam spectra and compare them with Lambda and the BV radius.")
@click.option("--m-list", default=None, help="Comma-separated bin counts, e.g. 64,256,1024.")
@click.option("--bin-policy", type=click.Choice(BIN_POLICIES), default=None,
              help="How the Ulam bins are placed.")
@common_options
def ulam(**options):
    _run("ulam", **options)


@cli.command(name="report", help="Orbits, Lambda, Ulam spectra and every verification in one report.")
@click.option("--m-list", default=None, help="Comma-separated bin counts, e.g. 64,256,1024.")
@click.option("--bin-policy", type=click.Choice(BIN_POLICIES), default=None,
              help="How the Ulam bins are placed.")
@common_options
def report(**options):
    _run("report", **options)


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    cli()
