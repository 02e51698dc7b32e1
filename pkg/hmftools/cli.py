#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
"""Command line interface: single-point stability queries and CSV sweeps."""

import logging
import math
import sys
from dataclasses import dataclass
from functools import wraps
from typing import Any, Callable, Dict, List, Optional

import click
import dask
import numpy as np

from hmftools import __version__
from hmftools.dynamics import GaussianState, evolve_covariance
from hmftools.errors import CriticalPointError, HmfError, StabilityError
from hmftools.response import ModelParams
from hmftools.stability import CRITICAL_BAND, Classification, classify
from hmftools.thermo import (
    hybridization_free_energy_quadrature,
    hybridization_free_energy_reorg,
    hybridization_free_energy_spectral,
    subdivision_potential,
    vartheta,
)
from hmftools.utils.click_mutually_exclusive_option import MutuallyExclusiveOption, explicit_choice
from hmftools.utils.csv_output import CsvReport, format_value

logger = logging.getLogger(__name__)

EXIT_USAGE = 64
EXIT_ERROR = 3


@dataclass(frozen=True)
class Settings:
    threads: int = 1


class HmfGroup(click.Group):
    """Group that maps usage errors to exit status 64 and library errors to exit status 3."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        except HmfError as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(EXIT_ERROR)
        sys.exit(rv if isinstance(rv, int) else 0)


def load_config(path: str) -> Dict[str, Any]:
    """
    Reads a key = value file. Blank lines and text after '#' are ignored, keys may use dashes or underscores and
    comma separated values become lists.
    """
    values = {}
    with open(path, encoding="utf-8") as fp:
        for number, raw in enumerate(fp, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or not key:
                raise click.BadParameter(f"line {number} is not of the form 'key = value'", param_hint="--config")
            value = value.strip()
            values[key] = [v.strip() for v in value.split(",") if v.strip()] if "," in value else value
    return values


def _defaults_for(command: click.Command, values: Dict[str, Any]) -> Dict[str, Any]:
    params = {}
    for param in command.params:
        params[param.name] = param
        for opt in getattr(param, "opts", ()):
            params.setdefault(opt.lstrip("-").replace("-", "_"), param)
    for key in sorted(set(values) - set(params)):
        logger.warning(f"Ignoring config key '{key}': not an option of '{command.name}'")
    defaults = {}
    for key, value in values.items():
        param = params.get(key)
        if param is None:
            continue
        if isinstance(value, str) and (param.multiple or param.nargs != 1):
            value = [value]
        defaults[param.name] = value
    return defaults


@click.group(cls=HmfGroup)
@click.option(
    "--config",
    "config_path",
    default=None,
    type=click.Path(exists=True, dir_okay=False, readable=True),
    help="File of 'key = value' lines supplying defaults for the invoked command. Explicit flags take precedence.",
)
@click.option(
    "--threads",
    default=1,
    show_default=True,
    type=click.IntRange(min=1),
    help="Number of threads used to evaluate the rows of a sweep.",
)
@click.option(
    "--log-level", default="INFO", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False)
)
@click.version_option(__version__)
@click.pass_context
def main(ctx, config_path, threads, log_level):
    """Equilibrium thermodynamics and open-system dynamics of a Brownian oscillator in a Drude bath.

    Units are Ω_S = ħ = k_B = 1 unless --omega-s is given.
    """
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.getLevelName(log_level.upper()))
    ctx.obj = Settings(threads=threads)
    if config_path is not None and ctx.invoked_subcommand is not None:
        command = ctx.command.get_command(ctx, ctx.invoked_subcommand)
        ctx.default_map = {ctx.invoked_subcommand: _defaults_for(command, load_config(config_path))}
        logger.debug(f"Config {config_path}: {ctx.default_map}")


def system_options(func: Callable) -> Callable:
    """--omega-s and --gamma."""

    @click.option("--omega-s", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
    @click.option(
        "--gamma",
        default=2.0,
        show_default=True,
        type=click.FloatRange(min=0, min_open=True),
        help="Drude cutoff rate γ.",
    )
    @wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


def temperature_options(func: Callable) -> Callable:
    """--beta and --temperature, resolved into a single beta argument."""

    @click.option(
        "--beta",
        cls=MutuallyExclusiveOption,
        mutually_exclusive=["temperature"],
        default=5.0,
        show_default=True,
        type=click.FloatRange(min=0, min_open=True),
        help="Inverse temperature β.",
    )
    @click.option(
        "--temperature",
        cls=MutuallyExclusiveOption,
        mutually_exclusive=["beta"],
        default=None,
        type=click.FloatRange(min=0, min_open=True),
        help="Temperature k_B T.",
    )
    @click.pass_context
    @wraps(func)
    def wrapper(ctx, *args, beta, temperature, **kwargs):
        if explicit_choice(ctx, ("beta", "temperature")) == "temperature":
            beta = 1.0 / temperature
        return func(*args, beta=beta, **kwargs)

    return wrapper


def output_options(func: Callable) -> Callable:
    @click.option(
        "--out",
        "out_path",
        default="-",
        show_default=True,
        type=click.Path(dir_okay=False, writable=True, allow_dash=True),
        help="CSV output file, '-' for standard output.",
    )
    @wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


def _compute_rows(tasks: List, threads: int) -> List[Dict[str, Any]]:
    """Evaluates delayed rows and returns them in input order."""
    if threads == 1:
        return list(dask.compute(*tasks, scheduler="synchronous"))
    return list(dask.compute(*tasks, scheduler="threads", num_workers=threads))


@main.command()
@system_options
@temperature_options
@click.option("--eta", default=0.2, show_default=True, type=click.FloatRange(min=0), help="Reorganization energy η.")
@click.option(
    "--tol",
    default=CRITICAL_BAND,
    show_default=True,
    type=click.FloatRange(min=0, min_open=True),
    help="Relative width of the critical band around Ω_S = 2η.",
)
@click.pass_context
def stability(ctx, omega_s, gamma, beta, eta, tol):
    """Classify one parameter point as Stable (exit 0), Critical (exit 1) or Unstable (exit 2).

    Prints a key=value report of χ̃(0+), the characteristic roots and the Routh first column.
    """
    params = ModelParams.drude(eta=eta, gamma=gamma, beta=beta, omega_s=omega_s)
    report = classify(params, tol=tol)
    lines = {
        "classification": report.classification.value,
        "chi_static": format_value(report.chi_static),
        "hurwitz_pass": str(report.hurwitz_pass).lower(),
        "routh_first_column": ",".join(format_value(v) for v in report.routh_first_column),
        "max_real_root": format_value(report.max_real_root),
        "roots": ",".join(f"{r.real!r}{r.imag:+}j" for r in report.roots),
        "marginal": str(report.marginal).lower(),
    }
    for key, value in lines.items():
        click.echo(f"{key}={value}")
    ctx.exit(report.classification.exit_code)


def _sweep_eta_row(params: ModelParams, tol: float, verify: bool, counterterm: bool) -> Dict[str, Any]:
    classification = classify(params).classification
    row = {"eta": params.eta, "stable_flag": classification.value.lower()}
    critical = abs(params.omega_s - 2.0 * params.eta_eff) < CRITICAL_BAND * params.omega_s
    if not critical:
        row["a_hyb"] = hybridization_free_energy_spectral(params, tol=tol)
        row["vartheta0"] = float(vartheta(params, 0.0))
        if verify and classification is not Classification.UNSTABLE:
            row["a_hyb_quadrature"] = hybridization_free_energy_quadrature(params, tol=tol)
    if counterterm:
        row["a_hyb_reorg"] = hybridization_free_energy_reorg(params)
    return row


@main.command(name="sweep-eta")
@system_options
@temperature_options
@click.option("--eta-min", default=0.0, show_default=True, type=click.FloatRange(min=0))
@click.option("--eta-max", default=1.0, show_default=True, type=click.FloatRange(min=0))
@click.option("--points", default=101, show_default=True, type=click.IntRange(min=1), help="Number of η values.")
@click.option(
    "--tol",
    default=1e-10,
    show_default=True,
    type=click.FloatRange(min=0, min_open=True),
    help="Matsubara sum tolerance.",
)
@click.option("--verify", is_flag=True, default=False, help="Add the λ-quadrature route for stable rows.")
@click.option("--counterterm", is_flag=True, default=False, help="Add the counter-term free energy A_hyb^re.")
@output_options
@click.pass_obj
def sweep_eta(settings, omega_s, gamma, beta, eta_min, eta_max, points, tol, verify, counterterm, out_path):
    """Hybridization free energy A_hyb and ϑ(0) across a range of η.

    Rows inside the critical band around η = Ω_S/2 carry the 'critical' flag and empty value fields.
    """
    if eta_max < eta_min:
        raise click.BadParameter(f"--eta-max {eta_max} is below --eta-min {eta_min}", param_hint="--eta-max")
    etas = np.linspace(eta_min, eta_max, points)
    columns = ["eta", "a_hyb", "vartheta0", "stable_flag"]
    if verify:
        columns.append("a_hyb_quadrature")
    if counterterm:
        columns.append("a_hyb_reorg")

    tasks = [
        dask.delayed(_sweep_eta_row)(
            ModelParams.drude(eta=float(eta), gamma=gamma, beta=beta, omega_s=omega_s), tol, verify, counterterm
        )
        for eta in etas
    ]
    rows = _compute_rows(tasks, settings.threads)

    parameters = {
        "omega_s": omega_s,
        "gamma": gamma,
        "beta": beta,
        "eta_min": eta_min,
        "eta_max": eta_max,
        "points": points,
        "tol": tol,
    }
    with CsvReport(out_path, columns, "sweep-eta", parameters, __version__) as report:
        report.write_rows(rows)


@main.command()
@system_options
@temperature_options
@click.option("--eta", default=0.2, show_default=True, type=click.FloatRange(min=0), help="Reorganization energy η.")
@click.option("--t-max", default=60.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--dt", default=0.1, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--q0", default=1.0, show_default=True, type=float, help="Initial mean position.")
@click.option("--p0", default=0.0, show_default=True, type=float, help="Initial mean momentum.")
@click.option(
    "--sigma-qq",
    default=None,
    type=click.FloatRange(min=0, min_open=True),
    help="Initial position variance. Defaults to the bare thermal value at β.",
)
@click.option(
    "--sigma-pp",
    default=None,
    type=click.FloatRange(min=0, min_open=True),
    help="Initial momentum variance. Defaults to the bare thermal value at β.",
)
@click.option("--sigma-qp", default=0.0, show_default=True, type=float, help="Initial symmetrized covariance.")
@click.option("--n-modes", default=None, type=click.IntRange(min=1), help="Bath modes to retain, mode 0 included.")
@click.option(
    "--tol",
    default=1e-6,
    show_default=True,
    type=click.FloatRange(min=0, min_open=True),
    help="Mode count tolerance on σ_qq.",
)
@output_options
def dynamics(omega_s, gamma, beta, eta, t_max, dt, q0, p0, sigma_qq, sigma_pp, sigma_qp, n_modes, tol, out_path):
    """Time evolution of the means and covariances from a factorized initial state.

    The bath starts in its thermal state at β. A trajectory that diverges is truncated and ends with a '#' marker.
    """
    params = ModelParams.drude(eta=eta, gamma=gamma, beta=beta, omega_s=omega_s)
    thermal = GaussianState.thermal(beta, omega_s, q_mean=q0, p_mean=p0)
    initial = GaussianState(
        q_mean=q0,
        p_mean=p0,
        sigma_qq=thermal.sigma_qq if sigma_qq is None else sigma_qq,
        sigma_pp=thermal.sigma_pp if sigma_pp is None else sigma_pp,
        sigma_qp=sigma_qp,
    )
    if initial.uncertainty_margin < 0:
        raise click.BadParameter(
            f"initial state violates σ_qq σ_pp − σ_qp² ≥ 1/4 by {-initial.uncertainty_margin:.3g}",
            param_hint="--sigma-qq/--sigma-pp/--sigma-qp",
        )
    t_grid = dt * np.arange(int(math.floor(t_max / dt + 1e-9)) + 1)
    trajectory = evolve_covariance(initial, params, t_grid, n_modes=n_modes, tol=tol)

    columns = ["t", "q_mean", "p_mean", "sigma_qq", "sigma_pp", "sigma_qp"]
    parameters = {
        "omega_s": omega_s,
        "gamma": gamma,
        "beta": beta,
        "eta": eta,
        "t_max": t_max,
        "dt": dt,
        "q0": initial.q_mean,
        "p0": initial.p_mean,
        "sigma_qq0": initial.sigma_qq,
        "sigma_pp0": initial.sigma_pp,
        "sigma_qp0": initial.sigma_qp,
        "n_modes": trajectory.n_modes,
        "tol": tol,
    }
    with CsvReport(out_path, columns, "dynamics", parameters, __version__) as report:
        for i in range(len(trajectory)):
            report.write_row({name: float(getattr(trajectory, name)[i]) for name in columns})
        if trajectory.diverged:
            last = format_value(float(trajectory.t[-1])) if len(trajectory) else "0"
            report.comment(f"diverged: moments exceed the divergence limit after t = {last}")


def _subdivision_row(params: ModelParams) -> Dict[str, Any]:
    row = {"T": params.temperature, "eta": params.eta}
    try:
        report = subdivision_potential(params)
    except CriticalPointError as e:
        logger.warning(f"T={params.temperature}, η={params.eta}: {e}")
        row["status"] = "critical"
        return row
    except StabilityError as e:
        logger.warning(f"T={params.temperature}, η={params.eta}: {e}")
        row["status"] = "unstable"
        return row
    except HmfError as e:
        logger.warning(f"T={params.temperature}, η={params.eta}: {e}")
        row["status"] = f"error:{type(e).__name__}"
        return row
    row.update(
        subdivision=report.subdivision,
        delta_s_therm=report.delta_s_therm,
        delta_s_ent=report.delta_s_ent,
        route_disagreement=report.route_disagreement,
        status="ok",
    )
    return row


@main.command()
@system_options
@click.option(
    "--eta",
    "etas",
    multiple=True,
    default=(0.15, 0.3, 0.45),
    show_default=True,
    type=click.FloatRange(min=0),
    help="Reorganization energy; may be repeated.",
)
@click.option("--t-min", default=0.02, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--t-max", default=5.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option(
    "--points", default=60, show_default=True, type=click.IntRange(min=1), help="Temperatures, logarithmically spaced."
)
@output_options
@click.pass_obj
def subdivision(settings, omega_s, gamma, etas, t_min, t_max, points, out_path):
    """Subdivision potential ℰ(T) and its entropy decomposition for each η.

    Rows where no equilibrium state exists are marked in the status column.
    """
    if t_max < t_min:
        raise click.BadParameter(f"--t-max {t_max} is below --t-min {t_min}", param_hint="--t-max")
    temperatures = np.geomspace(t_min, t_max, points)
    tasks = [
        dask.delayed(_subdivision_row)(
            ModelParams.drude(eta=float(eta), gamma=gamma, beta=1.0 / float(t), omega_s=omega_s)
        )
        for eta in etas
        for t in temperatures
    ]
    rows = _compute_rows(tasks, settings.threads)

    columns = ["T", "eta", "subdivision", "delta_s_therm", "delta_s_ent", "route_disagreement", "status"]
    parameters = {
        "omega_s": omega_s,
        "gamma": gamma,
        "eta": list(etas),
        "t_min": t_min,
        "t_max": t_max,
        "points": points,
    }
    with CsvReport(out_path, columns, "subdivision", parameters, __version__) as report:
        report.write_rows(rows)


if __name__ == "__main__":
    main()
