"""Structured-text scenario configuration and run manifests.

A config file has sections [lattice], [potential], [confinement], [initial],
[nls], [sweep].  A run manifest is a complete, normalized config with an
extra [manifest] section recording versions and outputs; feeding a manifest
back to the CLI reproduces the run bit-exactly.
"""

from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigError
from .harness import Scenario
from .lattice import Lattice, PeriodicPotential, cosine_potential, make_potential_from_fourier
from .profiles import GaussianAmplitude, PolynomialPhase
from .rays import ConfinementPotential


@dataclass(frozen=True)
class SweepSettings:
    epsilons: tuple[float, ...] = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    sweep: SweepSettings = field(default_factory=SweepSettings)
    epsilon: float | None = None      # single-run epsilon from [nls], optional


def parse_fraction(text: str) -> float:
    return float(Fraction(text.strip()))


def _parse_potential(lattice: Lattice, section) -> PeriodicPotential:
    preset = section.get("preset", "").strip()
    modes = section.get("modes", "").strip()
    if preset and modes:
        raise ConfigError("[potential] must give either a preset or modes, not both")
    if preset:
        if preset == "zero":
            return make_potential_from_fourier(lattice, [])
        if preset == "cosine":
            return cosine_potential(lattice, 1.0)
        if preset.startswith("mathieu"):
            amplitude = 1.0
            if ":" in preset:
                _, spec = preset.split(":", 1)
                key, _, value = spec.partition("=")
                if key.strip() != "amplitude":
                    raise ConfigError(f"unknown mathieu option {key!r}")
                amplitude = float(value)
            return cosine_potential(lattice, amplitude)
        raise ConfigError(f"unknown potential preset {preset!r}")
    if modes:
        try:
            triples = ast.literal_eval(f"[{modes}]")
        except (ValueError, SyntaxError) as exc:
            raise ConfigError(f"cannot parse potential modes: {exc}") from exc
        coeffs = [(int(m), complex(re, im)) for m, re, im in triples]
        return make_potential_from_fourier(lattice, coeffs)
    raise ConfigError("[potential] needs a preset or a modes list")


def _parse_confinement(section) -> ConfinementPotential:
    kind = section.get("kind", "zero").strip()
    if kind == "zero":
        return ConfinementPotential.zero()
    if kind == "harmonic":
        return ConfinementPotential.harmonic(section.getfloat("omega", 1.0))
    if kind == "stark":
        return ConfinementPotential.stark(section.getfloat("field", 1.0))
    if kind == "poly":
        coeffs = [float(c) for c in section.get("coeffs", "0").split(",")]
        return ConfinementPotential.polynomial(coeffs)
    raise ConfigError(f"unknown confinement kind {kind!r}")


def _confinement_to_items(conf: ConfinementPotential) -> dict[str, str]:
    kind = conf.kind
    if kind == "zero":
        return {"kind": "zero"}
    if kind.startswith("harmonic"):
        omega = kind.split("=", 1)[1].rstrip(")")
        return {"kind": "harmonic", "omega": omega}
    if kind.startswith("stark"):
        fieldstr = kind.split("=", 1)[1].rstrip(")")
        return {"kind": "stark", "field": fieldstr}
    if kind.startswith("poly"):
        inner = kind[kind.index("[") + 1: kind.rindex("]")]
        return {"kind": "poly", "coeffs": inner}
    raise ConfigError(f"cannot serialize confinement {kind!r}")


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    return config_from_parser(parser, name=path.stem)


def config_from_parser(parser: configparser.ConfigParser, name: str) -> RunConfig:
    try:
        lattice = Lattice(parser.getfloat("lattice", "period", fallback=1.0))
        pot_sec = parser["potential"] if parser.has_section("potential") else {}
        potential = (_parse_potential(lattice, pot_sec) if pot_sec
                     else cosine_potential(lattice, 1.0))
        conf_sec = parser["confinement"] if parser.has_section("confinement") else {}
        confinement = _parse_confinement(conf_sec) if conf_sec else ConfinementPotential.zero()

        init = parser["initial"] if parser.has_section("initial") else {}
        amplitude = GaussianAmplitude(
            amplitude=float(init.get("amplitude", 1.0)),
            center=float(init.get("center", 0.0)),
            width=float(init.get("width", 1.0)))
        phase_coeffs = [float(c) for c in init.get("phase", "0").split(",")]
        phase_coeffs += [0.0] * (4 - len(phase_coeffs))
        phase = PolynomialPhase(*phase_coeffs[:4])

        nls = parser["nls"] if parser.has_section("nls") else {}
        sweep_sec = parser["sweep"] if parser.has_section("sweep") else {}

        scenario = Scenario(
            name=name,
            potential=potential,
            cutoff=int(pot_sec.get("cutoff", 32)) if pot_sec else 32,
            band=int(pot_sec.get("band", 1)) if pot_sec else 1,
            k_points=int(pot_sec.get("k_points", 129)) if pot_sec else 129,
            confinement=confinement,
            amplitude=amplitude,
            phase=phase,
            sigma=int(nls.get("sigma", 1)),
            coupling=complex(float(nls.get("lambda_re", 1.0)),
                             float(nls.get("lambda_im", 0.0))),
            x_min=float(nls.get("x_min", -20.0)),
            x_max=float(nls.get("x_max", 20.0)),
            points_per_cell=int(nls.get("points_per_cell", 16)),
            dt_factor=float(nls.get("dt_factor", 0.02)),
            corrector=str(init.get("corrector", "true")).lower() in ("1", "true", "yes"),
            ray_points=int(sweep_sec.get("ray_points", 1601)),
            ray_margin=float(sweep_sec.get("ray_margin", 7.0)),
            ray_dt=float(sweep_sec.get("ray_dt", 2e-3)),
            tau0=float(sweep_sec.get("tau0", 0.5)),
            n_snapshots=int(sweep_sec.get("snapshots", 8)),
        )
        eps_text = sweep_sec.get("epsilons", "1/8, 1/16, 1/32, 1/64") if sweep_sec \
            else "1/8, 1/16, 1/32, 1/64"
        epsilons = tuple(parse_fraction(e) for e in eps_text.split(","))
        seed = int(sweep_sec.get("seed", 0)) if sweep_sec else 0
        single_eps = parse_fraction(nls["epsilon"]) if "epsilon" in nls else None
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return RunConfig(scenario=scenario,
                     sweep=SweepSettings(epsilons=epsilons, seed=seed),
                     epsilon=single_eps)


def config_to_parser(run: RunConfig) -> configparser.ConfigParser:
    """Normalized, re-loadable rendering of a run configuration."""
    s = run.scenario
    parser = configparser.ConfigParser()
    parser["lattice"] = {"period": repr(s.potential.lattice.period)}
    modes = ", ".join(
        f"({m}, {c.real!r}, {c.imag!r})"
        for m, c in sorted(s.potential.fourier_coeffs.items()))
    parser["potential"] = {
        "modes": modes if modes else "",
        "cutoff": str(s.cutoff),
        "band": str(s.band),
        "k_points": str(s.k_points),
    }
    if not modes:
        del parser["potential"]["modes"]
        parser["potential"]["preset"] = "zero"
    parser["confinement"] = _confinement_to_items(s.confinement)
    parser["initial"] = {
        "amplitude": repr(float(s.amplitude.amplitude.real)
                          if isinstance(s.amplitude.amplitude, complex)
                          else float(s.amplitude.amplitude)),
        "center": repr(s.amplitude.center),
        "width": repr(s.amplitude.width),
        "phase": f"{s.phase.c0!r}, {s.phase.c1!r}, {s.phase.c2!r}, {s.phase.c3!r}",
        "corrector": "true" if s.corrector else "false",
    }
    nls_items = {
        "sigma": str(s.sigma),
        "lambda_re": repr(s.coupling.real),
        "lambda_im": repr(s.coupling.imag),
        "x_min": repr(s.x_min),
        "x_max": repr(s.x_max),
        "points_per_cell": str(s.points_per_cell),
        "dt_factor": repr(s.dt_factor),
    }
    if run.epsilon is not None:
        nls_items["epsilon"] = str(Fraction(run.epsilon).limit_denominator(10 ** 12))
    parser["nls"] = nls_items
    parser["sweep"] = {
        "epsilons": ", ".join(str(Fraction(e).limit_denominator(10 ** 12))
                              for e in run.sweep.epsilons),
        "tau0": repr(s.tau0),
        "snapshots": str(s.n_snapshots),
        "ray_points": str(s.ray_points),
        "ray_margin": repr(s.ray_margin),
        "ray_dt": repr(s.ray_dt),
        "seed": str(run.sweep.seed),
    }
    return parser


def write_manifest(path, run: RunConfig, command: str, outputs: list[str]) -> None:
    parser = config_to_parser(run)
    parser["manifest"] = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "command": command,
        "outputs": ", ".join(outputs),
    }
    with open(path, "w") as fh:
        parser.write(fh)
