"""Flat key=value experiment configuration with CLI overrides.

Files hold one ``dotted.key=value`` pair per line; ``#`` starts a comment.
Lists are comma-separated.  Decibel-scale keys are converted to linear
units at this boundary; everything downstream works in watts and ratios.
Unknown keys are hard errors.

Recognized keys (defaults in parentheses):

    system.k                    user count (10)
    system.groups               group count (5)
    system.users_per_group      users per NOMA group (2)
    system.cell_radius_m        cell radius, m (10)
    system.path_loss_exp        path-loss exponent (2)
    system.ref_distance_m       reference distance, m (1)
    system.ref_attenuation_db   gain at the reference distance, dB (-30)
    system.noise_antenna_dbm    antenna-stage noise density, dBm/Hz (-100)
    system.noise_id_dbm         decoding-stage noise density, dBm/Hz (-100)
    system.noise_eh_dbm         EH-stage noise density, dBm/Hz (-100)
    system.eh_efficiency        RF-DC conversion efficiency (0.75)
    system.frame_time_s         frame length T, s (1)
    system.min_rate_bits        per-user rate target, bit/Hz (0.1)
    system.min_harvest_dbm      per-user harvest target, dBm (-60)
    system.seed                 solver-internal seed (1)
    sweep.axis                  'pmin' or 'rmin' ('pmin')
    sweep.pmin_dbm              harvest-target sweep list, dBm (-30,-25,-20,-15,-10)
    sweep.rmin_bits             rate-target sweep list, bit/Hz (0.1)
    sweep.realizations          placements per sweep value (500)
    sweep.base_seed             realization r uses base_seed + r (1000)
    sweep.solvers               subset of sca-noma,tdma,oracle (sca-noma,tdma)

The default harvest sweep range is an artifact choice bracketing the
reference gain/noise scales; it is not a reported value.
"""

from .bench import ExperimentPlan
from .sysmodel import SystemConfig
from .units import dbm_to_watts


class ConfigError(ValueError):
    """Malformed key, value, or inconsistent combination."""


def _parse_float_list(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _parse_str_list(text: str):
    return [tok.strip() for tok in text.split(",") if tok.strip() != ""]


_SCHEMA = {
    "system.k": int,
    "system.groups": int,
    "system.users_per_group": int,
    "system.cell_radius_m": float,
    "system.path_loss_exp": float,
    "system.ref_distance_m": float,
    "system.ref_attenuation_db": float,
    "system.noise_antenna_dbm": float,
    "system.noise_id_dbm": float,
    "system.noise_eh_dbm": float,
    "system.eh_efficiency": float,
    "system.frame_time_s": float,
    "system.min_rate_bits": float,
    "system.min_harvest_dbm": float,
    "system.seed": int,
    "sweep.axis": str,
    "sweep.pmin_dbm": _parse_float_list,
    "sweep.rmin_bits": _parse_float_list,
    "sweep.realizations": int,
    "sweep.base_seed": int,
    "sweep.solvers": _parse_str_list,
}

_DEFAULTS = {
    "system.k": 10,
    "system.groups": 5,
    "system.users_per_group": 2,
    "system.cell_radius_m": 10.0,
    "system.path_loss_exp": 2.0,
    "system.ref_distance_m": 1.0,
    "system.ref_attenuation_db": -30.0,
    "system.noise_antenna_dbm": -100.0,
    "system.noise_id_dbm": -100.0,
    "system.noise_eh_dbm": -100.0,
    "system.eh_efficiency": 0.75,
    "system.frame_time_s": 1.0,
    "system.min_rate_bits": 0.1,
    "system.min_harvest_dbm": -60.0,
    "system.seed": 1,
    "sweep.axis": "pmin",
    "sweep.pmin_dbm": [-30.0, -25.0, -20.0, -15.0, -10.0],
    "sweep.rmin_bits": [0.1],
    "sweep.realizations": 500,
    "sweep.base_seed": 1000,
    "sweep.solvers": ["sca-noma", "tdma"],
}


def _assign(table: dict, key: str, raw: str) -> None:
    if key not in _SCHEMA:
        raise ConfigError(f"unknown key {key!r}")
    parser = _SCHEMA[key]
    try:
        table[key] = parser(raw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path) -> dict:
    """key=value lines to a raw table; comments and blanks skipped."""
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, raw = stripped.split("=", 1)
            _assign(table, key.strip(), raw.strip())
    return table


def parse_config(path=None, overrides=()) -> ExperimentPlan:
    """File values (if any) layered under CLI overrides, then validated."""
    table = dict(_DEFAULTS)
    if path is not None:
        table.update(read_config_file(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        _assign(table, key.strip(), raw.strip())

    try:
        base = SystemConfig.from_db(
            k=table["system.k"],
            groups=table["system.groups"],
            users_per_group=table["system.users_per_group"],
            cell_radius=table["system.cell_radius_m"],
            path_loss_exp=table["system.path_loss_exp"],
            ref_distance=table["system.ref_distance_m"],
            ref_attenuation_db=table["system.ref_attenuation_db"],
            noise_antenna_dbm=table["system.noise_antenna_dbm"],
            noise_id_dbm=table["system.noise_id_dbm"],
            noise_eh_dbm=table["system.noise_eh_dbm"],
            eh_efficiency=table["system.eh_efficiency"],
            frame_time=table["system.frame_time_s"],
            min_rate=table["system.min_rate_bits"],
            min_harvest_dbm=table["system.min_harvest_dbm"],
            seed=table["system.seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    axis = table["sweep.axis"]
    if axis == "pmin":
        values = tuple(dbm_to_watts(v) for v in table["sweep.pmin_dbm"])
    elif axis == "rmin":
        values = tuple(table["sweep.rmin_bits"])
    else:
        raise ConfigError(f"sweep.axis must be 'pmin' or 'rmin', got {axis!r}")

    try:
        return ExperimentPlan(
            base=base,
            sweep_param=axis,
            sweep_values=values,
            realizations=table["sweep.realizations"],
            base_seed=table["sweep.base_seed"],
            solvers=tuple(table["sweep.solvers"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
