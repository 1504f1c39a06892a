"""Configuration-driven batch front-end.

Subcommands (all take a single JSON config file):

    ctp-mirror casimir  config.json     renormalized static energy density
    ctp-mirror kernels  config.json     kernel samples + spectral tables as CSV
    ctp-mirror spectrum config.json     trajectory samples and spectrum as CSV
    ctp-mirror evolve   config.json     self-consistent evolution + forces
    ctp-mirror balance  config.json     energy-balance report (JSON + CSV)

Conventions:
  * natural units (c = hbar = k_B = 1) everywhere;
  * the config temperature ``thermal.T`` is in units of the fundamental mode
    frequency omega_1 = pi/d (so T=1 means k_B T = hbar omega_1);
  * outputs are written atomically (temp file + rename) into ``outputs.dir``;
  * identical configs produce bitwise-identical outputs: summation orders are
    fixed, internal parallelism is capped (env CTP_MIRROR_THREADS, default 1),
    and no wall-clock content is emitted;
  * exit codes: 0 success, 2 config/schema violation, 3 numerical failure,
    4 I/O failure.  Failures print a machine-parsable JSON object on stderr.

``--seed`` is accepted and recorded for forward compatibility; nothing in the
current pipeline is stochastic.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_UNITS_NOTE = "natural units c=hbar=k_B=1; config thermal.T in units of omega_1 = pi/d"


class ConfigError(ValueError):
    """Config file violates the schema."""


# --------------------------------------------------------------------------- #
# schema                                                                       #
# --------------------------------------------------------------------------- #
# field spec: (type tag, required, default); type tags: "num", "int", "bool",
# "str", "numlist". Unknown keys anywhere are rejected.

_SCHEMA = {
    "cavity": {
        "d": ("num", True, None),
        "omega_pl": ("num", True, None),
        "K_max": ("int", False, None),
    },
    "thermal": {
        "T": ("num", False, 0.0),
    },
    "mirror": {
        "m": ("num", False, 1.0),
        "Omega": ("num", False, None),
        "potential": ("str", False, "harmonic"),
    },
    "trajectory": {
        "kind": ("str", True, None),
        "params": ("dict", True, None),
        "grid": ("dict", True, None),
    },
    "grid": {
        "t0": ("num", True, None),
        "dt": ("num", True, None),
        "n": ("int", True, None),
    },
    "solver": {
        "dt": ("num", True, None),
        "steps": ("int", True, None),
        "accel": ("bool", False, False),
        "x0": ("num", False, 0.0),
        "v0": ("num", False, 0.0),
        "include_casimir_force": ("bool", False, False),
    },
    "outputs": {
        "dir": ("str", False, "."),
        "formats": ("strlist", False, ["json", "csv"]),
    },
    "casimir": {
        "sigma0": ("num", False, None),
        "n_sigma": ("int", False, 4),
    },
    "kernels": {
        "t_max": ("num", False, None),
        "n_samples": ("int", False, 2048),
    },
    "balance": {
        "tolerance": ("num", False, 1e-3),
    },
}

_TRAJ_PARAMS = {
    "gaussian_pulse": {"A": ("num", True, None), "tau": ("num", True, None)},
    "windowed_sine": {"A": ("num", True, None), "Omega_d": ("num", True, None),
                      "n_cycles": ("num", True, None), "ramp": ("num", False, 1.0)},
}

_NEEDS = {
    "casimir": ["cavity", "thermal"],
    "kernels": ["cavity", "thermal"],
    "spectrum": ["trajectory"],
    "evolve": ["cavity", "thermal", "mirror", "solver"],
    "balance": ["cavity", "thermal", "trajectory"],
}


def _check_type(path: str, value, tag: str):
    ok = {
        "num": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "bool": lambda v: isinstance(v, bool),
        "str": lambda v: isinstance(v, str),
        "dict": lambda v: isinstance(v, dict),
        "strlist": lambda v: isinstance(v, list) and all(isinstance(s, str) for s in v),
    }[tag]
    if value is not None and not ok(value):
        raise ConfigError(f"config key {path!r} has wrong type (expected {tag})")
    return value


def _validate_section(name: str, data: dict, schema: dict) -> dict:
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {name!r}: {sorted(unknown)}")
    out = {}
    for key, (tag, required, default) in schema.items():
        if key in data:
            out[key] = _check_type(f"{name}.{key}", data[key], tag)
        elif required:
            raise ConfigError(f"missing required config key {name!r}.{key!r}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def validate_config(raw: dict, subcommand: str) -> dict:
    """Schema-validate and default-resolve the config for one subcommand."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level config section(s): {sorted(unknown)}")
    missing = [s for s in _NEEDS[subcommand] if s not in raw]
    if missing:
        raise ConfigError(f"subcommand {subcommand!r} needs config section(s) {missing}")
    cfg = {}
    for section, data in raw.items():
        if not isinstance(data, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        cfg[section] = _validate_section(section, data, _SCHEMA[section])
    # optional sections the subcommand consumes, resolved to defaults
    for section in ("outputs", "thermal", "casimir", "kernels", "balance"):
        if section not in cfg:
            cfg[section] = _validate_section(section, {}, _SCHEMA[section])
    if "trajectory" in cfg:
        traj = cfg["trajectory"]
        kind = traj["kind"]
        if kind not in _TRAJ_PARAMS:
            raise ConfigError(f"trajectory.kind must be one of {sorted(_TRAJ_PARAMS)}, "
                              f"got {kind!r}")
        traj["params"] = _validate_section(f"trajectory.params[{kind}]",
                                           traj["params"], _TRAJ_PARAMS[kind])
        traj["grid"] = _validate_section("trajectory.grid", traj["grid"], _SCHEMA["grid"])
    if "mirror" in cfg and cfg["mirror"]["potential"] not in ("harmonic", "free"):
        raise ConfigError("mirror.potential must be 'harmonic' or 'free'")
    return cfg


# --------------------------------------------------------------------------- #
# output helpers                                                               #
# --------------------------------------------------------------------------- #

def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, header: list[str], rows, cfg: dict) -> None:
    lines = [f"# units: {_UNITS_NOTE}",
             f"# config: {json.dumps(cfg, sort_keys=True)}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


# --------------------------------------------------------------------------- #
# subcommands                                                                  #
# --------------------------------------------------------------------------- #

def _build_cavity(cfg):
    from .cavity import CavitySpec
    c = cfg["cavity"]
    if c["K_max"] is None:
        return CavitySpec.with_auto_cutoff(d=c["d"], omega_pl=c["omega_pl"])
    return CavitySpec(d=c["d"], K_max=c["K_max"], omega_pl=c["omega_pl"])


def _build_thermal(cfg, cavity):
    from .thermal import ThermalSpectrum
    # config temperature is in units of omega_1 = pi/d
    return ThermalSpectrum(T=cfg["thermal"]["T"] * math.pi / cavity.d)


def _build_trajectory(cfg):
    from .trajectory import TimeGrid, gaussian_pulse, windowed_sine
    t = cfg["trajectory"]
    grid = TimeGrid(t0=t["grid"]["t0"], dt=t["grid"]["dt"], n=t["grid"]["n"])
    p = t["params"]
    if t["kind"] == "gaussian_pulse":
        return gaussian_pulse(A=p["A"], tau=p["tau"], grid=grid)
    return windowed_sine(A=p["A"], Omega_d=p["Omega_d"], n_cycles=p["n_cycles"],
                         ramp=p["ramp"], grid=grid)


def _cmd_casimir(cfg, outdir: str) -> str:
    from .casimir import renormalized_density
    d = cfg["cavity"]["d"]
    T = cfg["thermal"]["T"] * math.pi / d
    res = renormalized_density(d, T, sigma0=cfg["casimir"]["sigma0"],
                               n_sigma=cfg["casimir"]["n_sigma"])
    payload = {
        "units": _UNITS_NOTE,
        "config": cfg,
        "d": d,
        "T": T,
        "sigma_grid": res.sigma_values.tolist(),
        "regularized": res.regularized.tolist(),
        "freespace": res.freespace.tolist(),
        "renormalized": res.renormalized,
        "model_error": res.model_error,
        "expected_T0": -math.pi / (24.0 * d * d),
        "expected_highT": T / (2.0 * d),
    }
    path = os.path.join(outdir, "casimir.json")
    _write_json(path, payload)
    return (f"casimir: d={d} T={T:.6g} renormalized={res.renormalized:.9g} "
            f"(model_error={res.model_error:.2e}) -> {path}")


def _cmd_kernels(cfg, outdir: str) -> str:
    import numpy as np

    from .cavity import coupling_matrix
    from .kernels import MirrorKernels
    cavity = _build_cavity(cfg)
    kern = MirrorKernels(cavity, _build_thermal(cfg, cavity))
    t_max = cfg["kernels"]["t_max"]
    if t_max is None:
        t_max = 4.0 * cavity.d                       # two round-trip times
    t = np.linspace(0.0, t_max, cfg["kernels"]["n_samples"])
    n_p, n_m, m_p = kern.kernel_00(t)
    n11, m11 = kern.kernel_11(t)
    if "csv" in cfg["outputs"]["formats"]:
        _write_csv(os.path.join(outdir, "kernels_00.csv"), ["t", "N", "M"],
                   zip(t, n_p + n_m, m_p), cfg)
        _write_csv(os.path.join(outdir, "kernels_11.csv"), ["t", "N", "M"],
                   zip(t, n11, m11), cfg)
        g = coupling_matrix(cavity).g
        rows = [(j, k, g[j - 1, k - 1])
                for j in range(1, cavity.K_max + 1)
                for k in range(1, cavity.K_max + 1)]
        _write_csv(os.path.join(outdir, "g_matrix.csv"), ["j", "k", "g"], rows, cfg)
        ks = kern.signed_indices()
        spec_rows = []
        for k in ks:
            for j in ks:
                wk = kern.signed_frequency(k)
                wj = kern.signed_frequency(j)
                if k + j == 0:
                    continue
                nu, mu = kern.spectral_coefficients(k, j)
                spec_rows.append((k, j, wk + wj, nu, mu.imag))
        _write_csv(os.path.join(outdir, "spectral.csv"),
                   ["k", "j", "omega_sum", "nu", "im_mu"], spec_rows, cfg)
    return (f"kernels: K_max={cavity.K_max} sampled {t.size} points to t={t_max:.4g}; "
            f"FDT max rel dev = {kern.fdt_max_relative_deviation():.3e} -> {outdir}")


def _cmd_spectrum(cfg, outdir: str) -> str:
    from .trajectory import spectrum_of
    traj = _build_trajectory(cfg)
    spec = spectrum_of(traj)
    if "csv" in cfg["outputs"]["formats"]:
        rows = zip(traj.times(), traj.x)
        _write_csv(os.path.join(outdir, "trajectory.csv"), ["t", "x"], rows, cfg)
        _write_csv(os.path.join(outdir, "spectrum.csv"), ["omega", "re", "im"],
                   zip(spec.omega, spec.xt.real, spec.xt.imag), cfg)
    import numpy as np
    peak = float(np.max(np.abs(spec.xt)))
    return f"spectrum: {traj.n} samples, peak |xt| = {peak:.6g} -> {outdir}"


def _cmd_evolve(cfg, outdir: str) -> str:
    from .dynamics import MirrorSpec, evolve
    from .kernels import MirrorKernels
    from .trajectory import TimeGrid
    cavity = _build_cavity(cfg)
    kern = MirrorKernels(cavity, _build_thermal(cfg, cavity))
    mc = cfg["mirror"]
    omega = mc["Omega"] if mc["potential"] == "harmonic" else None
    mirror = MirrorSpec(m=mc["m"], Omega=omega)
    sv = cfg["solver"]
    grid = TimeGrid(t0=0.0, dt=sv["dt"], n=sv["steps"] + 1)
    result = evolve(mirror, kern, sv["x0"], sv["v0"], grid, accel=sv["accel"],
                    include_casimir_force=sv["include_casimir_force"])
    traj = result.trajectory
    if "csv" in cfg["outputs"]["formats"]:
        _write_csv(os.path.join(outdir, "trajectory.csv"), ["t", "x", "v"],
                   zip(traj.times(), traj.x, traj.v), cfg)
        _write_csv(os.path.join(outdir, "forces.csv"), ["t", "F_x", "F_xdot"],
                   zip(traj.times(), result.force_x, result.force_xdot), cfg)
    return (f"evolve: {sv['steps']} steps, max|x| = "
            f"{result.diagnostics['max_abs_x']:.6g} -> {outdir}")


def _cmd_balance(cfg, outdir: str) -> str:
    from .errors import NumericalError
    from .kernels import MirrorKernels
    from .energetics import balance_report
    cavity = _build_cavity(cfg)
    kern = MirrorKernels(cavity, _build_thermal(cfg, cavity))
    traj = _build_trajectory(cfg)
    rep = balance_report(traj, kern, tolerance=cfg["balance"]["tolerance"])
    payload = {
        "units": _UNITS_NOTE,
        "config": cfg,
        "E_x": rep.E_x, "E_xdot": rep.E_xdot, "E_diss_time": rep.E_diss_time,
        "E_diss_freq": rep.E_diss_freq, "E_x_freq": rep.E_x_freq,
        "E_xdot_freq": rep.E_xdot_freq, "E_trans": rep.E_trans,
        "P_trans": rep.P_trans, "balance_residual": rep.balance_residual,
        "tolerance": rep.tolerance, "converged": rep.converged,
    }
    if "json" in cfg["outputs"]["formats"]:
        _write_json(os.path.join(outdir, "balance.json"), payload)
    if "csv" in cfg["outputs"]["formats"]:
        bd = rep.mode_breakdown
        _write_csv(os.path.join(outdir, "mode_breakdown.csv"),
                   ["k", "j", "omega_sum", "contribution"],
                   zip(bd["k"], bd["j"], bd["omega_sum"], bd["contribution"]), cfg)
    line = (f"balance: E_diss_time={rep.E_diss_time:.6e} E_trans={rep.E_trans:.6e} "
            f"residual={rep.balance_residual:.3e} "
            f"({'ok' if rep.converged else 'FAILED'}) -> {outdir}")
    if not rep.converged:
        raise NumericalError(
            f"energy balance residual {rep.balance_residual:.3e} exceeds "
            f"tolerance {rep.tolerance:.1e}; see {outdir}/mode_breakdown.csv | {line}")
    return line


_COMMANDS = {
    "casimir": _cmd_casimir,
    "kernels": _cmd_kernels,
    "spectrum": _cmd_spectrum,
    "evolve": _cmd_evolve,
    "balance": _cmd_balance,
}


# --------------------------------------------------------------------------- #
# driver                                                                       #
# --------------------------------------------------------------------------- #

def _configure_threads() -> None:
    """Cap internal (BLAS/OpenMP) parallelism before numpy is imported.

    Defaults to single-threaded kernels so outputs are reproducible
    bit-for-bit; CTP_MIRROR_THREADS raises the cap explicitly.
    """
    n = os.environ.get("CTP_MIRROR_THREADS", "1")
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, n)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": {"kind": kind, "message": message}}) + "\n")
    return code


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ctp-mirror", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="path to a JSON config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; no stochastic components yet")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r") as fh:
            text = fh.read()
    except OSError as exc:
        return _fail("io", f"cannot read config {args.config!r}: {exc}", EXIT_IO)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        return _fail("config", f"config is not valid JSON: {exc}", EXIT_CONFIG)

    from .errors import DomainError, NumericalError
    try:
        cfg = validate_config(raw, args.subcommand)
        outdir = cfg["outputs"]["dir"]
        os.makedirs(outdir, exist_ok=True)
        summary = _COMMANDS[args.subcommand](cfg, outdir)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except DomainError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except NumericalError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    print(summary)
    return EXIT_OK


def main() -> None:
    _configure_threads()
    sys.exit(run())


if __name__ == "__main__":
    main()
