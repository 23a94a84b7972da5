"""Command-line interface.

Configuration is layered: built-in defaults, then ``--recipe``, then
``--config`` (TOML or JSON, including a manifest written by an earlier run),
then individual flags. Every run writes ``manifest.json`` holding the resolved
configuration; passing it back through ``--config`` repeats the run.

Exit codes: 0 success, 2 configuration error, 3 integration failure, 4 fewer
than 99% of sweep cells resolved.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import fixed_points as fpmod
from .integrator import IntegrationError, IntegratorConfig, integrate
from .model import MeanFieldState, ModelParams
from .recipes import RECIPES, recipe

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_PARTIAL = 0, 2, 3, 4
RESOLVED_FRACTION = 0.99

COMMANDS = ("evolve", "fixed-points", "boundaries", "sweep", "bifurcation", "lyapunov",
            "basin", "psd", "validate-lindblad")

DEFAULTS = {
    "params": {"omega0": 1.0, "kappa": 1.0, "g": 0.0, "lam": 1.0, "n_qubits": 1},
    "integrator": {},
    "initial": {"sz": -0.99, "sy": 0.0, "sx_sign": 1.0},
    "output": {"dir": ".", "formats": ["csv", "json"]},
    "workers": None,
}


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------------


def _load_toml(path: Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        # a manifest wraps the resolved configuration
        return data["config"] if "config" in data and "command" in data else data
    return _load_toml(path)


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


_PARAM_FLAGS = {"omega0": "omega0", "omega_z": "omega_z", "omega_q": "omega_q", "kappa": "kappa",
                "n": "n_qubits", "g": "g", "lam": "lam"}
_INT_FLAGS = {"t_end": "t_end", "sample_dt": "sample_dt", "rel_tol": "rel_tol",
              "abs_tol": "abs_tol", "max_step": "max_step", "n_max": "n_max"}
_INIT_FLAGS = {"sz": "sz", "sx": "sx", "sy": "sy", "x0": "x", "y0": "y", "n0": "n",
               "sx_sign": "sx_sign", "state": "state"}


def flags_to_config(args) -> dict:
    cfg: dict = {}

    def put(section, key, value):
        if value is not None:
            cfg.setdefault(section, {})[key] = value

    for flag, key in _PARAM_FLAGS.items():
        put("params", key, getattr(args, flag, None))
    for flag, key in _INT_FLAGS.items():
        put("integrator", key, getattr(args, flag, None))
    for flag, key in _INIT_FLAGS.items():
        put("initial", key, getattr(args, flag, None))
    if getattr(args, "out", None):
        put("output", "dir", args.out)
    if getattr(args, "format", None):
        put("output", "formats", args.format.split(","))
    if getattr(args, "psd", False):
        cfg["psd"] = True
    if getattr(args, "pair", False):
        cfg["pair"] = True
    for name in ("x_axis", "y_axis"):
        spec = getattr(args, name, None)
        if spec:
            cfg.setdefault("sweep", {})[name[0]] = _parse_axis(spec, name)
    if getattr(args, "mode", None):
        cfg.setdefault("sweep", {})["mode"] = args.mode
    if getattr(args, "g_grid", None):
        cfg.setdefault("bifurcation", {})["g"] = _parse_axis("g:" + args.g_grid, "g_grid")
    if getattr(args, "lyapunov", False):
        cfg.setdefault("bifurcation", {})["lyapunov"] = True
    if getattr(args, "grid", None):
        try:
            n_lon, n_lat = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--grid: expected LONxLAT, got {args.grid!r}") from None
        cfg.setdefault("basin", {}).update({"n_lon": n_lon, "n_lat": n_lat})
    if getattr(args, "input", None):
        cfg["input"] = args.input
    if getattr(args, "ns", None):
        cfg.setdefault("lindblad", {})["ns"] = [int(v) for v in args.ns.split(",")]
    if getattr(args, "fock_cutoff", None):
        cfg.setdefault("lindblad", {})["fock_cutoff"] = args.fock_cutoff
    return cfg


def _parse_axis(spec: str, where: str) -> dict:
    try:
        name, rng = spec.split(":", 1)
        lo, hi, num = rng.split(",")
        return {"name": name, "lo": float(lo), "hi": float(hi), "num": int(num)}
    except ValueError:
        raise ConfigError(f"--{where.replace('_', '-')}: expected NAME:LO,HI,NUM, got {spec!r}") from None


def resolve_config(args) -> tuple[str, dict]:
    cfg = copy.deepcopy(DEFAULTS)
    command = args.command
    if getattr(args, "recipe", None):
        try:
            r = recipe(args.recipe)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        # the recipe's intended command is informational; its parameters apply anywhere
        r.pop("command")
        cfg = deep_merge(cfg, r)
        cfg["recipe"] = args.recipe
    if getattr(args, "config", None):
        cfg = deep_merge(cfg, load_config_file(args.config))
    flags = flags_to_config(args)
    # a frequency given on the command line replaces either spelling from below
    for a, b in (("omega_z", "omega_q"), ("omega_q", "omega_z")):
        if a in flags.get("params", {}):
            cfg.get("params", {}).pop(b, None)
    cfg = deep_merge(cfg, flags)
    if getattr(args, "workers", None) is not None:
        cfg["workers_flag"] = args.workers
    return command, cfg


def _section(cfg, name) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def make_params(cfg: dict) -> ModelParams:
    p = dict(_section(cfg, "params"))
    known = {"omega0", "omega_q", "omega_z", "g", "lam", "kappa", "n_qubits"}
    extra = set(p) - known
    if extra:
        raise ConfigError(f"params: unknown field(s) {sorted(extra)}")
    if "omega_z" in p and "omega_q" in p:
        raise ConfigError("params: give either omega_z or omega_q, not both")
    try:
        if "omega_z" in p:
            oz = float(p.pop("omega_z"))
            n = int(p.get("n_qubits", 1))
            p["omega_q"] = oz / n
        return ModelParams(**p)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None


def make_integrator(cfg: dict, **override) -> IntegratorConfig:
    sec = {**_section(cfg, "integrator"), **override}
    try:
        return IntegratorConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from None


def make_initial(cfg: dict) -> MeanFieldState:
    ini = dict(_section(cfg, "initial"))
    try:
        state = ini.pop("state", None)
        if state == "NPdown":
            return MeanFieldState.np_down()
        if state == "NPup":
            return MeanFieldState.np_up()
        if state is not None:
            raise ConfigError(f"initial.state: unknown state {state!r}")
        sz = float(ini.pop("sz"))
        kw = {k: float(ini.pop(k)) for k in ("x", "y", "n") if k in ini}
        sy = float(ini.pop("sy", 0.0))
        sx = ini.pop("sx", None)
        sign = float(ini.pop("sx_sign", 1.0))
        if ini:
            raise ConfigError(f"initial: unknown field(s) {sorted(ini)}")
        return MeanFieldState.from_spin(sz, None if sx is None else float(sx), sy, sx_sign=sign, **kw)
    except KeyError as exc:
        raise ConfigError(f"initial: missing field {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"initial: {exc}") from None


def _axis(spec: dict, where: str):
    from .analysis.sweep import Axis

    try:
        if "values" in spec:
            return Axis(spec["name"], tuple(spec["values"]))
        return Axis.linspace(spec["name"], spec["lo"], spec["hi"], spec["num"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _workers(cfg) -> int:
    from .analysis.parallel import resolve_workers

    try:
        return resolve_workers(cfg.get("workers_flag"), cfg.get("workers"))
    except ValueError as exc:
        raise ConfigError(f"workers: {exc}") from None


def _classifier(cfg):
    from .analysis.classify import ClassifierConfig

    sec = dict(_section(cfg, "classifier"))
    integ = make_integrator(cfg) if cfg.get("integrator") else IntegratorConfig()
    try:
        return ClassifierConfig(integrator=integ, **sec)
    except TypeError as exc:
        raise ConfigError(f"classifier: {exc}") from None


# -- output ---------------------------------------------------------------------------


class Output:
    def __init__(self, cfg: dict, command: str):
        sec = _section(cfg, "output")
        self.dir = Path(sec.get("dir", "."))
        self.formats = set(sec.get("formats", ["csv", "json"]))
        bad = self.formats - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"output.formats: unsupported {sorted(bad)}")
        self.command = command
        self.cfg = cfg
        self.written: list[str] = []

    def write(self, name: str, text: str):
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)
        self.written.append(name)

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def manifest(self, extra: dict | None = None):
        from . import __version__

        doc = {"command": self.command, "version": __version__, "config": self.cfg,
               "outputs": sorted(self.written)}
        if extra:
            doc.update(extra)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


# -- commands ---------------------------------------------------------------------


def cmd_evolve(cfg, out: Output) -> int:
    params, icfg, initial = make_params(cfg), make_integrator(cfg), make_initial(cfg)
    runs = [("", initial)]
    if cfg.get("pair"):
        from .model import parity_transform

        runs = [("_plus", initial), ("_minus", parity_transform(initial))]
    summary = {"params": params.to_dict(), "runs": {}}
    for tag, st in runs:
        traj = integrate(st, params, icfg)
        out.write(f"trajectory{tag}.csv", traj.to_csv())
        info = {"terminal": traj.terminal_tag(), "final": traj.states[-1].tolist()}
        if not traj.diverged:
            from .analysis.support import attractor_support

            info["support"] = attractor_support(traj).to_dict()
        if cfg.get("psd") and not traj.diverged:
            from .analysis.spectrum import dominant_frequency, peak_to_floor_db, power_spectrum

            omega, psd = power_spectrum(traj)
            out.write(f"psd{tag}.csv", _psd_csv(omega, psd))
            info["dominant_frequency"] = dominant_frequency(omega, psd)
            info["peak_to_floor_db"] = peak_to_floor_db(omega, psd)
        if out.wants("svg"):
            _plot_trajectory(traj, out.dir / f"trajectory{tag}.svg")
            out.written.append(f"trajectory{tag}.svg")
        summary["runs"][tag.lstrip("_") or "main"] = info
        _log(f"evolve{tag}: {info['terminal']}")
    if out.wants("json"):
        out.write("summary.json", _json(summary))
    return EXIT_OK


def _psd_csv(omega, psd) -> str:
    rows = ["omega,psd"] + [f"{w!r},{p!r}" for w, p in zip(omega.tolist(), psd.tolist())]
    return "\n".join(rows) + "\n"


def _plot_trajectory(traj, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(9, 4))
    ax = fig.add_subplot(1, 2, 1)
    ax.plot(traj.times, traj["n"], lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("photon number")
    ax3 = fig.add_subplot(1, 2, 2, projection="3d")
    u, v = np.mgrid[0:2 * np.pi:40j, 0:np.pi:20j]
    ax3.plot_wireframe(np.cos(u) * np.sin(v), np.sin(u) * np.sin(v), np.cos(v), color="0.85", lw=0.3)
    ax3.plot(traj["sx"], traj["sy"], traj["sz"], lw=0.6)
    ax3.set_xlabel("sx")
    ax3.set_ylabel("sy")
    ax3.set_zlabel("sz")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_fixed_points(cfg, out: Output) -> int:
    params = make_params(cfg)
    fps = fpmod.analytic_fixed_points(params) + fpmod.u0_fixed_points(params)
    phase = fpmod.stable_phase(params)
    doc = {"params": params.to_dict(), "fixed_points": [fp.to_dict() for fp in fps],
           "stable_phase": {"label": phase.label, "stable": sorted(phase.stable), "u0": phase.u0}}
    text = _json(doc)
    out.write("fixed_points.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_boundaries(cfg, out: Output) -> int:
    params = make_params(cfg)
    doc = fpmod.boundaries(params).to_dict()
    doc["params"] = params.to_dict()
    doc["stable_phase"] = fpmod.stable_phase(params).label
    text = _json(doc)
    out.write("boundaries.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg, out: Output) -> int:
    from .analysis.sweep import phase_sweep

    sec = _section(cfg, "sweep")
    if "x" not in sec or "y" not in sec:
        raise ConfigError("sweep: both x and y axes are required")
    x, y = _axis(sec["x"], "sweep.x"), _axis(sec["y"], "sweep.y")
    mode = sec.get("mode", "analytic")
    base = make_params(cfg)
    kw = {}
    if mode == "dynamics":
        kw = {"initial": make_initial(cfg), "config": _classifier(cfg)}
    try:
        diag = phase_sweep(x, y, base, mode, workers=_workers(cfg), progress=True, **kw)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    if out.wants("json"):
        out.write("phase_diagram.json", diag.to_json() + "\n")
    if out.wants("csv"):
        out.write("phase_diagram.csv", diag.to_csv())
    if out.wants("svg"):
        diag.to_svg(out.dir / "phase_diagram.svg")
        out.written.append("phase_diagram.svg")
    frac = diag.resolved_fraction()
    _log(f"sweep: {diag.counts()} resolved={frac:.4f}")
    return EXIT_OK if frac >= RESOLVED_FRACTION else EXIT_PARTIAL


def cmd_bifurcation(cfg, out: Output) -> int:
    from .analysis.bifurcation import SCAN_T_END, bifurcation_scan

    sec = _section(cfg, "bifurcation")
    if "g" not in sec:
        raise ConfigError("bifurcation: g grid is required")
    g = _axis({**sec["g"], "name": "g"}, "bifurcation.g")
    icfg = make_integrator(cfg) if cfg.get("integrator") else IntegratorConfig(t_end=SCAN_T_END)
    pts = bifurcation_scan(make_params(cfg), g.values, make_initial(cfg), icfg,
                           with_lyapunov=bool(sec.get("lyapunov", False)),
                           workers=_workers(cfg), progress=True)
    if out.wants("json"):
        out.write("bifurcation.json", _json({"points": [p.to_dict() for p in pts]}))
    if out.wants("csv"):
        rows = ["g,status,count,lyapunov,amplitudes"]
        for p in pts:
            le = "" if p.lyapunov is None else repr(p.lyapunov)
            rows.append(f"{p.g!r},{p.status},{p.count},{le},{' '.join(repr(a) for a in p.amplitudes)}")
        out.write("bifurcation.csv", "\n".join(rows) + "\n")
    if out.wants("svg"):
        _plot_bifurcation(pts, out.dir / "bifurcation.svg")
        out.written.append("bifurcation.svg")
    ok = sum(p.status == "ok" for p in pts) / len(pts)
    return EXIT_OK if ok >= RESOLVED_FRACTION else EXIT_PARTIAL


def _plot_bifurcation(pts, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with_le = any(p.lyapunov is not None for p in pts)
    fig, axes = plt.subplots(2 if with_le else 1, 1, figsize=(6, 6 if with_le else 3.5), sharex=True,
                             squeeze=False)
    for p in pts:
        axes[0, 0].plot([p.g] * p.count, p.amplitudes, ",k")
    axes[0, 0].set_ylabel("maxima of n")
    if with_le:
        gs = [p.g for p in pts if p.lyapunov is not None]
        axes[1, 0].plot(gs, [p.lyapunov for p in pts if p.lyapunov is not None], lw=0.8)
        axes[1, 0].axhline(0, ls="--", c="0.5")
        axes[1, 0].set_ylabel("largest exponent")
    axes[-1, 0].set_xlabel("g")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_lyapunov(cfg, out: Output) -> int:
    from .analysis.lyapunov import Localized, lyapunov_exponent

    params, initial = make_params(cfg), make_initial(cfg)
    sec = _section(cfg, "lyapunov")
    icfg = make_integrator(cfg) if cfg.get("integrator") else None
    try:
        le = lyapunov_exponent(initial, params, icfg, transient=float(sec.get("transient", 200.0)),
                               span=float(sec.get("span", 2000.0)))
        doc = {"params": params.to_dict(), "lyapunov": le, "status": "ok"}
    except Localized as exc:
        doc = {"params": params.to_dict(), "lyapunov": None, "status": "Localized", "t_div": exc.t_div}
    text = _json(doc)
    out.write("lyapunov.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_basin(cfg, out: Output) -> int:
    from .analysis.basins import BlochGrid, basin_map

    sec = _section(cfg, "basin")
    try:
        grid = BlochGrid(int(sec.get("n_lon", 181)), int(sec.get("n_lat", 91)))
    except ValueError as exc:
        raise ConfigError(f"basin: {exc}") from None
    ini = _section(cfg, "initial")
    cavity = (float(ini.get("x", 0.0)), float(ini.get("y", 0.0)), float(ini.get("n", 0.0)))
    bm = basin_map(make_params(cfg), grid, cavity, _classifier(cfg), workers=_workers(cfg), progress=True)
    if out.wants("json"):
        out.write("basin.json", bm.to_json() + "\n")
    if out.wants("csv"):
        out.write("basin.csv", bm.to_csv())
    if out.wants("svg"):
        _plot_basin(bm, out.dir / "basin.svg")
        out.written.append("basin.svg")
    _log(f"basin: {bm.area_fractions()}")
    return EXIT_OK if 1 - bm.unresolved_fraction() >= RESOLVED_FRACTION else EXIT_PARTIAL


def _plot_basin(bm, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import ListedColormap
    from matplotlib.patches import Patch

    from .analysis.sweep import LEGEND

    names = list(LEGEND)
    lab = bm.label_grid()
    idx = np.vectorize(lambda s: names.index(s) if s in LEGEND else names.index("error"))(lab)
    fig, ax = plt.subplots(figsize=(7, 3.8))
    ax.pcolormesh(np.degrees(bm.grid.lons), np.degrees(bm.grid.lats), idx,
                  cmap=ListedColormap([LEGEND[n] for n in names]), vmin=-0.5,
                  vmax=len(names) - 0.5, shading="nearest")
    ax.set_xlabel("longitude (deg)")
    ax.set_ylabel("latitude (deg)")
    present = sorted(set(lab.ravel()))
    ax.legend(handles=[Patch(color=LEGEND.get(n, "k"), label=n) for n in present],
              loc="upper left", bbox_to_anchor=(1.01, 1), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_psd(cfg, out: Output) -> int:
    from .analysis.spectrum import TooShort, dominant_frequency, peak_to_floor_db, power_spectrum
    from .integrator import Trajectory

    if cfg.get("input"):
        traj = Trajectory.from_csv(cfg["input"])
    else:
        traj = integrate(make_initial(cfg), make_params(cfg), make_integrator(cfg))
    if traj.diverged:
        _log("psd: trajectory diverged")
        return EXIT_INTEGRATION
    sec = _section(cfg, "psd") if isinstance(cfg.get("psd"), dict) else {}
    try:
        omega, psd = power_spectrum(traj, sec.get("observable", "n"), t_start=sec.get("t_start"))
    except TooShort as exc:
        raise ConfigError(f"psd: {exc}") from None
    out.write("psd.csv", _psd_csv(omega, psd))
    doc = {"dominant_frequency": dominant_frequency(omega, psd),
           "peak_to_floor_db": peak_to_floor_db(omega, psd)}
    out.write("psd.json", _json(doc))
    sys.stdout.write(_json(doc))
    return EXIT_OK


def cmd_validate_lindblad(cfg, out: Output) -> int:
    from . import lindblad as lb

    base = make_params(cfg)
    sec = _section(cfg, "lindblad")
    ns = [int(n) for n in sec.get("ns", [2, 4, 6, 8, 10])]
    report = {"scan": lb.n_scan(base, ns, int(sec.get("fock_cutoff", 8)), sec.get("method", "solve"))}
    comps = []
    t_end = float(sec.get("compare_t_end", 0.0))
    if t_end > 0:
        for N in sec.get("compare_ns", []):
            p = base.with_(n_qubits=int(N), omega_q=base.omega_z / int(N))
            hil = lb.HilbertConfig(int(N), int(sec.get("compare_cutoff", 16)))
            _log(f"validate-lindblad: comparing at N={N}")
            comps.append(lb.compare_meanfield(p, hil, MeanFieldState(0, 0, 0, 1, 0, 0), t_end))
    report["compare"] = comps
    out.write("lindblad_report.json", lb.to_json(report) + "\n")
    s = report["scan"]
    _log(f"validate-lindblad: n slope={s.get('n_loglog_slope')} jx2 fit={s.get('jx2_deviation_fit')}")
    return EXIT_OK


HANDLERS = {
    "evolve": cmd_evolve, "fixed-points": cmd_fixed_points, "boundaries": cmd_boundaries,
    "sweep": cmd_sweep, "bifurcation": cmd_bifurcation, "lyapunov": cmd_lyapunov,
    "basin": cmd_basin, "psd": cmd_psd, "validate-lindblad": cmd_validate_lindblad,
}


# -- parser ------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML or JSON configuration (a manifest.json also works)")
    p.add_argument("--recipe", choices=sorted(RECIPES), help="preset parameter set")
    p.add_argument("--out", help="output directory (default: current)")
    p.add_argument("--format", help="comma-separated subset of csv,json,svg")
    p.add_argument("--workers", type=int, help="process count (takes precedence over $DICKE2_WORKERS)")
    g = p.add_argument_group("model")
    g.add_argument("--omega0", type=float)
    g.add_argument("--omega-z", dest="omega_z", type=float, help="collective frequency N*omega_q")
    g.add_argument("--omega-q", dest="omega_q", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--n", type=int, help="number of qubits")
    g.add_argument("--g", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    i = p.add_argument_group("integration")
    i.add_argument("--t-end", dest="t_end", type=float)
    i.add_argument("--sample-dt", dest="sample_dt", type=float)
    i.add_argument("--rel-tol", dest="rel_tol", type=float)
    i.add_argument("--abs-tol", dest="abs_tol", type=float)
    i.add_argument("--max-step", dest="max_step", type=float)
    i.add_argument("--n-max", dest="n_max", type=float)
    s = p.add_argument_group("initial state")
    s.add_argument("--sz", type=float)
    s.add_argument("--sx", type=float)
    s.add_argument("--sy", type=float)
    s.add_argument("--sx-sign", dest="sx_sign", type=float)
    s.add_argument("--x0", type=float)
    s.add_argument("--y0", type=float)
    s.add_argument("--n0", type=float, help="initial photon number")
    s.add_argument("--state", choices=["NPdown", "NPup"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dicke2", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "evolve":
            p.add_argument("--psd", action="store_true", help="also write the photon-number PSD")
            p.add_argument("--pair", action="store_true", help="also run the parity-mirrored start")
        if name == "sweep":
            p.add_argument("--mode", choices=["analytic", "dynamics"])
            p.add_argument("--x-axis", dest="x_axis", help="NAME:LO,HI,NUM")
            p.add_argument("--y-axis", dest="y_axis", help="NAME:LO,HI,NUM")
        if name == "bifurcation":
            p.add_argument("--g-grid", dest="g_grid", help="LO,HI,NUM")
            p.add_argument("--lyapunov", action="store_true")
        if name == "basin":
            p.add_argument("--grid", help="LONxLAT, default 181x91")
        if name == "psd":
            p.add_argument("--input", help="trajectory CSV to analyse instead of integrating")
        if name == "validate-lindblad":
            p.add_argument("--ns", help="comma-separated N values")
            p.add_argument("--fock-cutoff", dest="fock_cutoff", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        command, cfg = resolve_config(args)
        out = Output(cfg, command)
        code = HANDLERS[command](cfg, out)
        out.manifest({"exit_code": code})
        return code
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except IntegrationError as exc:
        _log(f"integration failure: {exc}")
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
