"""Command-line front end: ``greenlab <subcommand> [flags]``.

Every subcommand writes JSON (+ CSV, + PGM for grid outputs) into the output
directory; each artifact embeds the full config, its hash and the tool version.
Exit codes: 0 ok, 1 internal error, 2 config/schema error, 3 numerical
reliability failure (artifacts kept).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import traceback
from pathlib import Path

import jsonschema

from . import __version__

EXIT_OK, EXIT_INTERNAL, EXIT_SCHEMA, EXIT_UNRELIABLE = 0, 1, 2, 3

SUBCOMMANDS = ("degrees", "stability", "loci", "green", "measure", "energy", "diophantine", "zoo", "report")

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "map": {"type": "string"},
        "map_file": {"type": "string"},
        "inverse_file": {"type": "string"},
        "params": {"type": "object", "additionalProperties": {"type": ["number", "string"]}},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 4, "maximum": 256},
                "chart": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 2}},
                "center": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "N": {"type": "integer", "minimum": 1, "maximum": 200},
        "degree_N": {"type": "integer", "minimum": 1, "maximum": 12},
        "M": {"type": "number", "exclusiveMinimum": 0},
        "jList": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "weight": {"type": ["string", "object"]},
        "seed": {"type": "integer"},
        "out": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "points": {"type": "integer", "minimum": 1},
        "theta": {"type": "string"},
        "scan_N": {"type": "integer", "minimum": 1, "maximum": 1000000},
        "q": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "energy": {"type": "boolean"},
    },
}

DEFAULTS = {"N": 20, "degree_N": 6, "M": 40.0, "jList": [1, 2, 4, 8, 16, 32], "weight": "t", "seed": 0,
            "out": "greenlab-out", "points": 64, "scan_N": 10000, "q": [0.25, 0.5, 1.0], "energy": True,
            "grid": {"n": 24, "half_width": 1.0}}


class ConfigError(ValueError):
    pass


class Unreliable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = {}
    if path:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for k, v in overrides.items():
        if v is None:
            continue
        if k == "grid":
            cfg.setdefault("grid", {}).update(v)
        else:
            cfg[k] = v
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates schema: {exc.message}") from None
    full = json.loads(json.dumps(DEFAULTS))
    grid = {**full["grid"], **cfg.get("grid", {})}
    full.update(cfg)
    full["grid"] = grid
    return full


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


class Run:
    """Output directory plus the provenance block stamped into every artifact."""

    def __init__(self, cfg: dict, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.stamp = {"tool": "greenlab", "version": __version__, "command": command,
                      "config": cfg, "config_hash": config_hash(cfg)}
        self.files: list[str] = []

    def json(self, name: str, payload) -> Path:
        p = self.out / f"{name}.json"
        p.write_text(json.dumps({"provenance": self.stamp, "result": payload}, indent=1, default=_default))
        self.files.append(str(p))
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self.out / f"{name}.csv"
        with open(p, "w", newline="") as fh:
            fh.write(f"# greenlab {__version__} config {self.stamp['config_hash']}\n")
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        self.files.append(str(p))
        return p


def _default(o):
    import numpy as np

    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist() if not np.iscomplexobj(o) else [[complex(v).real, complex(v).imag] for v in o.ravel()]
    if isinstance(o, (np.integer, np.floating, np.bool_)):
        return o.item()
    return str(o)


def _enc_point(p):
    return [[complex(z).real, complex(z).imag] for z in p]


# ---------------------------------------------------------------------------
# map selection


def select(cfg: dict):
    """(map, inverse, params, zoo entry or None)."""
    from . import surface_maps as sm
    from . import zoo

    params = {k: (complex(v) if isinstance(v, (int, float)) else v) for k, v in cfg.get("params", {}).items()}
    if cfg.get("map"):
        try:
            e = zoo.get(cfg["map"])
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        return e.map, e.inverse, {**e.numeric_params, **params} or None, e
    if cfg.get("map_file"):
        f = sm.from_json(Path(cfg["map_file"]).read_text())
        inv = sm.from_json(Path(cfg["inverse_file"]).read_text()) if cfg.get("inverse_file") else None
        return f, inv, params or None, None
    raise ConfigError("select a map with --map <zoo id> or --map-file <json>")


def _class_data(cfg, f, inv, params):
    from . import potentials as pt

    return pt.invariant_classes(f, inv, params, seed=cfg["seed"])


# ---------------------------------------------------------------------------
# subcommands


def cmd_degrees(cfg, run):
    from . import spectral

    f, _, params, _ = select(cfg)
    if f.exact and params:
        from .surface_maps import specialize

        f = specialize(f, params)
    seq = spectral.degree_sequence(f, cfg["degree_N"])
    rows = [[n, *[x for r in d.matrix for x in r], d.scalar] for n, d in enumerate(seq.degrees, start=1)]
    run.csv("degrees", ["n", *[f"d{i}{j}" for i in range(len(seq.degrees[0].matrix)) for j in range(len(seq.degrees[0].matrix))], "scalar"], rows)
    run.json("degrees", {"method": seq.method, "truncated": seq.truncated, "degrees": [d.matrix for d in seq.degrees],
                         "first_drop": spectral.first_drop(seq.degrees)})
    return EXIT_OK


def cmd_stability(cfg, run):
    from . import spectral

    f, _, params, _ = select(cfg)
    rep = spectral.check_one_stability(f, N=cfg["degree_N"], params=params, seed=cfg["seed"])
    run.json("stability", rep.to_dict())
    run.csv("orbits", ["start", "min_distance", "hit_step"], [[json.dumps(_enc_point(o.start)), o.min_distance, o.hit_step] for o in rep.orbits])
    return EXIT_OK


def cmd_loci(cfg, run):
    from . import singular_loci as sl

    f, _, params, _ = select(cfg)
    loci = sl.singular_loci(f, params, seed=cfg["seed"])
    run.json("loci", loci.to_dict())
    run.csv("loci", ["kind", "point"], [["I+", json.dumps(_enc_point(p))] for p in loci.indeterminacy] +
            [["I-", json.dumps(_enc_point(p))] for p in loci.contracted_points])
    print(loci.table())
    return EXIT_OK


def cmd_green(cfg, run):
    import numpy as np

    from . import potentials as pt

    f, inv, params, _ = select(cfg)
    data = _class_data(cfg, f, inv, params)
    pts = pt._sphere_sample(data.ambient, cfg["points"], cfg["seed"])
    gp = pt.green_plus(data, pts, cfg["N"], cfg["M"])
    gm = pt.green_minus(data, pts, cfg["N"], cfg["M"]) if inv is not None else None
    rows = []
    for i, p in enumerate(pts):
        rows.append([json.dumps(_enc_point(p)), gp.values[i], gp.tail[i], int(gp.pole_hit[i]),
                     "" if gm is None else gm.values[i], "" if gm is None else gm.tail[i]])
    run.csv("green", ["point", "G_plus", "tail_plus", "pole_hit", "G_minus", "tail_minus"], rows)
    run.json("green", {"lambda1": data.lambda1, "v_plus": data.v_plus, "v_minus": data.v_minus,
                       "offset_plus": data.offset_plus, "offset_minus": data.offset_minus,
                       "clamped_fraction_plus": gp.clamped_fraction,
                       "clamped_fraction_minus": None if gm is None else gm.clamped_fraction,
                       "max_G_plus": float(np.max(gp.values)), "notes": data.notes})
    return EXIT_OK


def _grid_chart(cfg, ambient):
    from . import grid_currents as gc

    g = cfg["grid"]
    chart = tuple(g.get("chart") or ((2,) if ambient == "P2" else (1, 1)))
    center = tuple(complex(*c) for c in g.get("center", [[0, 0], [0, 0]]))
    return gc.GridChart(ambient, chart, center, float(g["half_width"]), int(g["n"]))


def cmd_measure(cfg, run):
    """Grid approximation of mu_f = T+ ^ T- on one chart."""
    import numpy as np

    from . import energy as en
    from . import grid_currents as gc
    from . import potentials as pt

    f, inv, params, _ = select(cfg)
    if inv is None:
        raise ConfigError("measure needs G-, hence a map with a known inverse")
    data = _class_data(cfg, f, inv, params)
    ch = _grid_chart(cfg, data.ambient)
    gp = en._green_on_chart(lambda X: pt.green_plus(data, X, cfg["N"], cfg["M"]).values, ch)
    gm = en._green_on_chart(lambda X: pt.green_minus(data, X, cfg["N"], cfg["M"]).values, ch)
    bp = gc.GridPotential.from_function(ch, en.local_potential(ch, data.v_plus)).values
    bm = gc.GridPotential.from_function(ch, en.local_potential(ch, data.v_minus)).values
    S = gc.ddc(gc.GridPotential(ch, gp, "eigenclass", bp))
    T = gc.ddc(gc.GridPotential(ch, gm, "eigenclass", bm))
    meas = gc.wedge(S, T)
    gc.dump_grid(meas.masses, ch, run.out / "measure_cells", {"config_hash": run.stamp["config_hash"]})
    csv_p, pgm_p = gc.write_heatmap(gc.marginal(meas.masses, "z1"), run.out / "measure_z1",
                                    {"config_hash": run.stamp["config_hash"], "axes": "x1,y1"})
    run.files += [str(csv_p), str(pgm_p)]
    summary = meas.summary() | {"chart": ch.to_dict(), "psh_plus": bool(S.is_positive(1e-9)),
                                "max_cell": float(np.max(meas.masses))}
    run.json("measure", summary)
    if not meas.reliable:
        raise Unreliable(f"clipped mass {meas.clipped:.3g} exceeds 2% of total {meas.total:.3g}")
    return EXIT_OK


def _energy(cfg, run, f, inv, params, data=None):
    from . import energy as en

    data = data or _class_data(cfg, f, inv, params)
    plus, minus = en.dynamical_energy_report(data, cfg["weight"], int(cfg["grid"]["n"]), cfg["N"], cfg["M"],
                                             cfg["jList"], cfg["seed"])
    both = en.two_sided_verdict(plus, minus)
    run.json("energy", {"plus": plus.to_dict(), "minus": minus.to_dict(), "verdict": both})
    for r in (plus, minus):
        tag = "plus" if r.direction.startswith("G+") else "minus"
        run.csv(f"energy_{tag}", ["j", "energy", "gradient", "excluded_energy_bound"], list(r.rows()))
    return plus, minus, both


def cmd_energy(cfg, run):
    f, inv, params, _ = select(cfg)
    plus, minus, _ = _energy(cfg, run, f, inv, params)
    noisy = [r.direction for r in (plus, minus) if r.evidence.get("reason") == "clipped-noise budget exceeded"]
    if noisy:
        raise Unreliable(f"noise budget exceeded in {', '.join(noisy)}")
    return EXIT_OK


def cmd_diophantine(cfg, run):
    from . import diophantine as dp

    if not cfg.get("theta"):
        raise ConfigError("diophantine needs --theta (golden, sqrt2m1, liouville-k, a decimal or p/q)")
    try:
        prof = dp.minima_sequence(cfg["theta"], cfg["scan_N"], profile=True)
    except dp.RationalTheta as exc:
        raise ConfigError(str(exc)) from None
    crits = {str(q): dp.criterion(cfg["theta"], q, cfg["scan_N"], minima=prof.minima) for q in cfg["q"]}
    prof.criteria = {k: {"sup": v["sup"], "verdict": v["verdict"]} for k, v in crits.items()}
    run.csv("minima", ["n_j", "eps", "m_j", "gcd"], [[n, dp.mpmath.nstr(e, 30), m, g] for n, e, m, g in prof.minima])
    run.json("diophantine", prof.to_dict())
    for k, v in prof.criteria.items():
        print(f"q={k}: sup={v['sup']:.6g} {v['verdict']}")
    return EXIT_OK


def cmd_zoo(cfg, run, action="list", entry=None):
    from . import zoo

    if action == "list":
        for i in zoo.ids():
            print(f"{i:20s} {zoo.DESCRIPTIONS[i]}")
        run.json("zoo", [{"id": i, "description": zoo.DESCRIPTIONS[i]} for i in zoo.ids()])
        return EXIT_OK
    if entry is None:
        raise ConfigError("zoo show needs an id")
    try:
        e = zoo.get(entry)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    s = e.summary()
    print(json.dumps(s, indent=1, default=_default))
    run.json(f"zoo_{entry}", s)
    return EXIT_OK


def cmd_report(cfg, run):
    from . import energy as en
    from . import singular_loci as sl
    from . import spectral

    f, inv, params, entry = select(cfg)
    loci = sl.singular_loci(f, params, seed=cfg["seed"])
    stab = spectral.check_one_stability(f, N=cfg["degree_N"], params=params, loci=loci, seed=cfg["seed"])
    out = {"map": cfg.get("map") or cfg.get("map_file"), "loci": loci.to_dict(),
           "stability": {"verdict": stab.verdict, "lambda1": stab.lambda1, "lambda2": stab.lambda2,
                         "degrees": stab.degrees, "warnings": stab.warnings}}
    status = EXIT_OK
    if inv is not None:
        data = _class_data(cfg, f, inv, params)
        out["e1"] = en.e1_criterion(data, cfg["N"], h=2.0 / cfg["grid"]["n"], seed=cfg["seed"])
        if cfg["energy"]:
            plus, minus, both = _energy(cfg, run, f, inv, params, data)
            out["energy"] = {"verdict": both, "plus": plus.verdict, "minus": minus.verdict,
                             "reasons": [plus.evidence.get("reason"), minus.evidence.get("reason")],
                             "h": plus.h, "N": plus.N, "M": plus.M, "jList": plus.jList}
            if "clipped-noise budget exceeded" in out["energy"]["reasons"]:
                status = EXIT_UNRELIABLE
    else:
        out["e1"] = {"verdict": "undetermined", "note": "no explicit inverse"}
    if entry is not None:
        out["zoo"] = entry.summary()
        if entry.theta is not None:
            from . import diophantine as dp

            try:
                out["diophantine"] = {str(q): dp.criterion(str(entry.theta), q, min(cfg["scan_N"], 10**5))["verdict"]
                                      for q in cfg["q"]}
            except dp.RationalTheta as exc:
                out["diophantine"] = {"note": str(exc)}
    run.json("report", out)
    st = out["stability"]
    print(f"stability: {st['verdict']} (lambda1 = {st['lambda1']:.6g}, lambda2 = {st['lambda2']})")
    print(f"e1: {out['e1']['verdict']}")
    if "energy" in out:
        print(f"energy: {out['energy']['verdict']} ({'; '.join(str(r) for r in out['energy']['reasons'])})")
    return status


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greenlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"greenlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--map", help="zoo id")
        p.add_argument("--map-file", dest="map_file")
        p.add_argument("--inverse-file", dest="inverse_file")
        p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
        p.add_argument("--N", type=int)
        p.add_argument("--degree-N", dest="degree_N", type=int)
        p.add_argument("--M", type=float)
        p.add_argument("--jlist", help="comma-separated levels")
        p.add_argument("--weight")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--threads", type=int)
        p.add_argument("--grid-n", dest="grid_n", type=int)
        p.add_argument("--chart", help="comma-separated chart indices")
        p.add_argument("--half-width", dest="half_width", type=float)
        p.add_argument("--points", type=int)
        p.add_argument("--theta")
        p.add_argument("--scan-N", dest="scan_N", type=int)
        p.add_argument("--q", help="comma-separated exponents")
        p.add_argument("--no-energy", dest="energy", action="store_false", default=None)
        if name == "zoo":
            p.add_argument("action", nargs="?", default="list", choices=["list", "show"])
            p.add_argument("entry", nargs="?")
    return ap


def _overrides(ns) -> dict:
    o = {k: getattr(ns, k) for k in ("map", "map_file", "inverse_file", "N", "degree_N", "M", "weight", "seed",
                                     "out", "threads", "points", "theta", "scan_N", "energy")}
    if ns.jlist:
        o["jList"] = [float(v) for v in ns.jlist.split(",")]
    if ns.q:
        o["q"] = [float(v) for v in ns.q.split(",")]
    if ns.param:
        params = {}
        for item in ns.param:
            if "=" not in item:
                raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            try:
                params[k] = float(v)
            except ValueError:
                params[k] = v
        o["params"] = params
    grid = {}
    if ns.grid_n is not None:
        grid["n"] = ns.grid_n
    if ns.half_width is not None:
        grid["half_width"] = ns.half_width
    if ns.chart:
        grid["chart"] = [int(v) for v in ns.chart.split(",")]
    o["grid"] = grid or None
    return o


def _set_threads(n):
    if n is None:
        n = os.environ.get("GREENLAB_THREADS")
    if n is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = load_config(ns.config, _overrides(ns))
        _set_threads(cfg.get("threads"))
        run = Run(cfg, ns.command)
        fn = globals()[f"cmd_{ns.command}"]
        status = fn(cfg, run, ns.action, ns.entry) if ns.command == "zoo" else fn(cfg, run)
        return status
    except ConfigError as exc:
        print(f"greenlab: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Unreliable as exc:
        print(f"greenlab: numerically unreliable: {exc} (artifacts kept)", file=sys.stderr)
        return EXIT_UNRELIABLE
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
