"""Command-line entry point: ``hclab <command> ...``.

Exit codes: 0 success, 1 a check failed, 2 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from . import chessboard as cb
from . import expansion as ex
from . import graphs as gr
from . import hardcore as hc
from . import order as od
from .report import to_jsonable
from .suites import CHECKS, FITS, SUITES, SWEEP_COLUMNS, Job, UsageError, parse_graph, run_jobs, run_sweep

SWEEP_VERSION = "v1"


def _graph_from(args: dict) -> gr.BipartiteGraph:
    if not args.get("torus") and args.get("L") is not None and args.get("d") is not None:
        args["torus"] = (int(args["L"]), int(args["d"]))
    if args.get("torus"):
        L, d = args["torus"]
        g = gr.build_torus(gr.TorusSpec(int(L), int(d)))
    elif args.get("graph"):
        g = parse_graph(args["graph"])
    elif args.get("in"):
        g = _load(args["in"])
    else:
        raise UsageError("give --graph SPEC, --torus L d or --in FILE")
    cap = int(args.get("cap") or hc.ENUM_CAP)
    if cap > hc.ENUM_CAP and not args.get("unsafe_caps"):
        raise UsageError(f"--cap above {hc.ENUM_CAP} needs --unsafe-caps")
    args["cap"] = cap
    return g


def _load(path: str) -> gr.BipartiteGraph:
    try:
        return gr.load_graph(path)
    except OSError as e:
        raise UsageError(f"cannot read graph file {path}: {e}") from e


def _opt(a: dict, key: str, default):
    v = a.get(key)
    return default if v is None else v


def _need_seed(args: dict) -> int:
    if args.get("seed") is None:
        raise UsageError("this command is stochastic; --seed is required")
    return int(args["seed"])


def _emit_json(path: str | None, payload) -> None:
    if path:
        gr.write_text_atomic(path, json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


# ---------------------------------------------------------------- commands


def cmd_graph(a: dict) -> int:
    kind = a.get("kind")
    m = a.get("m")
    if kind in ("gadget", "blowup", "stretch") and m is None:
        raise UsageError(f"graph {kind} needs --m")
    if kind == "torus":
        if a.get("L") is None or a.get("d") is None:
            raise UsageError("graph torus needs --L and --d")
        g = gr.build_torus(gr.TorusSpec(int(a["L"]), int(a["d"])))
    elif kind == "gadget":
        g = gr.build_linear_gadget(int(m)).graph
    elif kind in ("blowup", "stretch"):
        base = _load(a["in"]) if a.get("in") else _graph_from(a)
        g = gr.blow_up(base, int(m)) if kind == "blowup" else gr.stretch_by_gadget(base, int(m))
    else:
        g = _graph_from(a)
    if a.get("out"):
        gr.save_graph(g, a["out"])
    else:
        sys.stdout.write(gr.dumps_graph(g))
    info = dict(name=g.name, n=g.n, edges=g.num_edges, degree=g.degree, connected=g.is_connected())
    print(json.dumps(info, sort_keys=True), file=sys.stderr)
    return 0


def cmd_z(a: dict) -> int:
    g = _graph_from(a)
    lam = hc.as_fugacity(_opt(a, "lambda", 1))
    method = _opt(a, "method", "auto")
    if method == "transfer" or (method == "auto" and a.get("torus") and g.n > 24):
        if not a.get("torus"):
            raise UsageError("transfer method needs --torus")
        res = hc.partition_transfer_torus(gr.TorusSpec(*map(int, a["torus"])), lam)
    else:
        res = hc.partition_bruteforce(g, lam, a["cap"])
    print(f"logZ = {res.log_z!r}")
    if res.exact is not None:
        print(f"Z = {res.exact}")
    _emit_json(a.get("json"), res.to_dict())
    return 0


def cmd_sample(a: dict) -> int:
    g = _graph_from(a)
    seed = _need_seed(a)
    steps = int(_opt(a, "steps", 10_000))
    if a.get("fixed_size") is not None:
        sigma = hc.sample_fixed_size(g, int(a["fixed_size"]), steps, seed)
    else:
        sigma = hc.glauber_run(g, float(hc.as_fugacity(_opt(a, "lambda", 1))), steps, seed)
    occ = od.occupation(g, sigma)
    out = dict(sigma=sigma, size=occ.total, even=occ.even, odd=occ.odd, M=occ.M, seed=seed, steps=steps)
    print(json.dumps(out, sort_keys=True))
    _emit_json(a.get("json"), out)
    return 0


def _sigma_from(a: dict, g: gr.BipartiteGraph) -> int | None:
    if a.get("bits") is not None:
        bits = str(a["bits"])
        if len(bits) != g.n or set(bits) - {"0", "1"}:
            raise UsageError(f"--bits needs a 0/1 string of length {g.n}")
        return sum(1 << i for i, ch in enumerate(bits) if ch == "1")
    if a.get("sigma") is None:
        return None
    return int(a["sigma"], 0) if isinstance(a["sigma"], str) else int(a["sigma"])


def cmd_order(a: dict) -> int:
    if a.get("action") == "scan-ebal":
        a["kind"] = "magnetization"
        a["lambdas"] = _opt(a, "lambda_grid", a.get("lambdas"))
        if a.get("L") is not None and a.get("d") is not None:
            a["graph"] = f"torus:{a['L']},{a['d']}"
        elif a.get("torus"):
            a["graph"] = "torus:{},{}".format(*a["torus"])
        if not a.get("graph"):
            raise UsageError("scan-ebal needs --L and --d or --graph")
        a["torus"] = None
        return cmd_sweep(a)
    g = _graph_from(a)
    sigma = _sigma_from(a, g)
    if a.get("action") == "phi" and sigma is None:
        raise UsageError("order phi needs --bits or --sigma")
    if sigma is None:
        configs = hc.enumerate_configs(g, a["cap"])
        r = od.roughness_arrays(g, configs)
        out = dict(configs=len(configs), max_Phi=float(r.values.max()), max_M=int(od.min_occupation(g, configs).max()))
    else:
        if not hc.is_independent(g, sigma):
            raise UsageError("sigma is not an independent set")
        cf = od.coarse_field(g, sigma)
        occ = od.occupation(g, sigma)
        out = dict(sigma=sigma, phi=cf.mask, Phi=od.roughness(g, sigma), M=occ.M, even=occ.even, odd=occ.odd)
    print(json.dumps(to_jsonable(out), sort_keys=True))
    _emit_json(a.get("json"), out)
    return 0


def cmd_expansion(a: dict) -> int:
    action = a.get("action")
    if action == "green" and a.get("M0") is None and a.get("green") is None:
        raise UsageError("expansion green needs --M0")
    if a.get("M0") is not None:
        a["green"] = a["M0"]
    g = _graph_from(a)
    out: dict = {}
    reports = []
    if action == "green":
        t = ex.green_table(g, int(a["green"]))
        rep = ex.check_green_positivity(t, g)
        reports.append(rep)
        out["green_positivity"] = rep.to_dict()
        if a.get("C0") is not None:
            try:
                cert, wrep = ex.local_expansion_from_walk(g, int(a["green"]), hc.as_fugacity(a["C0"]))
            except ex.PremiseError as e:
                print(f"hclab: premise failed: {e}", file=sys.stderr)
                return 1
            reports.append(wrep)
            out["walk_certificate"] = dict(C_LE=cert.C_LE, M_LE=cert.M_LE, report=wrep.to_dict())
        print(json.dumps(to_jsonable(out), sort_keys=True))
        _emit_json(a.get("json"), out)
        return 0 if all(r.passed for r in reports) else 1
    if action == "cert-torus":
        if not a.get("torus"):
            raise UsageError("cert-torus needs --L and --d")
        spec = gr.TorusSpec(*map(int, a["torus"]))
        cert = ex.torus_local_expansion_certificate(spec)
        rep = ex.verify_local_expansion(g, cert, mode=_opt(a, "mode", "exact"), seed=int(a.get("seed") or 0))
        out = dict(C_LE=cert.C_LE, M_LE=cert.M_LE, report=rep.to_dict())
        print(json.dumps(to_jsonable(out), sort_keys=True))
        _emit_json(a.get("json"), out)
        return 0 if rep.passed else 1
    if a.get("torus") and g.n > ex.CHEEGER_CAP:
        res = ex.cheeger_torus_transfer(gr.TorusSpec(*map(int, a["torus"])))
    else:
        res = ex.cheeger_exact(g)
    out["cheeger"] = dict(value=res.value, witness=res.witness, method=res.method)
    if action == "cheeger":
        pass
    elif a.get("torus"):
        spec = gr.TorusSpec(*map(int, a["torus"]))
        cert = ex.torus_local_expansion_certificate(spec)
        mode = _opt(a, "mode", "exact")
        rep = ex.verify_local_expansion(g, cert, mode=mode, seed=int(a.get("seed") or 0))
        reports.append(rep)
        out["certificate"] = dict(C_LE=cert.C_LE, M_LE=cert.M_LE, passed=rep.passed)
    if action != "cheeger" and a.get("green") is not None:
        t = ex.green_table(g, int(a["green"]))
        rep = ex.check_green_positivity(t, g)
        reports.append(rep)
        out["green_positivity"] = rep.passed
    print(json.dumps(to_jsonable(out), sort_keys=True))
    _emit_json(a.get("json"), out)
    return 0 if all(r.passed for r in reports) else 1


def _observable(spec: cb.ReflectionGroupSpec, which: str, lam, c_alpha) -> cb.LocalObservable:
    if which == "one":
        return cb.constant_observable(spec)
    if which == "site":
        return cb.site_indicator(spec)
    if which in ("f", "g", "B", "B0") or which.startswith("BH"):
        return cb.phase_observable(spec, lam, c_alpha).observable(which)
    # anything else is a JSON file holding the table over block patterns
    try:
        with open(which, encoding="utf-8") as fh:
            table = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"unknown observable {which!r} (not a builtin, not a readable JSON table)") from e
    k = (spec.ell + 1) ** spec.d
    if not isinstance(table, list) or len(table) != 1 << k:
        raise UsageError(f"observable table must be a list of 2^{k} numbers")
    return cb.LocalObservable(spec, np.asarray(table, dtype=np.float64), name=which)


def cmd_chess(a: dict) -> int:
    spec = cb.ReflectionGroupSpec(int(_opt(a, "ell", 1)), int(_opt(a, "L", 4)), int(_opt(a, "d", 1)))
    c_alpha = hc.as_fugacity(_opt(a, "c_alpha", "1/100"))
    action = _opt(a, "action", "seminorm")
    if action == "phase-scan":
        if spec.ell % 2 == 0:
            raise UsageError("phase-scan needs odd --l")
        cols = ["ell", "L", "d", "lam", "c_alpha", "alpha", "norm_B", "norm_f", "separator", "f_mean_zero"]
        buf = io.StringIO()
        buf.write(f"# hclab-sweep {SWEEP_VERSION} columns: {','.join(cols)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        ok = True
        for x in _lambda_grid(_opt(a, "lambda_grid", a.get("lambda"))):
            lam = hc.as_fugacity(x)
            ph = cb.phase_observable(spec, lam, c_alpha)
            sep = cb.check_separator(ph)
            mz = cb.check_f_expectation_zero(ph)
            ok = ok and sep.passed and mz.passed
            w.writerow([spec.ell, spec.L, spec.d, repr(float(lam)), repr(float(c_alpha)), repr(float(ph.alpha)),
                        repr(cb.chessboard_seminorm(ph.observable("B"), lam)),
                        repr(cb.chessboard_seminorm(ph.observable("f"), lam)), sep.passed, mz.passed])
        if a.get("out"):
            gr.write_text_atomic(a["out"], buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return 0 if ok else 1
    lam = hc.as_fugacity(_opt(a, "lambda", 1))
    which = _opt(a, "observable", "one")
    f = _observable(spec, which, lam, c_alpha)
    if action == "compare-tori":
        rep = cb.seminorm_torus_comparison(f, lam, a.get("L2"))
        print(rep.summary())
        if a.get("json"):
            gr.write_text_atomic(a["json"], rep.to_json(timing=False))
        return 0 if rep.passed else 1
    out = dict(ell=spec.ell, L=spec.L, d=spec.d, observable=which, seminorm=cb.chessboard_seminorm(f, lam))
    print(json.dumps(to_jsonable(out), sort_keys=True))
    _emit_json(a.get("json"), out)
    return 0


def cmd_check(a: dict) -> int:
    cid = a["id"]
    if cid not in CHECKS:
        raise UsageError(f"unknown check {cid!r}; see `hclab check --list`")
    cd = CHECKS[cid]
    params = dict(cd.defaults)
    for k in ("lambda", "graph", "trials", "torus"):
        if a.get(k) is not None:
            params[k] = a[k]
    params.update(_params(a.get("param")))
    seed = _need_seed(a) if cd.stochastic else int(a.get("seed") or 0)
    rep = run_jobs([Job(cid, params, seed, cid)], 1)[0]
    print(rep.summary())
    if a.get("json"):
        gr.write_text_atomic(a["json"], rep.to_json(timing=bool(a.get("timing"))))
    return 0 if rep.passed else 1


def cmd_fit(a: dict) -> int:
    fid = a["id"]
    if fid not in FITS:
        raise UsageError(f"unknown fit {fid!r}; choose from {sorted(FITS)}")
    grid = {}
    if a.get("grid"):
        with open(a["grid"], encoding="utf-8") as fh:
            grid = json.load(fh)
    fit = FITS[fid][1](grid)
    print(f"{fid}: {fit.constant_name} = {fit.value!r} ({fit.direction}, certified={fit.certified}, grid={len(fit.grid)})")
    if a.get("json"):
        gr.write_text_atomic(a["json"], fit.to_json())
    return 0 if fit.certified else 1


def _lambda_grid(text) -> list:
    if text is None:
        return [0.5, 1, 2, 4]
    if isinstance(text, list):
        return text
    return [x for x in (t.strip() for t in str(text).split(",")) if x]


def cmd_sweep(a: dict) -> int:
    kind = a["kind"]
    if kind not in SWEEP_COLUMNS:
        raise UsageError(f"unknown sweep {kind!r}; choose from {sorted(SWEEP_COLUMNS)}")
    params = _params(a.get("param"))
    for k in ("graph", "torus"):
        if a.get(k) is not None:
            params[k] = a[k]
    if kind == "free-energy-gap":
        params.setdefault("torus", (4, 2))
    lams = [hc.as_fugacity(x) if isinstance(x, str) else x for x in _lambda_grid(_opt(a, "lambda_grid", a.get("lambdas")))]
    cols = SWEEP_COLUMNS[kind]
    rows = run_sweep(kind, params, lams) if lams else []
    buf = io.StringIO()
    buf.write(f"# hclab-sweep {SWEEP_VERSION} columns: {','.join(cols)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    if a.get("out"):
        gr.write_text_atomic(a["out"], buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_suite(a: dict) -> int:
    name = a["name"]
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    jobs = SUITES[name](int(a.get("seed") or 0))
    threads = a.get("threads")
    reports = run_jobs(jobs, None if threads is None else int(threads))
    for job, rep in zip(jobs, reports):
        print(("PASS " if rep.passed else "FAIL ") + job.label)
    ok = all(r.passed for r in reports)
    print(f"{sum(r.passed for r in reports)}/{len(reports)} passed")
    if a.get("json"):
        payload = [r.to_dict(timing=bool(a.get("timing"))) for r in reports]
        gr.write_text_atomic(a["json"], json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def _graph_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph spec, e.g. torus:4,2 cycle:6 hypercube:3 kab:2,3 gadget:1 file:PATH")
    p.add_argument("--torus", nargs=2, type=int, metavar=("L", "d"))
    p.add_argument("--in", dest="in", metavar="FILE", help="graph file")
    p.add_argument("--cap", type=int, help=f"vertex cap for enumeration (default {hc.ENUM_CAP})")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option values; flags given on the command line win")
    p.add_argument("--json", help="write a JSON report here")
    p.add_argument("--seed", type=int)
    p.add_argument("--unsafe-caps", action="store_true", dest="unsafe_caps")


def _torus_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, dest="L", help="torus side")
    p.add_argument("--d", type=int, dest="d", help="torus dimension")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hclab", description="Hard-core model laboratory on bipartite graphs.")
    ap.add_argument("--version", action="version", version=f"hclab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build a graph and print or save it")
    p.add_argument("kind", nargs="?", choices=("torus", "gadget", "blowup", "stretch"))
    _graph_opts(p)
    _common(p)
    _torus_opts(p)
    p.add_argument("--m", type=int, help="gadget length or blow-up factor")
    p.add_argument("--out")

    p = sub.add_parser("z", help="partition function")
    _graph_opts(p)
    _common(p)
    _torus_opts(p)
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--method", choices=("auto", "brute", "transfer"))

    p = sub.add_parser("sample", help="heat-bath or fixed-size sampler")
    _graph_opts(p)
    _common(p)
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--steps", type=int)
    p.add_argument("--fixed-size", type=int, dest="fixed_size")

    p = sub.add_parser("order", help="coarse field, roughness and occupation")
    p.add_argument("action", nargs="?", choices=("phi", "scan-ebal"))
    _graph_opts(p)
    _common(p)
    _torus_opts(p)
    p.add_argument("--sigma", help="configuration bitmask (decimal or 0x...); omit for a scan")
    p.add_argument("--bits", help="configuration as a 0/1 string, vertex 0 first")
    p.add_argument("--lambda-grid", dest="lambda_grid", help="comma-separated fugacities for scan-ebal")
    p.add_argument("--out")

    p = sub.add_parser("expansion", help="Cheeger constant, local expansion, Green tables")
    p.add_argument("action", nargs="?", choices=("cheeger", "cert-torus", "green"))
    _graph_opts(p)
    _common(p)
    _torus_opts(p)
    p.add_argument("--mode", choices=("exact", "montecarlo"))
    p.add_argument("--green", type=int, metavar="M0")
    p.add_argument("--M0", type=int, dest="M0", help="walk length")
    p.add_argument("--C0", dest="C0", help="return-visit constant for the walk certificate")

    p = sub.add_parser("chess", help="chessboard seminorms")
    p.add_argument("action", nargs="?", choices=("seminorm", "compare-tori", "phase-scan"))
    _common(p)
    p.add_argument("--ell", "--l", type=int, dest="ell")
    _torus_opts(p)
    p.add_argument("--L2", type=int, dest="L2", help="larger side for compare-tori (default L + 2 ell)")
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--lambda-grid", dest="lambda_grid")
    p.add_argument("--c-alpha", dest="c_alpha")
    p.add_argument("--observable", "--obs", dest="observable", help="one | site | f | g | B | B0 | BH<i> | JSON table file")
    p.add_argument("--out")

    p = sub.add_parser("check", help="run one named check")
    p.add_argument("id", nargs="?")
    p.add_argument("--list", action="store_true")
    _graph_opts(p)
    _common(p)
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--trials", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--timing", action="store_true", help="include runtime in the JSON report")

    p = sub.add_parser("fit", help="constant-fit study")
    p.add_argument("id")
    p.add_argument("--grid", help="JSON grid description")
    _common(p)

    p = sub.add_parser("sweep", help="CSV table over a fugacity grid")
    p.add_argument("kind")
    _graph_opts(p)
    _common(p)
    p.add_argument("--lambdas", "--lambda-grid", dest="lambdas", help="comma-separated fugacities; empty for a header-only table")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")

    p = sub.add_parser("suite", help="run a named suite of checks")
    p.add_argument("name")
    _common(p)
    p.add_argument("--threads", type=int, help="worker threads (default HCLAB_THREADS or 1)")
    p.add_argument("--timing", action="store_true")

    for sp in sub.choices.values():
        sp.set_defaults(**{a.dest: None for a in sp._actions if a.dest not in ("help", "command")})
    return ap


COMMANDS = {
    "graph": cmd_graph,
    "z": cmd_z,
    "sample": cmd_sample,
    "order": cmd_order,
    "expansion": cmd_expansion,
    "chess": cmd_chess,
    "check": cmd_check,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "suite": cmd_suite,
}


def _merge_config(ns: argparse.Namespace) -> dict:
    args = {k: v for k, v in vars(ns).items()}
    path = args.get("config")
    if not path:
        return args
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for k, v in cfg.items():
        k = k.replace("-", "_")
        if args.get(k) in (None, False):
            args[k] = v
    return args


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        args = _merge_config(ns)
        if args["command"] == "check" and args.get("list"):
            for cid, cd in CHECKS.items():
                print(f"{cid:22s} {cd.statement}")
            return 0
        if args["command"] == "check" and not args.get("id"):
            raise UsageError("check id required")
        return COMMANDS[args["command"]](args)
    except (UsageError, ValueError) as e:
        print(f"hclab: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
