"""Command-line front end.

Every command writes one deterministic JSON report (config echoed, exact
values as mantissa/exponent pairs).  Exit codes: 0 all checks pass, 1 a check
failed, 2 bad configuration or flags, 3 horizon or budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import (CheckResult, check_eigen_period, check_inv_contraction, check_invertibility,
                           check_section_period, cross_block_bound, decay_certificate_basis, decay_certificate_vec,
                           decay_holds_at, gain_profile, verify_gain_floor)
from .dyadic import Dyadic, FinVec, frac_to_json, int_to_dec
from .errors import BudgetExceeded, DyadicOverflow, HorizonExceeded, PlanError
from .fhc import DenseCorpus, assemble_fhc, choose_plan, density_profile, gen_dense_corpus, plan_from_json, visit_check
from .inverse import brute_force_J, certify_J, inverse_orbit_growth, scarcity_profile, synthesize_tau
from .operator import OperatorSpec, SectionOracle, block_product_W, derive_structure, finite_section_matrix
from .sampling import approx_decimal, random_finvec
from .schedule import Schedule
from .sets import build_family, prefix_density, verify_family

BUILTIN_SPECS = {
    "canonical": lambda: Schedule.canonical(K_max=3),
    "toy": lambda: Schedule.geometric(4, K_max=9, tau={"rule": "synthesized", "L": 3}),
}


class ConfigError(Exception):
    pass


# inputs ------------------------------------------------------------------

def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def load_schedule(desc: str) -> Schedule:
    if desc in BUILTIN_SPECS:
        return BUILTIN_SPECS[desc]()
    obj = _read_json(desc)
    if not isinstance(obj, dict):
        raise ConfigError("a spec file holds a JSON object")
    return Schedule.from_json(obj)


def load_vector(path) -> FinVec:
    """Either the exact list form ``[{"i", "m", "e"}]`` or ``{"index": "p/q"}``."""
    obj = _read_json(path)
    if isinstance(obj, list):
        return FinVec.from_json(obj)
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            q = Fraction(str(v))
            if q.denominator & (q.denominator - 1):
                raise ConfigError(f"coordinate {k} = {v} is not dyadic")
            out[int(k)] = Dyadic.from_fraction(q)
        return FinVec(out)
    raise ConfigError("a vector file holds a list or an object")


def _threads() -> int:
    raw = os.environ.get("CTYPE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CTYPE_THREADS must be an integer, got {raw!r}")
    return max(1, n)


# outputs -----------------------------------------------------------------

def _frac(q) -> dict:
    return frac_to_json(q)


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def emit(obj, out) -> None:
    text = dumps(obj)
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def density_csv(curve) -> str:
    """Rows ``N, count, density`` with the density as an exact fraction."""
    lines = [["N", "count", "density", "density_decimal_approx"]]
    for N, c, q in curve.rows():
        lines.append([N, c, f"{q.numerator}/{q.denominator}", f"{float(q):.6g}"])
    return _csv(lines)


def norm_csv(norms) -> str:
    lines = [["j", "norm_mantissa", "norm_exponent", "norm_decimal_approx"]]
    for j, d in enumerate(norms):
        lines.append([j, int_to_dec(d.m), d.e, approx_decimal(d)])
    return _csv(lines)


def _csv(rows) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([str(v) for v in r])
    return buf.getvalue()


def report(command: str, config: dict, checks=(), results=None) -> dict:
    checks = [c.to_json() if isinstance(c, CheckResult) else c for c in checks]
    return {"tool": "ctype-fhc", "version": __version__, "command": command, "config": config,
            "checks": checks, "passed": all(c["passed"] for c in checks), "results": results or {}}


# verification suite ------------------------------------------------------

def _rng(seed: int, task: str) -> np.random.Generator:
    # per-task stream: results do not depend on task order or worker count
    return np.random.default_rng([seed, *task.encode()])


def t_block_products(spec, level, samples, seed):
    out = []
    for n in range(min(spec.n_blocks, 8)):
        got = block_product_W(spec, n)
        ok = got == Dyadic.pow2(spec.log2_W(n))
        out.append(CheckResult("block weight product equals 2^-eta", ok, {"n": n, "W": got.to_json()}))
    return out


def t_eigen(spec, level, samples, seed):
    rng = _rng(seed, "eigen")
    out = []
    top = 3 if level == "quick" else 8
    for n in range(min(spec.n_blocks, top)):
        lo, hi = spec.b(n), spec.b(n + 1)
        if level == "full" and n <= 1:
            ks = None
        else:
            ks = sorted(int(k) for k in rng.choice(np.arange(lo, hi), size=min(4 if level == "quick" else 16, hi - lo),
                                                  replace=False))
        out.append(check_eigen_period(spec, n, ks))
    return out


def t_section_period(spec, level, samples, seed):
    rng = _rng(seed, "section")
    out = []
    for n in range(min(spec.n_blocks, 2 if level == "quick" else 4)):
        for _ in range(max(1, samples // 50)):
            out.append(check_section_period(spec, random_finvec(rng, spec.b(n + 1)), n))
    return out


def t_invertibility(spec, level, samples, seed):
    return [check_invertibility(spec, spec.n_blocks - 1)]


def t_roundtrip(spec, level, samples, seed):
    name = "inverse formula round trip on basis vectors"
    hi = spec.dim if level == "full" else spec.b(min(spec.n_blocks, 4))
    for k in range(hi):
        e = FinVec.basis(k)
        if spec.apply_T(spec.apply_T_inv(e)) != e or spec.apply_T_inv(spec.apply_T(e)) != e:
            return [CheckResult(name, False, {"checked_below": hi}, {"k": k})]
    return [CheckResult(name, True, {"checked_below": hi})]


def t_oracle(spec, level, samples, seed):
    name = "powers agree with the finite-section matrix"
    rng = _rng(seed, "oracle")
    N = max(n for n in range(1, spec.n_blocks + 1) if spec.b(n) <= 160)
    oracle = SectionOracle(finite_section_matrix(spec, N))
    inverse = spec.invertibility_supported()
    count = 10 if level == "quick" else 100
    for _ in range(count):
        x = random_finvec(rng, spec.b(N))
        k = int(rng.integers(1, 129))
        for p in ((k, -k) if inverse else (k,)):
            a, b = spec.power(x, p), oracle.power(x, p)
            if a != b:
                return [CheckResult(name, False, {"section_blocks": N},
                                    {"x": x.to_json(), "power": p, "kernel": a.to_json(), "oracle": b.to_json()})]
    return [CheckResult(name, True, {"section_blocks": N, "size": spec.b(N), "vectors": count,
                                     "inverse_checked": inverse})]


def t_decay(spec, level, samples, seed):
    rng = _rng(seed, "decay")
    out = []
    ys = [FinVec.basis(0), FinVec.basis(spec.b(1)), random_finvec(rng, spec.b(min(spec.n_blocks, 2)))]
    for y in ys:
        cert = decay_certificate_vec(spec, y)
        ks = [int(cert.k0 + rng.integers(0, 4 * cert.period)) for _ in range(samples // len(ys) + 1)]
        bad = next((k for k in ks if not decay_holds_at(spec, y, k)), None)
        ok = cert.valid and bad is None
        out.append(CheckResult("orbit decay certificate", ok,
                               {"y": y.to_json(), "certificate": cert.to_json(), "spot_checks": len(ks)},
                               None if bad is None else {"k": bad}))
    try:
        bc = decay_certificate_basis(spec, 0, 1)
        out.append(CheckResult("uniform decay of basis orbits", bc.certified, bc.to_json()))
    except HorizonExceeded as exc:
        out.append(CheckResult("uniform decay of basis orbits", False, {}, {"reason": str(exc)}))
    return out


def t_contraction(spec, level, samples, seed):
    rng = _rng(seed, "contraction")
    for i in range(samples):
        r = check_inv_contraction(spec, random_finvec(rng, spec.dim, nnz=6))
        if not r:
            return [r]
    return [CheckResult("inverse norm at most 2", True, {"vectors": samples})]


def t_cross_block(spec, level, samples, seed):
    out = []
    for l, s, n in ((0, 1, 1), (0, 1, 2), (1, 1, 3), (0, 2, 3)):
        if n >= spec.n_blocks:
            continue
        jmax = spec.Delta_n(n) if level == "quick" else 2 * spec.Delta_n(n)
        res = None
        for k in range(spec.b(n), spec.b(n + 1), 1 if level == "full" else max(1, spec.Delta_n(n) // 8)):
            for j in range(jmax + 1):
                r = cross_block_bound(spec, l, s, n, j, FinVec.basis(k))
                if not r:
                    res = r
                    break
            if res:
                break
        out.append(res or CheckResult("cross-block inverse bound", True, {"l": l, "s": s, "n": n, "j_max": jmax}))
    return out


def t_gain(spec, level, samples, seed):
    out = []
    for l in range(min(spec.n_blocks, 2)):
        jm = 4 * spec.Delta_n(l)
        g = gain_profile(spec, l, jm)
        out.append(CheckResult("block gain floor and period", g.floor_ok and g.period_ok,
                               {"l": l, "j_max": jm, "period": g.period, "log2_factor": g.log2_factor}))
        out.append(verify_gain_floor(spec, l, jm if level == "full" else spec.Delta_n(l) * 2))
    return out


def t_J(spec, level, samples, seed):
    out = []
    for l in range(min(spec.n_blocks, 2)):
        c = certify_J(spec, l)
        bf = brute_force_J(spec, l, c.J + 2 * spec.Delta_n(l))
        out.append(CheckResult("gain threshold J matches brute force", bf == c.J,
                               {**c.to_json(), "brute_force": bf}))
    return out


FORWARD_TASKS = [t_block_products, t_eigen, t_section_period, t_oracle, t_decay]
INVERSE_TASKS = [t_invertibility, t_roundtrip, t_contraction, t_cross_block, t_gain, t_J]


def _run_task(args):
    fn, sched_json, tau, level, samples, seed = args
    spec = derive_structure(Schedule.from_json(sched_json), tau=tau)
    return [c.to_json() for c in fn(spec, level, samples, seed)]


def run_suite(spec: OperatorSpec, level: str = "quick", samples: int = 500, seed: int = 0, threads: int = 1):
    """Every check that applies to this operator; inverse-side checks only when the inverse exists."""
    tasks = list(FORWARD_TASKS)
    skipped = []
    if spec.invertibility_supported():
        tasks += INVERSE_TASKS
    else:
        skipped = [t.__name__[2:] for t in INVERSE_TASKS]
    jobs = [(fn, spec.schedule.to_json(), list(spec.tau), level, samples, seed) for fn in tasks]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_task, jobs))
    else:
        parts = [[c.to_json() for c in fn(spec, level, samples, seed)] for fn in tasks]
    return [c for p in parts for c in p], skipped


# commands ----------------------------------------------------------------

def _spec_from_args(args) -> OperatorSpec:
    return derive_structure(load_schedule(args.spec))


def _spec_config(args, spec: OperatorSpec) -> dict:
    return {"spec": args.spec, "schedule": spec.schedule.to_json()}


def cmd_schedule_validate(args):
    sched = load_schedule(args.spec)
    sched.validate()
    spec = derive_structure(sched)
    res = {"n_blocks": spec.n_blocks, "dim": spec.dim, "delta": list(spec.gen_delta), "eta": list(spec.gen_eta),
           "Delta": list(spec.gen_Delta), "b": [spec.b(n) for n in range(min(spec.n_blocks, 16) + 1)],
           "tau_prefix": list(spec.tau[:16]), "invertible": spec.invertibility_supported()}
    chk = CheckResult("schedule constraints", True, {})
    return report("schedule validate", _spec_config(args, spec), [chk], res)


def cmd_op_apply(args):
    spec = _spec_from_args(args)
    x = load_vector(args.vec)
    return spec.power(x, args.power, method=args.method).to_json()


def cmd_verify_all(args):
    spec = _spec_from_args(args)
    threads = _threads()
    checks, skipped = run_suite(spec, args.level, args.samples, args.seed, threads)
    cfg = {**_spec_config(args, spec), "level": args.level, "samples": args.samples, "seed": args.seed}
    return report("verify all", cfg, checks, {"skipped": skipped})


def _load_pairs(arg):
    # inline JSON or a file holding it
    if arg.lstrip().startswith("["):
        try:
            obj = json.loads(arg)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--pairs is not valid JSON: {exc}") from exc
    else:
        obj = _read_json(arg)
    try:
        return [(int(s), int(l)) for s, l in obj]
    except (TypeError, ValueError) as exc:
        raise ConfigError("pairs file holds [[s, l], ...]") from exc


def cmd_sets_gen(args):
    pairs = _load_pairs(args.pairs)
    fam = build_family(pairs, args.horizon)
    ver = verify_family(fam, args.horizon)
    checks = [CheckResult("pairwise disjoint", ver["disjoint"], {}),
              CheckResult("separation |a - b| >= s_i + s_j", ver["separated"], {"pairs_checked": ver["pairs_checked"]},
                          None if ver["separated"] else {"a": ver["witness"][0], "b": ver["witness"][1]}),
              CheckResult("members at least l_j", ver["floor"], {})]
    dens = []
    for j in range(1, fam.size + 1):
        start = fam.burn_in(j)
        cert = fam.certified_density(j)
        if start > args.horizon:
            dens.append({"j": j, "burn_in": start, "within_horizon": False})
            continue
        curve = prefix_density(fam.members(j), args.horizon)
        low, at = curve.min_density(start, args.horizon)
        checks.append(CheckResult("prefix density at least the certified bound", low >= cert,
                                  {"j": j, "min_density": _frac(low), "at": at, "certified": _frac(cert)}))
        dens.append({"j": j, "burn_in": start, "within_horizon": True, "min_density": _frac(low), "at": at})
    cfg = {"pairs": [list(p) for p in pairs], "horizon": args.horizon}
    return report("sets gen", cfg, checks, {"family": fam.to_json(), "density": dens})


def _fhc_setup(args):
    spec = _spec_from_args(args)
    if getattr(args, "plan", None):
        obj = _read_json(args.plan)
        plan = plan_from_json(spec, obj.get("results", {}).get("plan", obj))
    else:
        corpus = DenseCorpus([load_vector(p) for p in args.target]) if args.target else gen_dense_corpus(spec, args.J)
        plan = choose_plan(spec, corpus, args.J, args.horizon)
    return spec, plan


def _fhc_config(args, spec, plan):
    return {**_spec_config(args, spec), "J": plan.J, "horizon": plan.H,
            "targets": args.target or [], "plan_file": getattr(args, "plan", None)}


def cmd_fhc_build(args):
    spec, plan = _fhc_setup(args)
    asm = assemble_fhc(spec, plan)
    checks = [CheckResult("block terms within their norm bounds", asm.term_bounds_ok, {}),
              CheckResult("assembled vector has norm at most 1", asm.to_json()["norm_at_most_one"],
                          {"norm": asm.norm.to_json()})]
    eps = plan.epsilon(plan.J)
    res = {"plan": plan.to_json(), "assembly": asm.to_json(), "epsilon": {k: _frac(v) for k, v in eps.items()}}
    return report("fhc build", _fhc_config(args, spec, plan), checks, res)


def cmd_fhc_check(args):
    spec, plan = _fhc_setup(args)
    asm = assemble_fhc(spec, plan)
    rep = visit_check(spec, plan, asm, plan.J)
    checks = []
    for v in rep.visits:
        checks.append(CheckResult("visit lands within epsilon of the target", v.passed,
                                  {"M": v.M, "distance": v.distance.to_json(), "recovery_exact": v.recovery_exact,
                                   "shift_identity": v.shift_identity},
                                  None if v.passed else {"M": v.M, "distance": v.distance.to_json(),
                                                         "distance_decimal_approx": approx_decimal(v.distance)}))
    if not rep.visits:
        checks.append(CheckResult("visit lands within epsilon of the target", False, {},
                                  {"reason": "no member of the hitting set below the horizon"}))
    return report("fhc check", _fhc_config(args, spec, plan), checks, rep.to_json())


def cmd_fhc_density(args):
    spec, plan = _fhc_setup(args)
    asm = assemble_fhc(spec, plan)
    J = plan.J
    eps = plan.epsilon(J)
    visits, curve = density_profile(spec, asm.x, plan.targets[J].y, eps[args.radius], plan.H)
    start = plan.family.burn_in(J)
    cert = plan.family.certified_density(J)
    checks = []
    res = {"visits": visits, "radius": _frac(eps[args.radius]), "burn_in": start, "certified": _frac(cert)}
    if start <= plan.H:
        low, at = curve.min_density(start, plan.H)
        res.update(min_density=_frac(low), at=at)
        checks.append(CheckResult("visit density at least the certified bound", low >= cert,
                                  {"min_density": _frac(low), "at": at, "certified": _frac(cert)}))
    if args.csv:
        write_atomic(args.csv, density_csv(curve))
    return report("fhc density", {**_fhc_config(args, spec, plan), "radius": args.radius, "csv": args.csv},
                  checks, res)


def cmd_tau_synth(args):
    sched = load_schedule(args.spec)
    sched.validate()
    structure = OperatorSpec(sched, tau=None, check=False) if sched.tau_values(1) is None else derive_structure(sched)
    if args.L >= structure.n_blocks:
        raise HorizonExceeded(f"L = {args.L} needs blocks beyond the horizon {structure.n_blocks}")
    ts = synthesize_tau(structure, args.L)
    checks = [CheckResult("tau meets both growth inequalities", True, {"L": args.L})]
    return report("tau synth", {"spec": args.spec, "schedule": sched.to_json(), "L": args.L}, checks, ts.to_json())


def cmd_inv_profile(args):
    spec = _spec_from_args(args)
    if not spec.invertibility_supported():
        raise ConfigError("the inverse is not available for this spec")
    cfg = {**_spec_config(args, spec), "horizon": args.horizon, "vec": args.vec, "block": args.block,
           "csv": args.csv}
    if args.block is not None:
        g = inverse_orbit_growth(spec, args.block, args.horizon)
        if args.csv:
            write_atomic(args.csv, norm_csv(g.norms))
        chk = CheckResult("inverse block growth floor", g.ok, {"l": args.block})
        return report("inv profile", cfg, [chk], {"l": g.l, "floor_ok": g.ok})
    if not args.vec:
        raise ConfigError("inv profile needs --vec or --block")
    trace = scarcity_profile(spec, load_vector(args.vec), args.horizon, chain=not args.no_chain)
    if args.csv:
        write_atomic(args.csv, norm_csv(trace.norms))
    return report("inv profile", cfg, [], trace.to_json())


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctype-fhc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="group", required=True)

    def common(q, spec=True):
        if spec:
            q.add_argument("--spec", required=True, help="schedule JSON file, or 'canonical' / 'toy'")
        q.add_argument("--out", help="report path (default: stdout)")
        q.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
        q.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("schedule").add_subparsers(dest="cmd", required=True)
    common(g.add_parser("validate"))

    g = sub.add_parser("op").add_subparsers(dest="cmd", required=True)
    q = g.add_parser("apply")
    common(q)
    q.add_argument("--vec", required=True)
    q.add_argument("--power", type=int, default=1)
    q.add_argument("--method", choices=("jump", "step", "section"), default="jump")

    g = sub.add_parser("verify").add_subparsers(dest="cmd", required=True)
    q = g.add_parser("all")
    common(q)
    q.add_argument("--level", choices=("quick", "full"), default="quick")
    q.add_argument("--samples", type=int, default=500, help="random vectors / spot checks per sampled check")

    g = sub.add_parser("sets").add_subparsers(dest="cmd", required=True)
    q = g.add_parser("gen")
    common(q, spec=False)
    q.add_argument("--pairs", required=True, help="JSON list of [s, l], inline or as a file")
    q.add_argument("--horizon", type=int, required=True)

    g = sub.add_parser("fhc").add_subparsers(dest="cmd", required=True)
    for name in ("build", "check", "density"):
        q = g.add_parser(name)
        common(q)
        q.add_argument("--J", type=int, default=1)
        q.add_argument("--horizon", type=int, help="default: just past the certified window of set J")
        q.add_argument("--target", action="append", help="vector file for target j (repeat in order)")
        if name != "build":
            q.add_argument("--plan", help="plan from a previous 'fhc build' report, used as given")
        if name == "density":
            q.add_argument("--csv")
            q.add_argument("--radius", choices=("lo", "hi"), default="lo")

    g = sub.add_parser("tau").add_subparsers(dest="cmd", required=True)
    q = g.add_parser("synth")
    common(q)
    q.add_argument("-L", type=int, required=True)

    g = sub.add_parser("inv").add_subparsers(dest="cmd", required=True)
    q = g.add_parser("profile")
    common(q)
    q.add_argument("--vec")
    q.add_argument("--block", type=int, help="profile e_{b_l} against the growth floor instead")
    q.add_argument("--horizon", type=int, required=True)
    q.add_argument("--csv")
    q.add_argument("--no-chain", action="store_true")
    return p


COMMANDS = {
    ("schedule", "validate"): cmd_schedule_validate,
    ("op", "apply"): cmd_op_apply,
    ("verify", "all"): cmd_verify_all,
    ("sets", "gen"): cmd_sets_gen,
    ("fhc", "build"): cmd_fhc_build,
    ("fhc", "check"): cmd_fhc_check,
    ("fhc", "density"): cmd_fhc_density,
    ("tau", "synth"): cmd_tau_synth,
    ("inv", "profile"): cmd_inv_profile,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        rep = COMMANDS[args.group, args.cmd](args)
    except (HorizonExceeded, BudgetExceeded, PlanError, DyadicOverflow) as exc:
        print(f"ctype-fhc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"ctype-fhc: configuration error: {exc}", file=sys.stderr)
        return 2
    if isinstance(rep, dict) and "passed" in rep and args.timings:
        rep["timings"] = {"wall_seconds": round(time.perf_counter() - t0, 3)}
    emit(rep, args.out)
    if isinstance(rep, dict) and not rep.get("passed", True):
        return 1
    return 0


def main() -> None:
    sys.exit(run())
