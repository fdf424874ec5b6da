"""Command-line interface: ``orbitlf <command> [options]``.

Exit codes: 0 on success, 1 for configuration errors, 2 when a verification
check fails.  ``ORBITLF_THREADS`` and ``ORBITLF_OUTDIR`` supply defaults for
``--workers`` and the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Optional

from . import characters as ch
from .congruence import DyadicBox, count_congruence, naive_bound_check, small_box_probe
from .errors import OrbitLFError, VerificationFailure
from .lfunc import AfeRequest, SmoothingKernel, afe_decomposition, l_value_oracle
from .mollifier import (
    desk_params,
    holder_lower_bound,
    log_bound_margins,
    size_case,
    mollified_second_moment,
    mollified_vth_moment,
    asymptotic_params,
)
from .moments import (
    TwistPair,
    default_X,
    diagonal_term,
    moment_error_sweep,
    moment_report,
    nonvanishing_count,
)
from .report import build_report, dumps_csv, dumps_json
from .verify import DEFAULT_LADDER, parse_modulus, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2


class ConfigError(OrbitLFError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclasses.dataclass
class RunConfig:
    """Every input that can influence a result; echoed verbatim in JSON reports."""

    command: str
    out: str = "json"
    output: Optional[str] = None
    workers: int = 1
    seed: int = 0
    p: Optional[int] = None
    k: Optional[int] = None
    c: Optional[int] = None
    thin: Optional[int] = None
    base: Optional[int] = None
    chi: Optional[int] = None
    s_real: float = 0.5
    s_imag: float = 0.0
    eta1: Optional[int] = None
    eta2: Optional[int] = None
    m1: int = 1
    m2: int = 1
    X: Optional[float] = None
    theta: float = 0.0
    kernel_scale: float = 0.05
    threshold: float = 1e-8
    mode: str = "desk"
    beta: tuple = (0.15, 0.35)
    ell: tuple = (4, 4)
    v: int = 4
    asymptotic_c: Optional[float] = None
    alpha: Optional[int] = None
    A: Optional[float] = None
    B: Optional[float] = None
    probe_alphas: tuple = ()
    delta: float = 0.1
    ladder: tuple = ()
    fault: Optional[str] = None

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        values = {k: v for k, v in vars(ns).items() if k in names and v is not None}
        for key in ("beta", "ell", "probe_alphas", "ladder"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("output")
        return d


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _modulus_list(text: str) -> list[tuple[int, int]]:
    return [parse_modulus(x) for x in text.split(",") if x]


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not an integer")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orbitlf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", choices=("json", "csv"), default="json", help="report format")
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--workers", type=int, help="worker threads (default $ORBITLF_THREADS or 1)")
        sp.add_argument("--seed", type=int, default=0)

    def modulus(sp):
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--k", type=int, required=True)

    def twists(sp):
        sp.add_argument("--eta1", type=int, required=True, help="residue of the first imprimitive twist")
        sp.add_argument("--eta2", type=int, default=0, help="residue of the second imprimitive twist")

    def orbit_choice(sp):
        sp.add_argument("--c", type=int, default=1, help="characteristic of the full orbit")
        sp.add_argument("--thin", type=int, help="use a thin orbit of this level inside the full orbit")
        sp.add_argument("--base", type=int, help="member residue selecting the thin orbit")

    sp = sub.add_parser("orbits", help="list full or thin orbits")
    modulus(sp)
    sp.add_argument("--c", type=int, help="only this characteristic")
    sp.add_argument("--thin", type=int, help="split each full orbit at this level")
    common(sp)

    sp = sub.add_parser("verify", help="run the identity checks")
    sp.add_argument("--ladder", type=_modulus_list, default=list(DEFAULT_LADDER), help="e.g. 3^3,3^4,5^3")
    sp.add_argument("--fault", choices=("s-minus-sign",), help="inject a known fault (should fail)")
    common(sp)

    sp = sub.add_parser("lvalue", help="oracle L-value, optionally with the AFE product")
    modulus(sp)
    sp.add_argument("--chi", type=int, required=True, help="character residue")
    sp.add_argument("--s-real", type=float, default=0.5)
    sp.add_argument("--s-imag", type=float, default=0.0)
    sp.add_argument("--eta1", type=int)
    sp.add_argument("--eta2", type=int)
    sp.add_argument("--X", type=float)
    sp.add_argument("--kernel-scale", type=float, default=0.05)
    common(sp)

    sp = sub.add_parser("moment", help="twisted second moment over an orbit")
    modulus(sp)
    orbit_choice(sp)
    twists(sp)
    sp.add_argument("--m1", type=int, default=1)
    sp.add_argument("--m2", type=int, default=1)
    sp.add_argument("--X", type=float)
    sp.add_argument("--theta", type=float, default=0.0, help="twist length exponent for the error sweep")
    sp.add_argument("--kernel-scale", type=float, default=0.05)
    sp.add_argument("--threshold", dest="threshold", type=float, default=1e-8)
    common(sp)

    sp = sub.add_parser("mollify", help="mollified moments and the nonvanishing lower bound")
    modulus(sp)
    orbit_choice(sp)
    twists(sp)
    # "paper" is accepted as a synonym of "asymptotic"
    sp.add_argument("--mode", choices=("desk", "asymptotic", "paper"), default="desk")
    sp.add_argument("--beta", type=_float_list, default=[0.15, 0.35])
    sp.add_argument("--ell", type=_int_list, default=[4, 4])
    sp.add_argument("--v", type=int, default=4)
    sp.add_argument("--asymptotic-c", type=float)
    sp.add_argument("--ladder", type=_modulus_list, default=[], help="also report v-th moments on these moduli")
    common(sp)

    sp = sub.add_parser("congruence", help="count a^(p-1) = b^(p-1) mod p^alpha in a dyadic box")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--alpha", type=int, required=True)
    sp.add_argument("--A", type=float, required=True)
    sp.add_argument("--B", type=float, required=True)
    sp.add_argument("--probe-alphas", type=_int_list, help="also sweep small boxes over these alphas, e.g. 2-12")
    sp.add_argument("--delta", type=float, default=0.1)
    common(sp)
    return parser


def _select_orbit(mod: ch.PrimePowerModulus, cfg: RunConfig) -> ch.GaloisOrbit:
    full = ch.full_orbit(mod, cfg.c)
    if cfg.thin is None:
        return full
    if cfg.base is None:
        return ch.thin_orbits(mod, cfg.thin, full)[0]
    orbit = ch.thin_orbit_of(mod, cfg.thin, cfg.base)
    if orbit.c != cfg.c:
        raise ConfigError(f"base {cfg.base} has characteristic {orbit.c}, not {cfg.c}")
    return orbit


def _kernel(cfg: RunConfig) -> SmoothingKernel:
    return SmoothingKernel(scale=cfg.kernel_scale)


def cmd_orbits(cfg: RunConfig):
    mod = ch.build_modulus(cfg.p, cfg.k)
    fulls = [ch.full_orbit(mod, cfg.c)] if cfg.c is not None else ch.all_full_orbits(mod)
    orbits = []
    for full in fulls:
        orbits.extend([full] if cfg.thin is None else ch.thin_orbits(mod, cfg.thin, full))
    covered = sorted(a for o in orbits for a in o.residues)
    expected = sorted(a for o in fulls for a in o.residues)
    partition_ok = covered == expected and len(set(covered)) == len(covered)
    if cfg.c is None:
        partition_ok &= expected == mod.primitive_residues().tolist()
    result = {
        "q": mod.q,
        "generator": mod.generator,
        "count": len(orbits),
        "partition_ok": partition_ok,
        "orbits": [o.describe() for o in orbits],
    }
    rows = [(o.kind, o.c, o.kappa, o.size, " ".join(map(str, o.residues))) for o in orbits]
    return result, (("kind", "c", "kappa", "size", "residues"), rows), EXIT_OK if partition_ok else EXIT_VERIFY


def cmd_verify(cfg: RunConfig):
    if not cfg.ladder:
        raise ConfigError("the modulus ladder is empty")
    results = run_suite(cfg.ladder, cfg.workers, cfg.seed, cfg.fault)
    failed = [r.name for r in results if not r.passed]
    payload = [{k: v for k, v in dataclasses.asdict(r).items() if k != "elapsed"} for r in results]
    result = {"passed": not failed, "failed": failed, "checks": payload}
    rows = [(r.name, r.passed, r.worst, r.tolerance) for r in results]
    for r in results:
        print(r.line(), file=sys.stderr)
    timing = {r.name: r.elapsed for r in results}
    return result, (("check", "passed", "worst", "tolerance"), rows), (EXIT_VERIFY if failed else EXIT_OK), timing


def cmd_lvalue(cfg: RunConfig):
    mod = ch.build_modulus(cfg.p, cfg.k)
    chi = mod.character(cfg.chi)
    s = complex(cfg.s_real, cfg.s_imag) if cfg.s_imag else cfg.s_real
    value = l_value_oracle(s, chi)
    result = {"chi": chi.residue, "s": complex(s), "L": value, "primitive": chi.is_primitive, "parity": chi.parity}
    rows = [("L", value)]
    if cfg.eta1 is not None:
        eta1, eta2 = mod.character(cfg.eta1), mod.character(cfg.eta2 or 0)
        h = (eta1 * eta2.conj()).height
        X = cfg.X if cfg.X is not None else mod.p ** (h / 2)
        parts = afe_decomposition(AfeRequest(chi, eta1, eta2, X, kernel=_kernel(cfg)), cfg.workers)
        oracle = l_value_oracle(0.5, chi * eta1) * l_value_oracle(0.5, (chi * eta2).conj())
        result["afe"] = dataclasses.asdict(parts)
        result["oracle_product"] = oracle
        result["afe_gap"] = abs(parts.value - oracle)
        rows += [("afe_product", parts.value), ("oracle_product", oracle), ("afe_gap", abs(parts.value - oracle))]
    return result, (("quantity", "value"), rows), EXIT_OK


def cmd_moment(cfg: RunConfig):
    mod = ch.build_modulus(cfg.p, cfg.k)
    orbit = _select_orbit(mod, cfg)
    eta1, eta2 = mod.character(cfg.eta1), mod.character(cfg.eta2)
    pair = TwistPair(cfg.m1, cfg.m2)
    h = ch.check_twist_pair(mod, eta1, eta2)
    report = moment_report(orbit, eta1, eta2, pair, cfg.X, cfg.theta, _kernel(cfg), cfg.workers)
    kappas = ((orbit.parity + eta1.residue) % 2, (orbit.parity + eta2.residue) % 2)
    Xs = [1.0, default_X(orbit, h), float(mod.p**h)]
    diag = [dataclasses.asdict(diagonal_term(pair, eta1, eta2, X, kappas, _kernel(cfg))) for X in Xs]
    result = {
        "moment": report.to_dict(),
        "diagonal_sequence": diag,
        "error_sweep": moment_error_sweep(orbit, eta1, eta2, cfg.theta, workers=cfg.workers),
        "nonvanishing": dataclasses.asdict(nonvanishing_count(orbit, eta1, eta2, cfg.threshold)),
    }
    rows = [
        ("direct", report.direct),
        ("afe", report.afe),
        ("s_plus", report.s_plus),
        ("s_minus", report.s_minus),
        ("main_term", report.main_term),
        ("error", report.error),
        ("route_gap", report.route_gap),
        ("envelope", report.envelope),
    ]
    return result, (("quantity", "value"), rows), EXIT_OK


def _mollifier_params(q: int, cfg: RunConfig):
    if cfg.mode in ("asymptotic", "paper"):
        return asymptotic_params(q, cfg.v, cfg.asymptotic_c)
    if len(cfg.beta) != len(cfg.ell):
        raise ConfigError("--beta and --ell need the same length")
    return desk_params(q, cfg.beta, cfg.ell, cfg.v)


def cmd_mollify(cfg: RunConfig):
    mod = ch.build_modulus(cfg.p, cfg.k)
    orbit = _select_orbit(mod, cfg)
    eta1, eta2 = mod.character(cfg.eta1), mod.character(cfg.eta2)
    ch.check_twist_pair(mod, eta1, eta2)
    params = _mollifier_params(mod.q, cfg)
    result = {"params": params.describe(), "intervals_empty": params.all_intervals_empty}
    if params.v == 4:
        mm = mollified_second_moment(orbit, eta1, eta2, params, cfg.workers)
        result["mollified_second_moment"] = {"value": mm.value, "main_term": mm.main_term, "ratio": mm.ratio,
                                             "tail_bound": mm.tail_bound}
    chain = holder_lower_bound(orbit, eta1, eta2, params, workers=cfg.workers)
    result["holder"] = dataclasses.asdict(chain)
    result["cases"] = dict(sorted(Counter(str(size_case(chi, params)) for chi in orbit.members).items()))
    margins = log_bound_margins(orbit, float(mod.q))
    result["log_bound"] = {k: v for k, v in margins.items() if k != "margins"}
    ladder = []
    for p, k in cfg.ladder:
        q = p**k
        lp = _mollifier_params(q, cfg)
        total = mollified_vth_moment(ch.build_modulus(p, k), cfg.v, lp)
        ladder.append({"q": q, "sum": total, "ratio": total / q})
    result["vth_moment_ladder"] = ladder
    rows = [
        ("count", chain.count),
        ("size", chain.size),
        ("lower_bound", chain.lower_bound),
        ("holder_lhs", chain.lhs),
        ("holder_rhs", chain.rhs),
    ]
    if "mollified_second_moment" in result:
        rows += [("mollified_second_moment", mm.value), ("main_term", mm.main_term)]
    return result, (("quantity", "value"), rows), EXIT_OK


def cmd_congruence(cfg: RunConfig):
    box = DyadicBox(cfg.A, cfg.B, cfg.p, cfg.alpha)
    count = count_congruence(box)
    bound = naive_bound_check(box, count.d0_raw)
    result = {
        "box": dataclasses.asdict(box),
        "d0_raw": count.d0_raw,
        "d1_raw": count.d1_raw,
        "d2_raw": count.d2_raw,
        "d0": count.d0,
        "d1": count.d1,
        "d2": count.d2,
        "per_root": count.per_root,
        "naive_bound": bound.bound,
        "bound_margin": bound.margin,
        "bound_holds": bound.holds,
    }
    if cfg.probe_alphas:
        result["small_box_probe"] = small_box_probe(cfg.p, cfg.probe_alphas, cfg.delta)
    header = ("p", "alpha", "A", "B", "d0_raw", "d1_raw", "d2_raw", "d0_norm", "bound_margin")
    rows = [(box.p, box.alpha, box.A, box.B, count.d0_raw, count.d1_raw, count.d2_raw, count.d0, bound.margin)]
    timing = {"count_seconds": count.elapsed}
    return result, (header, rows), EXIT_OK, timing


COMMANDS = {
    "orbits": cmd_orbits,
    "verify": cmd_verify,
    "lvalue": cmd_lvalue,
    "moment": cmd_moment,
    "mollify": cmd_mollify,
    "congruence": cmd_congruence,
}


def _emit(cfg: RunConfig, text: str) -> None:
    target = cfg.output
    outdir = os.environ.get("ORBITLF_OUTDIR")
    if target is None and outdir:
        target = str(Path(outdir) / f"{cfg.command}.{cfg.out}")
    if target is None:
        sys.stdout.write(text)
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.workers is None:
            ns.workers = _env_int("ORBITLF_THREADS", 1)
        if ns.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg = RunConfig.from_namespace(ns)
        start = time.perf_counter()
        out = COMMANDS[cfg.command](cfg)
        result, (header, rows), code = out[:3]
        timing = dict(out[3]) if len(out) > 3 else {}
        timing["total_seconds"] = time.perf_counter() - start
    except VerificationFailure as exc:
        print(f"orbitlf: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (OrbitLFError, ValueError) as exc:
        print(f"orbitlf: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.out == "json":
        text = dumps_json(build_report(cfg.command, cfg.as_dict(), result, timing))
    else:
        text = dumps_csv(header, rows)
    _emit(cfg, text)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
