"""Command-line surface: build groups, run verification suites, patch
component tuples, and emit deterministic machine-readable reports.

Exit codes: 0 all checks pass, 1 precision or domain failure, 2 a
mathematical check failed, 3 bad input (files, flags, formats).
"""

import argparse
import hashlib
import json
import random
import sys

from . import __version__
from .errors import (
    Case2ChainFailure,
    HypothesisFails,
    IwasawaError,
    NotIntegral,
    NotInPsi,
    OracleGap,
    OutOfDomain,
    PrecisionExhausted,
    ProviderGap,
    Unsupported,
)
from .precision_core import PrecisionBudget, TruncatedSeries
from .pgroup import FinitePGroup, build_unitriangular
from .class_algebra import (
    ConjVector,
    GroupRingElement,
    char_p_power_identity,
    pair_ring,
)
from .families import additive_family, artin_family_c, brauer_family
from .theta_additive import (
    phi_A_membership,
    phi_B_membership,
    theta_A_inverse,
    theta_A_plus,
    theta_B_plus,
    reconstruct_from_brauer,
)
from .logarithm_lab import (
    gamma_budget_series_intlog,
    integral_log,
    intlog_invert_abelian,
    omega_at_level,
)
from .k1_norms import (
    LocalizedUnit,
    compat_log_norm,
    congruence_check_I,
    congruence_check_J,
    psi_membership,
    psi_membership_localized,
    theta_tuple,
    theta_tuple_localized,
)
from .patching import (
    burns_patch,
    oracle_from_text,
    orbital_sum_check,
    random_unit,
    rw_verify,
    strong_congruence_check,
    tuple_from_text,
    tuple_to_text,
)

GROUP_FORMAT = "group-v1"

EXIT_OK = 0
EXIT_PRECISION = 1
EXIT_MATH = 2
EXIT_INPUT = 3


# ---------------------------------------------------------------------------
# input handling
# ---------------------------------------------------------------------------


def parse_group_text(text: str) -> FinitePGroup:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise OutOfDomain("empty group file")
    if lines[0] != GROUP_FORMAT:
        raise Unsupported(f"unknown group format {lines[0]!r}")
    p = None
    name = ""
    table = []
    in_table = False
    for ln in lines[1:]:
        if in_table:
            table.append([int(x) for x in ln.split()])
            continue
        parts = ln.split(None, 1)
        if parts[0] == "p":
            p = int(parts[1])
        elif parts[0] == "name":
            name = parts[1]
        elif parts[0] == "table":
            in_table = True
        else:
            raise OutOfDomain(f"unknown group file line {ln!r}")
    if p is None or not table:
        raise OutOfDomain("group file needs a prime and a table")
    return FinitePGroup(p, table, name=name)


def load_group(args) -> FinitePGroup:
    if args.group:
        with open(args.group) as fh:
            return parse_group_text(fh.read())
    return build_unitriangular(args.unitriangular, args.p)


def budget_from(args) -> PrecisionBudget:
    return PrecisionBudget(args.p, args.padic_prec, args.t_prec, args.den_budget)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


class ReportBuilder:
    """Deterministic structured report: identical (config, seed) inputs give
    byte-identical output, so per-check timings are intentionally absent."""

    def __init__(self, command, args):
        self.doc = {
            "tool": "iwasawalab",
            "version": __version__,
            "command": command,
            "config": {
                "p": args.p,
                "padic_prec": args.padic_prec,
                "t_prec": args.t_prec,
                "den_budget": args.den_budget,
                "seed": args.seed,
                "trials": args.trials,
                "level": args.level,
                "group": args.group or f"unitriangular:{args.unitriangular}",
            },
            "checks": [],
            "verdict": "pass",
        }

    def add(self, name, ok, anchor="", detail="", decided=True, payload=None):
        digest = ""
        if payload is not None:
            digest = hashlib.sha256(
                json.dumps(payload, sort_keys=True).encode()
            ).hexdigest()[:16]
        self.doc["checks"].append({
            "name": name,
            "anchor": anchor,
            "verdict": "pass" if ok else ("undecided" if not decided else "fail"),
            "detail": detail,
            "digest": digest,
        })
        if decided and not ok:
            self.doc["verdict"] = "fail"

    def add_records(self, prefix, records, anchor=""):
        for r in records:
            self.add(f"{prefix}:{r.name}", r.ok, anchor=anchor,
                     detail=r.detail, decided=getattr(r, "decided", True))

    def warn(self, msg):
        self.doc.setdefault("warnings", []).append(msg)

    def finish(self, args):
        text = json.dumps(self.doc, sort_keys=True, indent=2) + "\n"
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK if self.doc["verdict"] == "pass" else EXIT_MATH


def _random_conjvector(group, budget, rng):
    classes = group.conjugacy_classes()
    y = ConjVector.zero(group, budget)
    mod = budget.p ** budget.M
    for cl in classes:
        y = y + ConjVector.from_class(
            group, budget, cl[0],
            TruncatedSeries.from_coeffs(
                budget, [rng.randrange(mod) for _ in range(budget.n)]),
        )
    return y


def _abelian_wall(group):
    """A designated abelian index-p subgroup, smallest-first for determinism."""
    from .families import rw_family

    for U in group.all_subgroups():
        if len(U) * group.p != group.order:
            continue
        try:
            rw_family(group, U)
            return U
        except IwasawaError:
            continue
    return None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_group_info(args):
    g = load_group(args)
    rep = ReportBuilder("group-info", args)
    info = {
        "name": g.name,
        "order": g.order,
        "abelian": g.is_abelian,
        "classes": len(g.conjugacy_classes()),
        "centre": len(g.centre()),
        "commutator": len(g.commutator_subgroup()),
        "subgroups": len(g.all_subgroups()),
    }
    if not g.is_abelian:
        fc = artin_family_c(g)
        info["designated_members"] = [
            {"h": m.h, "order": len(m.subgroup), "n_h": m.n_h}
            for m in fc.base.members
        ]
        info["rank2_members"] = [
            {"h": m.h, "order": len(m.subgroup), "n_h": m.n_h, "case": m.case}
            for m in fc.extra
        ]
    rep.doc["group"] = info
    rep.add("group-info", True, payload=info)
    return rep.finish(args)


def _suite_additive(g, b, rng, trials, rep):
    fc = additive_family(g)
    fb = brauer_family(g)
    for t in range(trials):
        y = _random_conjvector(g, b, rng)
        tpl = theta_A_plus(y, fc)
        phi_A_membership(tpl)
        ok = theta_A_inverse(tpl).equal_at_precision(y)
        rep.add(f"additive:cyclic-roundtrip-{t}", ok, anchor="theta-additive")
        tb = theta_B_plus(y, fb)
        phi_B_membership(tb)
        if not g.is_abelian:
            ok = reconstruct_from_brauer(tb, fc).equal_at_precision(y)
            rep.add(f"additive:family-roundtrip-{t}", ok, anchor="theta-additive")


def _suite_log(g, b, rng, trials, rep):
    for x in range(g.order):
        e = GroupRingElement.from_element(g, b, x)
        v = integral_log(e).value
        rep.add(f"log:torsion-{x}", v.is_zero, anchor="integral-log")
    for t in range(trials):
        x = random_unit(g, b, rng)
        y = integral_log(x).value
        ok = True
        for j in (1, 2, 3):
            _, ab_elem, gexp = omega_at_level(y, j)
            ok &= ab_elem == 0 and gexp % (b.p ** j) == 0
        rep.add(f"log:omega-{t}", ok, anchor="integral-log")
    mod = b.p ** b.M
    for t in range(trials):
        s = TruncatedSeries.from_coeffs(
            b, [1 + b.p * rng.randrange(mod)] +
               [rng.randrange(mod) for _ in range(b.n - 1)])
        target = gamma_budget_series_intlog(s)
        back = gamma_budget_series_intlog(intlog_invert_abelian(target))
        rep.add(f"log:abelian-inverter-{t}", back.equal_at_precision(target),
                anchor="integral-log")


def _suite_congruence(g, b, rng, trials, rep):
    if g.is_abelian:
        rep.warn("congruence suite needs a nonabelian group; skipped")
        return
    fc = artin_family_c(g)
    fb = brauer_family(g)
    for t in range(trials):
        x = random_unit(g, b, rng)
        for i, pr in enumerate(fb.pairs):
            if g.order // len(pr.U) == 1:
                continue
            ring = pair_ring(g, pr.U, pr.V)
            ok, _ = congruence_check_J(x, ring)
            rep.add(f"congruence:J-{t}-{pr.pair_id}", ok, anchor="norm-congruence")
        for m in fc.base.members:
            if len(m.subgroup) == g.order:
                continue
            ok, certs = congruence_check_I(x, fc, m.h)
            rep.add(f"congruence:I-{t}-h{m.h}", ok, anchor="norm-congruence")
        for m in fc.extra:
            ok, certs = congruence_check_I(x, fc, ("c", m.h))
            rep.add(f"congruence:I-{t}-h{m.h}c", ok, anchor="norm-congruence")
    for t in range(trials):
        x = random_unit(g, b, rng)
        rep.add(f"congruence:char-p-{t}", char_p_power_identity(x),
                anchor="char-p-identity")


def _suite_localized(g, b, rng, trials, rep):
    if g.is_abelian:
        rep.warn("localized suite needs a nonabelian group; skipped")
        return
    fb = brauer_family(g)
    fc = artin_family_c(g)
    for t in range(trials):
        x = random_unit(g, b, rng)
        ti = theta_tuple(x, fb)
        tl = theta_tuple_localized(LocalizedUnit.from_integral(x), fb)
        vi = psi_membership(ti, fc).verdict
        vl = psi_membership_localized(tl, fc).verdict
        rep.add(f"localized:verdict-agree-{t}", vi == vl,
                anchor="localized-lattice",
                detail=f"integral={vi} localized={vl}")
    den = TruncatedSeries.from_coeffs(b, [b.p, 1])
    for t in range(max(trials // 2, 1)):
        x = LocalizedUnit(random_unit(g, b, rng), den)
        tl = theta_tuple_localized(x, fb)
        r = psi_membership_localized(tl, fc)
        ok = r.verdict != "out"
        rep.add(f"localized:no-false-negative-{t}", ok,
                anchor="localized-lattice", detail=f"verdict={r.verdict}")


def _suite_rw(g, b, rng, trials, rep, seed):
    W = _abelian_wall(g)
    if W is None:
        rep.warn("no admissible abelian wall subgroup; rw suite skipped")
        return
    r = rw_verify(g, W, b, seed=seed, trials=max(trials // 10, 2))
    rep.add_records("rw", r.records, anchor="rank-one-wall")


def cmd_verify(args):
    g = load_group(args)
    b = budget_from(args)
    rep = ReportBuilder("verify", args)
    rep.doc["suite"] = args.suite
    if args.trials == 0:
        rep.warn("trials = 0: nothing exercised, vacuous pass")
        return rep.finish(args)
    rng = random.Random(args.seed)
    suites = {
        "additive": lambda: _suite_additive(g, b, rng, args.trials, rep),
        "log": lambda: _suite_log(g, b, rng, args.trials, rep),
        "congruence": lambda: _suite_congruence(g, b, rng, args.trials, rep),
        "localized": lambda: _suite_localized(g, b, rng, args.trials, rep),
        "rw": lambda: _suite_rw(g, b, rng, args.trials, rep, args.seed),
    }
    if args.suite == "all":
        for name in ("additive", "log", "congruence", "localized", "rw"):
            suites[name]()
    else:
        suites[args.suite]()
    return rep.finish(args)


def cmd_patch(args):
    g = load_group(args)
    b = budget_from(args)
    fb = brauer_family(g)
    fc = None if g.is_abelian else artin_family_c(g)
    with open(args.f_tuple) as fh:
        f_t = tuple_from_text(fh.read(), fb, b)
    with open(args.xi_tuple) as fh:
        xi_t = tuple_from_text(fh.read(), fb, b)
    rep = ReportBuilder("patch", args)
    cert = burns_patch(f_t, xi_t, fc)
    rep.add("patch:psi-membership", cert.psi_report.verdict != "out",
            anchor="patching", detail=f"verdict={cert.psi_report.verdict}")
    rep.add_records("patch", cert.records, anchor="patching")
    w_tuple_doc = {str(i): [str(c) for c in w.coeffs[0].nums]
                   for i, w in cert.w_components.items()}
    rep.add("patch:w-tuple", True, payload=w_tuple_doc)
    sc = strong_congruence_check(
        type(f_t)(fb, dict(cert.w_components), localized=False), fc)
    rep.add_records("strong", sc.records, anchor="strong-congruence")
    if args.out:
        final = type(f_t)(fb, dict(cert.final_components), localized=True)
        with open(args.out, "w") as fh:
            fh.write(tuple_to_text(final))
    return rep.finish(args)


def cmd_orbital(args):
    g = load_group(args)
    b = budget_from(args)
    rep = ReportBuilder("orbital", args)
    oracle = None
    if args.oracle:
        with open(args.oracle) as fh:
            oracle = oracle_from_text(fh.read())
    if g.is_abelian:
        rep.warn("orbital machinery needs a nonabelian group; vacuous pass")
        return rep.finish(args)
    fc = artin_family_c(g)
    for m in list(fc.base.members) + list(fc.extra):
        orc = None
        if oracle is not None and oracle.wf_order == len(m.subgroup):
            orc = oracle
        r = orbital_sum_check(g, m.subgroup, args.level, b, fc=fc, oracle=orc)
        rep.add_records(f"orbital:h{m.h}", r.records, anchor="orbital-sum")
    return rep.finish(args)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", help="path to a group-v1 file")
    common.add_argument("--unitriangular", type=int, default=2,
                        help="N for the unitriangular (N+1)x(N+1) builder")
    common.add_argument("--p", type=int, default=3)
    common.add_argument("--padic-prec", type=int, default=6, dest="padic_prec")
    common.add_argument("--t-prec", type=int, default=8, dest="t_prec")
    common.add_argument("--den-budget", type=int, default=4, dest="den_budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--level", type=int, default=2)
    common.add_argument("--report", help="write the report here instead of stdout")
    ap = argparse.ArgumentParser(
        prog="iwasawalab",
        description="Exact verification suites for truncated Iwasawa-type group rings.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("group-info", parents=[common])
    pv = sub.add_parser("verify", parents=[common])
    pv.add_argument("suite", choices=["additive", "log", "congruence",
                                      "localized", "rw", "all"])
    pp = sub.add_parser("patch", parents=[common])
    pp.add_argument("f_tuple", help="characteristic tuple file")
    pp.add_argument("xi_tuple", help="target tuple file")
    pp.add_argument("--out", help="write the patched tuple here")
    po = sub.add_parser("orbital", parents=[common])
    po.add_argument("--oracle", help="zeta-oracle-v1 file")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    handlers = {
        "group-info": cmd_group_info,
        "verify": cmd_verify,
        "patch": cmd_patch,
        "orbital": cmd_orbital,
    }
    try:
        return handlers[args.command](args)
    except (FileNotFoundError, IsADirectoryError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (Unsupported, Case2ChainFailure) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (NotIntegral, NotInPsi, HypothesisFails) as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_MATH
    except (OracleGap, ProviderGap) as e:
        print(f"missing data: {e}", file=sys.stderr)
        return EXIT_INPUT
    except IwasawaError as e:
        print(f"precision/domain failure: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except ValueError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
