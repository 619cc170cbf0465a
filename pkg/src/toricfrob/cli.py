"""Command-line entry point: run the pipeline and write a structured-text report.

Exit status: 0 when every verification section passes, 1 when one fails,
2 on input or arithmetic errors (including a non-generic framing).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

from .exactalg import DenominatorVanishes
from .frobenius import (
    IdentityReport,
    StructureFailure,
    build_pairing,
    closed_pairing,
    compatibility_residual,
    epsilon_grading_report,
    flat_unit_residual,
    frob_potential,
    idempotent_lift,
    nilpotency_report,
    quotient_report,
    structure_constants_fmanifold,
    structure_constants_frobenius,
    unit_search,
    vector_potential,
    verify_associativity,
    verify_completed_quadratic,
    verify_identity_collection,
    verify_symmetry,
    verify_wdvv,
)
from .localize import target3, target4
from .potentials import (
    Caps,
    PoleStructureViolation,
    build_F0_3fold,
    build_F0_4fold,
    extract_closed,
    extract_disk,
    extract_double_pole,
    extract_pieces,
    joint_pole_structure_ok,
    pole_structure_ok,
)
from .toric import FanError, FanParseError, load_fan

COMMANDS = ("invariants", "potentials", "extract", "verify-wdvv", "verify-open-wdvv", "frobenius", "fmanifold", "all")
NEEDS_PAIRING = ("verify-open-wdvv", "frobenius", "fmanifold", "all")
VERIFYING = ("extract", "verify-wdvv", "verify-open-wdvv", "frobenius", "fmanifold", "all")
COMPAT_SAMPLES = 8


@dataclass(frozen=True)
class RunConfig:
    geometry: str = "c3"
    framing: int = 1
    max_class: tuple[int, int] = (2, 2)
    max_tdeg: int = 1
    idem_order: int = 3
    out: str | None = None
    command: str = "all"

    @property
    def caps(self) -> Caps:
        return Caps(self.max_class[0], self.max_class[1], self.max_tdeg)


@dataclass
class Report:
    lines: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    def section(self, title: str):
        self.lines += ["", f"== {title}"]

    def verify(self, rep: IdentityReport | None = None, name: str | None = None, ok: bool | None = None, detail=()):
        """Record a verification; its status decides the exit code."""
        if rep is not None:
            self.lines += ["[verify] " + rep.lines()[0]] + rep.lines()[1:]
            self.verdicts.append((rep.name, rep.ok))
        else:
            self.lines.append(f"[verify] {name}: {'pass' if ok else 'FAIL'}")
            self.lines += [f"  {d}" for d in detail]
            self.verdicts.append((name, ok))

    def analysis(self, rep: IdentityReport | None = None, text=()):
        """Record a diagnostic that does not affect the exit code."""
        if rep is not None:
            self.lines += ["[analysis] " + rep.lines()[0]] + rep.lines()[1:]
        self.lines += [f"[analysis] {t}" for t in text]

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.verdicts)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def geometry_hash(X) -> str:
    data = {"rays": [list(r) for r in X.fan.rays], "cones3": [list(c) for c in X.fan.cones],
            "tau0": list(X.brane.tau0), "framing": X.brane.framing}
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


def load_geometry(config: RunConfig):
    X, X4 = load_fan(config.geometry, config.framing)
    return X, X.brane, X4


def _check_caps(config: RunConfig, rank3: int):
    a, b = config.max_class
    if a < 0 or b < 0 or config.max_tdeg < 0:
        raise ValueError("caps must be nonnegative")
    if config.command in VERIFYING and (b < 1 or (rank3 > 0 and a < 1)):
        raise ValueError("verification commands need class caps >= (1, 1) (the curve cap may be 0 without compact curves)")


def _timer(label: str, t0: list):
    now = time.perf_counter()
    print(f"{label}: {now - t0[0]:.2f}s", file=sys.stderr)
    t0[0] = now


def run_pipeline(config: RunConfig) -> tuple[Report, int]:
    rep = Report()
    X, brane, X4 = load_geometry(config)
    T3, T4 = target3(X), target4(X4)
    _check_caps(config, T3.rank)
    caps, f, cmd = config.caps, config.framing, config.command
    rep.lines += [
        "# toricfrob report",
        f"geometry: {config.geometry}",
        f"geometry hash: {geometry_hash(X)}",
        f"rays: {list(map(list, X.fan.rays))}",
        f"cones3: {list(map(list, X.fan.cones))}",
        f"brane tau0: {list(brane.tau0)}  framing: {f}",
        f"fixed points: X {T3.m}, X~ {T4.m}; curve-class rank {T3.rank}",
        f"command: {cmd}",
        f"caps: class ({caps.beta},{caps.d}), t-degree {caps.tdeg}, idempotent order {config.idem_order}",
    ]
    clock = [time.perf_counter()]
    h = build_pairing(T3, f) if cmd in NEEDS_PAIRING else None
    run_all = cmd == "all"

    F3 = build_F0_3fold(T3, caps)
    F4 = build_F0_4fold(T4, caps)
    _timer("potentials", clock)
    if cmd in ("invariants", "potentials"):
        rep.section("3-fold potential F0 of X")
        rep.lines += F3.to_rows()
        rep.section("4-fold potential F0 of X~")
        rep.lines += F4.to_rows()
        return rep, 0

    need_pieces = cmd in ("extract", "verify-open-wdvv", "frobenius", "fmanifold", "all")
    if need_pieces:
        pieces = extract_pieces(F4, f)
        J = extract_disk(pieces)
        _timer("extraction", clock)
    if cmd in ("extract", "all"):
        rep.section("extraction")
        closed = extract_closed(pieces)
        diff = closed - F3
        oracle = IdentityReport("closed part of the 4-fold potential equals the 3-fold potential")
        oracle.add((), diff)
        rep.verify(oracle)
        seq = [key for key, R in F4.items() if not key[2] and not pole_structure_ok(R, f)]
        rep.verify(name="sequential pole structure (u4 = 0, then v = 0)", ok=not seq,
                   detail=[f"bad coefficient {k}" for k in seq[:3]])
        joint = [key for key, R in F4.items() if not key[2] and not joint_pole_structure_ok(R, f)]
        total = sum(1 for key in F4.keys() if not key[2])
        rep.verify(name=f"joint pole structure of u4*v*(F - cubic) ({len(joint)} of {total} coefficients irregular)",
                   ok=not joint, detail=[f"irregular coefficient {k}" for k in joint[:3]])
        rep.analysis(text=[f"extraction flagged {len(pieces.nongeneric)} degree-0 coefficients"])
        rep.lines.append("disk antiderivative (open regime):")
        rep.lines += J.to_rows()

    if cmd in ("verify-wdvv", "all"):
        rep.section("WDVV")
        rep.verify(verify_wdvv(F3, closed_pairing(T3), list(range(1, T3.m + 1)), caps, "WDVV for X"))
        rep.verify(verify_wdvv(F4, closed_pairing(T4), list(range(1, T4.m + 1)), caps, "WDVV for X~"))
        _timer("wdvv", clock)

    if cmd in ("verify-open-wdvv", "all"):
        rep.section("open identity collection")
        for r in verify_identity_collection(F3, J, T3, f, caps):
            rep.verify(r)
        E = extract_double_pole(F4, f)
        rep.analysis(text=[f"u4*v^-2 coefficients E: {len(E)} nonzero"])
        for r in verify_completed_quadratic(F3, J, E, T3, f, caps):
            rep.analysis(r)
        _timer("open identities", clock)

    if cmd in ("frobenius", "all"):
        rep.section("H1 Frobenius structure")
        P = frob_potential(F3, J, f, caps)
        c = structure_constants_frobenius(P, h, caps)
        rep.verify(verify_wdvv(P.F, h, c.indices, caps, "dual-number WDVV"))
        rep.verify(verify_associativity(c, "H1 associativity"))
        rep.verify(verify_symmetry(c))
        rep.verify(epsilon_grading_report(c))
        rng = random.Random(0)
        compat = IdentityReport(f"pairing compatibility on {COMPAT_SAMPLES} sampled triples")
        for _ in range(COMPAT_SAMPLES):
            ijk = tuple(rng.choice(c.indices) for _ in range(3))
            compat.add(ijk, compatibility_residual(c, h, *ijk))
        rep.verify(compat)
        o = c.m + 1
        oo = c.c(o, o, o).filter(lambda key: not any(key[0]) and not any(key[1]))
        rep.analysis(text=[
            f"classical d_o * d_o = ({_classical_str(oo)}) d_o, so the o-th idempotent seed is "
            "-u1^{-1} d_o rather than d_o itself"
        ])
        try:
            basis = idempotent_lift(c, config.idem_order)
            for r in basis.report:
                rep.verify(r)
        except StructureFailure as exc:
            rep.verify(name=f"idempotent lift mod I^{config.idem_order}", ok=False, detail=[str(exc)])
        rep.analysis(flat_unit_residual(c))
        us = unit_search(c, _max_order(T4.rank, caps))
        rep.analysis(text=["H1 unit search:"] + [ln.strip() for ln in us.lines()])
        _timer("frobenius", clock)

    if cmd in ("fmanifold", "all"):
        rep.section("H2 F-manifold structure")
        V = vector_potential(F3, J, h, f)
        cf = structure_constants_fmanifold(V, caps, T4.rank)
        rep.verify(verify_associativity(cf, "H2 associativity"))
        rep.verify(nilpotency_report(cf))
        us = unit_search(cf, _max_order(T4.rank, caps))
        rep.verify(name="no unit at any truncation order", ok=us.infeasible_everywhere,
                   detail=[ln.strip() for ln in us.lines()])
        rep.analysis(quotient_report(cf, F3, J, h, f))
        _timer("fmanifold", clock)

    rep.section("summary")
    for name, ok in rep.verdicts:
        rep.lines.append(f"{'pass' if ok else 'FAIL'}  {name}")
    rep.lines.append(f"overall: {'pass' if rep.ok else 'FAIL'}")
    return rep, 0 if rep.ok else 1


def _classical_str(s) -> str:
    vals = [val for _, val in s.items()]
    if not vals:
        return "0"
    val = vals[0]
    return str(val.re) if val.eps.is_zero() else f"{val.re} | eps {val.eps}"


def _max_order(rank4: int, caps: Caps) -> int:
    """Largest Novikov degree inside the class caps."""
    return (rank4 - 1) * caps.beta + caps.d


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A,B got {text!r}") from None
    return a, b


def parse_args(argv=None) -> RunConfig:
    p = argparse.ArgumentParser(prog="toricfrob", description=__doc__.splitlines()[0])
    p.add_argument("--geometry", default="c3", help="preset name (c3, conifold) or fan JSON path")
    p.add_argument("--framing", type=int, default=1)
    p.add_argument("--max-class", type=_pair, default=(2, 2), metavar="A,B",
                   help="cap on curve-class coordinates and on the winding degree")
    p.add_argument("--max-tdeg", type=int, default=1)
    p.add_argument("--idem-order", type=int, default=3)
    p.add_argument("--out", default=None, help="report path (stdout if omitted)")
    p.add_argument("--command", choices=COMMANDS, default="all")
    a = p.parse_args(argv)
    return RunConfig(a.geometry, a.framing, a.max_class, a.max_tdeg, a.idem_order, a.out, a.command)


def main(argv=None) -> int:
    config = parse_args(argv)
    try:
        rep, status = run_pipeline(config)
    except DenominatorVanishes as exc:
        print(f"error: {exc} (framing must be generic with respect to X)", file=sys.stderr)
        return 2
    except (FanParseError, FanError, PoleStructureViolation, StructureFailure, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = rep.text()
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
