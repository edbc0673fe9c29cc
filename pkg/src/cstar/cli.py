"""Command-line front end.

Every report starts with a ``config`` line echoing the seed and budgets, so a
run can be reproduced byte for byte.  Exit codes: 0 success, 2 parse or input
error, 3 inconclusive, 4 resource limit.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import abelian, fdstruct, groupalg, presentation
from ._random import DEFAULT_SEED
from .errors import InconclusiveError, MissingBound, ParseError, ResourceError, WorkbenchError
from .matrep import format_matrix, parse_matrices
from .scalars import Dyadic, format_scalar, parse_dyadic

EXIT_OK, EXIT_PARSE, EXIT_INCONCLUSIVE, EXIT_RESOURCE = 0, 2, 3, 4


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    dims: tuple = presentation.Budget.dims
    restarts: int = presentation.Budget.restarts
    iters: int = presentation.Budget.iters
    relation_budget: int = presentation.Budget.relation_budget
    rewrite_steps: int = presentation.Budget.rewrite_steps
    ball_cap: int = groupalg.DEFAULT_BALL_CAP
    tol: Dyadic = Dyadic(1, -30)
    threads: int = 1

    def __post_init__(self):
        for name in ("restarts", "iters", "relation_budget", "rewrite_steps", "ball_cap", "threads"):
            if getattr(self, name) <= 0:
                raise ParseError(f"{name} must be positive")
        if not self.dims or min(self.dims) <= 0:
            raise ParseError("dims must be positive")
        if self.tol <= 0:
            raise ParseError("tol must be positive")

    def budget(self) -> presentation.Budget:
        return presentation.Budget(
            tuple(self.dims), self.restarts, self.iters, self.rewrite_steps, self.relation_budget, self.seed, self.threads
        )

    def echo(self) -> str:
        dims = ",".join(str(d) for d in self.dims)
        return (
            f"config seed={self.seed} dims={dims} restarts={self.restarts} iters={self.iters} "
            f"budget={self.relation_budget} rewrite_steps={self.rewrite_steps} ball_cap={self.ball_cap} "
            f"tol={format_scalar(self.tol)} threads={self.threads}"
        )


def parse_tol(text: str) -> Dyadic:
    m = re.fullmatch(r"\s*2\^-(\d+)\s*", text)
    if m:
        return Dyadic(1, -int(m.group(1)))
    return parse_dyadic(text)


def _read(path_or_text: str) -> str:
    if os.path.exists(path_or_text):
        with open(path_or_text, encoding="utf-8") as fh:
            return fh.read()
    raise ParseError(f"no such file {path_or_text!r}")


def load_presentation(arg: str) -> presentation.Presentation:
    if re.fullmatch(r"\s*(contraction|cuntz)\(.*\)\s*", arg):
        return presentation.builtin_presentation(arg)
    return presentation.parse_presentation(_read(arg))


def load_group(arg: str) -> groupalg.GroupOracle:
    if re.fullmatch(r"\s*\w+\(\s*\d+\s*\)\s*", arg):
        return groupalg.builtin_group(arg)
    return groupalg.parse_group(_read(arg))


def load_metric(arg: str) -> abelian.ProperMetricPresentation:
    if arg in ("interval", "unit_interval", "[0,1]"):
        return abelian.UnitInterval()
    return abelian.parse_finite_metric(_read(arg))


def _frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator} ({float(x):.12g})" if x.denominator != 1 else str(x.numerator)


# -- commands -----------------------------------------------------------------------


def cmd_norm(args, cfg: RunConfig) -> List[str]:
    P = load_presentation(args.presentation)
    p = P.parse(args.expression)
    b = presentation.norm_bracket(P, p, cfg.budget())
    out = [f"presentation {P.title or args.presentation}", f"element {P.format(p)}"]
    out += [f"lo {_frac(b.lo)}", f"hi {_frac(b.hi)}", f"witness_dim {b.witness_dim}"]
    if b.witness is not None:
        for i in sorted(b.witness.mats):
            out.append(f"witness {P.names[i]}")
            out.append(format_matrix(b.witness.mats[i]))
    out += [f"derivation {line}" for line in b.derivation]
    if b.diagnostic:
        out.append(f"diagnostic {b.diagnostic}")
    return out


def cmd_wp(args, cfg: RunConfig) -> Tuple[List[str], int]:
    P = load_presentation(args.presentation)
    center = P.parse(args.center)
    r = parse_dyadic(args.radius)
    if r <= 0:
        raise ParseError("radius must be positive")
    b = presentation.norm_bracket(P, center, cfg.budget())
    verdict = presentation.ball_verdict(b, r.to_fraction(), args.mode)
    question = "open ball meets kernel" if args.mode == "open" else "closed ball misses kernel"
    lines = [
        f"presentation {P.title or args.presentation}",
        f"center {P.format(center)}",
        f"radius {format_scalar(r)}",
        f"question {question}",
        f"verdict {verdict}",
        f"certificate lo={_frac(b.lo)} hi={_frac(b.hi)} witness_dim={b.witness_dim}",
    ]
    # the report is still printed when the bracket cannot decide
    return lines, EXIT_INCONCLUSIVE if verdict == "unknown" else EXIT_OK


def cmd_group(args, cfg: RunConfig) -> List[str]:
    G = load_group(args.group)
    x = groupalg.parse_element(args.expression, G)
    red = groupalg.reduced_norm_lower(G, x, args.radius, cfg.ball_cap, seed=cfg.seed)
    up = groupalg.universal_norm_upper(x)
    one = groupalg.universal_norm_lower_1d(x, G)
    red_up = groupalg.reduced_norm_upper_free(x)
    out = [
        f"group {G.describe()}",
        f"element {x}",
        f"radius {args.radius}",
        f"ball_size {red.ball_size}",
        f"reduced_lower {_frac(red.lo)}",
    ]
    if red_up is not None:
        out.append(f"reduced_upper {_frac(red_up)}")
    out += [f"universal_upper {_frac(up)}", f"universal_lower_1d {_frac(one)}"]
    if red_up is not None and one > red_up:
        out.append(f"separation universal - reduced >= {_frac(one - red_up)}")
    return out


def _load_algebra(args, cfg: RunConfig):
    mats = parse_matrices(_read(args.matrices))
    if not mats:
        raise ParseError("no matrices in file")
    return mats, fdstruct.span_closure(mats, float(cfg.tol), args.field)


def cmd_fd(args, cfg: RunConfig) -> List[str]:
    mats, A = _load_algebra(args, cfg)
    tol = float(cfg.tol)
    out = [f"algebra M{A.n}({A.ring}) over {A.field}, {len(mats)} generators, dimension {A.dim}"]
    if args.action == "spectrum":
        x = mats[args.element]
        ind = fdstruct.finite_spectrum(A, x, tol, "induction")
        eig = fdstruct.finite_spectrum(A, x, tol, "eig")
        for iv in ind:
            out.append(f"eigenvalue {(iv.lo + iv.hi) / 2:.12g} radius {(iv.hi - iv.lo) / 2:.3e}")
        agree = len(ind) == len(eig) and all(
            abs((a.lo + a.hi) / 2 - (b.lo + b.hi) / 2) <= 10 * tol for a, b in zip(ind, eig)
        )
        out.append(f"oracle {'agrees' if agree else 'DISAGREES'}")
        return out
    if args.action == "minproj":
        ps = fdstruct.minimal_projections(A, tol, cfg.seed)
        out.append(f"minimal_projections {len(ps)}")
        for p in ps:
            out.append(f"projection corner_dim={fdstruct.corner_dimension(A, p)}")
            out.append(format_matrix(p))
        return out
    dec = fdstruct.decompose(A, tol, cfg.seed)
    iso = fdstruct.construct_isomorphism(A, dec, tol, cfg.seed) if args.action == "iso" else None
    out.append(fdstruct.format_decomposition(dec, iso, matrices=args.machine))
    if args.action == "decompose" and not args.machine:
        for i, s in enumerate(dec.summands):
            out.append(f"central {i + 1}")
            out.append(format_matrix(s.central_projection))
    if iso is not None:
        worst = max(iso.residuals.values())
        out.append(f"certified {'yes' if worst <= 10 * tol else 'no'} (max residual {worst:.3e}, limit {10 * tol:.3e})")
    return out


def cmd_c0norm(args, cfg: RunConfig) -> List[str]:
    X = load_metric(args.metric)
    q = abelian.parse_f_poly(args.expression, X)
    r = abelian.c0_norm(X, q, args.k)
    return [f"element {args.expression}", f"precision 2^-{args.k}", f"norm {_frac(r)}"]


# -- entry point --------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    d = RunConfig()
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--dims", default=",".join(str(x) for x in d.dims), help="comma-separated representation sizes")
    p.add_argument("--restarts", type=int, default=d.restarts)
    p.add_argument("--iters", type=int, default=d.iters)
    p.add_argument("--budget", type=int, default=d.relation_budget, help="number of relations enumerated")
    p.add_argument("--rewrite-steps", type=int, default=d.rewrite_steps)
    p.add_argument("--ball-cap", type=int, default=d.ball_cap)
    p.add_argument("--tol", default="2^-30")
    p.add_argument("--threads", type=int, default=d.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cstar", description="C*-algebra presentation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="certified bracket for a universal norm")
    p.add_argument("presentation", help="file, or contraction(n) / cuntz(n)")
    p.add_argument("expression")
    _common(p)

    p = sub.add_parser("wp", help="word problem ball query")
    p.add_argument("presentation")
    p.add_argument("center")
    p.add_argument("radius")
    p.add_argument("--mode", choices=("open", "closed"), default="open")
    _common(p)

    p = sub.add_parser("group", help="group algebra norm bounds")
    p.add_argument("group", help="file, or free(k) / free_abelian(d) / cyclic(n)")
    p.add_argument("expression")
    p.add_argument("--radius", type=int, default=8)
    _common(p)

    p = sub.add_parser("fd", help="finite-dimensional structure")
    p.add_argument("matrices")
    p.add_argument("action", choices=("decompose", "iso", "spectrum", "minproj"))
    p.add_argument("--field", choices=("R", "C"), default=None)
    p.add_argument("--element", type=int, default=0, help="matrix index for spectrum")
    p.add_argument("--machine", action="store_true", help="one line per central projection and matrix unit")
    _common(p)

    p = sub.add_parser("c0norm", help="sup norm in C_0(X)")
    p.add_argument("metric", help="finite metric file, or 'interval'")
    p.add_argument("expression")
    p.add_argument("--k", type=int, default=10)
    _common(p)
    return parser


COMMANDS = {"norm": cmd_norm, "wp": cmd_wp, "group": cmd_group, "fd": cmd_fd, "c0norm": cmd_c0norm}


def config_from_args(args) -> RunConfig:
    try:
        dims = tuple(int(t) for t in args.dims.split(",") if t.strip())
    except ValueError:
        raise ParseError(f"bad --dims {args.dims!r}") from None
    return RunConfig(
        args.seed, dims, args.restarts, args.iters, args.budget, args.rewrite_steps, args.ball_cap,
        parse_tol(args.tol), args.threads,
    )


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = COMMANDS[args.command](args, cfg)
        lines, code = result if isinstance(result, tuple) else (result, EXIT_OK)
        lines = [cfg.echo()] + lines
    except (ParseError, MissingBound) as exc:
        code = EXIT_INCONCLUSIVE if isinstance(exc, MissingBound) else EXIT_PARSE
        print(f"error: {exc}", file=sys.stderr)
        return code
    except InconclusiveError as exc:
        print(f"inconclusive: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except ResourceError as exc:
        print(f"resource: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (WorkbenchError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    stdout.write("\n".join(lines) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
