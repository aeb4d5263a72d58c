"""Command-line interface.

Every command prints one JSON document ``{"command", "config", "result"}``
to stdout (or ``--out``). Inputs are JSON files, ``-`` meaning stdin; a
document produced by another command is unwrapped automatically, so
commands compose through pipes.

Exit codes: 0 success, 1 usage error or malformed input, 2 validation or
operation failure (the residuals are still printed).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Any

import numpy as np

from . import serialize as ser
from .filtr import compatible, jump_graph, polygonal_weights, slope_special_check
from .findesc import FiniteDescription, JHUnresolved, disc_description, jordan_holder, s_equivalent, validate_fd
from .fuchsian import assemble_fd, monodromy
from .generators import random_fuchsian, random_model, random_resonant_model, random_rh_data, random_strip_model
from .localmodel import canonical_from_residue, validate
from .matfun import DEFAULT_TOL, BranchSection, resonance_report
from .modify import make_good, shift_down, shift_up, zero_multiplicity
from .rhcore import inv_rh_local, rh_local, validate_rh

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    pass


class Failure(Exception):
    """Validation or operation failure; ``result`` is still reported."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized searches and generators")
    p.add_argument("--mode", choices=("numeric", "exact"), default="numeric", help="arithmetic for findesc commands")
    p.add_argument("--section", type=float, default=0.0, metavar="ANCHOR", help="branch strip [anchor, anchor + 1)")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="predmod", description="Local Riemann-Hilbert data, finite descriptions and Fuchsian monodromy.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, help_, inputs=1):
        p = sub.add_parser(name, help=help_, parents=[common])
        if inputs == 1:
            p.add_argument("input", help="JSON file or '-'")
        elif inputs == 2:
            p.add_argument("first")
            p.add_argument("second")
        return p

    add("validate", "check the defining relations of a model, gluing data, description or system")
    add("rh", "local model -> gluing data")
    add("inv-rh", "gluing data -> local model (logarithm chosen in --section)")
    p = add("shear", "shift eigenvalues of a local model at fixed monodromy")
    p.add_argument("--target", choices=("good",), help="shear until no integer resonances remain")
    p.add_argument("--down", type=_complex_arg, metavar="ALPHA", help="lower the eigenvalue ALPHA by one")
    p.add_argument("--up", type=_complex_arg, metavar="ALPHA", help="raise the eigenvalue ALPHA by one")
    add("jh", "Jordan-Hoelder factors of a finite description or gluing data")
    add("s-equiv", "decide S-equivalence of two descriptions", inputs=2)
    add("stability-check", "compatibility, polygonal weights and slope check for {model, flagE, flagF}")
    add("monodromy", "monodromy of a Fuchsian system")
    add("assemble", "finite description from {system, models?} (canonical local models by default)")
    p = add("gen", "random instance", inputs=0)
    p.add_argument("kind", choices=("model", "strip-model", "resonant-model", "rh", "fuchsian"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=3, help="punctures (fuchsian)")
    return parser


def _complex_arg(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


# ---------------------------------------------------------------------------
# input


def _read(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ser.FormatError("$", f"malformed JSON in {path} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from None
    return _unwrap(obj)


def _unwrap(obj: Any) -> Any:
    while isinstance(obj, dict) and "command" in obj and "result" in obj:
        obj = obj["result"]
    # shear reports the model next to its move list
    if isinstance(obj, dict) and "model" in obj and "moves" in obj:
        obj = obj["model"]
    return obj


def _load_fd_like(obj: Any, mode: str) -> FiniteDescription:
    kind = ser.detect_kind(obj)
    if kind == "fd":
        return ser.load_fd(obj, mode=mode)
    if kind == "rh":
        data = ser.load_rh(obj)
        fd = disc_description(data)
        if mode == "exact":
            return ser.load_fd(ser.dump_fd(fd), mode="exact")
        return fd
    raise ser.FormatError("$", f"expected a finite description or gluing data, got a {kind}")


def _expect(obj: Any, kind: str):
    got = ser.detect_kind(obj)
    if got != kind:
        raise ser.FormatError("$", f"expected {kind} input, got {got}")


# ---------------------------------------------------------------------------
# commands


def _report(rep) -> dict:
    return {"ok": bool(rep.ok), "residuals": rep.residuals, "bound": rep.tol}


def cmd_validate(args):
    obj = _read(args.input)
    kind = ser.detect_kind(obj)
    if kind == "model":
        rep = validate(ser.load_model(obj), args.tol)
    elif kind == "rh":
        rep = validate_rh(ser.load_rh(obj), args.tol)
    elif kind == "fd":
        rep = validate_fd(ser.load_fd(obj, mode=args.mode), args.tol, args.mode)
    else:
        system = ser.load_fuchsian(obj)
        return {"kind": kind, "ok": True, "residue_at_infinity_norm": float(np.linalg.norm(system.residue_at_infinity, 2))}
    out = {"kind": kind, **_report(rep)}
    if not rep.ok:
        raise Failure(f"{kind} fails its defining relations", out)
    return out


def cmd_rh(args):
    obj = _read(args.input)
    _expect(obj, "model")
    model = ser.load_model(obj)
    rep = validate(model, args.tol)
    if not rep.ok:
        raise Failure("model fails st = R, ts = thetaF", _report(rep))
    return ser.dump_rh(rh_local(model, args.tol))


def cmd_inv_rh(args):
    obj = _read(args.input)
    _expect(obj, "rh")
    data = ser.load_rh(obj)
    rep = validate_rh(data, args.tol)
    if not rep.ok:
        raise Failure("data fails VC = T_E - I, CV = T_F - I", _report(rep))
    model = inv_rh_local(data, BranchSection(args.section), args.tol)
    return ser.dump_model(model)


def cmd_shear(args):
    chosen = [x is not None for x in (args.target, args.down, args.up)]
    if sum(chosen) != 1:
        raise UsageError("shear needs exactly one of --target good, --down ALPHA, --up ALPHA")
    obj = _read(args.input)
    _expect(obj, "model")
    model = ser.load_model(obj)
    rep = validate(model, args.tol)
    if not rep.ok:
        raise Failure("model fails st = R, ts = thetaF", _report(rep))
    if args.target:
        res = make_good(model, args.tol)
        out, trace = res.model, res.zero_trace
        moves = [{"direction": m.direction, "alpha": ser.dump_scalar(m.alpha), "multiplicity": m.multiplicity}
                 for m in res.moves]
    else:
        direction, alpha = ("down", args.down) if args.down is not None else ("up", args.up)
        out = (shift_down if direction == "down" else shift_up)(model, alpha, args.tol)
        moves = [{"direction": direction, "alpha": ser.dump_scalar(alpha)}]
        trace = [zero_multiplicity(model.R), zero_multiplicity(out.R)]
    return {"model": ser.dump_model(out), "moves": moves, "zero_trace": trace, "good": resonance_report(out.R).good}


def cmd_jh(args):
    fd = _load_fd_like(_read(args.input), args.mode)
    rep = validate_fd(fd, args.tol, args.mode)
    if not rep.ok:
        raise Failure("finite description fails its relations", _report(rep))
    res = jordan_holder(fd, args.mode, args.tol, args.seed)
    out = {
        "status": res.status,
        "factors": [ser.dump_fd(f) for f in res.factors],
        "series_dims": [[sub.dims[0], sub.dims[1:]] for sub in res.series],
    }
    if not res.resolved:
        raise Failure("composition series could not be certified", out)
    return out


def cmd_s_equiv(args):
    fd1 = _load_fd_like(_read(args.first), args.mode)
    fd2 = _load_fd_like(_read(args.second), args.mode)
    for name, fd in (("first", fd1), ("second", fd2)):
        rep = validate_fd(fd, args.tol, args.mode)
        if not rep.ok:
            raise Failure(f"{name} input fails its relations", _report(rep))
    try:
        verdict = s_equivalent(fd1, fd2, args.mode, args.tol, args.seed)
    except JHUnresolved as exc:
        raise Failure(str(exc), {"s_equivalent": None, "status": "unresolved"}) from None
    return {"s_equivalent": bool(verdict), "status": "ok"}


def cmd_stability(args):
    obj = _read(args.input)
    for key in ("model", "flagE", "flagF"):
        if not isinstance(obj, dict) or key not in obj:
            raise ser.FormatError(f"$.{key}", "missing key")
    model = ser.load_model(obj["model"], "$.model")
    flagE = ser.load_flag(obj["flagE"], "$.flagE")
    flagF = ser.load_flag(obj["flagF"], "$.flagF")
    if flagE.ambient != model.n or flagF.ambient != model.m:
        raise ser.FormatError("$", "flag ambient dimensions do not match the model")
    # s : F -> E indexes the F-flag by j, t : E -> F maps E-indices back
    Gs = jump_graph(model.s, flagF, flagE, args.tol)
    Gt = jump_graph(model.t, flagE, flagF, args.tol)
    comp = compatible(Gs, Gt)
    w = polygonal_weights(Gs, Gt)
    special = {
        name: (slope_special_check(fl) if fl.decorations is not None else None)
        for name, fl in (("E", flagE), ("F", flagF))
    }
    return {
        "jumps_s": [list(x) for x in Gs.jumps],
        "jumps_t": [list(x) for x in Gt.jumps],
        "compatible": comp,
        "weights": ser.dump_weights(w) if w is not None else None,
        "special": special,
    }


def cmd_monodromy(args):
    obj = _read(args.input)
    _expect(obj, "fuchsian")
    return ser.dump_monodromy(monodromy(ser.load_fuchsian(obj), tol=args.tol))


def cmd_assemble(args):
    obj = _read(args.input)
    if isinstance(obj, dict) and "system" in obj:
        system = ser.load_fuchsian(obj["system"], "$.system")
        raw = obj.get("models")
    else:
        system = ser.load_fuchsian(obj)
        raw = None
    if raw is None:
        models = [canonical_from_residue(A, "meromorphic", args.tol) for A in system.residues]
    else:
        if not isinstance(raw, list):
            raise ser.FormatError("$.models", "expected a list of local models")
        models = [ser.load_model(m, f"$.models[{i}]") for i, m in enumerate(raw)]
    fd = assemble_fd(system, models, tol=args.tol)
    # integration error enters the relations, hence the looser floor
    rep = validate_fd(fd, max(args.tol, 1e-6))
    if not rep.ok:
        raise Failure("assembled description fails its relations", {"fd": ser.dump_fd(fd), **_report(rep)})
    return ser.dump_fd(fd)


def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    if min(args.n, args.m) < 0 or args.n < 1:
        raise UsageError("--n must be positive and --m nonnegative")
    if args.kind == "model":
        return ser.dump_model(random_model(rng, args.n, args.m))
    if args.kind == "strip-model":
        return ser.dump_model(random_strip_model(rng, args.n, args.m, anchor=args.section))
    if args.kind == "resonant-model":
        return ser.dump_model(random_resonant_model(rng, max_dim=max(2, args.n)))
    if args.kind == "rh":
        return ser.dump_rh(random_rh_data(rng, args.n, args.m))
    return ser.dump_fuchsian(random_fuchsian(rng, args.k, args.n))


COMMANDS = {
    "validate": cmd_validate,
    "rh": cmd_rh,
    "inv-rh": cmd_inv_rh,
    "shear": cmd_shear,
    "jh": cmd_jh,
    "s-equiv": cmd_s_equiv,
    "stability-check": cmd_stability,
    "monodromy": cmd_monodromy,
    "assemble": cmd_assemble,
    "gen": cmd_gen,
}


# ---------------------------------------------------------------------------
# driver


def _config(args) -> dict:
    cfg = {"tol": args.tol, "seed": args.seed, "mode": args.mode, "section": args.section, "out": args.out}
    for key in ("input", "first", "second", "kind", "target", "n", "m", "k"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    for key in ("down", "up"):
        if getattr(args, key, None) is not None:
            cfg[key] = ser.dump_scalar(getattr(args, key))
    return cfg


def _emit(doc: dict, out: str) -> None:
    text = json.dumps(doc, indent=1) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        cfg = _config(args)
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"predmod: error: {exc}", file=sys.stderr)
        return 1
    except ser.FormatError as exc:
        print(f"predmod: malformed input at {exc}", file=sys.stderr)
        return 1
    except Failure as exc:
        _emit({"command": args.command, "config": cfg, "result": exc.result, "error": str(exc)}, args.out)
        print(f"predmod: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _emit({"command": args.command, "config": cfg, "result": None, "error": str(exc)}, args.out)
        print(f"predmod: {args.command} failed: {exc}", file=sys.stderr)
        return 2
    _emit({"command": args.command, "config": cfg, "result": result}, args.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
