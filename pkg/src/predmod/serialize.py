"""JSON formats shared by the command-line tools.

A complex scalar is ``[re, im]``; a matrix is
``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in row-major order.
Exact values are written as rational strings ``"p/q"``. Floats are written
with ``repr`` precision, so numeric round trips are exact.

Readers raise :class:`FormatError` carrying the JSON path of the offending
key, e.g. ``$.local[0].C.data[3]``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Any

import numpy as np
from sympy import QQ_I

from .fields import qq
from .filtr import Flag, PolygonalWeights
from .findesc import FiniteDescription, PunctureData, SurfaceData
from .fuchsian import FuchsianSystem, MonodromyResult
from .localmodel import LocalModel, NotDecomposableError, ReducedModule, factor
from .rhcore import LocalRHData

__all__ = [
    "FormatError",
    "dump_scalar",
    "load_scalar",
    "dump_matrix",
    "load_matrix",
    "dump_model",
    "load_model",
    "dump_rh",
    "load_rh",
    "dump_fd",
    "load_fd",
    "dump_flag",
    "load_flag",
    "dump_fuchsian",
    "load_fuchsian",
    "dump_reduced",
    "dump_weights",
    "dump_monodromy",
    "detect_kind",
]


class FormatError(ValueError):
    """Malformed input; ``path`` locates the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _frac_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dump_scalar(z) -> list:
    if isinstance(z, QQ_I.dtype):
        return [_frac_str(Fraction(int(z.x.numerator), int(z.x.denominator))),
                _frac_str(Fraction(int(z.y.numerator), int(z.y.denominator)))]
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _real(x, path: str, exact: bool):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise FormatError(path, f"expected a number or rational string, got {type(x).__name__}")
    if isinstance(x, str):
        try:
            f = Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise FormatError(path, f"cannot parse {x!r} as a rational") from None
        return f if exact else float(f)
    if isinstance(x, float) and not math.isfinite(x):
        raise FormatError(path, "non-finite value")
    return Fraction(x) if exact else float(x)


def load_scalar(obj: Any, path: str = "$", mode: str = "numeric"):
    """Read ``[re, im]`` (a bare real number is also accepted)."""
    exact = mode == "exact"
    if isinstance(obj, list):
        if len(obj) != 2:
            raise FormatError(path, f"complex scalar must be [re, im], got {len(obj)} entries")
        re, im = _real(obj[0], f"{path}[0]", exact), _real(obj[1], f"{path}[1]", exact)
    else:
        re, im = _real(obj, path, exact), (Fraction(0) if exact else 0.0)
    if exact:
        return qq((re, im))
    return complex(re, im)


def dump_matrix(A) -> dict:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]), "data": [dump_scalar(z) for z in A.reshape(-1)]}


def _get(obj: Any, key: str, path: str):
    if not isinstance(obj, dict):
        raise FormatError(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise FormatError(f"{path}.{key}", "missing key")
    return obj[key]


def _int(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 0:
        raise FormatError(path, f"expected a nonnegative integer, got {x!r}")
    return x


def load_matrix(obj: Any, path: str = "$", mode: str = "numeric", shape: tuple[int, int] | None = None) -> np.ndarray:
    r = _int(_get(obj, "rows", path), f"{path}.rows")
    c = _int(_get(obj, "cols", path), f"{path}.cols")
    data = _get(obj, "data", path)
    if not isinstance(data, list):
        raise FormatError(f"{path}.data", "expected a list")
    if len(data) != r * c:
        raise FormatError(f"{path}.data", f"{len(data)} entries for a {r}x{c} matrix")
    if shape is not None and (r, c) != tuple(shape):
        raise FormatError(path, f"shape {(r, c)} where {tuple(shape)} is required")
    vals = [load_scalar(z, f"{path}.data[{i}]", mode) for i, z in enumerate(data)]
    if mode == "exact":
        out = np.empty((r, c), dtype=object)
        for i, v in enumerate(vals):
            out[divmod(i, c)] = v
        return out
    return np.array(vals, dtype=complex).reshape(r, c)


def _wrap(path: str, build):
    # constructors raise ValueError on inconsistent shapes; attach the path
    try:
        return build()
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None


def dump_model(model: LocalModel) -> dict:
    return {
        "n": model.n,
        "m": model.m,
        "R": dump_matrix(model.R),
        "thetaF": dump_matrix(model.thetaF),
        "t": dump_matrix(model.t),
        "s": dump_matrix(model.s),
    }


def load_model(obj: Any, path: str = "$") -> LocalModel:
    n = _int(_get(obj, "n", path), f"{path}.n")
    m = _int(_get(obj, "m", path), f"{path}.m")
    shapes = {"R": (n, n), "thetaF": (m, m), "t": (m, n), "s": (n, m)}
    mats = {k: load_matrix(_get(obj, k, path), f"{path}.{k}", shape=v) for k, v in shapes.items()}
    return _wrap(path, lambda: LocalModel(**mats))


def dump_rh(data: LocalRHData) -> dict:
    return {k: dump_matrix(getattr(data, k)) for k in ("T_E", "T_F", "C", "V")}


def load_rh(obj: Any, path: str = "$") -> LocalRHData:
    mats = {k: load_matrix(_get(obj, k, path), f"{path}.{k}") for k in ("T_E", "T_F", "C", "V")}
    return _wrap(path, lambda: LocalRHData(**mats))


def dump_reduced(red: ReducedModule) -> dict:
    """``u`` with its rank-one factors (or ``null``) and both contractions."""
    try:
        fac = factor(red)
    except NotDecomposableError:
        fac = None
    factors = None if fac is None else {"s": dump_matrix(fac[0]), "t": dump_matrix(fac[1])}
    return {
        "n": red.n,
        "m": red.m,
        "R": dump_matrix(red.R),
        "thetaF": dump_matrix(red.thetaF),
        "u": dump_matrix(red.u),
        "factors": factors,
        "mu0": dump_matrix(red.mu0()),
        "mu1": dump_matrix(red.mu1()),
    }


def dump_fd(fd: FiniteDescription) -> dict:
    out = {
        "genus": fd.surface.genus,
        "punctures": fd.surface.punctures,
        "rho": {x: dump_matrix(M) for x, M in fd.rho.items()},
        "local": [{"tauF": dump_matrix(l.tauF), "C": dump_matrix(l.C), "V": dump_matrix(l.V)} for l in fd.local],
    }
    if not fd.surface.closed:
        out["closed"] = False
    return out


def load_fd(obj: Any, path: str = "$", mode: str = "numeric") -> FiniteDescription:
    g = _int(_get(obj, "genus", path), f"{path}.genus")
    k = _int(_get(obj, "punctures", path), f"{path}.punctures")
    closed = obj.get("closed", True)
    if not isinstance(closed, bool):
        raise FormatError(f"{path}.closed", "expected true or false")
    surface = _wrap(path, lambda: SurfaceData(g, k, closed))
    rho_obj = _get(obj, "rho", path)
    if not isinstance(rho_obj, dict):
        raise FormatError(f"{path}.rho", "expected an object keyed by generator label")
    rho = {x: load_matrix(M, f"{path}.rho.{x}", mode) for x, M in rho_obj.items()}
    loc_obj = _get(obj, "local", path)
    if not isinstance(loc_obj, list):
        raise FormatError(f"{path}.local", "expected a list")
    local = []
    for a, L in enumerate(loc_obj):
        p = f"{path}.local[{a}]"
        local.append(PunctureData(*(load_matrix(_get(L, key, p), f"{p}.{key}", mode) for key in ("tauF", "C", "V"))))
    return _wrap(path, lambda: FiniteDescription(surface, rho, local))


def dump_flag(flag: Flag) -> dict:
    out = {"ambient": flag.ambient, "steps": [dump_matrix(B) for B in flag.steps]}
    if flag.decorations is not None:
        out["decorations"] = [[r, _frac_str(d)] for r, d in flag.decorations]
    return out


def load_flag(obj: Any, path: str = "$") -> Flag:
    amb = _int(_get(obj, "ambient", path), f"{path}.ambient")
    steps_obj = _get(obj, "steps", path)
    if not isinstance(steps_obj, list):
        raise FormatError(f"{path}.steps", "expected a list of matrices")
    steps = [load_matrix(B, f"{path}.steps[{i}]") for i, B in enumerate(steps_obj)]
    decos = None
    if obj.get("decorations") is not None:
        decos = []
        for i, d in enumerate(obj["decorations"]):
            p = f"{path}.decorations[{i}]"
            if not isinstance(d, list) or len(d) != 2:
                raise FormatError(p, "expected [rank, degree]")
            decos.append((_int(d[0], f"{p}[0]"), _real(d[1], f"{p}[1]", exact=True)))
    return _wrap(path, lambda: Flag(amb, steps, decos))


def dump_fuchsian(sys: FuchsianSystem) -> dict:
    out = {
        "punctures": [dump_scalar(p) for p in sys.punctures],
        "residues": [dump_matrix(A) for A in sys.residues],
        "base": dump_scalar(sys.base),
    }
    if sys.closed:
        out["closed"] = True
    return out


def load_fuchsian(obj: Any, path: str = "$") -> FuchsianSystem:
    pts_obj = _get(obj, "punctures", path)
    res_obj = _get(obj, "residues", path)
    if not isinstance(pts_obj, list):
        raise FormatError(f"{path}.punctures", "expected a list of [re, im]")
    if not isinstance(res_obj, list):
        raise FormatError(f"{path}.residues", "expected a list of matrices")
    pts = [load_scalar(z, f"{path}.punctures[{i}]") for i, z in enumerate(pts_obj)]
    res = [load_matrix(A, f"{path}.residues[{i}]") for i, A in enumerate(res_obj)]
    base = load_scalar(_get(obj, "base", path), f"{path}.base")
    closed = obj.get("closed", False)
    if not isinstance(closed, bool):
        raise FormatError(f"{path}.closed", "expected true or false")
    return _wrap(path, lambda: FuchsianSystem(pts, res, base, closed))


def dump_weights(w: PolygonalWeights) -> dict:
    return {"p": [_frac_str(x) for x in w.p], "q": [_frac_str(x) for x in w.q]}


def dump_monodromy(res: MonodromyResult) -> dict:
    out = {
        "M": [dump_matrix(M) for M in res.M],
        "order": [i + 1 for i in res.order],
        "relation_residual": res.residual,
        "charpoly_distance": res.charpoly_distance,
    }
    if res.M_inf is not None:
        out["M_inf"] = dump_matrix(res.M_inf)
    return out


_KINDS = {
    "fd": ("genus", "rho", "local"),
    "fuchsian": ("punctures", "residues", "base"),
    "rh": ("T_E", "T_F", "C", "V"),
    "model": ("R", "thetaF", "t", "s"),
}


def detect_kind(obj: Any) -> str:
    """Name of the format whose keys ``obj`` carries."""
    if isinstance(obj, dict):
        for kind, keys in _KINDS.items():
            if all(k in obj for k in keys):
                return kind
    raise FormatError("$", "not a local model, gluing data, finite description or Fuchsian system")
