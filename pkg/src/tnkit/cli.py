"""Command-line front end (``tnk``).

Results go to stdout, either as a tensor/TT file or as ``key=value`` lines;
``-o`` writes the file instead.  Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical failure (a requested tolerance was not met).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .decomp import cp_fit_gd, cp_reconstruct, hosvd, tucker_reconstruct
from .dense import matricize
from .grad import finite_diff_jacobian, jacobian_wrt_node, relative_error
from .network import SpecSyntaxError, TNGraph, contract, label_dims, lower, rank_bound
from .prob import BornMachine, InvalidDistribution, born_marginal, conditional, marginal, prob_validate
from .random_tn import Z_THRESHOLD, params_from_dims, verify_identity
from .tt import MPO, TT, mpo_matvec, tt_als_fit, tt_reconstruct, tt_round, tt_svd


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _kv(key: str, value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        arr = np.asarray(value, dtype=np.float64).ravel()
        if all(float(v).is_integer() and abs(v) < 2**53 for v in arr) and not isinstance(value, np.ndarray):
            return f"{key}=" + ",".join(str(int(v)) for v in arr)
        return f"{key}=" + ",".join(_fmt(v) for v in arr)
    if isinstance(value, bool):
        return f"{key}={'true' if value else 'false'}"
    if isinstance(value, (int, np.integer)):
        return f"{key}={int(value)}"
    if isinstance(value, (float, np.floating)):
        return f"{key}={_fmt(value)}"
    return f"{key}={value}"


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _caps(text: str | None):
    if text is None:
        return None
    return [None if t.strip() in ("", "-") else int(t) for t in text.split(",")]


def _assignments(text: str | None) -> dict[int, int]:
    out = {}
    for part in (text or "").split(","):
        if not part.strip():
            continue
        try:
            k, v = part.split("=")
            out[int(k)] = int(v)
        except ValueError:
            raise UsageError(f"expected MODE=INDEX pairs, got {part!r}") from None
    return out


def _load(path: str, kind):
    obj = io.load(path)
    if not isinstance(obj, kind):
        raise DataError(f"{path}: expected a {getattr(kind, '__name__', kind)} file")
    return obj


def _bindings(items) -> dict[str, np.ndarray]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--bind expects NAME=FILE, got {item!r}")
        name, path = item.split("=", 1)
        out[name] = _load(path, np.ndarray)
    return out


def _emit(args, obj, lines=()) -> None:
    """Write ``obj`` to ``-o`` (and print ``lines``) or print ``obj`` to stdout."""
    if getattr(args, "out", None):
        io.save(args.out, obj)
        for ln in lines:
            print(ln)
    else:
        sys.stdout.write(io.dumps(obj))


# ---------------------------------------------------------------- commands

def cmd_contract(args):
    g = _load(args.network, TNGraph)
    _emit(args, contract(g, _bindings(args.bind)))


def cmd_rank_bound(args):
    g = _load(args.network, TNGraph)
    dims = {}
    if args.bind:
        b = _bindings(args.bind)
        dims = label_dims(lower(g), {k: v.shape for k, v in b.items()})
    for part in (args.dim or "").split(","):
        if part.strip():
            try:
                k, v = part.split("=")
                dims[k.strip()] = int(v)
            except ValueError:
                raise UsageError(f"--dim expects LABEL=SIZE pairs, got {part!r}") from None
    if not dims:
        raise UsageError("give label sizes with --dim or --bind")
    rows = [r for r in args.rows.split(",") if r]
    try:
        res = rank_bound(g, rows, dims)
    except KeyError as e:
        raise DataError(f"missing size for label {e}") from None
    print(_kv("bound", res.bound))
    print(_kv("degenerate", res.degenerate))


def cmd_matricize(args):
    T = _load(args.tensor, np.ndarray)
    _emit(args, matricize(T, _ints(args.rows)))


def cmd_cp_fit(args):
    T = _load(args.tensor, np.ndarray)
    res = cp_fit_gd(T, args.rank, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    norm2 = float(np.sum(T * T))
    rel = res.loss / norm2 if norm2 > 0 else res.loss
    lines = [_kv("rank", args.rank), _kv("iterations", res.iterations), _kv("loss", res.loss),
             _kv("rel_loss", rel), _kv("converged", res.converged)]
    if args.out:
        io.save(args.out, cp_reconstruct(res.cp))
    for ln in lines:
        print(ln)
    if args.max_rel_loss is not None and rel > args.max_rel_loss:
        raise NumericalFailure(f"relative loss {_fmt(rel)} above {_fmt(args.max_rel_loss)}")


def cmd_hosvd(args):
    T = _load(args.tensor, np.ndarray)
    caps = _caps(args.ranks)
    t = hosvd(T, caps, tol=args.tol)
    err = relative_error(tucker_reconstruct(t), T)
    lines = [_kv("ranks", list(t.ranks)), _kv("discarded", np.array(t.discarded)), _kv("rel_error", err)]
    if args.out:
        io.save(args.out, t.core)
    for ln in lines:
        print(ln)


def cmd_tt_svd(args):
    T = _load(args.tensor, np.ndarray)
    t = tt_svd(T, caps=_caps(args.caps), tol=args.tol)
    _emit(args, t, [_kv("ranks", list(t.ranks))])


def cmd_tt_round(args):
    t = _load(args.tt, TT)
    r = tt_round(t, caps=_caps(args.caps), tol=args.tol)
    _emit(args, r, [_kv("ranks", list(r.ranks))])


def cmd_tt_als(args):
    T = _load(args.tensor, np.ndarray)
    res = tt_als_fit(T, _ints(args.ranks), sweeps=args.sweeps, seed=args.seed)
    _emit(args, res.tt, [_kv("rel_error", res.rel_error)])
    if args.max_rel_error is not None and res.rel_error > args.max_rel_error:
        raise NumericalFailure(f"relative error {_fmt(res.rel_error)} above {_fmt(args.max_rel_error)}")


def cmd_tt_reconstruct(args):
    t = _load(args.tt, TT)
    T = tt_reconstruct(t)
    if args.ref is None:
        _emit(args, T)
        return
    ref = _load(args.ref, np.ndarray)
    if ref.shape != T.shape:
        raise DataError(f"reference shape {ref.shape} differs from TT shape {T.shape}")
    err = relative_error(T, ref)
    if args.out:
        io.save(args.out, T)
    print(_kv("rel_error", err))
    if args.max_rel_error is not None and err > args.max_rel_error:
        raise NumericalFailure(f"relative error {_fmt(err)} above {_fmt(args.max_rel_error)}")


def cmd_mpo_matvec(args):
    m = _load(args.mpo, MPO)
    x = io.load(args.vector)
    if isinstance(x, np.ndarray):
        x = tt_svd(x)
    if not isinstance(x, TT):
        raise DataError(f"{args.vector}: expected a .tt or .ten file")
    y = mpo_matvec(m, x)
    _emit(args, y, [_kv("ranks", list(y.ranks))])


def cmd_gradcheck(args):
    g = _load(args.network, TNGraph)
    b = _bindings(args.bind)
    if args.wrt not in b:
        raise DataError(f"tensor {args.wrt!r} is not bound")
    J = jacobian_wrt_node(g, args.wrt).contract(b)
    F = finite_diff_jacobian(g, args.wrt, b, step=args.step)
    err = relative_error(J, F)
    print(_kv("summands", len(g.occurrences(args.wrt))))
    print(_kv("rel_error", err))
    if err > args.tol:
        raise NumericalFailure(f"Jacobian and finite differences differ by {_fmt(err)}")


def cmd_prob_marginal(args):
    p = prob_validate(_load(args.tensor, np.ndarray))
    _emit(args, marginal(p, _ints(args.keep)).t)


def cmd_prob_conditional(args):
    p = prob_validate(_load(args.tensor, np.ndarray))
    _emit(args, conditional(p, _assignments(args.given)).t)


def cmd_born_normalize(args):
    print(_kv("zeta", BornMachine(_load(args.tt, TT)).zeta))


def cmd_born_marginal(args):
    _emit(args, born_marginal(BornMachine(_load(args.tt, TT)), _ints(args.keep)).t)


def cmd_rand_verify(args):
    matrix = _load(args.matrix, np.ndarray) if args.matrix else None
    try:
        params = params_from_dims(args.identity, _ints(args.dims), matrix)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    rep = verify_identity(args.identity, params, samples=args.samples, seed=args.seed)
    print(_kv("identity", args.identity))
    print(_kv("samples", rep.samples))
    print(_kv("seed", rep.seed))
    print(_kv("estimate", rep.estimate) if rep.estimate.ndim else _kv("estimate", float(rep.estimate)))
    print(_kv("analytic", rep.analytic) if rep.analytic.ndim else _kv("analytic", float(rep.analytic)))
    print(_kv("stderr", rep.stderr) if rep.stderr.ndim else _kv("stderr", float(rep.stderr)))
    print(_kv("max_z", rep.max_abs_z))
    if not rep.max_abs_z <= args.z_threshold:
        raise NumericalFailure(f"max |z| {_fmt(rep.max_abs_z)} above {_fmt(args.z_threshold)}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tnk", description="Tensor network toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        s = sub.add_parser(name, help=help_, description=help_)
        s.set_defaults(func=func)
        return s

    def out(s):
        s.add_argument("-o", "--out", help="write the result file here instead of stdout")

    s = add("contract", cmd_contract, "Contract a network file with bound tensors.")
    s.add_argument("network")
    s.add_argument("--bind", action="append", metavar="NAME=FILE", help="bind a tensor (.ten)")
    out(s)

    s = add("rank-bound", cmd_rank_bound, "Cut-based upper bound on a matricization rank.")
    s.add_argument("network")
    s.add_argument("--rows", required=True, help="comma-separated output labels on the row side")
    s.add_argument("--dim", help="label sizes, LABEL=SIZE,...")
    s.add_argument("--bind", action="append", metavar="NAME=FILE", help="infer sizes from tensors")

    s = add("matricize", cmd_matricize, "Unfold a tensor with the given row modes (1-based).")
    s.add_argument("tensor")
    s.add_argument("--rows", required=True)
    out(s)

    s = add("cp-fit", cmd_cp_fit, "Fit a CP model by gradient descent.")
    s.add_argument("tensor")
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--max-iters", type=int, default=5000)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-rel-loss", type=float, help="fail (exit 3) above this relative loss")
    out(s)

    s = add("hosvd", cmd_hosvd, "Higher-order SVD; -o writes the core.")
    s.add_argument("tensor")
    s.add_argument("--ranks", help="per-mode caps, '-' for uncapped")
    s.add_argument("--tol", type=float, default=0.0)
    out(s)

    s = add("tt-svd", cmd_tt_svd, "TT-SVD of a dense tensor.")
    s.add_argument("tensor")
    s.add_argument("--tol", type=float, default=0.0)
    s.add_argument("--caps", help="rank caps R1,...,R(N-1)")
    out(s)

    s = add("tt-round", cmd_tt_round, "Round a TT to lower ranks.")
    s.add_argument("tt")
    s.add_argument("--tol", type=float, default=0.0)
    s.add_argument("--caps")
    out(s)

    s = add("tt-als", cmd_tt_als, "Fit a TT of fixed ranks by alternating least squares.")
    s.add_argument("tensor")
    s.add_argument("--ranks", required=True)
    s.add_argument("--sweeps", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-rel-error", type=float)
    out(s)

    s = add("tt-reconstruct", cmd_tt_reconstruct, "Dense tensor from a TT; --ref reports the relative error.")
    s.add_argument("tt")
    s.add_argument("--ref")
    s.add_argument("--max-rel-error", type=float)
    out(s)

    s = add("mpo-matvec", cmd_mpo_matvec, "Apply an MPO to a TT (or dense) vector.")
    s.add_argument("mpo")
    s.add_argument("vector")
    out(s)

    s = add("gradcheck", cmd_gradcheck, "Compare the node-removal Jacobian with finite differences.")
    s.add_argument("network")
    s.add_argument("--bind", action="append", metavar="NAME=FILE")
    s.add_argument("--wrt", required=True)
    s.add_argument("--step", type=float, default=1e-5)
    s.add_argument("--tol", type=float, default=1e-5)

    s = add("prob-marginal", cmd_prob_marginal, "Marginal of a probability tensor.")
    s.add_argument("tensor")
    s.add_argument("--keep", required=True)
    out(s)

    s = add("prob-conditional", cmd_prob_conditional, "Conditional of a probability tensor.")
    s.add_argument("tensor")
    s.add_argument("--given", required=True, help="MODE=INDEX,... (1-based modes, 0-based indices)")
    out(s)

    s = add("born-normalize", cmd_born_normalize, "Normalizer of a TT Born machine.")
    s.add_argument("tt")

    s = add("born-marginal", cmd_born_marginal, "Marginal of a TT Born machine.")
    s.add_argument("tt")
    s.add_argument("--keep", required=True)
    out(s)

    s = add("rand-verify", cmd_rand_verify, "Monte-Carlo check of a Gaussian expectation identity.")
    s.add_argument("identity")
    s.add_argument("--dims", required=True)
    s.add_argument("--matrix", help="covariance (isserlis4) or X (trace-quartic) as .ten")
    s.add_argument("--samples", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--z-threshold", type=float, default=Z_THRESHOLD)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:2] == ["rand", "verify"]:
        argv = ["rand-verify"] + argv[2:]
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
        return 0
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (DataError, io.FormatError, SpecSyntaxError, InvalidDistribution, ValueError,
            KeyError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
