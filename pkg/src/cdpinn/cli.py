"""``cdpinn`` command line: train, eval, oracle, fidelity.

Every command writes fixed file names under ``--out``.  Numbers are printed
with 17 significant digits so the files reproduce byte-for-byte.
"""
import argparse
import csv
import json
import math
import os
import platform
import sys
from contextlib import nullcontext
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError, DegenerateSpectrumError, FormatError, NumericsError, ScopeError, StepSizeError,
    UnknownDistanceError, ValidationError,
)
from .linalg import pauli_basis, pauli_reconstruct
from .net import forward_with_input_derivative
from .oracle import (
    action_value, eigen_tracks, el_residual, evolve_fidelity, exact_gauge_potential, model_protocol,
    nc_gauge_potential,
)
from .physics import LossBreakdown, build_h_ad
from .problem import H2_DISTANCES, resolve_problem
from .train import PROFILES, TrainConfig, load_checkpoint, train

EXIT_CONFIG = 2
EXIT_NUMERICS = 3

LOSS_COLUMNS = ("epoch", *LossBreakdown.COLUMNS, "seconds")


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


class _Csv:
    def __init__(self, path, header):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)

    def row(self, values):
        self._w.writerow([fmt(v) for v in values])

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _matrix_json(m):
    m = np.asarray(m)
    return {"re": [[float(x) for x in row] for row in m.real], "im": [[float(x) for x in row] for row in m.imag]}


def _dump_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _thread_limit():
    n = os.environ.get("CDPINN_THREADS")
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=max(1, int(n)))


def _problem_arg(text):
    return resolve_problem(text)


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(path, problem):
    params = load_checkpoint(path).params
    if params.n_qubits != problem.n_qubits:
        raise ConfigError(
            f"checkpoint network outputs {params.layer_sizes[-1]} values ({params.n_qubits} qubits) "
            f"but the problem has {problem.n_qubits} qubits"
        )
    return params


def cmd_train(args):
    problem = _problem_arg(args.problem)
    overrides = {"seed": args.seed}
    for name in ("epochs", "learning_rate", "log2_interior", "log_every", "checkpoint_every"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    config = TrainConfig.profile(args.profile, **overrides).validate(problem.n_qubits)
    state = None
    if args.resume:
        state = load_checkpoint(args.resume)
    out = _out_dir(args.out)
    checkpoint = out / "checkpoint.json"

    manifest = {
        "command": ["cdpinn", *args.argv],
        "profile": args.profile,
        "config": config.as_dict(),
        "problem": {"source": args.problem, "label": problem.label, "sha256": problem.digest()},
        "seed": config.seed,
        "resumed_from": args.resume,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_at": datetime.now(timezone.utc).isoformat(),
    }
    _dump_json(out / "manifest.json", manifest)

    with _Csv(out / "losses.csv", LOSS_COLUMNS) as losses, _Csv(out / "timing.csv", ("epoch", "seconds")) as timing:
        def sink(epoch, breakdown, seconds):
            losses.row((epoch, *breakdown.as_tuple(), seconds if args.record_time else None))
            timing.row((epoch, seconds))
            if epoch % (config.log_every * 10) == 0:
                losses.flush()
                timing.flush()
            if args.verbose:
                print(f"epoch {epoch:>8d}  loss {breakdown.l_total:.6e}", file=sys.stderr)

        try:
            state = train(problem, config, sink=sink, state=state, checkpoint_path=checkpoint)
        except NumericsError as exc:
            where = exc.last_checkpoint or "none written"
            print(f"cdpinn: numerics error: {exc}\nlast checkpoint: {where}", file=sys.stderr)
            return EXIT_NUMERICS

    last_epoch, breakdown, _ = state.loss_history[-1]
    _dump_json(out / "summary.json", {"epoch": last_epoch, **breakdown.as_dict(), "checkpoint": str(checkpoint)})
    return 0


def cmd_eval(args):
    problem = _problem_arg(args.problem)
    params = _load_model(args.checkpoint, problem)
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    out = _out_dir(args.out)
    basis = pauli_basis(problem.n_qubits)
    t = np.linspace(0.0, 1.0, args.grid)
    b = forward_with_input_derivative(params, t)
    a_prime = pauli_reconstruct(b.c, basis)
    h_total = build_h_ad(problem, b.lam) + b.dlam[:, None, None] * b.a_cd
    tracks = eigen_tracks(problem, params, t)

    with _Csv(out / "schedule.csv", ("t", "lambda", "dlambda_dt")) as f:
        for row in zip(t, b.lam, b.dlam):
            f.row(row)
    with _Csv(out / "coefficients.csv", ("t", *basis.labels)) as f:
        for ti, ci in zip(t, b.c):
            f.row((ti, *ci))
    d = problem.dim
    header = ("t", *(f"cd_E{k}" for k in range(d)), *(f"ad_E{k}" for k in range(d)))
    with _Csv(out / "energies.csv", header) as f:
        for ti, cd, ad in zip(t, tracks.cd, tracks.adiabatic):
            f.row((ti, *cd, *ad))
    with open(out / "operators.jsonl", "w") as fh:
        for k in range(len(t)):
            doc = {"t": float(t[k]), "lambda": float(b.lam[k]), "dlambda_dt": float(b.dlam[k]),
                   "H": _matrix_json(h_total[k]), "A_cd": _matrix_json(b.a_cd[k]),
                   "A_prime": _matrix_json(a_prime[k])}
            fh.write(json.dumps(doc) + "\n")
    mean_abs = np.mean(np.abs(b.c), axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    ranking = [{"label": basis.labels[i], "mean_abs": float(mean_abs[i])} for i in order]
    _dump_json(out / "coefficient_ranking.json", {"grid": args.grid, "ranking": ranking})
    return 0


def _invert_schedule(params, lam_target, grid):
    """Time at which the model schedule first reaches ``lam_target``, or ``None``."""
    lam = forward_with_input_derivative(params, grid).lam
    above = np.flatnonzero(lam >= lam_target)
    if lam_target < lam.min() or lam_target > lam.max() or not above.size:
        return None
    k = above[0]
    if k == 0:
        return float(grid[0]) if lam[0] == lam_target else None
    lo, hi = float(grid[k - 1]), float(grid[k])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if forward_with_input_derivative(params, [mid]).lam[0] < lam_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cmd_oracle(args):
    problem = _problem_arg(args.problem)
    if args.nc_order < 1:
        raise ConfigError("--nc-order must be at least 1")
    if args.lambda_grid < 2:
        raise ConfigError("--lambda-grid must be at least 2")
    params = _load_model(args.checkpoint, problem) if args.checkpoint else None
    basis = pauli_basis(problem.n_qubits)
    out = _out_dir(args.out)
    t_grid = np.linspace(0.0, 1.0, 2049)
    header = ("lambda", "status", "min_gap", "action_zero", "action_nc", "action_exact", "action_model",
              "el_residual_zero", "el_residual_nc", "el_residual_exact", "el_residual_model",
              "offdiag_distance_model", "t_model")
    zero = np.zeros((problem.dim, problem.dim), dtype=complex)
    with _Csv(out / "gauge.csv", header) as f:
        for lam in np.linspace(0.0, 1.0, args.lambda_grid):
            nc = nc_gauge_potential(problem, lam, args.nc_order)
            row = {"lambda": lam, "status": "ok",
                   "action_zero": action_value(problem, lam, zero), "el_residual_zero": el_residual(problem, lam, zero),
                   "action_nc": action_value(problem, lam, nc.a_nc), "el_residual_nc": el_residual(problem, lam, nc.a_nc)}
            try:
                rep = exact_gauge_potential(problem, lam, args.gap_tolerance)
            except DegenerateSpectrumError:
                rep = None
                row["status"] = "degenerate"
            if rep is not None:
                row.update(min_gap=rep.min_coupled_gap if math.isfinite(rep.min_coupled_gap) else None,
                           action_exact=rep.action_value, el_residual_exact=rep.el_residual)
            if params is not None:
                t_model = _invert_schedule(params, lam, t_grid)
                if t_model is not None:
                    a_model = pauli_reconstruct(forward_with_input_derivative(params, [t_model]).c[0], basis)
                    row.update(t_model=t_model, action_model=action_value(problem, lam, a_model),
                               el_residual_model=el_residual(problem, lam, a_model))
                    if rep is not None:
                        diff = rep.offdiag_in_eigenbasis(a_model) - rep.offdiag_in_eigenbasis(rep.a_exact)
                        row["offdiag_distance_model"] = float(np.linalg.norm(diff))
            f.row([row.get(h) for h in header])
    return 0


def cmd_fidelity(args):
    problem = _problem_arg(args.problem)
    params = _load_model(args.checkpoint, problem)
    if not args.dt > 0:
        raise ConfigError("--dt must be positive")
    if args.report < 2:
        raise ConfigError("--report must be at least 2")
    out = _out_dir(args.out)
    # a step coarser than the report spacing is taken as given, not subdivided
    n_report = args.report
    if args.dt > 1.0 / (n_report - 1):
        n_report = math.ceil(1.0 / args.dt - 1e-9) + 1
    t_grid = np.linspace(0.0, 1.0, n_report)
    try:
        cd = evolve_fidelity(problem, model_protocol(params, counterdiabatic=True), t_grid, args.dt)
        ad = evolve_fidelity(problem, model_protocol(params, counterdiabatic=False), t_grid, args.dt)
    except StepSizeError as exc:
        print(f"cdpinn: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    lam = forward_with_input_derivative(params, t_grid).lam
    header = ("t", "lambda", "fidelity_cd", "fidelity_adiabatic", "norm_drift_cd", "norm_drift_adiabatic")
    with _Csv(out / "fidelity.csv", header) as f:
        for row in zip(t_grid, lam, cd.fidelity, ad.fidelity, cd.norm_drift, ad.norm_drift):
            f.row(row)
    return 0


def build_parser():
    tags = ", ".join(f"h2:{d:.1f}" for d in H2_DISTANCES)
    parser = argparse.ArgumentParser(prog="cdpinn", description="Counterdiabatic driving with a physics-informed network.")
    parser.add_argument("--version", action="version", version=f"cdpinn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network for one problem")
    p.add_argument("--problem", required=True, help=f"{tags} or a problem JSON file")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--log2-interior", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--resume", metavar="CHECKPOINT")
    p.add_argument("--record-time", action="store_true",
                   help="fill the seconds column of losses.csv (makes it non-reproducible)")
    p.add_argument("--verbose", "-v", action="store_true")
    p.add_argument("--out", default="run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="export schedule, coefficients, operators and energies")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", default="eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="compare gauge potentials over a schedule grid")
    p.add_argument("--problem", required=True)
    p.add_argument("--lambda-grid", type=int, default=101)
    p.add_argument("--nc-order", type=int, default=2)
    p.add_argument("--gap-tolerance", type=float, default=1e-8)
    p.add_argument("--checkpoint")
    p.add_argument("--out", default="oracle")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fidelity", help="Schroedinger evolution under the trained protocol")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--report", type=int, default=101, help="number of reported time points")
    p.add_argument("--out", default="fidelity")
    p.set_defaults(func=cmd_fidelity)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    args.argv = argv
    try:
        with _thread_limit():
            return args.func(args)
    except (ConfigError, UnknownDistanceError, FormatError, ValidationError, ScopeError) as exc:
        print(f"cdpinn: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, StepSizeError) as exc:
        print(f"cdpinn: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
