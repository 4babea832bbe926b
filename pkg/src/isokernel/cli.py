"""Command-line front end: ``isokernel <command> ...``.

Commands:
    fit            fit an Isolation Kernel on a CSV and save it as JSON
    point-score    score points with the IDK, norm or Gaussian detectors
    group-score    score groups with IDK², GDK² or IDK-GDK
    synth          write one of the synthetic datasets as CSV
    eval           stability or contamination experiment, as a JSON report
    bench          scaleup timing of a group detector

Every command writes ``<out>.config.json`` next to its main output, holding
the parsed arguments, so a run can be repeated exactly. Outputs are written
to temporary files and moved into place only after everything succeeded;
exit status 0 means all of them exist.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from isokernel import data as dataio
from isokernel.baselines import SIGMA_GRID, default_landmarks, gdk_point_similarities
from isokernel.distributional import idk_point_similarities, rank
from isokernel.errors import IsoKernelError, ParameterError
from isokernel.eval import auc, contamination_report, scaleup_bench, stability_report
from isokernel.groups import gdk2_similarities, idk2, idk_gdk_similarities
from isokernel.kernel import (
    DEFAULT_PSI,
    DEFAULT_T,
    PSI_GRID,
    feature_norms,
    fit_isolation_model,
    load_model,
)

EXIT_OK = 0
EXIT_ERROR = 1


class _Outputs:
    """Collects output files and writes them all at the end, atomically per file."""

    def __init__(self) -> None:
        self._pending: list[tuple[Path, str]] = []

    def add(self, path: str | Path, text: str) -> None:
        self._pending.append((Path(path), text))

    def commit(self) -> None:
        staged = []
        try:
            for path, text in self._pending:
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, path))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, path in staged:
            os.replace(tmp, path)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _column(text: str) -> int | str:
    return int(text) if text.lstrip("-").isdigit() else text


def _config_echo(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return json.dumps(cfg, indent=2, default=str) + "\n"


def _summary_path(out: str) -> Path:
    return Path(out).with_suffix(".summary.json")


def _config_path(out: str) -> Path:
    return Path(str(out) + ".config.json")


def _stats(values: np.ndarray) -> dict[str, float]:
    return {"min": float(values.min()), "max": float(values.max()), "mean": float(values.mean())}


def _load_points(args: argparse.Namespace, group_column: Any = None) -> dataio.LabeledDataset:
    ds = dataio.load_csv(args.input, args.label_column, group_column, args.header)
    return dataio.normalize_unit_interval(ds) if args.normalize else ds


def _scores_csv(
    header: str,
    ids: np.ndarray,
    sims: np.ndarray,
    labels: np.ndarray | None,
    anomaly_score: bool = False,
) -> str:
    """One row per item, most anomalous first; rank 1 is the lowest similarity."""
    header += ",anomaly_score" if anomaly_score else ""
    lines = [header + (",label" if labels is not None else "")]
    for r, item in enumerate(rank(sims), start=1):
        row = f"{int(ids[item.id])},{item.similarity!r},{r}"
        if anomaly_score:
            row += f",{1.0 - item.similarity!r}"
        if labels is not None:
            row += f",{int(labels[item.id])}"
        lines.append(row)
    return "\n".join(lines) + "\n"


# --- fit -------------------------------------------------------------------


def cmd_fit(args: argparse.Namespace) -> int:
    ds = _load_points(args)
    model = fit_isolation_model(ds.points, args.psi, args.t, args.seed, args.threads)
    out = _Outputs()
    out.add(args.out, json.dumps(model.to_dict()))
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- point-score -----------------------------------------------------------


def _point_scorer(args: argparse.Namespace, X: np.ndarray) -> Callable[[float], np.ndarray]:
    """Map the searched parameter (psi or sigma) to similarities."""
    det = args.detector
    if det in ("idk", "norm"):
        saved = load_model(args.model) if args.model else None

        def by_psi(psi: float) -> np.ndarray:
            model = saved or fit_isolation_model(X, int(psi), args.t, args.seed, args.threads)
            if det == "idk":
                return idk_point_similarities(model, X)
            return feature_norms(model, X)

        return by_psi

    mode = "exact" if det == "gdk" else "nystrom"
    return lambda sigma: gdk_point_similarities(X, sigma, mode, args.s, args.seed)


def cmd_point_score(args: argparse.Namespace) -> int:
    ds = _load_points(args)
    X = ds.points
    scorer = _point_scorer(args, X)
    isolation = args.detector in ("idk", "norm")
    grid_flag = args.grid_psi if isolation else args.sigma_grid
    if (args.grid_psi and not isolation) or (args.sigma_grid and isolation):
        raise ParameterError(
            "--grid-psi applies to idk/norm and --sigma-grid to gdk/nystrom, "
            f"not to --detector {args.detector}"
        )
    if args.model and (not isolation or args.grid_psi):
        raise ParameterError("--model only works with --detector idk or norm and without --grid-psi")

    summary: dict[str, Any] = {"detector": args.detector, "n": int(ds.n), "seed": args.seed}
    if isolation:
        summary.update(t=args.t, psi=args.psi)
    else:
        summary.update(sigma=args.sigma)
        if args.detector == "nystrom":
            summary["s"] = args.s if args.s is not None else default_landmarks(ds.n)

    if grid_flag:
        if ds.labels is None:
            raise ParameterError("parameter search needs labels: pass --label-column")
        name = "psi" if isolation else "sigma"
        grid = [p for p in PSI_GRID if p <= ds.n] if isolation else list(SIGMA_GRID)
        table = [(p, auc(scorer(p), ds.labels)) for p in grid]
        best, best_auc = max(table, key=lambda pa: pa[1])
        summary[name] = best
        summary["grid"] = [{name: p, "auc": a} for p, a in table]
        summary[f"best_{name}"] = best
        summary["best_auc"] = best_auc
        sims = scorer(best)
    else:
        sims = scorer(args.psi if isolation else args.sigma)
    if args.model:
        model = load_model(args.model)
        summary.update(model=str(args.model), t=model.t, psi=model.psi, seed=model.seed)
    summary["similarity"] = _stats(sims)
    if ds.labels is not None and 0 < ds.labels.sum() < ds.n:
        summary["auc"] = auc(sims, ds.labels)

    out = _Outputs()
    out.add(args.out, _scores_csv("id,similarity,rank", np.arange(ds.n), sims, ds.labels, args.anomaly_score))
    out.add(_summary_path(args.out), json.dumps(summary, indent=2) + "\n")
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- group-score -----------------------------------------------------------


def cmd_group_score(args: argparse.Namespace) -> int:
    if args.group_column is None:
        raise ParameterError("group-score needs --group-column to say which column holds group ids")
    ds = _load_points(args, args.group_column)
    groups, labels = ds.to_groups()
    ids = np.array([g.id for g in groups])
    summary: dict[str, Any] = {"detector": args.detector, "n_groups": len(groups), "seed": args.seed}
    if args.detector == "idk2":
        res = idk2(groups, args.psi, args.psi2, args.t, args.seed, args.threads)
        alphas = res.alphas
        summary.update(psi=args.psi, psi2=res.level2.psi, t=args.t)
    elif args.detector == "idk-gdk":
        alphas = idk_gdk_similarities(groups, args.psi, args.t, args.sigma2, args.seed, args.threads)
        summary.update(psi=args.psi, t=args.t, sigma2=args.sigma2)
    else:
        alphas = gdk2_similarities(groups, args.s, args.sigma1, args.sigma2, args.seed)
        summary.update(sigma1=args.sigma1, sigma2=args.sigma2, s=args.s)
    summary["alpha"] = _stats(alphas)
    if labels is not None and 0 < labels.sum() < len(labels):
        summary["auc"] = auc(alphas, labels)

    out = _Outputs()
    out.add(args.out, _scores_csv("group_id,alpha,rank", ids, alphas, labels, args.anomaly_score))
    out.add(_summary_path(args.out), json.dumps(summary, indent=2) + "\n")
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- synth -----------------------------------------------------------------


def _csv_text(ds: dataio.LabeledDataset) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "d.csv"
        dataio.save_csv(ds, p)
        return p.read_text(encoding="utf-8")


def cmd_synth(args: argparse.Namespace) -> int:
    if args.dataset == "three-gaussians":
        ds = dataio.gen_three_gaussians_1d(args.seed)
    elif args.dataset == "gaussian-groups":
        groups, labels = dataio.gen_gaussian_groups(
            args.n_normal, args.n_anom, args.m, args.d, args.seed, args.variant
        )
        ds = dataio.groups_to_dataset(groups, labels)
    else:
        ds = dataio.groups_to_dataset(dataio.gen_three_peak_groups_1d(args.n_groups, args.m, args.seed))
    out = _Outputs()
    out.add(args.out, _csv_text(ds))
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- eval ------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    if args.input:
        ds = _load_points(args)
    else:
        # the three-Gaussian synthetic, with a larger anomaly pool so that
        # gamma up to 4 can be sampled at its base rate of 20 in 1500
        n_pool = 20 * max(1, math.ceil(max(args.gammas, default=1)))
        ds = dataio.normalize_unit_interval(dataio.gen_three_gaussians_1d(args.data_seed, n_pool))
        if args.ratio is None:
            args.ratio = 20 / 1500
    seeds = list(range(args.seeds))
    if args.experiment == "stability":
        report = stability_report(ds.points, args.t_values, psi=args.psi, seeds=seeds, threads=args.threads)
    else:
        if ds.labels is None:
            raise ParameterError("contamination needs labels: pass --label-column")
        report = contamination_report(
            ds.points[~ds.labels],
            ds.points[ds.labels],
            args.gammas,
            ratio=args.ratio,
            psi=args.psi,
            t=args.t,
            seeds=seeds,
            threads=args.threads,
        )
    out = _Outputs()
    out.add(args.out, report.to_json() + "\n")
    if args.csv:
        out.add(args.csv, report.to_csv())
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- bench -----------------------------------------------------------------


def cmd_bench(args: argparse.Namespace) -> int:
    report = scaleup_bench(
        args.groups,
        args.m,
        args.detector,
        repeats=args.repeats,
        psi=args.psi,
        t=args.t,
        sigma=args.sigma,
        seed=args.seed,
        timeout=args.timeout,
    )
    out = _Outputs()
    out.add(args.out, report.to_csv())
    out.add(Path(args.out).with_suffix(".json"), report.to_json() + "\n")
    out.add(_config_path(args.out), _config_echo(args))
    out.commit()
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--in", dest="input", required=required, help="input CSV")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--label-column", type=_column, default=None, help="0/1 label column (index or name)")
    p.add_argument(
        "--no-normalize",
        dest="normalize",
        action="store_false",
        help="skip per-attribute min-max scaling to [0, 1]",
    )


def _add_kernel(p: argparse.ArgumentParser) -> None:
    p.add_argument("--psi", type=int, default=DEFAULT_PSI)
    p.add_argument("--t", type=int, default=DEFAULT_T)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default $ISOKERNEL_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isokernel", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an Isolation Kernel and save it as JSON")
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("point-score", help="score points, lowest similarity first")
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--out", required=True, help="score CSV path")
    p.add_argument("--anomaly-score", action="store_true", help="add a 1 - similarity column")
    p.add_argument("--detector", choices=("idk", "norm", "gdk", "nystrom"), default="idk")
    p.add_argument("--model", default=None, help="use a saved model instead of fitting (idk/norm)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--s", type=int, default=None, help="Nystrom landmarks (default ceil(sqrt(n)))")
    p.add_argument("--grid-psi", action="store_true", help="search psi over 2..4096 by AUC")
    p.add_argument("--sigma-grid", action="store_true", help="search sigma over 2^-5..2^5 by AUC")
    p.set_defaults(func=cmd_point_score)

    p = sub.add_parser("group-score", help="score groups, lowest alpha first")
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--out", required=True, help="score CSV path")
    p.add_argument("--anomaly-score", action="store_true", help="add a 1 - similarity column")
    p.add_argument("--group-column", type=_column, default=None, help="group id column (index or name)")
    p.add_argument("--detector", choices=("idk2", "gdk2", "idk-gdk"), default="idk2")
    p.add_argument("--psi2", type=int, default=None, help="level-2 sample size (idk2)")
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--s", type=int, default=None, help="Nystrom landmarks (gdk2)")
    p.set_defaults(func=cmd_group_score)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("dataset", choices=("three-gaussians", "gaussian-groups", "three-peak-groups"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-normal", type=int, default=300)
    p.add_argument("--n-anom", type=int, default=3)
    p.add_argument("--n-groups", type=int, default=1500)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--variant", choices=("single", "mixture", "two-density"), default="single")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="stability or contamination experiment")
    p.add_argument("experiment", choices=("stability", "contamination"))
    _add_input(p, required=False)
    _add_kernel(p)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", default=None, help="also write per-run rows as CSV")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds (0..n-1)")
    p.add_argument("--t-values", type=_int_list, default=[100, 1000])
    p.add_argument("--gammas", type=_float_list, default=[0.0, 1.0, 2.0, 4.0])
    p.add_argument("--ratio", type=float, default=None, help="base anomaly rate for gamma=1")
    p.add_argument("--data-seed", type=int, default=0, help="synthetic data seed when --in is absent")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="timing benchmarks")
    p.add_argument("benchmark", choices=("scaleup",))
    p.add_argument("--out", required=True, help="timing CSV path (a .json report is written beside it)")
    p.add_argument("--groups", type=_int_list, default=[500, 1000])
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--detector", choices=("idk2", "gdk2", "gdk_exact_pairwise"), default="idk2")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--psi", type=int, default=DEFAULT_PSI)
    p.add_argument("--t", type=int, default=DEFAULT_T)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=None, help="stop after a size slower than this (s)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IsoKernelError, OSError) as exc:
        print(f"isokernel {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
