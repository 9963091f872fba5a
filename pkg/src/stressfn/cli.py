"""Experiment runner: seeded runs, sweeps, and the operator pipeline.

    stressfn run --problem tube --method dcm --seed 42 --iters 2000 --out out/
    stressfn sweep --problem torsion --method dcm --axis ratios --out sweep/
    stressfn operator build-data --problem tube --out op/
    stressfn schema

Every run writes ``report.json`` (versioned schema), ``history.csv``
(iteration, loss), ``fields.csv`` (problem-specific columns) and
``timing.json`` into its output directory. Sweeps write ``summary.csv`` with
a mean +/- std footer. Reruns with identical configuration and seed produce
byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nets, operator, torsion, tube, wedge
from .errors import InvalidConfigError, StressfnError
from .optim import TrainConfig
from .report import (RunReport, mean_std_cell, write_fields_csv,
                     write_history_csv, write_report, write_summary_csv,
                     write_timing_json)

VALID_METHODS = {
    "torsion": ("dcm", "dem", "strong-disp", "strong-stress", "dcm-o"),
    "tube": ("dcm", "dcm-p", "dem", "strong-disp", "dcm-o"),
    "wedge": ("dcm", "dem", "strong-stress", "dcm-o"),
}
REJECTION_REASONS = {
    ("tube", "strong-stress"): (
        "the stress-function strong form cannot impose displacement boundary "
        "conditions directly (they enter only through boundary integrals); "
        "use dcm, dcm-p, dem or strong-disp for the tube"),
    ("wedge", "strong-disp"): (
        "the displacement strong form needs the ln(r) displacement term "
        "hard-coded; the wedge comparison uses dcm, dem or strong-stress"),
    ("torsion", "dcm-p"): (
        "biharmonic augmentation applies to plane (Airy) fields, not the "
        "torsion stress function"),
    ("wedge", "dcm-p"): (
        "biharmonic augmentation is exercised on the tube benchmark only"),
}

DEFAULT_ITERS = {
    ("torsion", "dcm"): 2500,
    ("torsion", "dem"): 2500,
    ("torsion", "strong-disp"): 2500,
    ("torsion", "strong-stress"): 2500,
    ("tube", "dcm"): 2000,
    ("tube", "dcm-p"): 2000,
    ("tube", "dem"): 2000,
    ("tube", "strong-disp"): 2000,
    ("wedge", "dcm"): 10_000,
    ("wedge", "dem"): 4000,
    ("wedge", "strong-stress"): 30_000,
}


@dataclass
class ExperimentConfig:
    problem: str = "tube"
    method: str = "dcm"
    seed: int = 0
    iters: int = 0                  # 0 -> per-problem default
    lr: float = 1e-3
    out: str = "out"
    ratio: float = 1.0
    alpha_init: float = 5e-4
    betas: tuple = (30.0, 30.0, 30.0, 30.0)
    biharmonic: tuple = ()
    n_interior: int = 10_000
    n_r: int = 2048
    n_theta: int = 100
    operator_model: str = ""
    operator_data: str = ""

    def validate(self):
        if self.problem not in VALID_METHODS:
            raise InvalidConfigError(f"unknown problem {self.problem!r}")
        if self.method not in VALID_METHODS[self.problem]:
            reason = REJECTION_REASONS.get((self.problem, self.method))
            if reason is None:
                reason = f"{self.method!r} is not a method of {self.problem!r}"
            raise InvalidConfigError(
                f"method {self.method!r} is not supported for problem "
                f"{self.problem!r}: {reason}")
        return self

    def train_config(self):
        iters = self.iters or DEFAULT_ITERS.get((self.problem, self.method), 2000)
        return TrainConfig(max_iters=iters, lr=self.lr, seed=self.seed,
                           fixed_iters=True)

    def echo(self):
        d = dict(self.__dict__)
        d["betas"] = list(self.betas)
        d["biharmonic"] = list(self.biharmonic)
        return d


def parse_config_file(path):
    """Flat key=value text; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"config line without '=': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(cfg_dict):
    cfg = ExperimentConfig()
    for key, value in cfg_dict.items():
        if not hasattr(cfg, key):
            raise InvalidConfigError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, tuple):
            items = (value if isinstance(value, (list, tuple))
                     else [v for v in str(value).split(",") if v != ""])
            parsed = tuple(float(v) if key == "betas" else v for v in items)
        elif isinstance(current, bool):
            parsed = str(value).lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            parsed = int(value)
        elif isinstance(current, float):
            parsed = float(value)
        else:
            parsed = value
        setattr(cfg, key, parsed)
    return cfg


# ---------------------------------------------------------------------------
# single runs


def execute_run(cfg):
    """Run one (problem, method) experiment; returns (report, files)."""
    cfg.validate()
    tc = cfg.train_config()
    if cfg.method == "dcm-o":
        return _execute_operator_run(cfg, tc)
    if cfg.problem == "torsion":
        return _run_torsion(cfg, tc)
    if cfg.problem == "tube":
        return _run_tube(cfg, tc)
    return _run_wedge(cfg, tc)


def _run_torsion(cfg, tc):
    spec = torsion.TorsionSpec(a=cfg.ratio, b=1.0, alpha_init=cfg.alpha_init)
    fn = {"dcm": torsion.dcm_torsion, "dem": torsion.dem_torsion,
          "strong-disp": torsion.strong_disp_torsion,
          "strong-stress": torsion.strong_stress_torsion}[cfg.method]
    kwargs = {"config": tc, "n_interior": cfg.n_interior}
    res = fn(spec, **kwargs)
    report = RunReport(
        problem="torsion", method=cfg.method, seed=cfg.seed,
        iterations=res.train.iterations, converged=res.train.converged,
        seconds=res.seconds,
        energies={"loss_final": float(res.train.loss_history[-1]),
                  "loss_exact": res.loss_exact},
        scalars={"alpha_pred": res.alpha, "alpha_exact": res.alpha_exact,
                 "alpha_rel_err": res.alpha_rel_err,
                 "tau_pred": res.tau_max, "tau_exact": res.tau_exact,
                 "tau_rel_err": res.tau_rel_err},
        field_errors={},
        flags={"tau_argmax_on_boundary": res.tau_argmax_on_boundary,
               "table2_beta1_suspect": res.table2_beta1_suspect},
        config=cfg.echo())
    return report, {"history": res.train.loss_history, "fields": res.grid}


def _run_tube(cfg, tc):
    spec = tube.TubeSpec()
    if cfg.method in ("dcm", "dcm-p"):
        biharmonic = cfg.biharmonic
        if cfg.method == "dcm-p" and not biharmonic:
            biharmonic = tube.BIHARMONIC_TERMS
        res = tube.dcm_tube(spec, config=tc, n_r=cfg.n_r, biharmonic=biharmonic)
    elif cfg.method == "dem":
        res = tube.dem_tube(spec, config=tc, n_r=cfg.n_r)
    else:
        res = tube.strong_disp_tube(spec, config=tc, n_r=cfg.n_r)
    report = RunReport(
        problem="tube", method=cfg.method, seed=cfg.seed,
        iterations=res.train.iterations, converged=res.train.converged,
        seconds=res.seconds,
        energies={"wc": res.wc, "wc_exact": res.wc_exact,
                  "vc": res.vc, "vc_exact": res.vc_exact, "pi": res.pi},
        scalars={"coeffs": list(res.coeffs) if res.coeffs is not None else []},
        field_errors={"l2_sigma_r": res.l2_sr, "l2_sigma_theta": res.l2_sth},
        config=cfg.echo())
    return report, {"history": res.train.loss_history, "fields": res.grid}


def _run_wedge(cfg, tc):
    spec = wedge.WedgeSpec(betas=cfg.betas)
    if cfg.method == "dcm":
        res = wedge.dcm_wedge(spec, config=tc, n_theta=cfg.n_theta)
    elif cfg.method == "dem":
        res = wedge.dem_wedge(spec, config=tc, n_theta=cfg.n_theta)
    else:
        res = wedge.strong_stress_wedge(spec, config=tc, n_theta=cfg.n_theta)
    report = RunReport(
        problem="wedge", method=cfg.method, seed=cfg.seed,
        iterations=res.train.iterations, converged=res.train.converged,
        seconds=res.seconds,
        energies={"wc": res.wc, "wc_exact": res.wc_exact},
        scalars=res.penalties or {},
        field_errors={"l2_sigma_r": res.l2_sr, "l2_sigma_theta": res.l2_sth,
                      "l2_tau_rtheta": res.l2_trt},
        config=cfg.echo())
    return report, {"history": res.train.loss_history, "fields": res.grid}


def _execute_operator_run(cfg, tc):
    if not cfg.operator_model or not cfg.operator_data:
        raise InvalidConfigError(
            "method dcm-o needs --operator-model and --operator-data "
            "artifacts from `stressfn operator pretrain`/`build-data`")
    for path in (cfg.operator_model, cfg.operator_data):
        if not Path(path).exists():
            raise InvalidConfigError(f"missing operator artifact: {path}")
    op = nets.load_model(cfg.operator_model)
    data = operator.load_dataset(cfg.operator_data)
    if data.problem != cfg.problem:
        raise InvalidConfigError(
            f"dataset is for {data.problem!r}, run asks for {cfg.problem!r}")
    if cfg.problem == "torsion":
        theta, res, spec = operator.finetune_torsion(op, data, config=tc,
                                                     n_interior=cfg.n_interior)
        fields = {}
        errors = {}
    elif cfg.problem == "tube":
        theta, res, spec = operator.finetune_tube(op, data, config=tc, n_r=cfg.n_r)
        fields = operator.tube_fields_at(op, data, spec, theta)
        errors = {
            "l2_sigma_r": float(np.linalg.norm(fields["sigma_r_pred"] - fields["sigma_r_exact"])
                                / np.linalg.norm(fields["sigma_r_exact"])),
            "l2_sigma_theta": float(np.linalg.norm(fields["sigma_theta_pred"] - fields["sigma_theta_exact"])
                                    / np.linalg.norm(fields["sigma_theta_exact"]))}
    else:
        theta, res, spec = operator.finetune_wedge(op, data, config=tc,
                                                   n_theta=cfg.n_theta)
        fields = operator.wedge_fields_at(op, data, spec, theta)
        errors = {f"l2_{k.replace('_pred', '')}": float(
            np.linalg.norm(fields[k] - fields[k.replace("_pred", "_exact")])
            / np.linalg.norm(fields[k.replace("_pred", "_exact")]))
            for k in fields if k.endswith("_pred")}
    report = RunReport(
        problem=cfg.problem, method="dcm-o", seed=cfg.seed,
        iterations=res.iterations, converged=res.converged, seconds=res.seconds,
        energies={"loss_final": float(res.loss_history[-1])},
        field_errors=errors, config=cfg.echo())
    return report, {"history": res.loss_history, "fields": fields,
                    "finetuned": (op, theta)}


def write_run_outputs(out_dir, report, files):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "report.json", report)
    write_history_csv(out / "history.csv", files["history"])
    if files.get("fields"):
        write_fields_csv(out / "fields.csv", files["fields"])
    write_timing_json(out / "timing.json",
                      {report.method: report.seconds})
    return out


# ---------------------------------------------------------------------------
# sweeps


SWEEP_AXES = ("ratios", "seeds", "alpha_init", "biharmonic-sets")
TABLE3_RATIOS = (1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 10.0)


def _sweep_job(payload):
    cfg = _coerce(payload)
    report, files = execute_run(cfg)
    write_run_outputs(Path(cfg.out), report, files)
    return report


def _pool_size(n_items):
    cap = os.environ.get("STRESSFN_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(cap, n_items))


def run_sweep(cfg, axis, n_seeds=3, out_dir="sweep"):
    if axis not in SWEEP_AXES:
        raise InvalidConfigError(f"unknown sweep axis {axis!r}; one of {SWEEP_AXES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    if axis == "ratios":
        if cfg.problem != "torsion":
            raise InvalidConfigError("the ratios axis applies to the torsion problem")
        for ratio in TABLE3_RATIOS:
            item = cfg.echo()
            item.update(ratio=ratio, out=str(out / f"ratio_{ratio:g}"))
            jobs.append(item)
    elif axis == "seeds":
        for seed in range(n_seeds):
            item = cfg.echo()
            item.update(seed=seed, out=str(out / f"seed_{seed}"))
            jobs.append(item)
    elif axis == "alpha_init":
        for a1 in (5e-4, 5e-3):
            item = cfg.echo()
            item.update(alpha_init=a1, out=str(out / f"alpha_{a1:g}"))
            jobs.append(item)
    else:  # biharmonic-sets
        if (cfg.problem, cfg.method) != ("tube", "dcm-p"):
            raise InvalidConfigError(
                "the biharmonic-sets axis applies to tube dcm-p")
        for terms in (("lnr",), ("r2",), ("r2lnr",), tube.BIHARMONIC_TERMS):
            item = cfg.echo()
            item.update(biharmonic=list(terms),
                        out=str(out / ("bh_" + "_".join(terms))))
            jobs.append(item)

    workers = _pool_size(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_job, jobs))
    else:
        reports = [_sweep_job(j) for j in jobs]
    _write_sweep_summary(out / "summary.csv", axis, jobs, reports)
    return reports


def _write_sweep_summary(path, axis, jobs, reports):
    if axis in ("ratios", "seeds", "alpha_init") and reports[0].problem == "torsion":
        header = ["axis_value", "method", "alpha_pred", "alpha_exact",
                  "alpha_rel_err", "tau_pred", "tau_exact", "tau_rel_err",
                  "seconds"]
        rows = []
        axis_key = {"ratios": "ratio", "seeds": "seed", "alpha_init": "alpha_init"}[axis]
        for job, rep in zip(jobs, reports):
            s = rep.scalars
            rows.append([job[axis_key], rep.method, s["alpha_pred"],
                         s["alpha_exact"], s["alpha_rel_err"], s["tau_pred"],
                         s["tau_exact"], s["tau_rel_err"], rep.seconds])
        footer = [["mean+/-std", reports[0].method,
                   "", "", mean_std_cell([r.scalars["alpha_rel_err"] for r in reports]),
                   "", "", mean_std_cell([r.scalars["tau_rel_err"] for r in reports]),
                   mean_std_cell([r.seconds for r in reports])]]
        if axis == "seeds":
            median = [["median", reports[0].method, "", "",
                       float(np.median([r.scalars["alpha_rel_err"] for r in reports])),
                       "", "",
                       float(np.median([r.scalars["tau_rel_err"] for r in reports])),
                       ""]]
            footer = median + footer
        write_summary_csv(path, header, rows, footer)
        return
    header = ["axis_value", "method", "l2_sigma_r", "l2_sigma_theta",
              "l2_tau_rtheta", "wc", "seconds"]
    rows = []
    for job, rep in zip(jobs, reports):
        axis_val = {"seeds": job.get("seed"), "alpha_init": job.get("alpha_init"),
                    "biharmonic-sets": "+".join(job.get("biharmonic", []))}.get(
                        axis, job.get("seed"))
        rows.append([axis_val, rep.method,
                     rep.field_errors.get("l2_sigma_r", ""),
                     rep.field_errors.get("l2_sigma_theta", ""),
                     rep.field_errors.get("l2_tau_rtheta", ""),
                     rep.energies.get("wc", ""), rep.seconds])
    footers = []
    if axis == "seeds":
        for key in ("l2_sigma_r", "l2_sigma_theta"):
            vals = [r.field_errors.get(key) for r in reports
                    if r.field_errors.get(key) is not None]
            if vals:
                footers.append([f"median_{key}", reports[0].method,
                                float(np.median(vals)), "", "", "", ""])
    write_summary_csv(path, header, rows, footers)


# ---------------------------------------------------------------------------
# operator pipeline


def operator_build_data(problem, out_dir, grid=100):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = operator.build_dataset(problem, grid=grid)
    path = out / f"{problem}_data.npz"
    operator.save_dataset(path, data)
    return path


def operator_pretrain(problem, data_path, out_dir, seed=0, iters=5000,
                      batch_points=4096):
    if not Path(data_path).exists():
        raise InvalidConfigError(f"missing dataset file: {data_path}")
    data = operator.load_dataset(data_path)
    if data.problem != problem:
        raise InvalidConfigError(
            f"dataset is for {data.problem!r}, not {problem!r}")
    op = operator.deeponet_for(problem, seed)
    trained, res = operator.pretrain(op, data, TrainConfig(max_iters=iters,
                                                           seed=seed),
                                     batch_points=batch_points)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / f"{problem}_operator.bin"
    nets.save_model(model_path, trained)
    write_history_csv(out / f"{problem}_pretrain_history.csv", res.loss_history)
    return model_path


def operator_finetune(problem, model_path, data_path, out_dir, seed=0, iters=0):
    cfg = ExperimentConfig(problem=problem, method="dcm-o", seed=seed,
                           iters=iters or
                           {"torsion": 2000, "tube": 2000, "wedge": 10_000}[problem],
                           out=str(out_dir), operator_model=str(model_path),
                           operator_data=str(data_path))
    report, files = execute_run(cfg)
    out = write_run_outputs(out_dir, report, files)
    op, theta = files["finetuned"]
    tuned = nets.DeepOnet(nets.Mlp(op.branch.widths, theta[:op.branch.params.size]),
                          nets.Mlp(op.trunk.widths, theta[op.branch.params.size:]))
    nets.save_model(out / f"{problem}_operator_finetuned.bin", tuned)
    return report


def operator_eval(problem, model_path, data_path, out_dir):
    for path in (model_path, data_path):
        if not Path(path).exists():
            raise InvalidConfigError(f"missing operator artifact: {path}")
    op = nets.load_model(model_path)
    data = operator.load_dataset(data_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    theta = op.pack()
    if problem == "tube":
        fields = operator.tube_fields_at(op, data, tube.TubeSpec(), theta)
    elif problem == "wedge":
        fields = operator.wedge_fields_at(op, data, wedge.WedgeSpec(), theta)
    else:
        spec = torsion.TorsionSpec()
        pts, _ = torsion._trap_grid(spec, n=101)
        phi = operator.torsion_phi_builder(op, data, spec)(pts, 1)
        from .tape import value_of
        _, tzx_e, tzy_e = torsion.torsion_series_oracle(spec, pts[:, 0], pts[:, 1])
        fields = {"x": pts[:, 0], "y": pts[:, 1],
                  "tau_zx_pred": value_of(phi.partial((0, 1))),
                  "tau_zy_pred": -value_of(phi.partial((1, 0))),
                  "tau_zx_exact": tzx_e, "tau_zy_exact": tzy_e}
    write_fields_csv(out / f"{problem}_eval_fields.csv", fields)
    return out


# ---------------------------------------------------------------------------
# schema documentation


SCHEMA_TEXT = """\
report.json (schema_version 1)
  problem, method, seed, iterations, converged, seconds
  energies: per-problem energy components (wc, vc, pi, loss_final, ...)
  scalars:  predicted scalars and relative errors (alpha_*, tau_*, ...)
            rel_err = |pred - exact| / |exact|
  field_errors: L2 norms ||pred - exact||_2 / ||exact||_2 per component
  flags, config: booleans and the full configuration echo

history.csv
  iteration, loss                      one row per training iteration

fields.csv (per problem)
  torsion: x, y, tau_zx_pred, tau_zy_pred, tau_zx_exact, tau_zy_exact
  tube:    r, sigma_r_pred, sigma_r_exact, sigma_theta_pred,
           sigma_theta_exact [, u_pred, u_exact]
  wedge:   theta, sigma_r_pred/exact, sigma_theta_pred/exact,
           tau_rtheta_pred/exact

summary.csv (sweeps)
  torsion axes: axis_value, method, alpha_pred, alpha_exact, alpha_rel_err,
                tau_pred, tau_exact, tau_rel_err, seconds
                final row(s): median (seeds axis) and mean+/-std footer
  other axes:   axis_value, method, l2_sigma_r, l2_sigma_theta,
                l2_tau_rtheta, wc, seconds

timing.json
  {method: wall seconds} for the run

All CSV files are UTF-8 with '.' as the decimal separator.
"""


def main(argv=None):
    parser = argparse.ArgumentParser(prog="stressfn",
                                     description="stress-function solver workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    _add_run_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="run a family of experiments")
    _add_run_flags(sweep_p)
    sweep_p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep_p.add_argument("--n-seeds", type=int, default=3)

    op_p = sub.add_parser("operator", help="operator-learning pipeline")
    op_sub = op_p.add_subparsers(dest="stage", required=True)
    for stage in ("build-data", "pretrain", "finetune", "eval"):
        sp = op_sub.add_parser(stage)
        sp.add_argument("--problem", required=True,
                        choices=("torsion", "tube", "wedge"))
        sp.add_argument("--out", default="operator_out")
        if stage != "build-data":
            sp.add_argument("--data", required=True)
        if stage in ("finetune", "eval"):
            sp.add_argument("--model", required=True)
        if stage in ("pretrain", "finetune"):
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--iters", type=int, default=0)
        if stage == "build-data":
            sp.add_argument("--grid", type=int, default=100)

    sub.add_parser("schema", help="print the output column documentation")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except StressfnError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _add_run_flags(p):
    p.add_argument("--problem", choices=("torsion", "tube", "wedge"),
                   default="tube")
    p.add_argument("--method", default="dcm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--out", default="out")
    p.add_argument("--config", default="")
    p.add_argument("--ratio", type=float, default=1.0)
    p.add_argument("--alpha-init", type=float, default=5e-4)
    p.add_argument("--betas", default="30,30,30,30")
    p.add_argument("--biharmonic", default="")
    p.add_argument("--n-interior", type=int, default=10_000)
    p.add_argument("--n-r", type=int, default=2048)
    p.add_argument("--n-theta", type=int, default=100)
    p.add_argument("--operator-model", default="")
    p.add_argument("--operator-data", default="")


def _config_from_args(args):
    base = {}
    if args.config:
        base.update(parse_config_file(args.config))
    overrides = {
        "problem": args.problem, "method": args.method, "seed": args.seed,
        "iters": args.iters, "lr": args.lr, "out": args.out,
        "ratio": args.ratio, "alpha_init": args.alpha_init,
        "betas": args.betas, "n_interior": args.n_interior,
        "n_r": args.n_r, "n_theta": args.n_theta,
        "operator_model": args.operator_model,
        "operator_data": args.operator_data,
    }
    if args.biharmonic:
        overrides["biharmonic"] = args.biharmonic
    base.update({k: v for k, v in overrides.items()})
    return _coerce(base)


def _dispatch(args):
    if args.command == "schema":
        print(SCHEMA_TEXT)
        return 0
    if args.command == "run":
        cfg = _config_from_args(args)
        try:
            report, files = execute_run(cfg)
        except StressfnError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        out = write_run_outputs(cfg.out, report, files)
        print(f"wrote {out}/report.json")
        summary = {**report.scalars, **report.field_errors, **report.energies}
        for key in sorted(summary):
            if isinstance(summary[key], float):
                print(f"  {key} = {summary[key]:.6g}")
        return 0
    if args.command == "sweep":
        cfg = _config_from_args(args)
        run_sweep(cfg, args.axis, n_seeds=args.n_seeds, out_dir=args.out)
        print(f"wrote {args.out}/summary.csv")
        return 0
    if args.command == "operator":
        if args.stage == "build-data":
            path = operator_build_data(args.problem, args.out, grid=args.grid)
            print(f"wrote {path}")
        elif args.stage == "pretrain":
            path = operator_pretrain(args.problem, args.data, args.out,
                                     seed=args.seed, iters=args.iters or 5000)
            print(f"wrote {path}")
        elif args.stage == "finetune":
            report = operator_finetune(args.problem, args.model, args.data,
                                       args.out, seed=args.seed,
                                       iters=args.iters)
            print(f"finetuned: {report.field_errors}")
        else:
            out = operator_eval(args.problem, args.model, args.data, args.out)
            print(f"wrote {out}")
        return 0
    raise InvalidConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
