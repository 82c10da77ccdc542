"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``predict``, ``evaluate``, ``study``.
Each writes into ``--out DIR`` together with ``manifest.json``.

Options may also come from ``--config FILE``, a flat ``key = value`` file
whose keys are the long flag names (``flash-prob = 0.2``). Flags on the
command line take precedence over the file, which takes precedence over
built-in defaults.

Exit codes: 0 success, 1 unexpected error, 2 usage, 3 input parse error,
4 numeric degeneracy (degenerate or separated fit, single-class labels),
5 model/data schema mismatch.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from .errors import (ConfigError, DatasetFormatError, DegenerateLabelsError,
                     DegenerateResponseError, SchemaError, SingularDesignError,
                     StudyError)
from .evaluate import roc_curve
from .glm import fit_logistic, format_table, predict_prob, stepwise_aic
from .lif import LifParams, derive_seed, gen_stimulus, make_rng, simulate_lif
from .pointproc import PRO_TERMS, Dataset, Sweep, build_design, canonical_terms
from .studies import (StudyConfig, run_auc_study, run_parameter_sweep,
                      run_significance_study)

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_PARSE, EXIT_DEGENERATE, EXIT_SCHEMA = 0, 1, 2, 3, 4, 5


class CliFailure(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"probability {v} outside [0, 1]")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v} is not positive")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be >= 1")
    return v


def parse_selector(text):
    """``"0-9"``, ``"0,2,5-7"`` -> sorted list of ints; None/"all" -> None."""
    if text is None or text.strip().lower() == "all":
        return None
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                out.update(range(int(lo), int(hi) + 1))
            else:
                out.add(int(lo))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad sweep selector {text!r}") from None
    return sorted(out)


def _multipliers(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad multiplier list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty multiplier list")
    return vals


def read_config_file(path):
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _add_lif_flags(p):
    p.add_argument("--c", type=_positive_float, default=7.0, help="membrane capacitance C")
    p.add_argument("--r", type=_positive_float, default=3.0, help="membrane resistance R")
    p.add_argument("--substeps", type=_positive_int, default=100,
                   help="Euler steps per 5 ms bin")


def build_parser():
    parser = argparse.ArgumentParser(prog="optopro", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate LIF sweeps driven by random flashes")
    p.add_argument("--bins", type=_positive_int, default=5000)
    p.add_argument("--sweeps", type=_positive_int, default=1)
    p.add_argument("--flash-prob", type=_probability, default=0.14)
    _add_lif_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit the response model to a dataset CSV")
    p.add_argument("--data", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--terms", default=",".join(PRO_TERMS),
                   help="comma-separated terms, e.g. PF,CF,SF,CF:SF")
    g.add_argument("--stepwise", action="store_true",
                   help="AIC forward/backward search from the full polynomial model")
    p.add_argument("--max-degree", type=_positive_int, default=3)
    p.add_argument("--train-sweeps", type=parse_selector, default=None,
                   help="sweep ids to fit on, e.g. 0-9 (default: all)")
    p.add_argument("--strict-ddagger", action="store_true",
                   help="take the last flash strictly before the last spike")
    p.add_argument("--out", required=True)

    for name, helptext in (("predict", "per-bin spike probabilities"),
                           ("evaluate", "ROC curve and AUC on labelled data")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--sweeps", type=parse_selector, default=None,
                       help="sweep ids to score (default: all)")
        p.add_argument("--strict-ddagger", action="store_true")
        if name == "evaluate":
            p.add_argument("--labels-from-data", action="store_true", default=True,
                           help="take labels from the spike column (the only source)")
        p.add_argument("--out", required=True)

    p = sub.add_parser("study", help="run a simulation study")
    p.add_argument("--study", required=True,
                   choices=["significance", "auc", "sweep-c", "sweep-r"])
    p.add_argument("--reps", type=_positive_int, default=None,
                   help="replications (per grid value for sweeps)")
    p.add_argument("--bins", type=_positive_int, default=None)
    p.add_argument("--flash-prob", type=_probability, default=0.14)
    _add_lif_flags(p)
    p.add_argument("--alpha", type=_probability, default=0.05)
    p.add_argument("--multipliers", type=_multipliers, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", required=True)

    for sp in sub.choices.values():
        sp.add_argument("--config", default=None, help="key = value config file")
    return parser


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv):
    parser = build_parser()
    path = _config_path(argv)
    command = next((tok for tok in argv if tok in COMMANDS), None)
    if path and command:
        sub = parser._subparsers._group_actions[0].choices[command]
        try:
            values = read_config_file(path)
        except (OSError, ConfigError) as exc:
            parser.error(str(exc))
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in known or key in ("help", "config"):
                parser.error(f"unknown config key {key!r}")
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[key] = action.type(raw) if action.type else raw
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config key {key!r}: {exc}")
                if action.choices is not None and defaults[key] not in action.choices:
                    parser.error(f"config key {key!r}: invalid choice {raw!r}")
            action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _lif(args):
    return LifParams(C=args.c, R=args.r, substeps_per_bin=args.substeps)


def _resolved(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "config"}


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _select(data: Dataset, ids):
    if ids is None:
        return data
    try:
        return data.select(ids)
    except KeyError as exc:
        raise CliFailure(str(exc), EXIT_USAGE) from None


def cmd_simulate(args):
    out = _outdir(args.out)
    params = _lif(args)
    sweeps = []
    for i in range(args.sweeps):
        rng = make_rng(derive_seed(args.seed, i))
        trace = simulate_lif(params, gen_stimulus(args.bins, args.flash_prob, rng))
        sweeps.append(Sweep(i, trace.flashes, trace.spikes, params.bin_ms))
    data = Dataset(tuple(sweeps))
    fio.write_dataset(data, out / "data.csv")
    fio.write_json(out / "manifest.json",
                   fio.make_manifest("simulate", _resolved(args), args.seed))
    n_fl = sum(int(s.flashes.sum()) for s in data)
    n_sp = sum(int(s.spikes.sum()) for s in data)
    print(f"wrote {out / 'data.csv'}: {len(data)} sweep(s), {data.n_bins} bins, "
          f"{n_fl} flashes, {n_sp} spikes")


def cmd_fit(args):
    out = _outdir(args.out)
    data = _select(fio.read_dataset(args.data), args.train_sweeps)
    if args.stepwise:
        model = stepwise_aic(data, args.max_degree, strict_ddagger=args.strict_ddagger)
        rows = [{"step": s.step, "action": s.action, "term": s.term or "",
                 "aic": s.aic, "terms": " ".join(s.terms)} for s in model.steps]
        fio.write_records(out / "steps.csv", rows, ("step", "action", "term", "aic", "terms"))
        for s in model.steps:
            print(f"step {s.step}: {s.action} {s.term or '-'}  AIC={s.aic:.3f}")
    else:
        terms = canonical_terms([t for t in args.terms.split(",") if t.strip()])
        model = fit_logistic(build_design(data, terms, args.strict_ddagger))
    if not model.converged:
        raise CliFailure("fit did not converge: " + "; ".join(model.warnings),
                         EXIT_DEGENERATE)
    fio.write_model(model, out / "model.json")
    table = format_table(model)
    (out / "coefficients.txt").write_text(table, encoding="utf-8")
    fio.write_json(out / "manifest.json",
                   fio.make_manifest("fit", _resolved(args), None, [args.data]))
    sys.stdout.write(table)


def _scored(args):
    model = fio.read_model(args.model)
    data = _select(fio.read_dataset(args.data), args.sweeps)
    design = build_design(data, model.terms, args.strict_ddagger)
    return model, data, design, predict_prob(model, design)


def cmd_predict(args):
    out = _outdir(args.out)
    model, data, design, probs = _scored(args)
    lookup = {(int(s), int(t)): p for s, t, p in zip(design.sweep_ids, design.bins, probs)}
    sids, bins, ps, valid = [], [], [], []
    for sweep in data:
        for t in range(len(sweep)):
            p = lookup.get((sweep.id, t))
            sids.append(sweep.id)
            bins.append(t)
            ps.append(np.nan if p is None else p)
            valid.append(p is not None)
    fio.write_predictions(out / "predictions.csv", sids, bins, ps, valid)
    fio.write_json(out / "manifest.json", fio.make_manifest(
        "predict", _resolved(args), None, [args.model, args.data]))
    print(f"wrote {len(sids)} predictions ({design.n_rows} valid, "
          f"{design.n_excluded} unavailable)")


def cmd_evaluate(args):
    out = _outdir(args.out)
    model, data, design, probs = _scored(args)
    roc = roc_curve(probs, design.responses)
    fio.write_roc(out / "roc.csv", roc)
    summary = {"auc": roc.auc, "n_pos": roc.n_pos, "n_neg": roc.n_neg,
               "n_excluded": design.n_excluded}
    fio.write_json(out / "auc.json", summary)
    fio.write_json(out / "manifest.json", fio.make_manifest(
        "evaluate", _resolved(args), None, [args.model, args.data]))
    print(f"AUC = {roc.auc:.4f} ({roc.n_pos} spikes, {roc.n_neg} non-spike bins, "
          f"{design.n_excluded} excluded)")


STUDY_DEFAULT_REPS = {"significance": 1000, "auc": 20, "sweep-c": 30, "sweep-r": 30}
STUDY_DEFAULT_BINS = {"significance": 5000, "auc": 10000, "sweep-c": 5000, "sweep-r": 5000}


def _record_columns(result):
    terms = list(result.config.terms)
    cols = []
    if result.kind.startswith("sweep"):
        cols += ["grid_index", "rep", "parameter_value"]
    else:
        cols += ["index"]
    cols += ["seed", "status", "n_spikes"]
    cols += [f"coef_{t}" for t in terms] + [f"p_{t}" for t in terms] + ["r2"]
    if result.kind == "auc":
        cols += ["auc", "n_excluded"]
    return cols


def write_study(result, out):
    fio.write_records(out / "records.csv", result.records, _record_columns(result))
    summary = {"study": result.kind, "config": result.config.to_dict(),
               "aggregates": result.aggregates, "dropped": result.dropped}
    if result.kind.startswith("sweep"):
        summary["parameter"] = result.which
        summary["parameter_values"] = list(result.parameter_values)
        terms = list(result.config.terms)
        cols = ["grid_index", "multiplier", "parameter_value", "n_used"]
        for t in terms:
            cols += [f"n_kept_{t}", f"available_{t}", f"mean_coef_{t}", f"se_coef_{t}"]
        fio.write_records(out / "grid.csv", result.grid, cols)
    fio.write_json(out / "summary.json", summary)


def cmd_study(args):
    out = _outdir(args.out)
    reps = args.reps or STUDY_DEFAULT_REPS[args.study]
    bins = args.bins or STUDY_DEFAULT_BINS[args.study]
    cfg = StudyConfig(n_replications=reps, n_bins=bins, flash_prob=args.flash_prob,
                      lif=_lif(args), alpha=args.alpha, base_seed=args.seed,
                      parallelism=args.threads)
    if args.study == "significance":
        result = run_significance_study(cfg)
    elif args.study == "auc":
        result = run_auc_study(cfg)
    else:
        which = "C" if args.study == "sweep-c" else "R"
        result = run_parameter_sweep(which, cfg, args.multipliers)
    write_study(result, out)
    config = _resolved(args)
    config.pop("threads")  # affects wall time only
    fio.write_json(out / "manifest.json", fio.make_manifest("study", config, args.seed))
    agg = result.aggregates
    print(f"{result.kind}: {agg['n_used']}/{agg['n_replications']} replications used")
    for key, value in agg.items():
        if key.startswith(("sig_freq_", "mean_r2", "mean_auc", "slope_", "dropped_frac_")) \
                and "_se_" not in key:
            print(f"  {key} = {value:.4f}")


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "study": cmd_study}


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        COMMANDS[args.command](args)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DatasetFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (DegenerateResponseError, DegenerateLabelsError, SingularDesignError,
            StudyError) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConfigError as exc:
        print(f"usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
