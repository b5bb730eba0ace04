"""Command-line interface.

Subcommands compose the library into reproducible experiments:

* ``synth``   generate a correlated synthetic dataset (labels + logits)
* ``prior``   co-occurrence counts, conditional probabilities, reweighting
* ``train``   fit the refinement head
* ``eval``    metrics report for raw and/or refined logits
* ``analyze`` AP improvement vs. co-occurrence strength, binned

Every subcommand writes ``<subcommand>_manifest.json`` next to its
outputs, recording the tool version, the fully resolved configuration,
SHA-256 digests of all inputs, and the produced file names. Re-running a
subcommand with ``--config <manifest>`` reproduces its outputs byte for
byte.

Flag precedence: explicit flag > --config file value > built-in default.
A config file is a flat JSON object keyed by flag names (dashes as
underscores); a manifest file is accepted anywhere a config file is.

Exit codes: 0 success, 1 validation/input error, 2 runtime or numeric
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    LogitMatrix,
    SyntheticSpec,
    load_labels,
    load_logits,
    synth_generate,
    write_labels,
    write_logits,
)
from .errors import NumericError, ValidationError
from .gcn import gcn_forward, load_model, save_model
from .metrics import delta_ap_analysis, evaluate, per_class_average_precision
from .prior import (
    CondProbMatrix,
    conditional_prob,
    cooccurrence,
    reweighting,
)
from .train import TrainConfig, train

_TOOL = "coocrefine"


# ---------------------------------------------------------------------------
# config resolution and manifests
# ---------------------------------------------------------------------------

def _load_config_file(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    if "subcommand" in raw and "config" in raw:
        raw = raw["config"]        # a manifest doubles as a config file
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: manifest config must be a JSON object")
    return raw


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge flag > config file > default, per documented precedence."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValidationError(
            f"unknown config keys: {', '.join(sorted(unknown))}"
        )
    resolved = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        resolved[key] = value
    return resolved


def _require(resolved: dict, *keys: str):
    for key in keys:
        if resolved[key] is None:
            raise ValidationError(f"missing required --{key.replace('_', '-')}")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _out_dir(resolved: dict) -> Path:
    out = Path(resolved["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ValidationError(f"out_dir not writable: {out}: {exc}") from None
    return out


def _write_manifest(out: Path, subcommand: str, resolved: dict, inputs: dict, outputs):
    manifest = {
        "tool": _TOOL,
        "version": __version__,
        "subcommand": subcommand,
        "seed": resolved.get("seed"),
        "config": resolved,
        "inputs": {role: {"path": str(p), "sha256": _sha256(p)} for role, p in inputs.items()},
        "outputs": sorted(str(o) for o in outputs),
    }
    path = out / f"{subcommand}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# small CSV helpers for matrix outputs
# ---------------------------------------------------------------------------

def _write_square_csv(path, matrix: np.ndarray, names, integer: bool) -> None:
    lines = ["class," + ",".join(names)]
    for name, row in zip(names, matrix):
        if integer:
            cells = ",".join(str(int(v)) for v in row)
        else:
            cells = ",".join(repr(float(v)) for v in row)
        lines.append(f"{name},{cells}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_square_csv(path) -> tuple[np.ndarray, tuple[str, ...]]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    if not lines or not lines[0].startswith("class,"):
        raise ValidationError(f"{path}: malformed header: expected 'class,<names>'")
    names = lines[0].split(",")[1:]
    n = len(names)
    if len(lines) - 1 != n:
        raise ValidationError(f"{path}: expected {n} rows, got {len(lines) - 1}")
    matrix = np.empty((n, n), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != n + 1:
            raise ValidationError(f"{path}: line {i + 2}: expected {n + 1} cells")
        try:
            matrix[i] = [float(c) for c in cells[1:]]
        except ValueError:
            raise ValidationError(f"{path}: line {i + 2}: invalid number") from None
    return matrix, tuple(names)


def _load_cond_prob(path) -> CondProbMatrix:
    # zero-count bookkeeping is not stored in the CSV; propagation only
    # needs the matrix itself
    matrix, _ = _read_square_csv(path)
    return CondProbMatrix(matrix, frozenset())


def _write_alpha_csv(path, weights, names) -> None:
    lines = ["class,alpha"]
    for name, a in zip(names, weights.alphas):
        lines.append(f"{name},{float(a)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_prior_files(out: Path, labels) -> tuple[list[Path], object]:
    cooc = cooccurrence(labels)
    cond = conditional_prob(cooc)
    names = labels.class_names
    c_path, a_path = out / "C.csv", out / "A.csv"
    _write_square_csv(c_path, cooc.counts, names, integer=True)
    _write_square_csv(a_path, cond.probs, names, integer=False)
    return [c_path, a_path], cooc


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------

def _parse_clusters(text) -> tuple[tuple[int, ...], ...]:
    """Cluster sets as 'i,j,k;m,n' or an already-parsed nested list."""
    if not text:
        return ()
    if isinstance(text, (list, tuple)):
        return tuple(tuple(int(i) for i in group) for group in text)
    groups = [g for g in str(text).split(";") if g]
    try:
        return tuple(tuple(int(i) for i in g.split(",")) for g in groups)
    except ValueError:
        raise ValidationError(f"invalid clusters spec '{text}'") from None


def _parse_float_list(text, name: str):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise ValidationError(f"invalid {name} '{text}'") from None


def _parse_dims(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(d) for d in text)
    try:
        return tuple(int(d) for d in str(text).split(","))
    except ValueError:
        raise ValidationError(f"invalid gcn dims '{text}'") from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_SYNTH_DEFAULTS = {
    "n_classes": 20,
    "n_samples": 1000,
    "clusters": "",
    "within_cluster_prob": 0.9,
    "base_prob": 0.3,
    "cluster_probs": None,
    "signal_strength": "2.0",
    "noise_std": 1.0,
    "seed": 0,
    "threads": 1,
    "out_dir": ".",
}


def cmd_synth(args) -> int:
    resolved = _resolve(args, _SYNTH_DEFAULTS)
    out = _out_dir(resolved)
    strengths = _parse_float_list(resolved["signal_strength"], "signal_strength")
    if len(strengths) == 1:
        strengths = strengths * int(resolved["n_classes"])
    spec = SyntheticSpec(
        n_classes=int(resolved["n_classes"]),
        n_samples=int(resolved["n_samples"]),
        clusters=_parse_clusters(resolved["clusters"]),
        within_cluster_prob=float(resolved["within_cluster_prob"]),
        base_prob=float(resolved["base_prob"]),
        signal_strength=strengths,
        noise_std=float(resolved["noise_std"]),
        seed=int(resolved["seed"]),
        cluster_probs=_parse_float_list(resolved["cluster_probs"], "cluster_probs"),
    )
    labels, logits = synth_generate(spec)
    labels_path, logits_path = out / "labels.csv", out / "logits.csv"
    write_labels(labels, labels_path)
    write_logits(logits, labels, logits_path)
    _write_manifest(out, "synth", resolved, {}, [labels_path.name, logits_path.name])
    print(f"wrote {labels_path} and {logits_path} ({spec.n_samples} samples)")
    return 0


_PRIOR_DEFAULTS = {
    "labels": None,
    "reweight_mode": "frequency",
    "seed": 0,
    "threads": 1,
    "out_dir": ".",
}


def cmd_prior(args) -> int:
    resolved = _resolve(args, _PRIOR_DEFAULTS)
    _require(resolved, "labels")
    out = _out_dir(resolved)
    labels = load_labels(resolved["labels"])
    prior_paths, cooc = _write_prior_files(out, labels)
    alpha_path = out / "alpha.csv"
    _write_alpha_csv(alpha_path, reweighting(cooc, resolved["reweight_mode"]), labels.class_names)
    outputs = [p.name for p in prior_paths] + [alpha_path.name]
    _write_manifest(out, "prior", resolved, {"labels": resolved["labels"]}, outputs)
    print(f"wrote {', '.join(outputs)} to {out}")
    return 0


_TRAIN_DEFAULTS = {
    "labels": None,
    "logits": None,
    "val_labels": None,
    "val_logits": None,
    "epochs": 50,
    "batch_size": 32,
    "lr0": 0.002,
    "momentum": 0.0,
    "gamma_pos": 1.0,
    "gamma_neg": 3.0,
    "delta": 0.05,
    "eps": 1e-8,
    "gcn_dims": "1,64,64,1",
    "leaky_slope": 0.01,
    "final_nonlinearity": False,
    "reweight_mode": "frequency",
    "seed": 0,
    "threads": 1,
    "out_dir": ".",
}


def cmd_train(args) -> int:
    resolved = _resolve(args, _TRAIN_DEFAULTS)
    _require(resolved, "labels", "logits")
    if (resolved["val_labels"] is None) != (resolved["val_logits"] is None):
        raise ValidationError("--val-labels and --val-logits must be given together")
    out = _out_dir(resolved)

    labels = load_labels(resolved["labels"])
    logits = load_logits(resolved["logits"], labels)
    validation = None
    inputs = {"labels": resolved["labels"], "logits": resolved["logits"]}
    if resolved["val_labels"] is not None:
        val_labels = load_labels(resolved["val_labels"])
        validation = (val_labels, load_logits(resolved["val_logits"], val_labels))
        inputs["val_labels"] = resolved["val_labels"]
        inputs["val_logits"] = resolved["val_logits"]

    config = TrainConfig(
        epochs=int(resolved["epochs"]),
        batch_size=int(resolved["batch_size"]),
        lr0=float(resolved["lr0"]),
        momentum=float(resolved["momentum"]),
        seed=int(resolved["seed"]),
        gamma_pos=float(resolved["gamma_pos"]),
        gamma_neg=float(resolved["gamma_neg"]),
        delta=float(resolved["delta"]),
        eps=float(resolved["eps"]),
        gcn_dims=_parse_dims(resolved["gcn_dims"]),
        leaky_slope=float(resolved["leaky_slope"]),
        final_nonlinearity=bool(resolved["final_nonlinearity"]),
        reweight_mode=resolved["reweight_mode"],
    )
    model, weights, cond, history = train(labels, logits, config, validation)

    names = labels.class_names
    model_path = out / "model.txt"
    save_model(model, model_path)
    prior_paths, _ = _write_prior_files(out, labels)
    alpha_path = out / "alpha.csv"
    _write_alpha_csv(alpha_path, weights, names)

    history_path = out / "history.csv"
    lines = ["epoch,loss,lr,val_mAP"]
    for rec in history.records:
        val = "" if rec.val_map is None else repr(rec.val_map)
        lines.append(f"{rec.epoch},{rec.mean_loss!r},{rec.lr!r},{val}")
    history_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    outputs = [model_path.name, alpha_path.name, history_path.name]
    outputs += [p.name for p in prior_paths]
    _write_manifest(out, "train", resolved, inputs, outputs)
    last = history.records[-1]
    msg = f"trained {config.epochs} epochs, final mean loss {last.mean_loss:.6g}"
    if last.val_map is not None:
        msg += f", val mAP {last.val_map:.4f}"
    print(msg)
    return 0


_EVAL_DEFAULTS = {
    "labels": None,
    "logits": None,
    "model": None,
    "cond_prob": None,
    "threshold": 0.5,
    "topk": None,
    "condprob_k": 3,
    "refined_out": None,
    "seed": 0,
    "threads": 1,
    "out_dir": ".",
}


def _metrics_block(report, names) -> dict:
    per_class = [
        {
            "class": name,
            "ap": float(report.per_class_ap[j]),
            "excluded": j in report.excluded_classes,
        }
        for j, name in enumerate(names)
    ]
    return {
        "per_class_ap": [float(v) for v in report.per_class_ap],
        "map": report.map,
        "cp": report.cp,
        "cr": report.cr,
        "cf1": report.cf1,
        "op": report.op,
        "or": report.or_,
        "of1": report.of1,
        "threshold": report.threshold,
        "top_k": report.top_k,
        "excluded_classes": list(report.excluded_classes),
        "per_class": per_class,
    }


def cmd_eval(args) -> int:
    resolved = _resolve(args, _EVAL_DEFAULTS)
    _require(resolved, "labels", "logits")
    if (resolved["model"] is None) != (resolved["cond_prob"] is None):
        raise ValidationError("--model and --cond-prob must be given together")
    out = _out_dir(resolved)

    labels = load_labels(resolved["labels"])
    logits = load_logits(resolved["logits"], labels)
    inputs = {"labels": resolved["labels"], "logits": resolved["logits"]}

    topk = resolved["topk"]
    threshold = None if topk is not None else float(resolved["threshold"])
    kwargs = {"threshold": threshold, "top_k": int(topk) if topk is not None else None}

    report = {
        "tool": _TOOL,
        "version": __version__,
        "notes": {
            "cf1": "harmonic mean of the aggregate CP and CR (not a mean of per-class F1)",
            "of1": "harmonic mean of the aggregate OP and OR",
            "map": "threshold-free, on raw scores; classes without positives excluded",
        },
        "initial": _metrics_block(evaluate(logits.values, labels, **kwargs), labels.class_names),
    }
    outputs = ["report.json"]

    if resolved["model"] is not None:
        model = load_model(resolved["model"])
        cond = _load_cond_prob(resolved["cond_prob"])
        if cond.n_classes != labels.n_classes:
            raise ValidationError("conditional-probability matrix class count mismatch")
        inputs["model"] = resolved["model"]
        inputs["cond_prob"] = resolved["cond_prob"]
        refined, _ = gcn_forward(model, cond, logits.values)
        refined_report = evaluate(refined, labels, **kwargs)
        report["refined"] = _metrics_block(refined_report, labels.class_names)
        report["delta_map"] = report["refined"]["map"] - report["initial"]["map"]

        analysis = delta_ap_analysis(
            np.array(report["initial"]["per_class_ap"]),
            np.array(report["refined"]["per_class_ap"]),
            cond,
            k=int(resolved["condprob_k"]),
            exclude=refined_report.excluded_classes,
        )
        per_class_path = out / "per_class.csv"
        k = int(resolved["condprob_k"])
        lines = [f"class,top{k}_mean_cond_prob,ap_before,ap_after,delta_ap"]
        for pos, j in enumerate(analysis.class_indices):
            lines.append(
                f"{labels.class_names[j]},{float(analysis.top_k_mean[pos])!r},"
                f"{report['initial']['per_class_ap'][j]!r},"
                f"{report['refined']['per_class_ap'][j]!r},"
                f"{float(analysis.delta_ap[pos])!r}"
            )
        per_class_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append(per_class_path.name)

        if resolved["refined_out"] is not None:
            refined_path = out / resolved["refined_out"]
            write_logits(LogitMatrix(refined), labels, refined_path)
            outputs.append(refined_path.name)

    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(out, "eval", resolved, inputs, outputs)
    summary = f"initial mAP {report['initial']['map']:.4f}"
    if "refined" in report:
        summary += f", refined mAP {report['refined']['map']:.4f}"
    print(summary)
    return 0


_ANALYZE_DEFAULTS = {
    "labels": None,
    "cond_prob": None,
    "before": None,
    "after": None,
    "model": None,
    "logits": None,
    "k": 3,
    "bin_size": 0.02,
    "seed": 0,
    "threads": 1,
    "out_dir": ".",
}


def cmd_analyze(args) -> int:
    resolved = _resolve(args, _ANALYZE_DEFAULTS)
    _require(resolved, "labels", "cond_prob")
    out = _out_dir(resolved)

    labels = load_labels(resolved["labels"])
    cond = _load_cond_prob(resolved["cond_prob"])
    if cond.n_classes != labels.n_classes:
        raise ValidationError("conditional-probability matrix class count mismatch")
    inputs = {"labels": resolved["labels"], "cond_prob": resolved["cond_prob"]}

    if resolved["before"] is not None and resolved["after"] is not None:
        before = load_logits(resolved["before"], labels).values
        after = load_logits(resolved["after"], labels).values
        inputs["before"] = resolved["before"]
        inputs["after"] = resolved["after"]
    elif resolved["model"] is not None and resolved["logits"] is not None:
        logits = load_logits(resolved["logits"], labels)
        model = load_model(resolved["model"])
        before = logits.values
        after, _ = gcn_forward(model, cond, before)
        inputs["model"] = resolved["model"]
        inputs["logits"] = resolved["logits"]
    else:
        raise ValidationError(
            "need either --before and --after, or --model and --logits"
        )

    ap_before, excluded_b = per_class_average_precision(before, labels.values)
    ap_after, excluded_a = per_class_average_precision(after, labels.values)
    excluded = sorted(set(excluded_b) | set(excluded_a))
    result = delta_ap_analysis(
        ap_before,
        ap_after,
        cond,
        k=int(resolved["k"]),
        bin_size=float(resolved["bin_size"]),
        exclude=excluded,
    )

    bins_path = out / "bins.csv"
    lines = ["bin_low,bin_high,mean_delta_ap,class_count"]
    for b in result.bins:
        lines.append(f"{b.bin_low!r},{b.bin_high!r},{b.mean_delta_ap!r},{b.class_count}")
    status = "defined" if result.spearman_defined else "degenerate"
    lines.append(
        f"# spearman={result.spearman!r} classes={len(result.class_indices)} {status}"
    )
    bins_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "analyze", resolved, inputs, [bins_path.name])
    print(f"wrote {bins_path} (spearman {result.spearman:.4f}, {status})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--seed", type=int, help="base seed; all stages derive from it")
    sub.add_argument("--threads", type=int, help="worker-thread hint (execution is deterministic regardless)")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--config", help="JSON config file or a previously written manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=_TOOL,
        description="Refine multi-label classifier logits with class co-occurrence priors",
    )
    parser.add_argument("--version", action="version", version=f"{_TOOL} {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("synth", help="generate a synthetic correlated dataset")
    p.add_argument("--n-classes", dest="n_classes", type=int, help="number of classes")
    p.add_argument("--n-samples", dest="n_samples", type=int, help="number of samples")
    p.add_argument("--clusters", help="co-occurring class-index groups, e.g. '0,1,2;3,4'")
    p.add_argument("--within-cluster-prob", dest="within_cluster_prob", type=float,
                   help="co-activation probability of non-chosen cluster members")
    p.add_argument("--base-prob", dest="base_prob", type=float,
                   help="activation probability of clusters and free classes")
    p.add_argument("--cluster-probs", dest="cluster_probs",
                   help="per-cluster activation probabilities, comma separated")
    p.add_argument("--signal-strength", dest="signal_strength",
                   help="scalar or per-class comma-separated logit separation")
    p.add_argument("--noise-std", dest="noise_std", type=float, help="logit noise std")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("prior", help="co-occurrence counts, conditional probabilities, alphas")
    p.add_argument("--labels", help="label CSV path")
    p.add_argument("--reweight-mode", dest="reweight_mode",
                   choices=["frequency", "literal", "none"])
    _add_common(p)
    p.set_defaults(func=cmd_prior)

    p = subs.add_parser("train", help="fit the refinement head")
    p.add_argument("--labels", help="training label CSV")
    p.add_argument("--logits", help="training logits CSV")
    p.add_argument("--val-labels", dest="val_labels", help="validation label CSV")
    p.add_argument("--val-logits", dest="val_logits", help="validation logits CSV")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr0", type=float, help="initial learning rate (cosine-annealed per epoch)")
    p.add_argument("--momentum", type=float, help="classic momentum coefficient")
    p.add_argument("--gamma-pos", dest="gamma_pos", type=float, help="positive focusing exponent")
    p.add_argument("--gamma-neg", dest="gamma_neg", type=float, help="negative focusing exponent")
    p.add_argument("--delta", type=float, help="negative probability shift")
    p.add_argument("--eps", type=float, help="log clamp inside the loss")
    p.add_argument("--gcn-dims", dest="gcn_dims", help="layer widths, e.g. '1,64,64,1'")
    p.add_argument("--leaky-slope", dest="leaky_slope", type=float)
    p.add_argument("--final-nonlinearity", dest="final_nonlinearity",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="apply the nonlinearity on the last layer too")
    p.add_argument("--reweight-mode", dest="reweight_mode",
                   choices=["frequency", "literal", "none"])
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="evaluate raw and optionally refined logits")
    p.add_argument("--labels", help="label CSV path")
    p.add_argument("--logits", help="logits CSV path")
    p.add_argument("--model", help="model file; requires --cond-prob")
    p.add_argument("--cond-prob", dest="cond_prob", help="A.csv written by prior/train")
    p.add_argument("--threshold", type=float, help="sigmoid probability threshold for P/R/F1")
    p.add_argument("--topk", type=int,
                   help="predict the k best classes per sample instead of thresholding")
    p.add_argument("--condprob-k", dest="condprob_k", type=int,
                   help="k for the per-class co-occurrence strength column")
    p.add_argument("--refined-out", dest="refined_out",
                   help="also write refined logits CSV under this name")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("analyze", help="AP improvement vs. co-occurrence strength")
    p.add_argument("--labels", help="label CSV path")
    p.add_argument("--cond-prob", dest="cond_prob", help="A.csv written by prior/train")
    p.add_argument("--before", help="scores CSV before refinement")
    p.add_argument("--after", help="scores CSV after refinement")
    p.add_argument("--model", help="alternative to --before/--after: refine --logits with this model")
    p.add_argument("--logits", help="logits CSV for --model mode")
    p.add_argument("--k", type=int, help="top-k conditional probabilities per class")
    p.add_argument("--bin-size", dest="bin_size", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"{_TOOL}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{_TOOL}: error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"{_TOOL}: numeric failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"{_TOOL}: unexpected failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
