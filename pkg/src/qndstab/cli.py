"""Command-line entry point: run campaigns, certify decay, reproduce reference figures.

Verbs:
    run        one campaign from a JSON config; writes series.csv, summary.csv
    certify    sampled Lyapunov certification from a JSON config; writes certificate.csv
    reproduce  named benchmark campaign (fig1..fig4); nonzero exit if the
               fitted rate leaves the target band

Every invocation writes a manifest.json with the resolved configuration
and sha256 checksums of the emitted artifacts.  The default output
directory is $QNDSTAB_OUT or ./qndstab_out.  Worker count changes nothing
but wall time: artifacts are a pure function of the configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, replace

from .dynamics import control_setup
from .ensemble import (
    DEFAULT_SEED,
    ESTIMATORS,
    CampaignConfig,
    read_summary_csv,
    run_ensemble,
    write_series_csv,
    write_summary_csv,
)
from .filters import laplacian_matrix
from .lyapunov import (
    CertificationImpossibleError,
    certificate_to_csv,
    certify_decay,
    solve_alpha,
)
from .spin import spin2_preset

__all__ = ["ConfigError", "parse_config", "parse_certify_config", "main", "FIGURE_PRESETS"]

ENV_OUT = "QNDSTAB_OUT"

_CAMPAIGN_KEYS = {
    "model": str,
    "J": float,
    "eta": float,
    "p_min": float,
    "p_max": float,
    "sigma_bar": float,
    "saturation": str,
    "estimator": str,
    "trajectories": int,
    "t_final": float,
    "dt": float,
    "record_stride": int,
    "feedback_delay": float,
    "seed": int,
    "fit_window": list,
    "initial": str,
    "workers": int,
}

_CERTIFY_KEYS = {
    "model": str,
    "J": float,
    "eta": float,
    "p_min": float,
    "p_max": float,
    "sigma_bar": float,
    "saturation": str,
    "samples": int,
    "seed": int,
    "broken_link": int,
}

# Benchmark campaigns: config overrides, target rate, acceptance band.
FIGURE_PRESETS = {
    "fig1": {
        "config": {"p_min": 0.9, "estimator": "truth", "t_final": 100.0, "fit_window": (5.0, 60.0)},
        "target": 0.04,
        "band": (0.02, 0.06),
    },
    "fig2": {
        "config": {"p_min": 0.6, "estimator": "truth", "t_final": 50.0, "fit_window": (5.0, 25.0)},
        "target": 0.2,
        "band": (0.14, 0.26),
    },
    "fig3": {
        "config": {"p_min": 0.6, "estimator": "population_filter", "t_final": 50.0, "fit_window": (5.0, 25.0)},
        "target": 0.12,
        "band": (0.08, 0.16),
    },
    "fig4": {
        "config": {
            "p_min": 0.6,
            "estimator": "population_filter",
            "t_final": 50.0,
            "fit_window": (5.0, 25.0),
            "feedback_delay": 0.5,
        },
        "target": 0.06,
        "band": (0.03, 0.09),
    },
}


class ConfigError(ValueError):
    """Configuration document rejected; message lists field-level problems."""


def _check_fields(doc: dict, schema: dict, required: tuple[str, ...]) -> list[str]:
    problems = []
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        problems.append(f"unknown keys: {', '.join(unknown)}")
    for key in required:
        if key not in doc:
            problems.append(f"{key}: required key missing")
    for key, value in doc.items():
        if key not in schema:
            continue
        want = schema[key]
        if want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            continue
        if want is int and isinstance(value, int) and not isinstance(value, bool):
            continue
        if want is str and isinstance(value, str):
            continue
        if want is list and isinstance(value, (list, tuple)):
            continue
        problems.append(f"{key}: expected {want.__name__}, got {type(value).__name__}")
    return problems


def _campaign_constraints(doc: dict) -> list[str]:
    problems = []
    if "model" in doc and doc["model"] != "spin":
        problems.append(f"model: only 'spin' is available, got {doc['model']!r}")
    if "p_min" in doc and not 0.5 < doc["p_min"] < 1.0:
        problems.append(f"p_min: must satisfy 1/2 < p_min < 1, got {doc['p_min']}")
    if "p_max" in doc:
        if not doc["p_max"] < 1.0:
            problems.append(f"p_max: must be < 1, got {doc['p_max']}")
        if "p_min" in doc and doc["p_max"] <= doc["p_min"]:
            problems.append(f"p_max: must exceed p_min, got p_max={doc['p_max']} <= p_min={doc['p_min']}")
    if "eta" in doc and not 0.0 <= doc["eta"] <= 1.0:
        problems.append(f"eta: must lie in [0, 1], got {doc['eta']}")
    if "sigma_bar" in doc and doc["sigma_bar"] < 0:
        problems.append(f"sigma_bar: must be >= 0, got {doc['sigma_bar']}")
    if "estimator" in doc and doc["estimator"] not in ESTIMATORS:
        problems.append(f"estimator: must be one of {ESTIMATORS}, got {doc['estimator']!r}")
    if "fit_window" in doc and len(doc["fit_window"]) != 2:
        problems.append(f"fit_window: expected [t_start, t_end], got {doc['fit_window']}")
    if "initial" in doc and doc["initial"] not in ("mixed", "target"):
        problems.append(f"initial: must be 'mixed' or 'target', got {doc['initial']!r}")
    return problems


def parse_config(text: str) -> CampaignConfig:
    """Parse and validate a JSON campaign document; unknown keys are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    problems = _check_fields(doc, _CAMPAIGN_KEYS, required=("p_min",))
    if not problems:
        problems = _campaign_constraints(doc)
    if problems:
        raise ConfigError("invalid campaign config:\n  " + "\n  ".join(problems))
    kwargs = {k: v for k, v in doc.items() if k not in ("seed", "fit_window")}
    if "seed" in doc:
        kwargs["base_seed"] = int(doc["seed"])
    if "fit_window" in doc:
        kwargs["fit_window"] = (float(doc["fit_window"][0]), float(doc["fit_window"][1]))
    kwargs.setdefault("t_final", 50.0)
    try:
        return CampaignConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid campaign config: {exc}") from exc


def parse_certify_config(text: str) -> dict:
    """Parse and validate a JSON certification document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    problems = _check_fields(doc, _CERTIFY_KEYS, required=("p_min",))
    if not problems:
        problems = _campaign_constraints({k: v for k, v in doc.items() if k in _CAMPAIGN_KEYS})
    if problems:
        raise ConfigError("invalid certification config:\n  " + "\n  ".join(problems))
    out = dict(doc)
    out.setdefault("model", "spin")
    out.setdefault("J", 2.0)
    out.setdefault("eta", 0.8)
    out.setdefault("saturation", "piecewise_linear")
    out.setdefault("samples", 10000)
    out.setdefault("seed", 7)
    if "broken_link" in out:
        n_couplings = int(round(2 * out["J"]))
        if not 0 <= out["broken_link"] < n_couplings:
            raise ConfigError(
                f"invalid certification config:\n  broken_link: must index a ladder "
                f"coupling 0..{n_couplings - 1}, got {out['broken_link']}"
            )
    return out


@dataclass(frozen=True)
class RunManifest:
    """Record of one invocation: resolved config, output directory, artifact checksums."""

    command: str
    config: dict
    out_dir: str
    checksums: dict


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(manifest: RunManifest, path: str) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_config(cfg: CampaignConfig) -> dict:
    # workers is runtime-only and must not leak into artifacts
    doc = asdict(cfg)
    doc.pop("workers")
    doc["fit_window"] = list(doc["fit_window"])
    return doc


def _resolve_out(arg_out: str | None) -> str:
    out = arg_out or os.environ.get(ENV_OUT) or "qndstab_out"
    os.makedirs(out, exist_ok=True)
    return out


def _emit_campaign(cfg: CampaignConfig, out_dir: str, prefix: str, command: str) -> tuple[str, str]:
    result = run_ensemble(cfg)
    series = os.path.join(out_dir, f"{prefix}_series.csv")
    summary = os.path.join(out_dir, f"{prefix}_summary.csv")
    write_series_csv(result, series)
    write_summary_csv(result, summary)
    manifest = RunManifest(
        command=command,
        config=_manifest_config(cfg),
        out_dir=out_dir,
        checksums={os.path.basename(p): _sha256(p) for p in (series, summary)},
    )
    _write_manifest(manifest, os.path.join(out_dir, f"{prefix}_manifest.json"))
    return series, summary


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    cfg = _apply_overrides(cfg, args)
    out_dir = _resolve_out(args.out)
    _, summary = _emit_campaign(cfg, out_dir, "run", "run")
    result_row = _read_rate(summary)
    print(f"run: nu_hat={result_row} artifacts in {out_dir}")
    return 0


def _read_rate(summary_path: str) -> str:
    return read_summary_csv(summary_path)["nu_hat"]


def _apply_overrides(cfg: CampaignConfig, args) -> CampaignConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "dt", None) is not None:
        updates["dt"] = args.dt
    if getattr(args, "trajectories", None) is not None:
        updates["trajectories"] = args.trajectories
    return replace(cfg, **updates) if updates else cfg


def _cmd_certify(args) -> int:
    with open(args.config) as fh:
        doc = parse_certify_config(fh.read())
    if args.samples is not None:
        doc["samples"] = args.samples
    if args.seed is not None:
        doc["seed"] = args.seed
    out_dir = _resolve_out(args.out)
    meas, ctrl = spin2_preset(
        p_min=doc["p_min"],
        sigma_bar=doc.get("sigma_bar"),
        eta=doc["eta"],
        J=doc["J"],
        p_max=doc.get("p_max"),
        saturation=doc["saturation"],
    )
    if "broken_link" in doc:
        # toy model with one ladder coupling removed; disconnects the actuation graph
        h = ctrl.H.copy()
        link = doc["broken_link"]
        h[link, link + 1] = 0.0
        h[link + 1, link] = 0.0
        ctrl = control_setup(
            h, meas.dec, ctrl.target, ctrl.sigma_bar, ctrl.p_min, ctrl.p_max, ctrl.saturation
        )
    delta = laplacian_matrix(ctrl.H, meas.dec)
    try:
        weights = solve_alpha(delta, ctrl.target)
    except CertificationImpossibleError as exc:
        print(f"certify: {exc}", file=sys.stderr)
        return 2
    report = certify_decay(meas, ctrl, weights, samples=doc["samples"], seed=doc["seed"])
    cert_path = os.path.join(out_dir, "certificate.csv")
    with open(cert_path, "w", newline="") as fh:
        fh.write(certificate_to_csv(report))
    manifest = RunManifest(
        command="certify",
        config=doc,
        out_dir=out_dir,
        checksums={"certificate.csv": _sha256(cert_path)},
    )
    _write_manifest(manifest, os.path.join(out_dir, "certificate_manifest.json"))
    flag = "certified" if report.certified else "NOT certified"
    print(
        f"certify: nu_hat={report.nu_hat!r} ({flag}) over {report.samples} samples; "
        f"equivalence constants c_low={report.c_low!r} c_high={report.c_high!r}"
    )
    return 0 if report.certified else 1


def _cmd_reproduce(args) -> int:
    preset = FIGURE_PRESETS[args.figure]
    cfg = CampaignConfig(**preset["config"])
    cfg = _apply_overrides(cfg, args)
    out_dir = _resolve_out(args.out)
    _, summary = _emit_campaign(cfg, out_dir, args.figure, f"reproduce {args.figure}")
    nu_hat = float(_read_rate(summary))
    lo, hi = preset["band"]
    ok = lo <= nu_hat <= hi
    verdict = "PASS" if ok else "FAIL"
    print(f"{args.figure}: nu_hat={nu_hat!r} target~{preset['target']} band=[{lo}, {hi}] {verdict}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qndstab",
        description="Simulate and certify noise-assisted feedback stabilization of QND eigenstates.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one campaign from a JSON config")
    p_run.add_argument("--config", required=True, help="path to JSON campaign config")
    p_certify = sub.add_parser("certify", help="sampled Lyapunov certification from a JSON config")
    p_certify.add_argument("--config", required=True, help="path to JSON certification config")
    p_certify.add_argument("--samples", type=int, default=None, help="override sample count")
    p_repro = sub.add_parser("reproduce", help="run a named benchmark campaign and check its band")
    p_repro.add_argument("figure", choices=sorted(FIGURE_PRESETS), help="benchmark id")
    p_repro.add_argument("--trajectories", type=int, default=None, help="override ensemble size (testing)")

    for p in (p_run, p_certify, p_repro):
        p.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT} or ./qndstab_out)")
        p.add_argument("--seed", type=int, default=None, help=f"base seed (default {DEFAULT_SEED})")
    for p in (p_run, p_repro):
        p.add_argument("--workers", type=int, default=None, help="worker processes (does not affect results)")
        p.add_argument("--dt", type=float, default=None, help="integration step override")

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "certify":
            return _cmd_certify(args)
        return _cmd_reproduce(args)
    except ConfigError as exc:
        print(f"{args.verb}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
