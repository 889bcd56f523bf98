"""Experiment orchestration: build, propagate, distill, verify, report.

``run_scenario`` executes one configured experiment end to end: resolve
the source (explicit variances or calibration), apply the channel, attach
the tap, herald at every threshold with the analytic engine and/or the
Monte Carlo engine, and collect everything into a JSON-serializable
RunReport. ``emit_artifacts`` renders a report to flat files (JSON report,
sweep curve CSV, histogram CSVs, posterior-weight tables).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .calibrate import calibrate, calibrate_envelope
from .channel import (
    MixtureState,
    discrete_channel,
    envelope_exponential,
    envelope_fading,
    pooled_cm,
    propagate,
    upper_bound_ln,
)
from .config import ConfigError, ExperimentConfig
from .distill import (
    DegenerateSelectionError,
    TapConfig,
    attach_tap,
    distilled_gln,
    gaussification_metrics,
    herald,
    joint_quadrature_variances,
)
from .gaussian import gaussian_log_negativity, make_kerr_entangled
from .mc import McConfig, kernel_backend, ln_with_se, run_mc

__all__ = ["RunReport", "run_scenario", "emit_artifacts", "AGREEMENT_SIGMA", "AGREEMENT_MIN_SUCCESS"]

# MC/analytic agreement policy: flag the run as failed if the engines
# disagree on the log-negativity by more than this many standard errors at
# any threshold whose analytic success probability is at least the floor.
AGREEMENT_SIGMA = 4.0
AGREEMENT_MIN_SUCCESS = 1e-4


@dataclass
class RunReport:
    """Everything one scenario run produced, in JSON-ready form."""

    scenario: str
    engine: str
    calibration: dict
    ln_source: float
    ln_before: float
    upper_bound: float
    channel: dict | None
    thresholds: list
    histogram_edges: list | None
    provenance: dict
    flags: dict

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "engine": self.engine,
            "calibration": self.calibration,
            "ln_source": self.ln_source,
            "ln_before": self.ln_before,
            "upper_bound": self.upper_bound,
            "channel": self.channel,
            "thresholds": self.thresholds,
            "histogram_edges": self.histogram_edges,
            "provenance": self.provenance,
            "flags": self.flags,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        fields = (
            "scenario", "engine", "calibration", "ln_source", "ln_before", "upper_bound",
            "channel", "thresholds", "histogram_edges", "provenance", "flags",
        )
        missing = [k for k in fields if k not in d]
        if missing:
            raise ValueError(f"report is missing keys {missing}")
        return cls(**{k: d[k] for k in fields})

    @property
    def ln_after(self) -> list:
        """(threshold, gaussian_ln, success_probability) per usable threshold."""
        rows = []
        for row in self.thresholds:
            section = row.get("analytic") or row.get("mc")
            if section is not None:
                rows.append((row["threshold"], section["gaussian_ln"], section["success_probability"]))
        return rows


def _resolve_source(config: ExperimentConfig):
    src = config.source
    if src.is_calibrated:
        cal = calibrate(ln_initial=src.ln_initial, ln_discrete_premix=src.ln_discrete_premix)
        return cal.v_squeezed, cal.v_antisqueezed
    try:
        make_kerr_entangled(src.v_squeezed, src.v_antisqueezed)
    except ValueError as exc:
        raise ConfigError(f"invalid source variances: {exc}") from exc
    return src.v_squeezed, src.v_antisqueezed


def _resolve_channel(config: ExperimentConfig, v_squeezed: float, v_antisqueezed: float):
    """Returns (channel or None, calibration info dict)."""
    settings = config.channel
    info = {"envelope_family": None, "envelope_param": None}
    if settings is None:
        return None, info
    if settings.levels is not None:
        return settings.explicit_channel(), info
    if settings.preset == "discrete":
        return discrete_channel(), info
    family = settings.envelope
    info["envelope_family"] = family
    info["envelope_note"] = (
        "envelope shape is a calibrated stand-in; only its fitted scalar "
        "constraints are measurement-backed"
    )
    if settings.beta is not None:
        info["envelope_param"] = settings.beta
        builder = envelope_fading if family == "fading" else envelope_exponential
        try:
            return builder(settings.beta, p_full=settings.p_full), info
        except ValueError as exc:
            raise ConfigError(f"invalid envelope parameters: {exc}") from exc
    param, chan = calibrate_envelope(
        v_squeezed,
        v_antisqueezed,
        p_full=settings.p_full,
        ln_premix=settings.ln_premix,
        family=family,
    )
    info["envelope_param"] = param
    return chan, info


def _analytic_section(ensemble) -> dict:
    entropy, max_dist = gaussification_metrics(ensemble)
    var_x, var_p = joint_quadrature_variances(ensemble.pooled_cov)
    return {
        "success_probability": ensemble.success_probability,
        "gaussian_ln": distilled_gln(ensemble),
        "weight_entropy": entropy,
        "max_component_cov_distance": max_dist,
        "posterior_weights": ensemble.posterior_weights.tolist(),
        "joint_var_x_sum": var_x,
        "joint_var_p_diff": var_p,
        "pooled_cov": ensemble.pooled_cov.tolist(),
    }


def _mc_section(result) -> dict:
    ln_hat, ln_se = ln_with_se(result)
    posterior = result.per_level_kept / max(result.kept_count, 1)
    return {
        "kept_count": result.kept_count,
        "total_count": result.total_count,
        "success_probability": result.success_probability_hat,
        "success_se": result.success_probability_se,
        "gaussian_ln": ln_hat,
        "ln_se": ln_se,
        "posterior_weights": posterior.tolist(),
        "pooled_cov": result.pooled_cov_hat.tolist(),
        "histograms": {
            name: {sel: counts.tolist() for sel, (_, counts) in series.items()}
            for name, series in result.histograms.items()
        },
    }


def run_scenario(config: ExperimentConfig) -> RunReport:
    """Execute one configured scenario and return its report.

    Per-threshold engine failures (degenerate selection) are recorded in
    the corresponding row and the run continues; the report's ``flags``
    say whether every threshold failed or the engines disagreed.
    """
    v_squeezed, v_antisqueezed = _resolve_source(config)
    source = make_kerr_entangled(v_squeezed, v_antisqueezed)
    ln_source = gaussian_log_negativity(source.cov)

    channel, channel_info = _resolve_channel(config, v_squeezed, v_antisqueezed)
    if channel is None:
        mixture = MixtureState([(1.0, source)])
        channel_dict = None
    else:
        mixture = propagate(source, channel, mode=1)
        channel_dict = {
            "transmittances": channel.transmittances.tolist(),
            "probabilities": channel.probabilities.tolist(),
        }
    _, pooled_cov = pooled_cm(mixture)
    ln_before = gaussian_log_negativity(pooled_cov)
    upper_bound = upper_bound_ln(mixture)

    run_analytic = config.engine in ("analytic", "both")
    run_montecarlo = config.engine in ("mc", "both")
    rows = []
    agreement_failed = False
    histogram_edges = None

    if config.tap is None:
        rows.append(
            {
                "threshold": None,
                "analytic": {
                    "success_probability": 1.0,
                    "gaussian_ln": ln_before,
                    "weight_entropy": None,
                    "max_component_cov_distance": None,
                    "posterior_weights": mixture.weights.tolist(),
                    "joint_var_x_sum": joint_quadrature_variances(pooled_cov)[0],
                    "joint_var_p_diff": joint_quadrature_variances(pooled_cov)[1],
                    "pooled_cov": pooled_cov.tolist(),
                },
                "mc": None,
                "agreement": None,
                "error": None,
            }
        )
    else:
        tapped = attach_tap(mixture, TapConfig(reflectivity=config.tap.reflectivity))
        for threshold in config.tap.thresholds:
            row = {"threshold": threshold, "analytic": None, "mc": None,
                   "agreement": None, "error": None}
            errors = []
            if run_analytic:
                try:
                    row["analytic"] = _analytic_section(herald(tapped, threshold))
                except DegenerateSelectionError as exc:
                    errors.append(f"analytic: {exc}")
            if run_montecarlo:
                mc_conf = McConfig(
                    n_shots=config.mc.n_shots,
                    seed=config.mc.seed,
                    threshold_x=threshold,
                    histogram_bins=config.mc.histogram_bins,
                    histogram_range=config.mc.histogram_range,
                    n_workers=config.mc.n_workers,
                )
                try:
                    result = run_mc(tapped, mc_conf)
                    row["mc"] = _mc_section(result)
                    if histogram_edges is None:
                        edges, _ = result.histograms[next(iter(result.histograms))]["pre"]
                        histogram_edges = edges.tolist()
                except DegenerateSelectionError as exc:
                    errors.append(f"mc: {exc}")
            if row["analytic"] is not None and row["mc"] is not None:
                success = row["analytic"]["success_probability"]
                ln_se = row["mc"]["ln_se"]
                diff = abs(row["mc"]["gaussian_ln"] - row["analytic"]["gaussian_ln"])
                sigma = diff / ln_se if ln_se > 0 else (0.0 if diff == 0.0 else np.inf)
                checked = success >= AGREEMENT_MIN_SUCCESS
                ok = (sigma <= AGREEMENT_SIGMA) if checked else True
                row["agreement"] = {"ln_sigma_distance": sigma, "checked": checked, "ok": ok}
                if not ok:
                    agreement_failed = True
            if errors and row["analytic"] is None and row["mc"] is None:
                row["error"] = "; ".join(errors)
            elif errors:
                row["engine_errors"] = errors
            rows.append(row)

    all_degenerate = config.tap is not None and all(r["error"] is not None for r in rows)
    report = RunReport(
        scenario=config.name,
        engine=config.engine,
        calibration={
            "v_squeezed": v_squeezed,
            "v_antisqueezed": v_antisqueezed,
            **channel_info,
        },
        ln_source=ln_source,
        ln_before=ln_before,
        upper_bound=upper_bound,
        channel=channel_dict,
        thresholds=rows,
        histogram_edges=histogram_edges,
        provenance={
            "config": config.to_dict(),
            "config_hash": config.config_hash(),
            "seed": config.mc.seed,
            "n_workers": config.mc.n_workers,
            "package_version": __version__,
            "kernel_backend": kernel_backend(),
            "numpy_version": np.__version__,
        },
        flags={"all_degenerate": all_degenerate, "agreement_failed": agreement_failed},
    )
    if config.output.dir:
        emit_artifacts(report, config.output.dir, config.output.formats)
    return report


def _fmt(value) -> str:
    """CSV cell with full double precision (17 significant digits)."""
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_rows(path: str, header: str, data_rows) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in data_rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing artifact {path}: {exc}") from exc


def emit_artifacts(report: RunReport, out_dir: str, formats=("json", "csv")) -> list:
    """Write report artifacts to ``out_dir``; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        try:
            with open(path, "w") as fh:
                json.dump(report.to_dict(), fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"failed writing artifact {path}: {exc}") from exc
        written.append(path)
        path = os.path.join(out_dir, "config.json")
        with open(path, "w") as fh:
            json.dump(report.provenance["config"], fh, indent=2)
            fh.write("\n")
        written.append(path)

    if "csv" not in formats:
        return written

    # Distillation curve: one row per threshold with usable results.
    sweep_rows = []
    for row in report.thresholds:
        section = row.get("analytic") or row.get("mc")
        if section is None or row["threshold"] is None:
            continue
        sweep_rows.append(
            (row["threshold"], section["success_probability"], section["gaussian_ln"],
             section.get("weight_entropy"))
        )
    path = os.path.join(out_dir, "sweep.csv")
    _write_rows(path, "threshold_snu,success_probability,gaussian_ln,weight_entropy", sweep_rows)
    written.append(path)

    # Posterior weight tables (mixture composition after heralding).
    if report.channel is not None:
        ts = report.channel["transmittances"]
        ps = report.channel["probabilities"]
        for row in report.thresholds:
            if row["threshold"] is None:
                continue
            analytic = row.get("analytic")
            mc = row.get("mc")
            if analytic is None and mc is None:
                continue
            table = []
            for i, (t, p) in enumerate(zip(ts, ps)):
                table.append(
                    (i, t, p,
                     analytic["posterior_weights"][i] if analytic else None,
                     mc["posterior_weights"][i] if mc else None)
                )
            path = os.path.join(out_dir, f"posterior_weights_th{row['threshold']:g}.csv")
            _write_rows(
                path,
                "level_index,transmittance,prior_probability,posterior_weight,mc_posterior_weight",
                table,
            )
            written.append(path)

    # Histograms (only present when the Monte Carlo engine ran).
    if report.histogram_edges is not None:
        edges = report.histogram_edges
        for row in report.thresholds:
            mc = row.get("mc")
            if mc is None or row["threshold"] is None:
                continue
            table = []
            for series, by_sel in mc["histograms"].items():
                for selection in ("pre", "post"):
                    for left, right, count in zip(edges[:-1], edges[1:], by_sel[selection]):
                        table.append((left, right, count, series, selection))
            path = os.path.join(out_dir, f"histograms_th{row['threshold']:g}.csv")
            _write_rows(path, "bin_left,bin_right,count,series,selection", table)
            written.append(path)

    return written
