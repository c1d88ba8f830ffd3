"""Scenario files: schema validation, deterministic generators for the
bundled templates, experiment execution, and machine-readable reports.

A scenario is a single JSON object. Physical parameters (dimensions, kappa,
topology, frequencies, initial data) carry no defaults and must be explicit;
only the numerics (integrator settings, analysis windows, tolerances)
default. See README for the full schema.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import diagnostics
from .errors import ScenarioError, ValidationError
from .integrate import IntegratorConfig, Trajectory, integrate
from .manifold import (
    near_consensus_ensemble,
    perturb_ensemble,
    random_ensemble,
    validate_ensemble,
)
from .model import (
    ModelConfig,
    Topology,
    check_framework,
    common_frequencies,
    coupling_margin_threshold,
    decay_rate_bound,
    diameter_threshold,
    contraction_slack,
    potential,
    random_frequencies,
    random_skew,
    zero_frequencies,
)
from .series_io import emit_series

ANALYSIS_NAMES = ("framework", "consensus", "decay_fit", "stability", "audits", "cubic")
SEPARABLE_ONLY = ("framework", "decay_fit", "audits", "cubic")
TEMPLATES = (
    "homogeneous",
    "heterogeneous-framework",
    "stability-pair",
    "kuramoto-circle",
)

_DEFAULT_PERTURBATION = {"radius": 1e-3, "seed": 1000003}


def _need(raw: Mapping, key: str, kind, where: str = ""):
    path = f"{where}.{key}" if where else key
    if key not in raw:
        raise ScenarioError("required field is missing", field=path)
    value = raw[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a number, got {value!r}", field=path)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"expected an integer, got {value!r}", field=path)
        return value
    if not isinstance(value, kind):
        raise ScenarioError(f"expected {kind.__name__}, got {value!r}", field=path)
    return value


def _optional(raw: Mapping, key: str, kind, default, where: str = ""):
    if key not in raw:
        return default
    return _need(raw, key, kind, where)


def _reject_unknown(raw: Mapping, allowed, where: str) -> None:
    for key in raw:
        if key not in allowed:
            raise ScenarioError("unknown field", field=f"{where}.{key}" if where else key)


# ---------------------------------------------------------------------------
# component builders


def build_topology(spec: Mapping, count: int) -> Topology:
    kind = _need(spec, "kind", str, "topology")
    if kind == "separable":
        if "xi" in spec:
            _reject_unknown(spec, {"kind", "xi"}, "topology")
            xi = np.asarray(_need(spec, "xi", list, "topology"), dtype=float)
            if xi.shape != (count,):
                raise ScenarioError(
                    f"xi must have length N={count}, got {xi.shape[0]}", field="topology.xi"
                )
            return Topology.separable(xi)
        _reject_unknown(spec, {"kind", "center", "spread", "seed"}, "topology")
        center = _need(spec, "center", float, "topology")
        spread = _need(spec, "spread", float, "topology")
        seed = _need(spec, "seed", int, "topology")
        return Topology.separable(generate_xi(count, center, spread, seed))
    if kind == "general":
        if "weights" in spec:
            _reject_unknown(spec, {"kind", "weights"}, "topology")
            weights = np.asarray(_need(spec, "weights", list, "topology"), dtype=float)
            if weights.shape != (count, count):
                raise ScenarioError(
                    f"weights must be {count} x {count}, got {weights.shape}",
                    field="topology.weights",
                )
            return Topology.general(weights)
        _reject_unknown(spec, {"kind", "low", "high", "density", "seed"}, "topology")
        low = _need(spec, "low", float, "topology")
        high = _need(spec, "high", float, "topology")
        density = _optional(spec, "density", float, 1.0, "topology")
        seed = _need(spec, "seed", int, "topology")
        return Topology.general(generate_weights(count, low, high, density, seed))
    raise ScenarioError(f"unknown topology kind {kind!r}", field="topology.kind")


def generate_xi(count: int, center: float, spread: float, seed: int) -> np.ndarray:
    """Positive factors with min/max pinned to center -+ spread/2, so the
    realized spread equals the request exactly (for count >= 2)."""
    if center - spread / 2.0 <= 0:
        raise ScenarioError("center - spread/2 must stay positive", field="topology.spread")
    rng = np.random.default_rng(seed)
    if count == 1 or spread == 0.0:
        return np.full(count, center)
    xi = rng.uniform(0.0, 1.0, size=count)
    xi = (xi - xi.min()) / (xi.max() - xi.min())  # exact 0..1 endpoints
    return center - spread / 2.0 + spread * xi


def generate_weights(count: int, low: float, high: float, density: float, seed: int) -> np.ndarray:
    """Random symmetric nonnegative weights, guaranteed connected by a ring
    of edges kept regardless of density."""
    if not 0 < density <= 1:
        raise ScenarioError("density must be in (0, 1]", field="topology.density")
    if not 0 <= low <= high:
        raise ScenarioError("need 0 <= low <= high", field="topology.low")
    rng = np.random.default_rng(seed)
    w = rng.uniform(low, high, size=(count, count))
    keep = rng.uniform(size=(count, count)) < density
    w = np.where(keep, w, 0.0)
    w = np.triu(w, k=1)
    w = w + w.T
    for i in range(count):  # ring keeps the graph connected
        j = (i + 1) % count
        if count > 1 and w[i, j] == 0.0:
            w[i, j] = w[j, i] = max(low, (low + high) / 2.0)
    return w


def build_frequencies(spec: Mapping, count: int, p: int) -> np.ndarray:
    kind = _need(spec, "kind", str, "frequencies")
    if kind == "zero":
        _reject_unknown(spec, {"kind"}, "frequencies")
        return zero_frequencies(count, p)
    if kind == "common":
        if "skew" in spec:
            _reject_unknown(spec, {"kind", "skew"}, "frequencies")
            skew = np.asarray(_need(spec, "skew", list, "frequencies"), dtype=float)
            if skew.shape != (p, p):
                raise ScenarioError(
                    f"skew must be {p} x {p}, got {skew.shape}", field="frequencies.skew"
                )
            return common_frequencies(skew, count)
        _reject_unknown(spec, {"kind", "scale", "seed"}, "frequencies")
        scale = _need(spec, "scale", float, "frequencies")
        seed = _need(spec, "seed", int, "frequencies")
        return common_frequencies(random_skew(p, seed, scale), count)
    if kind == "random":
        _reject_unknown(spec, {"kind", "spread", "seed", "common_scale"}, "frequencies")
        spread = _need(spec, "spread", float, "frequencies")
        seed = _need(spec, "seed", int, "frequencies")
        common_scale = _optional(spec, "common_scale", float, 0.0, "frequencies")
        common = random_skew(p, seed + 1, common_scale) if common_scale > 0 else None
        try:
            return random_frequencies(count, p, spread, seed, common=common)
        except ValidationError as exc:
            raise ScenarioError(str(exc), field="frequencies.spread") from exc
    raise ScenarioError(f"unknown frequencies kind {kind!r}", field="frequencies.kind")


def build_initial(spec: Mapping, n: int, p: int, count: int, base_dir: str) -> np.ndarray:
    kind = _need(spec, "kind", str, "initial")
    if kind == "random":
        _reject_unknown(spec, {"kind", "seed"}, "initial")
        return random_ensemble(n, p, count, _need(spec, "seed", int, "initial"))
    if kind == "near_consensus":
        _reject_unknown(spec, {"kind", "radius", "seed"}, "initial")
        radius = _need(spec, "radius", float, "initial")
        if radius <= 0:
            raise ScenarioError("radius must be positive", field="initial.radius")
        return near_consensus_ensemble(n, p, count, radius, _need(spec, "seed", int, "initial"))
    if kind == "file":
        _reject_unknown(spec, {"kind", "path"}, "initial")
        path = _need(spec, "path", str, "initial")
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            if path.endswith(".npy"):
                states = np.load(path)
            else:
                with open(path) as handle:
                    states = np.asarray(json.load(handle), dtype=float)
        except OSError as exc:
            raise ScenarioError(f"cannot read states: {exc}", field="initial.path") from exc
        if states.shape != (count, n, p):
            raise ScenarioError(
                f"states must have shape ({count}, {n}, {p}), got {states.shape}",
                field="initial.path",
            )
        try:
            return validate_ensemble(states)
        except (ValidationError, ValueError) as exc:
            raise ScenarioError(str(exc), field="initial.path") from exc
    raise ScenarioError(f"unknown initial kind {kind!r}", field="initial.kind")


def build_integrator(spec: Mapping | None) -> IntegratorConfig:
    if spec is None:
        return IntegratorConfig()
    _reject_unknown(
        spec, {"h", "t_end", "retraction", "drift_threshold", "record_stride"}, "integrator"
    )
    defaults = IntegratorConfig()
    try:
        return IntegratorConfig(
            h=_optional(spec, "h", float, defaults.h, "integrator"),
            t_end=_optional(spec, "t_end", float, defaults.t_end, "integrator"),
            retraction=_optional(spec, "retraction", str, defaults.retraction, "integrator"),
            drift_threshold=_optional(
                spec, "drift_threshold", float, defaults.drift_threshold, "integrator"
            ),
            record_stride=_optional(
                spec, "record_stride", int, defaults.record_stride, "integrator"
            ),
        )
    except ValidationError as exc:
        raise ScenarioError(str(exc), field="integrator") from exc


def _normalize_analyses(raw) -> dict[str, dict]:
    analyses: dict[str, dict] = {}
    for k, entry in enumerate(raw):
        if isinstance(entry, str):
            name, params = entry, {}
        elif isinstance(entry, dict) and len(entry) == 1:
            ((name, params),) = entry.items()
            if not isinstance(params, dict):
                raise ScenarioError("analysis options must be an object", field=f"analyses[{k}]")
        else:
            raise ScenarioError(
                "each analysis is a name or a single-key object", field=f"analyses[{k}]"
            )
        if name not in ANALYSIS_NAMES:
            raise ScenarioError(f"unknown analysis {name!r}", field=f"analyses[{k}]")
        if name in analyses:
            raise ScenarioError(f"duplicate analysis {name!r}", field=f"analyses[{k}]")
        analyses[name] = dict(params)
    _validate_analysis_params(analyses)
    return analyses


def _validate_analysis_params(analyses: dict[str, dict]) -> None:
    for name, params in analyses.items():
        where = f"analyses.{name}"
        if name == "consensus":
            _reject_unknown(params, {"window", "tol"}, where)
        elif name == "decay_fit":
            _reject_unknown(params, {"fit_fraction"}, where)
            frac = _optional(params, "fit_fraction", float, 0.5, where)
            if not 0 < frac < 1:
                raise ScenarioError("fit_fraction must be in (0, 1)", field=where)
        elif name == "stability":
            _reject_unknown(params, {"p_exp", "perturbation", "seed"}, where)
            exponents = params.get("p_exp", [1.0, 2.0])
            if not isinstance(exponents, list) or not exponents:
                raise ScenarioError("p_exp must be a nonempty list", field=f"{where}.p_exp")
            for v in exponents:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 1:
                    raise ScenarioError(
                        f"p_exp entries must be numbers >= 1, got {v!r}", field=f"{where}.p_exp"
                    )
            if "perturbation" in params and _need(params, "perturbation", float, where) <= 0:
                raise ScenarioError("perturbation must be positive", field=f"{where}.perturbation")
            if "seed" in params:
                _need(params, "seed", int, where)
        else:
            _reject_unknown(params, set(), where)


# ---------------------------------------------------------------------------
# the scenario object


@dataclass
class Scenario:
    """Validated scenario: built model objects plus the raw dictionary."""

    name: str
    model: ModelConfig
    initial: np.ndarray
    integrator: IntegratorConfig
    analyses: dict[str, dict]
    perturbation: dict
    expect: dict
    raw: dict = field(repr=False)

    @classmethod
    def from_dict(cls, raw: Mapping, base_dir: str = ".") -> "Scenario":
        _reject_unknown(
            raw,
            {
                "name",
                "dims",
                "kappa",
                "topology",
                "frequencies",
                "initial",
                "integrator",
                "perturbation",
                "analyses",
                "expect",
            },
            "",
        )
        name = _need(raw, "name", str)
        if not name or not all(c.isalnum() or c in "_-" for c in name):
            raise ScenarioError(
                "name must be nonempty and use only letters, digits, '_', '-'", field="name"
            )
        dims = _need(raw, "dims", dict)
        _reject_unknown(dims, {"n", "p", "N"}, "dims")
        n = _need(dims, "n", int, "dims")
        p = _need(dims, "p", int, "dims")
        count = _need(dims, "N", int, "dims")
        if count < 1 or not 1 <= p <= n:
            raise ScenarioError(f"need N >= 1 and 1 <= p <= n, got N={count}, p={p}, n={n}", field="dims")
        kappa = _need(raw, "kappa", float)
        if kappa < 0:
            raise ScenarioError("kappa must be nonnegative", field="kappa")
        topology = build_topology(_need(raw, "topology", dict), count)
        freqs = build_frequencies(_need(raw, "frequencies", dict), count, p)
        try:
            model = ModelConfig(kappa=kappa, topology=topology, freqs=freqs, n=n, p=p)
        except (ValidationError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc
        initial = build_initial(_need(raw, "initial", dict), n, p, count, base_dir)
        integrator = build_integrator(raw.get("integrator"))
        analyses = _normalize_analyses(_optional(raw, "analyses", list, []))
        for analysis in SEPARABLE_ONLY:
            if analysis in analyses and topology.kind != "separable":
                raise ScenarioError(
                    f"analysis {analysis!r} needs a separable topology", field="analyses"
                )
        perturbation = dict(_DEFAULT_PERTURBATION)
        if "perturbation" in raw:
            spec = _need(raw, "perturbation", dict)
            _reject_unknown(spec, {"radius", "seed"}, "perturbation")
            perturbation["radius"] = _optional(
                spec, "radius", float, perturbation["radius"], "perturbation"
            )
            perturbation["seed"] = _optional(
                spec, "seed", int, perturbation["seed"], "perturbation"
            )
        if perturbation["radius"] <= 0:
            raise ScenarioError("radius must be positive", field="perturbation.radius")
        expect = _optional(raw, "expect", dict, {})
        _reject_unknown(expect, {"consensus", "framework"}, "expect")
        if "consensus" in expect and expect["consensus"] not in ("complete", "partial", "none"):
            raise ScenarioError(
                "expected one of complete/partial/none", field="expect.consensus"
            )
        if "framework" in expect and not isinstance(expect["framework"], bool):
            raise ScenarioError("expected a boolean", field="expect.framework")
        if "framework" in expect and "framework" not in analyses:
            raise ScenarioError(
                "framework expectation needs the framework analysis", field="expect.framework"
            )
        if "consensus" in expect and "consensus" not in analyses:
            raise ScenarioError(
                "consensus expectation needs the consensus analysis", field="expect.consensus"
            )
        return cls(
            name=name,
            model=model,
            initial=initial,
            integrator=integrator,
            analyses=analyses,
            perturbation=perturbation,
            expect=dict(expect),
            raw=dict(raw),
        )

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            with open(path) as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ScenarioError("scenario file must hold a JSON object")
        return cls.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))

    @property
    def needs_pair(self) -> bool:
        return any(a in self.analyses for a in ("decay_fit", "stability", "audits"))


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunReport:
    """Results of one scenario run; ``to_dict`` is the report-JSON schema."""

    scenario: str
    framework: dict | None
    cubic: dict | None
    consensus: dict | None
    decay: dict | None
    gain: dict | None
    audits: list | None
    artifacts: list
    expectations: list
    ok: bool

    @property
    def audits_passed(self) -> bool | None:
        if self.audits is None:
            return None
        return all(a["passed"] for a in self.audits)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "framework": self.framework,
            "cubic": self.cubic,
            "consensus": self.consensus,
            "decay": self.decay,
            "gain": self.gain,
            "audits": self.audits,
            "artifacts": self.artifacts,
            "expectations": self.expectations,
            "ok": self.ok,
        }


def _framework_to_dict(report, diameter_ok: bool | None) -> dict:
    return {
        "satisfied": report.satisfied,
        "delta_lower": report.delta_lower,
        "diameter_stays_below": diameter_ok,
        "conditions": [
            {
                "name": c.name,
                "lhs": c.lhs,
                "rhs": c.rhs,
                "margin": c.margin,
                "satisfied": c.satisfied,
            }
            for c in report.conditions()
        ],
    }


def _audit_to_dict(audit) -> dict:
    return {
        "name": audit.name,
        "max_violation": audit.max_violation,
        "tol": audit.tol,
        "passed": audit.passed,
    }


def _potential_series(traj: Trajectory, topology: Topology) -> np.ndarray:
    return np.array([potential(traj.states[k], topology) for k in range(len(traj))])


def _pair_columns(traj: Trajectory, partner: Trajectory) -> dict[str, np.ndarray]:
    plain, skewed = diagnostics.correlation_gap_series(traj, partner)
    diffs = traj.states - partner.states
    norms = np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))
    columns = {
        "diam_A": plain + skewed,
        "corr_sq": plain,
        "corr_skew_sq": skewed,
        "drift_tilde": partner.drift,
        "diam_S_tilde": partner.diameters,
        "dist_l1": norms.sum(axis=1),
        "dist_l2": np.sqrt((norms ** 2).sum(axis=1)),
    }
    for i in range(norms.shape[1]):
        columns[f"dist_agent_{i}"] = norms[:, i]
    return columns


def run_scenario(source, out_dir: str = ".") -> RunReport:
    """Execute a scenario file (or a prebuilt :class:`Scenario`): integrate,
    run every requested analysis, and write the series CSVs and report JSON
    into ``out_dir``.

    Raises :class:`ScenarioError` on config problems and
    :class:`DivergenceError` when the integration blows up. Analysis
    failures (audit violations, unmet expectations) do not raise; they are
    recorded in the report and reflected in ``ok``.
    """
    sc = source if isinstance(source, Scenario) else Scenario.from_file(source)
    os.makedirs(out_dir, exist_ok=True)

    traj = integrate(sc.initial, sc.model, sc.integrator)
    partner = None
    if sc.needs_pair:
        radius = sc.analyses.get("stability", {}).get("perturbation", sc.perturbation["radius"])
        seed = sc.analyses.get("stability", {}).get("seed", sc.perturbation["seed"])
        partner_initial = perturb_ensemble(sc.initial, radius, seed)
        partner = integrate(partner_initial, sc.model, sc.integrator)

    framework_dict = None
    if "framework" in sc.analyses:
        report = check_framework(sc.model, sc.initial)
        diameter_ok = (
            diagnostics.diameter_below_threshold(traj, sc.model) if report.satisfied else None
        )
        framework_dict = _framework_to_dict(report, diameter_ok)

    cubic_dict = None
    if "cubic" in sc.analyses:
        cubic = diagnostics.cubic_analysis(sc.model)
        cubic_dict = {
            "coefficient": cubic.coefficient,
            "roots_in_range": list(cubic.roots_in_range),
            "threshold": cubic.threshold,
            "f_at_bound": cubic.f_at_bound,
            "invariant_region_ok": cubic.invariant_region_ok,
        }

    consensus_dict = None
    if "consensus" in sc.analyses:
        params = sc.analyses["consensus"]
        span = float(traj.times[-1] - traj.times[0])
        window = params.get("window", 0.2 * span)
        tol = params.get("tol", 1e-6)
        status = diagnostics.consensus_status(traj, window, tol)
        consensus_dict = {
            "kind": status.kind,
            "max_identity_gap": status.max_identity_gap,
            "max_variation": status.max_variation,
            "window": window,
            "tol": tol,
        }

    decay_dict = None
    if "decay_fit" in sc.analyses:
        frac = sc.analyses["decay_fit"].get("fit_fraction", 0.5)
        plain, skewed = diagnostics.correlation_gap_series(traj, partner)
        gap = plain + skewed
        t_end = float(traj.times[-1])
        window = ((1.0 - frac) * t_end, t_end)
        rate, r_squared = diagnostics.fit_decay_rate(traj.times, gap, window)
        slack_sup = max(
            contraction_slack(sc.model, float(a), float(b))
            for a, b in zip(traj.diameters, partner.diameters)
        )
        decay_dict = {
            "rate": rate,
            "r_squared": r_squared,
            "delta_lower": decay_rate_bound(sc.model, slack_sup),
            "fit_window": list(window),
        }

    audit_dicts = None
    if "audits" in sc.analyses:
        audit_dicts = [
            _audit_to_dict(diagnostics.audit_diameter_bound(traj, sc.model)),
            _audit_to_dict(diagnostics.audit_correlation_contraction(traj, partner, sc.model)),
            _audit_to_dict(diagnostics.audit_agent_distance_bound(traj, partner, sc.model)),
        ]

    gain_dict = None
    if "stability" in sc.analyses:
        exponents = sc.analyses["stability"].get("p_exp", [1.0, 2.0])
        gain_dict = {
            str(p_exp): diagnostics.stability_gain(traj, partner, float(p_exp))
            for p_exp in exponents
        }

    artifacts = []
    base_csv = os.path.join(out_dir, f"{sc.name}.csv")
    emit_series(traj, {"V": _potential_series(traj, sc.model.topology)}, base_csv)
    artifacts.append(base_csv)
    if partner is not None:
        pair_csv = os.path.join(out_dir, f"{sc.name}_pair.csv")
        emit_series(traj, _pair_columns(traj, partner), pair_csv)
        artifacts.append(pair_csv)

    expectations = []
    if "consensus" in sc.expect:
        wanted = sc.expect["consensus"]
        got = consensus_dict["kind"] if consensus_dict else "missing"
        expectations.append(
            {"name": "consensus", "ok": got == wanted, "detail": f"wanted {wanted}, got {got}"}
        )
    if "framework" in sc.expect:
        wanted = sc.expect["framework"]
        got = framework_dict["satisfied"] if framework_dict else None
        expectations.append(
            {"name": "framework", "ok": got == wanted, "detail": f"wanted {wanted}, got {got}"}
        )

    ok = all(e["ok"] for e in expectations) and (
        audit_dicts is None or all(a["passed"] for a in audit_dicts)
    )
    report = RunReport(
        scenario=sc.name,
        framework=framework_dict,
        cubic=cubic_dict,
        consensus=consensus_dict,
        decay=decay_dict,
        gain=gain_dict,
        audits=audit_dicts,
        artifacts=artifacts,
        expectations=expectations,
        ok=ok,
    )
    report_path = os.path.join(out_dir, f"{sc.name}_report.json")
    with open(report_path, "w") as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    report.artifacts.append(report_path)
    return report


# ---------------------------------------------------------------------------
# template generation


def _apply_overrides(params: dict, overrides: Mapping[str, Any]) -> None:
    for dotted, value in overrides.items():
        node = params
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value


def parse_override_value(text: str):
    """Interpret an override value: JSON literal if it parses, raw string
    otherwise (so --set name=run7 works without quoting)."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def generate_scenario(
    template: str,
    seed: int,
    overrides: Mapping[str, Any] | None = None,
    out_path: str | None = None,
) -> str:
    """Write a scenario file for one of the bundled templates and return its
    path. Overrides use dotted keys (``dims.n``, ``integrator.t_end``, ...).

    The heterogeneous-framework template solves for the coupling strength
    with a 10% margin in the frequency condition and picks an initial radius
    well inside the diameter threshold; explicit ``kappa`` or
    ``initial.radius`` overrides suppress the solving. Generation fails with
    :class:`ScenarioError` when the requested parameters cannot satisfy the
    template's contract (for framework templates, the sufficient conditions
    checked on the generated initial data).
    """
    overrides = dict(overrides or {})
    if template == "homogeneous":
        params = _template_homogeneous(seed)
    elif template == "heterogeneous-framework":
        params = _template_heterogeneous_framework(seed)
    elif template == "stability-pair":
        params = _template_stability_pair(seed)
    elif template == "kuramoto-circle":
        params = _template_kuramoto_circle(seed)
    else:
        raise ScenarioError(f"unknown template {template!r}; choose from {TEMPLATES}")
    _apply_overrides(params, overrides)

    if template in ("heterogeneous-framework", "stability-pair"):
        _solve_framework_parameters(params, overrides)

    try:
        scenario = Scenario.from_dict(params)
    except ScenarioError as exc:
        raise ScenarioError(f"generation produced an invalid scenario: {exc}") from exc
    if template in ("heterogeneous-framework", "stability-pair"):
        report = check_framework(scenario.model, scenario.initial)
        if not report.satisfied:
            failing = [c.name for c in report.conditions() if not c.satisfied]
            raise ScenarioError(
                "generation cannot satisfy the sufficient conditions "
                f"with these overrides (failing: {', '.join(failing)})"
            )

    if out_path is None:
        out_path = f"{params['name']}.json"
    with open(out_path, "w") as handle:
        json.dump(params, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return out_path


def _solve_framework_parameters(params: dict, overrides: Mapping[str, Any]) -> None:
    """Fill kappa (10% margin in the frequency condition) and the initial
    radius (35% of the diameter threshold) unless explicitly overridden."""
    dims = params["dims"]
    count, p = dims["N"], dims["p"]
    topology = build_topology(params["topology"], count)
    freqs = build_frequencies(params["frequencies"], count, p)
    if "kappa" not in overrides:
        probe = ModelConfig(kappa=1.0, topology=topology, freqs=freqs, n=dims["n"], p=p)
        margin = coupling_margin_threshold(probe)
        if margin <= 0:
            raise ScenarioError(
                "weight spread leaves no coupling margin; reduce topology.spread"
            )
        if probe.freq_spread == 0.0:
            params["kappa"] = round(2.0 / margin, 6)
        else:
            params["kappa"] = round(probe.freq_spread / (0.9 * margin), 6)
    if params["initial"].get("kind") == "near_consensus" and "initial.radius" not in overrides:
        cfg = ModelConfig(
            kappa=float(params["kappa"]), topology=topology, freqs=freqs, n=dims["n"], p=p
        )
        bound = diameter_threshold(cfg)
        if bound <= 0:
            raise ScenarioError("diameter threshold is not positive; increase kappa")
        params["initial"]["radius"] = round(0.35 * bound, 9)


def _template_homogeneous(seed: int) -> dict:
    count = 6
    return {
        "name": f"homogeneous_{seed}",
        "dims": {"n": 4, "p": 2, "N": count},
        "kappa": 2.0,
        "topology": {"kind": "separable", "xi": [1.0] * count},
        "frequencies": {"kind": "common", "scale": 0.5, "seed": seed},
        "initial": {"kind": "near_consensus", "radius": 0.45, "seed": seed + 1},
        "integrator": {"h": 0.002, "t_end": 30.0, "record_stride": 10},
        "analyses": ["consensus"],
        "expect": {"consensus": "complete"},
    }


def _template_heterogeneous_framework(seed: int) -> dict:
    return {
        "name": f"framework_hetero_{seed}",
        "dims": {"n": 6, "p": 2, "N": 8},
        "kappa": 0.0,  # solved during generation
        "topology": {"kind": "separable", "center": 1.0, "spread": 0.02, "seed": seed},
        "frequencies": {"kind": "random", "spread": 0.02, "seed": seed + 1},
        "initial": {"kind": "near_consensus", "radius": 0.0, "seed": seed + 2},
        "integrator": {"h": 0.001, "t_end": 10.0, "record_stride": 1},
        "perturbation": {"radius": 0.001, "seed": seed + 3},
        "analyses": ["framework", "cubic", "consensus", "decay_fit", "audits"],
        "expect": {"framework": True},
    }


def _template_stability_pair(seed: int) -> dict:
    return {
        "name": f"stability_pair_{seed}",
        "dims": {"n": 5, "p": 2, "N": 6},
        "kappa": 0.0,  # solved during generation
        "topology": {"kind": "separable", "center": 1.0, "spread": 0.02, "seed": seed},
        "frequencies": {"kind": "common", "scale": 0.4, "seed": seed + 1},
        "initial": {"kind": "near_consensus", "radius": 0.0, "seed": seed + 2},
        "integrator": {"h": 0.002, "t_end": 50.0, "record_stride": 10},
        "perturbation": {"radius": 0.002, "seed": seed + 3},
        "analyses": [
            "framework",
            {"stability": {"p_exp": [1.0, 2.0, 4.0]}},
        ],
        "expect": {"framework": True},
    }


def _template_kuramoto_circle(seed: int) -> dict:
    count = 3
    return {
        "name": f"kuramoto_circle_{seed}",
        "dims": {"n": 2, "p": 1, "N": count},
        "kappa": 1.5,
        "topology": {"kind": "separable", "xi": [1.0] * count},
        "frequencies": {"kind": "zero"},
        "initial": {"kind": "random", "seed": seed},
        "integrator": {"h": 0.001, "t_end": 10.0, "record_stride": 10},
        "analyses": ["consensus"],
    }
