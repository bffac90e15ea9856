"""
Command implementations behind the GEMO command-line interface
Each cmd_* takes a RunConfig and returns a payload (dict for JSON, DataFrame for tables)
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.baselines import PARAM_NAMES, BaselineKind, BaselineModel, coerce_kind
from utils.data_loader import Dataset, ingest_dataset, load_reference_table, summary_stats
from utils.emo import (
    EmoParams,
    family_of,
    model_cdf,
    model_hrf,
    model_pdf,
    model_quantile,
    model_sample,
    model_sf,
    params_class,
)
from utils.errors import NumericalError, ParameterDomainError, UsageError
from utils.gemo_core import SHAPE_NAMES, GemoParams
from utils.gof import audit_aic, gof_report, ttt_shape, ttt_transform
from utils.inference import FitResult, InitStrategy, asymptotic_ci, fit, is_nested, likelihood_ratio_test
from utils.reliability import DEFAULT_PERCENTILES, reliability_table

logger = logging.getLogger(__name__)

COMMANDS = ("fit", "compare", "reliab", "ttt", "sample", "eval", "audit")
FORMATS = ("json", "csv")

# Output format when --format is not given
DEFAULT_FORMATS = {
    "fit": "json", "compare": "json", "reliab": "csv", "ttt": "csv",
    "sample": "csv", "eval": "csv", "audit": "csv",
}
GEMO_PREFIX = "gemo-"
EMO_PREFIX = "emo-"

# Significant digits for CSV output
CSV_FLOAT_FORMAT = "%.7g"

# Probability range covered by `eval` grids
EVAL_RANGE = (1e-4, 1 - 1e-4)

CI_LEVEL = 0.95


@dataclass(frozen=True)
class ModelSpec:
    """A named model: family, baseline kind and which coordinates are free"""

    name: str
    kind: BaselineKind
    free_mask: Tuple[bool, ...]
    fixed: Dict[str, float]
    family: str = "gemo"

    @property
    def k(self) -> int:
        return int(sum(self.free_mask))

    @property
    def names(self) -> Tuple[str, ...]:
        return SHAPE_NAMES + PARAM_NAMES[self.kind]


def parse_model(name: str, fixes: Optional[Mapping[str, float]] = None) -> ModelSpec:
    """
    Parse `<kind>` (classic baseline, α = β = γ = 1 fixed), `gemo-<kind>` or
    `emo-<kind>` (all free)

    Args:
        name: Model name
        fixes: Extra coordinates to hold fixed, by parameter name

    Returns:
        ModelSpec
    """
    text = name.strip().lower()
    family, base = _split_family(text)
    gemo = base != text
    try:
        kind = coerce_kind(base)
    except ParameterDomainError:
        raise UsageError(f"unknown model {name!r}; use <kind>, gemo-<kind> or emo-<kind> with kind in "
                         f"{', '.join(k.value for k in BaselineKind)}")
    names = SHAPE_NAMES + PARAM_NAMES[kind]
    free = [gemo] * 3 + [True] * len(PARAM_NAMES[kind])
    fixed = {} if gemo else {s: 1.0 for s in SHAPE_NAMES}

    for param, value in (fixes or {}).items():
        if param not in names:
            raise UsageError(f"{name}: no parameter named {param!r} (expected one of {', '.join(names)})")
        free[names.index(param)] = False
        fixed[param] = float(value)
    if not any(free):
        raise UsageError(f"{name}: every parameter is fixed")
    return ModelSpec(text, kind, tuple(free), fixed, family)


def _split_family(text: str) -> Tuple[str, str]:
    """("emo", "weibull") for "emo-weibull"; unprefixed names are GEMO"""
    for family, prefix in (("gemo", GEMO_PREFIX), ("emo", EMO_PREFIX)):
        if text.startswith(prefix):
            return family, text[len(prefix):]
    return "gemo", text


def parse_fix(items: Optional[Sequence[str]]) -> Dict[str, float]:
    """Parse repeated NAME=VALUE options"""
    fixes = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--fix expects NAME=VALUE, got {item!r}")
        try:
            fixes[name.strip().lower()] = float(value)
        except ValueError:
            raise UsageError(f"--fix {name}: not a number: {value!r}")
    return fixes


def parse_percentiles(text: Optional[str]) -> Optional[Tuple[float, ...]]:
    """Comma-separated probability levels"""
    if text is None:
        return None
    try:
        levels = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"--percentiles expects comma-separated numbers, got {text!r}")
    if not levels or not all(0 < u < 1 for u in levels):
        raise UsageError("--percentiles values must lie in (0, 1)")
    return levels


def load_params(source: str) -> GemoParams:
    """
    Parameters from a JSON literal or a JSON file

    Accepts a flat object {"baseline": kind, "alpha": ..., "lambda": ...} or a
    fit report {"model": ..., "estimates": {...}}. Missing α, β, γ default to 1.
    The family comes from "family" or an emo- model prefix (GEMO otherwise).
    """
    path = Path(source)
    text = source
    if not source.lstrip().startswith("{") and path.exists():
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise UsageError(f"cannot read --params file {path}: {e}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--params is not valid JSON: {e}")
    if not isinstance(obj, dict):
        raise UsageError("--params must be a JSON object")

    values = obj["estimates"] if "estimates" in obj else obj
    if not isinstance(values, dict):
        raise UsageError("--params estimates must be a JSON object")
    model_family, model_kind = _split_family(str(obj.get("model", "")).lower())
    kind = str(obj.get("baseline") or model_kind).lower()
    if not kind:
        raise UsageError("--params needs a baseline kind ('baseline' or 'model')")
    family_name, kind = _split_family(kind)
    family = obj.get("family") or (model_family if model_family != "gemo" else family_name)
    try:
        family_class = params_class(family)
    except ParameterDomainError as e:
        raise UsageError(f"--params: {e}")

    baseline = BaselineModel.from_mapping(kind, values)
    return family_class(
        float(values.get("alpha", 1.0)),
        float(values.get("beta", 1.0)),
        float(values.get("gamma", 1.0)),
        baseline,
    )


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command needs

    Args:
        command: One of COMMANDS
        input_path: Lifetime file or bundled dataset name
        models: Model names (one for fit/reliab, two or more for compare)
        fixes: Coordinates held fixed, by parameter name
        params: JSON literal or file with explicit parameters
        output_format: "json" or "csv"
        out: Output file; stdout when None
        seed: Seed for sampling and multi-start perturbations
        starts: Number of multi-start runs
        grid: Number of points in `eval` curves
        n: Sample size for `sample`
        percentiles: Levels for `reliab`
        table: Reference table for `audit`
    """

    command: str
    input_path: Optional[str] = None
    models: Tuple[str, ...] = ()
    fixes: Dict[str, float] = field(default_factory=dict)
    params: Optional[str] = None
    output_format: str = "json"
    out: Optional[str] = None
    seed: int = 0
    starts: int = 20
    grid: int = 200
    n: int = 100
    percentiles: Optional[Tuple[float, ...]] = None
    table: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.output_format not in FORMATS:
            raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
        if self.command in ("fit", "compare", "ttt") and not self.input_path:
            raise UsageError(f"{self.command} requires --data")
        if self.command in ("sample", "eval") and not self.params:
            raise UsageError(f"{self.command} requires --params")
        if self.command == "reliab" and not self.params and not (self.input_path and self.models):
            raise UsageError("reliab requires --params, or --data with --model")
        if self.starts < 1:
            raise UsageError(f"--starts must be >= 1, got {self.starts}")
        if self.grid < 2:
            raise UsageError(f"--grid must be >= 2, got {self.grid}")
        if self.n < 1:
            raise UsageError(f"--n must be >= 1, got {self.n}")

    @property
    def strategy(self) -> InitStrategy:
        return InitStrategy(n_starts=self.starts, seed=self.seed)


# ============================================
# FIT AND COMPARE
# ============================================

def _fixes_for(spec_name: str, fixes: Mapping[str, float]) -> Dict[str, float]:
    """Keep only the fixes that name a parameter of this model"""
    names = parse_model(spec_name).names
    return {k: v for k, v in fixes.items() if k in names}


def _fit_model(data: Dataset, spec: ModelSpec, config: RunConfig) -> FitResult:
    return fit(data, spec.kind, spec.free_mask, config.strategy, spec.fixed, family=spec.family)


def fit_report(result: FitResult, data: Dataset, spec: ModelSpec) -> Dict[str, Any]:
    """JSON-ready summary of one fit"""
    gof = gof_report(result, data, model_name=spec.name)
    report: Dict[str, Any] = {
        'model': spec.name,
        'family': spec.family,
        'baseline': spec.kind.value,
        'dataset': data.label,
        'n': data.n,
        'summary': summary_stats(data),
        'estimates': result.estimates,
        'free': list(result.free_names),
        'fixed': {name: value for name, value in result.estimates.items() if name not in result.free_names},
        'std_errors': result.std_errors,
        'loglik': result.loglik,
        'k': gof.k,
        'aic': gof.aic,
        'ks': gof.ks,
        'ad': gof.ad,
        'converged': result.converged,
        'gradient_norm': result.gradient_norm,
        'n_starts': result.n_starts,
        'condition_number': result.condition_number,
        'ridge_warning': result.ridge_warning,
        'hessian_singular': result.hessian_singular,
        'diagnostics': {k: v for k, v in result.diagnostics.items() if k != 'start_logliks'},
        'ci_level': CI_LEVEL,
    }
    try:
        natural = asymptotic_ci(result, CI_LEVEL)
        log_scale = asymptotic_ci(result, CI_LEVEL, log_scale=True)
        report['confidence_intervals'] = {k: [ci.lower, ci.upper] for k, ci in natural.items()}
        report['confidence_intervals_log_scale'] = {k: [ci.lower, ci.upper] for k, ci in log_scale.items()}
    except NumericalError as e:
        logger.warning("confidence intervals unavailable: %s", e)
        report['confidence_intervals'] = None
        report['confidence_intervals_log_scale'] = None
    return report


def _model_name(params: GemoParams) -> str:
    kind = params.baseline.kind.value
    if isinstance(params, EmoParams):
        return EMO_PREFIX + kind
    return kind if params.is_identity else GEMO_PREFIX + kind


def evaluation_report(params: GemoParams, data: Dataset, spec: Optional[ModelSpec] = None) -> Dict[str, Any]:
    """
    ℓ, AIC, KS and AD at supplied parameters, without refitting

    k is the free-parameter count of the --model when given; otherwise every
    coordinate counts, except α, β, γ when all three equal 1.
    """
    if spec is not None and (spec.kind is not params.baseline.kind or spec.family != family_of(params)):
        raise UsageError(f"--params describe {family_of(params)}-{params.baseline.kind.value}, not {spec.name}")
    if spec is not None:
        k, name = spec.k, spec.name
    else:
        k = params.baseline.param_count if params.is_identity else params.param_count
        name = _model_name(params)
    gof = gof_report(params, data, k=k, model_name=name)
    logger.info("Evaluated %s at supplied parameters on %s: loglik=%.6f", name, data.label, gof.loglik)
    return {
        'model': name,
        'family': family_of(params),
        'baseline': params.baseline.kind.value,
        'dataset': data.label,
        'n': data.n,
        'summary': summary_stats(data),
        'estimates': params.as_dict(),
        'evaluated': True,
        'loglik': gof.loglik,
        'k': gof.k,
        'aic': gof.aic,
        'ks': gof.ks,
        'ad': gof.ad,
    }


def cmd_fit(config: RunConfig) -> Dict[str, Any]:
    """
    Fit one model and report estimates, SEs, intervals and fit statistics

    With --params the supplied parameters are evaluated on the data instead;
    --model (at most one) then only sets the name and k.
    """
    data = ingest_dataset(config.input_path)
    if config.params:
        if len(config.models) > 1:
            raise UsageError("fit --params takes at most one --model")
        spec = parse_model(config.models[0], config.fixes) if config.models else None
        return evaluation_report(load_params(config.params), data, spec)
    if len(config.models) != 1:
        raise UsageError("fit takes exactly one --model")
    spec = parse_model(config.models[0], config.fixes)
    result = _fit_model(data, spec, config)
    return fit_report(result, data, spec)


def cmd_compare(config: RunConfig) -> Union[Dict[str, Any], pd.DataFrame]:
    """
    Fit several models to one dataset, rank them by AIC and test nested pairs

    Returns:
        JSON: {"models": [...], "lr_tests": [...]}; CSV: the ranked model table
    """
    if len(config.models) < 2:
        raise UsageError("compare needs at least two --model options")
    data = ingest_dataset(config.input_path)

    fits: List[Tuple[ModelSpec, FitResult]] = []
    rows = []
    for name in config.models:
        spec = parse_model(name, _fixes_for(name, config.fixes))
        result = _fit_model(data, spec, config)
        fits.append((spec, result))
        row = gof_report(result, data, model_name=spec.name).as_dict()
        row['converged'] = result.converged
        rows.append(row)

    table = pd.DataFrame(rows).sort_values('aic', kind='stable').reset_index(drop=True)
    table.insert(0, 'rank', np.arange(1, len(table) + 1))

    tests = []
    for full_spec, full in fits:
        for restricted_spec, restricted in fits:
            if full is restricted or full.free_mask == restricted.free_mask:
                continue
            if is_nested(full, restricted):
                lr = likelihood_ratio_test(full, restricted)
                tests.append({
                    'full': full_spec.name,
                    'restricted': restricted_spec.name,
                    'statistic': lr.statistic,
                    'df': lr.df,
                    'p_value': lr.p_value,
                    'critical_value': lr.critical_value,
                    'reject': lr.reject,
                })
                logger.info("LR %s vs %s: %.4f (df %d, p=%.4g)",
                            full_spec.name, restricted_spec.name, lr.statistic, lr.df, lr.p_value)

    if config.output_format == "csv":
        return table
    return {'dataset': data.label, 'n': data.n, 'models': table.to_dict(orient='records'), 'lr_tests': tests}


# ============================================
# CURVES AND TABLES
# ============================================

def _resolve_params(config: RunConfig) -> GemoParams:
    if config.params:
        return load_params(config.params)
    data = ingest_dataset(config.input_path)
    spec = parse_model(config.models[0], config.fixes)
    return _fit_model(data, spec, config).params


def cmd_reliab(config: RunConfig) -> pd.DataFrame:
    """Time, mean residual life and mean past lifetime at each percentile"""
    params = _resolve_params(config)
    if isinstance(params, EmoParams):
        raise UsageError("reliab covers GEMO models only")
    table = reliability_table(params, config.percentiles or DEFAULT_PERCENTILES)
    return table.to_frame()


def cmd_ttt(config: RunConfig) -> pd.DataFrame:
    """Scaled TTT curve including the (0, 0) origin"""
    data = ingest_dataset(config.input_path)
    curve = ttt_transform(data)
    logger.info("TTT curve of %s suggests a %s hazard", data.label, ttt_shape(data))
    return pd.DataFrame(curve, columns=['i_over_n', 'ttt'])


def cmd_sample(config: RunConfig) -> pd.DataFrame:
    """Seeded inverse-transform draws"""
    params = load_params(config.params)
    return pd.DataFrame({'x': model_sample(params, config.n, config.seed)})


def cmd_eval(config: RunConfig) -> pd.DataFrame:
    """pdf, cdf, sf and hazard on an even grid between the 1e-4 and 1 - 1e-4 quantiles"""
    params = load_params(config.params)
    lo, hi = model_quantile(params, np.array(EVAL_RANGE))
    x = np.linspace(lo, hi, config.grid)
    return pd.DataFrame({
        'x': x,
        'pdf': model_pdf(params, x),
        'cdf': model_cdf(params, x),
        'sf': model_sf(params, x),
        'hrf': model_hrf(params, x),
    })


def cmd_audit(config: RunConfig) -> pd.DataFrame:
    """Recompute the AIC column of a published comparison table"""
    return audit_aic(load_reference_table(config.table))


_DISPATCH = {
    'fit': cmd_fit,
    'compare': cmd_compare,
    'reliab': cmd_reliab,
    'ttt': cmd_ttt,
    'sample': cmd_sample,
    'eval': cmd_eval,
    'audit': cmd_audit,
}


def run(config: RunConfig) -> Tuple[Union[Dict[str, Any], pd.DataFrame], int]:
    """
    Execute a command

    Returns:
        (payload, exit code); a fit that did not converge exits with 4
    """
    payload = _DISPATCH[config.command](config)
    code = 0
    if config.command == 'fit' and not payload.get('converged', True):
        code = NumericalError.exit_code
    return payload, code


# ============================================
# OUTPUT
# ============================================

def _json_ready(obj: Any) -> Any:
    """Plain Python types with NaN/inf mapped to null"""
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def render(payload: Union[Dict[str, Any], pd.DataFrame], output_format: str) -> str:
    """
    Serialize a payload

    DataFrames become CSV (7 significant digits) or JSON records; report
    dicts become JSON, or a single CSV row with dotted column names.
    """
    if isinstance(payload, pd.DataFrame):
        if output_format == "csv":
            return payload.to_csv(index=False, float_format=CSV_FLOAT_FORMAT)
        return json.dumps({'rows': _json_ready(payload.to_dict(orient='records'))}, indent=2) + "\n"
    if output_format == "csv":
        flat = pd.json_normalize(_json_ready(payload))
        return flat.to_csv(index=False, float_format=CSV_FLOAT_FORMAT)
    return json.dumps(_json_ready(payload), indent=2) + "\n"


def emit(payload: Union[Dict[str, Any], pd.DataFrame], config: RunConfig) -> str:
    """Write the rendered payload to config.out (or return it for stdout)"""
    text = render(payload, config.output_format)
    if config.out:
        try:
            Path(config.out).write_text(text, encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot write --out {config.out}: {e}")
        logger.info("Wrote %s", config.out)
    return text
