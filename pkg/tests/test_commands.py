import io
import json

import numpy as np
import pandas as pd
import pytest

import app
from utils.commands import (
    RunConfig,
    emit,
    load_params,
    parse_fix,
    parse_model,
    parse_percentiles,
    render,
    run,
)
from utils.emo import EmoParams, emo_cdf
from utils.errors import ParameterDomainError, UsageError
from utils.inference import log_likelihood

CANCER_GEMO_W = json.dumps({
    "baseline": "weibull", "alpha": 25.5629, "beta": 0.2846, "gamma": 4.0532,
    "lambda": 0.5946, "theta": 3.6174,
})
EXP1 = json.dumps({"baseline": "exponential", "lambda": 1.0})
EMO_W = json.dumps({
    "family": "emo", "baseline": "weibull", "alpha": 0.5, "beta": 2.0, "gamma": 0.6,
    "lambda": 1.7, "theta": 2.0,
})


# ============================================
# Argument parsing
# ============================================

def test_classic_model_fixes_shape_parameters():
    spec = parse_model("Weibull")
    assert spec.free_mask == (False, False, False, True, True)
    assert spec.fixed == {"alpha": 1.0, "beta": 1.0, "gamma": 1.0}


def test_gemo_model_frees_everything():
    spec = parse_model("gemo-lognormal")
    assert spec.free_mask == (True,) * 5
    assert spec.fixed == {}


def test_emo_model_frees_everything():
    spec = parse_model("EMO-Weibull")
    assert spec.family == "emo"
    assert spec.kind.value == "weibull"
    assert spec.free_mask == (True,) * 5
    assert spec.k == 5
    assert parse_model("weibull").family == "gemo"


def test_model_with_fixes():
    spec = parse_model("gemo-weibull", {"gamma": 1.0})
    assert spec.free_mask == (True, True, False, True, True)
    assert spec.fixed == {"gamma": 1.0}


@pytest.mark.parametrize("name, fixes", [
    ("pareto", None),
    ("gemo-weibull", {"mu": 0.0}),
    ("exponential", {"lambda": 1.0}),
])
def test_model_errors(name, fixes):
    with pytest.raises(UsageError):
        parse_model(name, fixes)


def test_parse_fix():
    assert parse_fix(["gamma=1", " Alpha = 2.5"]) == {"gamma": 1.0, "alpha": 2.5}
    assert parse_fix(None) == {}
    for bad in (["gamma"], ["=1"], ["gamma=x"]):
        with pytest.raises(UsageError):
            parse_fix(bad)


def test_parse_percentiles():
    assert parse_percentiles("0.1, 0.5,0.9") == (0.1, 0.5, 0.9)
    assert parse_percentiles(None) is None
    for bad in ("1.5", "a,b", ""):
        with pytest.raises(UsageError):
            parse_percentiles(bad)


def test_load_params_flat_literal():
    p = load_params(CANCER_GEMO_W)
    assert p.alpha == 25.5629
    assert p.baseline.params == (0.5946, 3.6174)


def test_load_params_defaults_shape_to_one():
    p = load_params(EXP1)
    assert p.is_identity


def test_load_params_from_report_file(tmp_path):
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"model": "gemo-gamma", "estimates": {
        "alpha": 2.0, "beta": 0.5, "gamma": 1.5, "lambda": 3.0, "theta": 0.4,
    }}))
    p = load_params(str(path))
    assert p.baseline.kind.value == "gamma"
    assert p.gamma == 1.5


def test_load_params_keeps_the_emo_family(tmp_path):
    assert isinstance(load_params(EMO_W), EmoParams)
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"model": "emo-gamma", "estimates": {
        "alpha": 2.0, "beta": 0.5, "gamma": 1.5, "lambda": 3.0, "theta": 0.4,
    }}))
    p = load_params(str(path))
    assert isinstance(p, EmoParams)
    assert p.baseline.kind.value == "gamma"
    assert not isinstance(load_params(CANCER_GEMO_W), EmoParams)


def test_load_params_unreadable_file_is_usage_error(tmp_path):
    path = tmp_path / "params.json"
    path.write_bytes(b"\xff\xfe{}")
    with pytest.raises(UsageError, match="cannot read --params file"):
        load_params(str(path))


@pytest.mark.parametrize("text, error", [
    ("{not json", UsageError),
    ("[1, 2]", UsageError),
    ('{"lambda": 1.0}', UsageError),
    ('{"baseline": "weibull", "lambda": 1.0}', ParameterDomainError),
])
def test_load_params_errors(text, error):
    with pytest.raises(error):
        load_params(text)


@pytest.mark.parametrize("kwargs", [
    {"command": "plot"},
    {"command": "fit"},
    {"command": "audit", "output_format": "xml"},
    {"command": "sample"},
    {"command": "reliab", "input_path": "glass_fiber"},
    {"command": "ttt", "input_path": "glass_fiber", "grid": 1},
])
def test_run_config_validation(kwargs):
    with pytest.raises(UsageError):
        RunConfig(**kwargs)


# ============================================
# Commands
# ============================================

def test_fit_report_roundtrips_through_params(cancer):
    config = RunConfig("fit", input_path="bladder_cancer", models=("exponential",), starts=2)
    payload, code = run(config)
    assert code == 0
    assert payload["k"] == 1
    assert payload["free"] == ["lambda"]
    assert payload["fixed"] == {"alpha": 1.0, "beta": 1.0, "gamma": 1.0}
    assert payload["estimates"]["lambda"] == pytest.approx(cancer.n / cancer.values.sum(), rel=1e-5)
    lower, upper = payload["confidence_intervals"]["lambda"]
    assert lower < payload["estimates"]["lambda"] < upper

    text = render(payload, "json")
    again = load_params(text)
    assert log_likelihood(again, cancer) == pytest.approx(payload["loglik"], abs=1e-9)


def test_fit_needs_exactly_one_model():
    with pytest.raises(UsageError):
        run(RunConfig("fit", input_path="glass_fiber", models=("weibull", "gamma")))


def test_compare_ranks_by_aic():
    config = RunConfig("compare", input_path="bladder_cancer",
                       models=("weibull", "gamma", "exponential"), starts=2)
    payload, code = run(config)
    assert code == 0
    models = payload["models"]
    assert [m["rank"] for m in models] == [1, 2, 3]
    aics = [m["aic"] for m in models]
    assert aics == sorted(aics)
    assert payload["lr_tests"] == []


def test_compare_csv_is_the_model_table():
    config = RunConfig("compare", input_path="glass_fiber", models=("weibull", "exponential"),
                       starts=2, output_format="csv")
    payload, _ = run(config)
    table = pd.read_csv(io.StringIO(render(payload, "csv")))
    assert list(table["model"]) == ["weibull", "exponential"]
    assert {"rank", "k", "loglik", "aic", "ks", "ad", "converged"} <= set(table.columns)


def test_fit_with_params_evaluates_without_refitting(cancer):
    payload, code = run(RunConfig("fit", input_path="bladder_cancer", params=CANCER_GEMO_W))
    assert code == 0
    assert payload["evaluated"] is True
    assert "converged" not in payload
    assert payload["model"] == "gemo-weibull"
    assert payload["k"] == 5
    assert payload["estimates"]["alpha"] == 25.5629
    assert payload["loglik"] == pytest.approx(log_likelihood(load_params(CANCER_GEMO_W), cancer), abs=1e-12)
    assert payload["aic"] == pytest.approx(2 * 5 - 2 * payload["loglik"])


def test_fit_with_params_takes_k_from_the_model():
    config = RunConfig("fit", input_path="bladder_cancer", params=CANCER_GEMO_W,
                       models=("gemo-weibull",), fixes={"gamma": 4.0532})
    payload, _ = run(config)
    assert payload["k"] == 4
    assert payload["model"] == "gemo-weibull"


@pytest.mark.parametrize("models", [("gamma",), ("emo-weibull",), ("weibull", "gamma")])
def test_fit_with_params_rejects_a_mismatched_model(models):
    with pytest.raises(UsageError):
        run(RunConfig("fit", input_path="bladder_cancer", params=CANCER_GEMO_W, models=models))


def test_emo_fit_report_names_the_family():
    config = RunConfig("fit", input_path="glass_fiber", models=("emo-weibull",),
                       fixes={"gamma": 1.0}, starts=2)
    payload, _ = run(config)
    assert payload["family"] == "emo"
    assert payload["model"] == "emo-weibull"
    assert payload["k"] == 4
    assert isinstance(load_params(render(payload, "json")), EmoParams)


@pytest.mark.slow
def test_compare_tests_nested_models():
    config = RunConfig("compare", input_path="glass_fiber", models=("gemo-weibull", "weibull"), starts=5)
    payload, _ = run(config)
    (lr,) = payload["lr_tests"]
    assert (lr["full"], lr["restricted"], lr["df"]) == ("gemo-weibull", "weibull", 3)
    assert lr["statistic"] >= 0


def test_reliab_from_params():
    payload, _ = run(RunConfig("reliab", params=CANCER_GEMO_W, percentiles=(0.5,)))
    assert list(payload.columns) == ["percentile", "time", "mrl", "mpl"]
    assert len(payload) == 1
    assert payload["time"][0] == pytest.approx(6.2093, rel=1e-3)


def test_reliab_rejects_emo_params():
    with pytest.raises(UsageError, match="GEMO models only"):
        run(RunConfig("reliab", params=EMO_W))


def test_ttt_command(glass):
    payload, _ = run(RunConfig("ttt", input_path="glass_fiber"))
    assert list(payload.columns) == ["i_over_n", "ttt"]
    assert len(payload) == glass.n + 1
    assert tuple(payload.iloc[0]) == (0.0, 0.0)


def test_sample_command_is_seeded():
    a, _ = run(RunConfig("sample", params=CANCER_GEMO_W, n=25, seed=4))
    b, _ = run(RunConfig("sample", params=CANCER_GEMO_W, n=25, seed=4))
    assert len(a) == 25
    pd.testing.assert_frame_equal(a, b)


def test_eval_constant_hazard():
    payload, _ = run(RunConfig("eval", params=EXP1, grid=50))
    assert len(payload) == 50
    np.testing.assert_allclose(payload["hrf"], 1.0, atol=1e-9)
    np.testing.assert_allclose(payload["cdf"] + payload["sf"], 1.0, atol=1e-15)


def test_eval_emo_curves():
    payload, _ = run(RunConfig("eval", params=EMO_W, grid=20))
    p = load_params(EMO_W)
    np.testing.assert_allclose(payload["cdf"], emo_cdf(p, payload["x"].to_numpy()), rtol=1e-12)
    np.testing.assert_allclose(payload["cdf"] + payload["sf"], 1.0, atol=1e-12)
    assert (np.diff(payload["cdf"]) > 0).all()


def test_audit_command():
    payload, _ = run(RunConfig("audit", output_format="csv"))
    assert len(payload) == 10
    assert int((~payload["consistent"]).sum()) == 1


# ============================================
# Output
# ============================================

def test_json_maps_non_finite_to_null():
    text = render({"a": float("nan"), "b": np.float64(1.5), "c": np.array([1, 2]), "d": np.bool_(True)}, "json")
    assert json.loads(text) == {"a": None, "b": 1.5, "c": [1, 2], "d": True}


def test_csv_uses_seven_significant_digits():
    assert render(pd.DataFrame({"x": [1 / 3]}), "csv").splitlines() == ["x", "0.3333333"]


def test_report_renders_as_single_csv_row():
    text = render({"model": "weibull", "estimates": {"lambda": 1.5}}, "csv")
    table = pd.read_csv(io.StringIO(text))
    assert list(table.columns) == ["model", "estimates.lambda"]
    assert len(table) == 1


def test_emit_writes_file(tmp_path):
    out = tmp_path / "curve.csv"
    config = RunConfig("sample", params=EXP1, n=3, output_format="csv", out=str(out))
    payload, _ = run(config)
    text = emit(payload, config)
    assert out.read_text() == text
    assert len(text.splitlines()) == 4


# ============================================
# Entry point
# ============================================

def test_main_writes_stdout(capsys):
    assert app.main(["audit"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("model,dataset,loglik,k,aic_printed,aic_computed")


def test_main_usage_error(capsys):
    assert app.main(["fit", "--model", "weibull"]) == 2
    assert "error:" in capsys.readouterr().err


def test_main_argparse_error():
    assert app.main(["plot"]) == 2


def test_main_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0 -3.0\n")
    assert app.main(["fit", "--data", str(bad), "--model", "weibull"]) == 3
    assert "line 1" in capsys.readouterr().err


def test_main_domain_error():
    params = json.dumps({"baseline": "exponential", "lambda": 1.0, "alpha": 0.0})
    assert app.main(["eval", "--params", params]) == 3


def test_main_numerical_error():
    # tail index θβγ = 0.5: the mean residual life does not exist
    params = json.dumps({"baseline": "lomax", "lambda": 1.0, "theta": 0.5})
    assert app.main(["reliab", "--params", params]) == 4


def test_main_bad_log_level(monkeypatch):
    monkeypatch.setenv("GEMO_LOG_LEVEL", "chatty")
    assert app.main(["audit"]) == 2


def test_main_out_file(tmp_path, capsys):
    out = tmp_path / "draws.csv"
    assert app.main(["sample", "--params", EXP1, "--n", "5", "--seed", "1", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    table = pd.read_csv(out)
    assert list(table.columns) == ["x"]
    assert len(table) == 5


def test_main_fit_report_evaluates_back_on_the_data(tmp_path, capsys):
    report = tmp_path / "fit.json"
    assert app.main(["fit", "--data", "bladder_cancer", "--model", "exponential",
                     "--starts", "2", "--out", str(report)]) == 0
    fitted = json.loads(report.read_text())
    assert app.main(["fit", "--params", str(report), "--data", "bladder_cancer"]) == 0
    evaluated = json.loads(capsys.readouterr().out)
    assert evaluated["evaluated"] is True
    assert evaluated["model"] == "exponential"
    assert evaluated["k"] == 1
    assert evaluated["loglik"] == pytest.approx(fitted["loglik"], abs=1e-9)
    assert evaluated["aic"] == pytest.approx(fitted["aic"], abs=1e-8)


def test_main_unreadable_data_file(tmp_path, capsys):
    bad = tmp_path / "latin1.txt"
    bad.write_bytes(b"1.0 \xff\xfe 2.0\n")
    assert app.main(["fit", "--data", str(bad), "--model", "weibull"]) == 3
    assert "cannot read" in capsys.readouterr().err


def test_main_unwritable_out(tmp_path, capsys):
    out = tmp_path / "missing" / "draws.csv"
    assert app.main(["sample", "--params", EXP1, "--n", "5", "--out", str(out)]) == 2
    assert "cannot write --out" in capsys.readouterr().err


def test_main_unreadable_params_file(tmp_path):
    path = tmp_path / "params.json"
    path.write_bytes(b"\xff\xfe{}")
    assert app.main(["eval", "--params", str(path)]) == 2


def test_main_reliab_of_emo_is_usage_error():
    assert app.main(["reliab", "--params", EMO_W]) == 2
