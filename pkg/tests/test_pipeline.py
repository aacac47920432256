import json
import os

import httpx
import pytest

from cogforge.dataset import SplitSpec, to_prompt_text
from cogforge.errors import (AllComponentsDisabled, ConfigError, EmptyResponse, EngineUnreachable,
                             NoBlocksFound, RateLimited, RunAborted)
from cogforge.fitting import fit_all
from cogforge.mdl import load_library
from cogforge.mdl.library import library_source
from cogforge.pipeline import (ABLATABLE, FEEDBACK_HEADER, HTTPEngine, LadderEngine, MockEngine,
                               RunConfig, ScriptedEngine, ablate, build_prompt, construct_feedback,
                               default_spec, extract_candidates, learning_script, prompt_hash, run,
                               write_archive)
from cogforge.pipeline.mocks import BROKEN, fenced, renamed
from cogforge.synthgen import gen_bandit_agents

KIND = "learning_full"


@pytest.fixture(scope="module")
def data():
    d, _ = gen_bandit_agents("rw_pm", n_agents=10, n_trials=60, seed=7, feedback="full",
                             params=[0.7, 0.1, 6.0])
    return d


def small(data, engine, **kw):
    base = dict(iterations=3, restarts=1, prompt_trials=10, mc_samples=2000)
    base.update(kw)
    return RunConfig(data, engine, **base)


# -- prompt ------------------------------------------------------------------

def test_full_prompt_layout(data):
    spec = default_spec(data.kind, to_prompt_text(data, 2, 5))
    text = build_prompt(spec)
    pos = [text.index(spec.task_description.strip()[:40]),
           text.index("Data from participant 1:"),
           text.index(spec.guardrails.strip()[:40]),
           text.index("A starting model you can build on")]
    assert pos == sorted(pos)
    assert FEEDBACK_HEADER not in text
    assert "```mdl model1" in text


def test_feedback_disabled_keeps_prompt_fixed(data):
    spec = default_spec(data.kind, "Data from participant 1:\nx\n", enabled={"feedback": False})
    fb = construct_feedback((load_library("rw"), 120.0), [{"alpha", "beta"}])
    assert build_prompt(spec) == build_prompt(spec.__class__(**{**spec.__dict__, "feedback": fb}))


def test_data_disabled(data):
    spec = default_spec(data.kind, to_prompt_text(data, 2, 5)).without("data")
    assert "Data from participant" not in build_prompt(spec)


def test_all_disabled():
    spec = default_spec(KIND, "x").without("description", "data", "guardrails", "template", "feedback")
    with pytest.raises(AllComponentsDisabled):
        build_prompt(spec)


# -- engines -----------------------------------------------------------------

def test_mock_engine_by_hash():
    eng = MockEngine({prompt_hash("hello"): "canned"})
    assert eng.complete("hello") == "canned"
    with pytest.raises(EmptyResponse):
        eng.complete("other")


def _http(handler, **kw):
    sleeps = []
    eng = HTTPEngine("https://llm.example/v1", "m", transport=httpx.MockTransport(handler),
                     sleep=sleeps.append, **kw)
    return eng, sleeps


def _ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


def test_rate_limit_then_success(monkeypatch):
    monkeypatch.setenv("COGFORGE_API_KEY", "secret")
    seen = []

    def handler(req):
        seen.append(req)
        return httpx.Response(429) if len(seen) <= 3 else _ok("fine")
    eng, sleeps = _http(handler)
    assert eng.complete("p", 0.1) == "fine"
    assert len(seen) == 4 and sleeps == [1.0, 2.0, 4.0]
    body = json.loads(seen[0].content)
    assert body == {"model": "m", "messages": [{"role": "user", "content": "p"}],
                    "temperature": 0.1, "max_tokens": 4096}
    assert seen[0].headers["authorization"] == "Bearer secret"
    assert seen[0].url.path == "/v1/chat/completions"


def test_endpoint_down():
    calls = []

    def handler(req):
        calls.append(1)
        raise httpx.ConnectError("refused")
    eng, _ = _http(handler)
    with pytest.raises(EngineUnreachable):
        eng.complete("p")
    assert len(calls) == 4  # first attempt plus three retries


def test_rate_limited_exhausted_and_client_error():
    eng, _ = _http(lambda r: httpx.Response(429))
    with pytest.raises(RateLimited):
        eng.complete("p")
    eng, sleeps = _http(lambda r: httpx.Response(401, text="no"))
    with pytest.raises(EngineUnreachable):
        eng.complete("p")
    assert sleeps == []
    eng, _ = _http(lambda r: httpx.Response(200, json={"choices": []}))
    with pytest.raises(EmptyResponse):
        eng.complete("p")


def test_presets():
    assert HTTPEngine("http://x", "m", preset="qwen").temperature == 0.15
    assert HTTPEngine("http://x", "m", preset="r1").temperature == 0.1
    with pytest.raises(ConfigError):
        HTTPEngine("", "m")


# -- extraction ----------------------------------------------------------------

def test_three_blocks():
    text = fenced([library_source("rw"), library_source("rw_pm"), library_source("rw_kappa")])
    c = extract_candidates(text, KIND)
    assert [x.ok for x in c] == [True, True, True] and [x.index for x in c] == [1, 2, 3]


def test_duplicate_parameter_set():
    text = fenced([library_source("rw")])
    c = extract_candidates(text, KIND, history=[{"Alpha", "beta"}])
    assert c[0].error_type == "DuplicateParameterSet"
    sib = extract_candidates(fenced([library_source("rw"), library_source("rw")]), KIND)
    assert sib[0].ok and sib[1].error_type == "DuplicateParameterSet"


def test_any_overlap_rule():
    text = fenced([library_source("rw_pm")])
    assert extract_candidates(text, KIND, history=[{"beta", "gamma"}])[0].ok
    c = extract_candidates(text, KIND, history=[{"beta", "gamma"}], any_overlap=True)
    assert c[0].error_type == "DuplicateParameterSet"


def test_syntax_error_block():
    c = extract_candidates(fenced([BROKEN]), KIND)
    assert not c[0].ok and c[0].error_type == "MDLSyntaxError" and ":" in c[0].error


def test_no_blocks():
    with pytest.raises(NoBlocksFound):
        extract_candidates("I would use a delta rule.", KIND)


# -- feedback ------------------------------------------------------------------

def test_feedback_contents():
    rw = load_library("rw")
    fb = construct_feedback((rw, 166.02), [{"alpha", "beta"}, {"a", "b", "k"}])
    assert "166.02" in fb and "BIC" in fb and "- alpha, beta" in fb and "- a, b, k" in fb
    assert construct_feedback((rw, 166.02), []) == ""
    assert construct_feedback(None, [{"a"}]) == ""
    assert "AIC" in construct_feedback((rw, 150.5), [{"alpha", "beta"}], metric="aic")


# -- loop ----------------------------------------------------------------------

def test_unparseable_engine_aborts(data):
    eng = ScriptedEngine(["Sorry, I cannot write that model."])
    with pytest.raises(RunAborted) as e:
        run(small(data, eng))
    assert e.value.iteration == 1 and eng.calls == 4


def test_engine_failure_aborts(data):
    eng = MockEngine({})
    with pytest.raises(RunAborted):
        run(small(data, eng))


def test_retry_then_recover(data):
    eng = ScriptedEngine(["nothing", fenced([BROKEN]), fenced([library_source("rw")])])
    res = run(small(data, eng, iterations=1))
    assert res.iterations[0].retries == 2 and len(res.iterations[0].prompts) == 3


def test_run_trace_and_history(data):
    res = run(small(data, ScriptedEngine(learning_script(4)), iterations=4, baselines=("rw",)))
    trace = res.best_trace
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    accepted = [frozenset(c.param_names) for it in res.iterations for c in it.candidates
                if c.score is not None]
    assert len(accepted) == len(set(accepted))
    assert res.leaks == []
    assert res.comparison is not None and set(res.comparison.models) == {res.best_model.name, "rw"}
    assert FEEDBACK_HEADER not in res.iterations[0].prompts[0]
    assert FEEDBACK_HEADER in res.iterations[1].prompts[0]


def test_five_seeds(data):
    out = [run(small(data, LadderEngine(), iterations=2, seed=s, split=SplitSpec(seed=s)))
           for s in range(5)]
    assert len(out) == 5 and len({r.run_id for r in out}) == 5


def test_audit_catches_leak(data):
    from cogforge.dataset import split
    from cogforge.pipeline import audit_prompts
    _, _, test = split(data, SplitSpec())
    leaked = "x\n" + to_prompt_text(test, 1, 10)
    assert audit_prompts([leaked], test, 10)
    assert audit_prompts(["nothing here"], test, 10) == []


def test_archive(data, tmp_path):
    eng = ScriptedEngine(["nothing", fenced([library_source("rw"), BROKEN])])
    res = run(small(data, eng, iterations=1))
    write_archive(res, tmp_path)
    names = sorted(os.listdir(tmp_path))
    assert names == ["candidates", "fits.jsonl", "prompts", "report.json", "responses"]
    assert sorted(os.listdir(tmp_path / "prompts")) == ["01.txt", "01_r0.txt"]
    assert sorted(os.listdir(tmp_path / "candidates")) == ["01_1.mdl", "01_2.mdl"]
    rows = [json.loads(x) for x in (tmp_path / "fits.jsonl").read_text().splitlines()]
    assert {r["stage"] for r in rows} == {"validation", "test"}
    assert json.loads((tmp_path / "report.json").read_text())["run_id"] == res.run_id


def test_config_validation(data):
    with pytest.raises(ConfigError):
        RunConfig(data, LadderEngine(), metric="waic")
    with pytest.raises(ConfigError):
        RunConfig(data, LadderEngine(), components={"nonsense": False})


def test_ablation_table(data):
    cfg = small(data, LadderEngine(), iterations=2)
    tab = ablate(cfg)
    assert [r.ablated for r in tab.rows] == ["none"] + list(ABLATABLE)
    full = run(cfg)
    assert tab.row("none").mean_test == pytest.approx(
        sum(f.bic for f in full.test_fits) / len(full.test_fits))
    assert tab.results["none"].to_json() == full.to_json()
    for r in tab.rows[1:]:
        assert len(r.deltas) == len(full.test_fits)
    with pytest.raises(ValueError):
        ablate(cfg, components=("guardrails",))


def test_test_fits_use_fitting_module(data):
    res = run(small(data, ScriptedEngine([fenced([library_source("rw")])]), iterations=1))
    from cogforge.dataset import split
    _, _, test = split(data, SplitSpec())
    ref = fit_all(res.best_model, test, 1, 0)
    assert [f.nll for f in ref] == [f.nll for f in res.test_fits]


def test_renamed_keeps_program_valid():
    src = renamed(library_source("rw_pm"), "x")
    c = extract_candidates(fenced([src]), KIND)
    assert c[0].ok and c[0].param_names == {"alpha_pos_x", "alpha_neg_x", "beta_x"}
