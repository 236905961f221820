import json

import pytest
from hypothesis import given, settings, strategies as st

from nemflow.config import ConfigError, Preset, SimConfig, check_h_over_eps, parse_config


def test_defaults_are_two_defect_experiment():
    cfg = parse_config([])
    assert cfg.preset is Preset.two_singularities
    assert (cfg.nu, cfg.lam, cfg.gamma, cfg.beta, cfg.eps, cfg.k) == (1, 1, 1, -1, 0.05, 0.001)
    assert cfg.domain == (-1, 1, -1, 1)
    assert cfg.hf_value == 0.0


def test_flag_mapping():
    cfg = parse_config(["--beta", "-0.5", "--hf", "1.0", "--dt", "0.002", "--lambda", "2",
                        "--preset", "four_singularities", "--nx", "10", "--t-final", "0.5"])
    assert cfg.beta == -0.5 and cfg.hf_value == 1.0 and cfg.k == 0.002 and cfg.lam == 2
    assert cfg.preset is Preset.four_singularities and cfg.nx == 10 and cfg.t_final == 0.5
    assert cfg.n_steps == 250


@pytest.mark.parametrize("argv, field", [
    (["--beta", "0.5"], "beta"),
    (["--eps", "0"], "eps"),
    (["--dt", "-1"], "dt"),
    (["--S", "0"], "S"),
    (["--hf", "-0.1"], "hf"),
    (["--t-final", "0"], "t_final"),
    (["--nx", "0"], "nx"),
])
def test_range_errors_name_the_field(argv, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(argv)
    assert exc.value.field == field


def test_beta_message():
    with pytest.raises(ConfigError, match=r"beta out of range \[-1,0\]"):
        parse_config(["--beta", "0.5"])


def test_file_then_flags(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"beta": -0.2, "eps": 0.1, "lambda": 3.0}))
    cfg = parse_config(["--config", str(path), "--eps", "0.02"])
    assert cfg.beta == -0.2 and cfg.lam == 3.0 and cfg.eps == 0.02


def test_unknown_file_key(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"viscosity": 1.0}))
    with pytest.raises(ConfigError):
        parse_config(["--config", str(path)])


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit):
        parse_config(["--bogus", "1"])


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(-1, 0), eps=st.floats(1e-4, 1), k=st.floats(1e-5, 0.1),
       hf=st.floats(0, 20), nx=st.integers(1, 200), preset=st.sampled_from(list(Preset)))
def test_round_trip(tmp_path_factory, beta, eps, k, hf, nx, preset):
    cfg = SimConfig(beta=beta, eps=eps, k=k, hf_value=hf, nx=nx, preset=preset)
    assert SimConfig.from_dict(json.loads(cfg.dumps())) == cfg
    path = tmp_path_factory.mktemp("cfg") / "c.json"
    cfg.save(path)
    assert parse_config(["--config", str(path)]) == cfg


def test_h_over_eps_warning(caplog):
    cfg = SimConfig(eps=0.01, nx=31, ny=31)
    with caplog.at_level("WARNING"):
        ratio = check_h_over_eps(cfg)
    assert ratio > 2
    assert "h/eps" in caplog.text
