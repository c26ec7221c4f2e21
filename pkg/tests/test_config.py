import pytest

from arzdetect.attacks import scenario_preset
from arzdetect.config import (ConfigParseError, config_to_dict, default_config, emit_config,
                              parse_config, parse_config_text)
from arzdetect.model import ConfigError, TrafficParams

FULL = """
scenario = "case3"
seed = 7
T_end = 120.0
output_stride = 5

[params]
rho_star = 0.025
C_gamma = 900.0

[grid]
n_cells = 100

[noise]
sigma_phys = 0.02
delay_max = 0.5

[initial]
filter_ic = "zero"

[inlet]
a_in = 0.0

[vehicles]
count = 2
entry_times = [10, 20]

[gains]
beta_magnitude = 3.0

[thresholds]
mode = "explicit"
r_th_p = 2e-5
r_th_s = 1e-5

[[attacks]]
kind = "inlet"
amplitude = 0.3
t_start = 50.0

[[landmarks]]
name = "Shell Gas Station"
x = 600.0
"""


class TestParse:
    def test_minimal(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('scenario = "case1"\nseed = 42\n')
        cfg = parse_config(path)
        assert cfg.seed == 42 and cfg.noise.seed == 42
        assert cfg.params == TrafficParams()
        assert cfg.T_end == 300.0 and cfg.grid.n_cells == 200 and cfg.vehicles.count == 8
        assert cfg.attack_list() == scenario_preset("case1")
        assert cfg.t_start == 100.0
        assert cfg.c_gamma_mode == "consistent"

    def test_full(self):
        cfg = parse_config_text(FULL)
        assert cfg.params.rho_star == 0.025 and cfg.params.C_gamma == 900.0
        assert cfg.c_gamma_mode == "explicit"
        assert cfg.vehicles.entry_times == (10.0, 20.0)
        assert cfg.attack_list()[0].kind == "inlet" and cfg.t_start == 50.0
        assert cfg.landmark_table().find_in("near shell gas station").x == 600.0
        assert cfg.inlet.a_in == 0.0 and cfg.inlet.period == 120.0

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="rho_maxx"):
            parse_config_text("seed = 1\n[params]\nrho_maxx = 0.2\n")

    def test_all_violations_listed(self):
        with pytest.raises(ConfigError) as exc:
            parse_config_text('scenario = "case9"\nbogus = 1\n[grid]\ncells = 3\n[vehicles]\ncount = 3\n')
        msg = str(exc.value)
        for part in ("seed", "case9", "bogus", "cells", "count=3"):
            assert part in msg

    def test_syntax_error_position(self):
        with pytest.raises(ConfigParseError) as exc:
            parse_config_text("seed = 1\nscenario = \n")
        assert exc.value.line == 2 and exc.value.column is not None

    @pytest.mark.parametrize("text", [
        "seed = 1.5", "seed = 1\nT_end = -3", "seed = 1\n[initial]\nfilter_ic = 'x'",
        "seed = 1\n[thresholds]\nmode = 'explicit'", "seed = 1\n[[attacks]]\nkind = 'dos'\namplitude = 1.0",
        "seed = 1\n[[landmarks]]\nname = 'A'\nx = 5000.0", "seed = 1\n[params]\nrho_star = 0.5"])
    def test_semantic_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    @pytest.mark.parametrize("mode, expected", [("paper", 112.5), ("consistent", None)])
    def test_c_gamma_modes(self, mode, expected):
        cfg = parse_config_text(f'seed = 1\n[params]\nC_gamma = "{mode}"\n')
        assert cfg.c_gamma_mode == mode
        assert cfg.params.C_gamma is None
        if expected is not None:
            assert cfg.params.c_gamma == expected


class TestRoundTrip:
    @pytest.mark.parametrize("text", [FULL, "seed = 3\n", 'scenario = "case2"\nseed = 0\n[params]\nC_gamma = "paper"\n'])
    def test_emit_parse(self, text):
        cfg = parse_config_text(text)
        again = parse_config_text(emit_config(cfg))
        assert again == cfg
        assert emit_config(again) == emit_config(cfg)

    def test_canonical_spells_out_sections(self):
        doc = config_to_dict(default_config("case1", 5))
        assert list(doc)[:4] == ["scenario", "seed", "T_end", "output_stride"]
        assert doc["params"]["C_gamma"] == "consistent"
        assert "attacks" not in doc

    def test_twins(self):
        cfg = default_config("case3", 4)
        twin = cfg.nominal_twin(9)
        assert twin.attack_list() == [] and twin.seed == twin.noise.seed == 9
        assert cfg.with_seed(9).attack_list() == cfg.attack_list()
        assert hash(twin) == hash(default_config("case1", 4).nominal_twin(9))
