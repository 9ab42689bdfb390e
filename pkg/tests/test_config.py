from pathlib import Path

import numpy as np
import pytest

from fixpoint.config import dump_config, load_config, parse_config
from fixpoint.errors import ParseError, ValidationError
from fixpoint.schemes import Theorem

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))

BASE = """
version = 1
experiment = "datadep"
seed = 3

[domain]
lower = [0.0]
upper = [1.0]

[operator]
family = "affine"
matrix = [[0.5]]
offset = [0.0]

[scheme]
name = "new_multistep"
k = 2
[scheme.schedules.alpha]
family = "constant"
c = 0.6
[scheme.schedules.beta1]
family = "constant"
c = {beta}

[contract]
delta = 0.5

[perturbation]
epsilon = 0.01
"""


def test_parse_fills_defaults():
    cfg = parse_config(BASE.format(beta=0.3))
    assert cfg.theorem is Theorem.T2_DATADEP
    assert cfg.output_path == "datadep.csv" and cfg.seed == 3
    assert cfg.stop.residual_tol == 1e-10 and cfg.stop.max_iter == 100_000
    assert np.array_equal(cfg.x0, [0.5])
    assert cfg.perturbation["mode"] == "constant_shift"


def test_schedule_violation_is_a_validation_error():
    with pytest.raises(ValidationError) as info:
        parse_config(BASE.format(beta=0.6))
    assert any("beta1" in e and "t2" in e for e in info.value.errors)


def test_unknown_keys_are_collected():
    text = BASE.format(beta=0.3).replace("delta = 0.5", "delta = 0.5\ndelt = 0.2") + "\n[certify]\nsamples = 3\n"
    with pytest.raises(ParseError) as info:
        parse_config(text)
    msgs = " ".join(info.value.errors)
    assert "contract.delt: unknown key" in msgs and "certify: section is not used" in msgs


def test_type_errors():
    with pytest.raises(ParseError, match="seed: expected int"):
        parse_config(BASE.format(beta=0.3).replace("seed = 3", 'seed = "x"'))
    with pytest.raises(ParseError, match="TOML syntax"):
        parse_config("version = ")
    with pytest.raises(ParseError, match="only version 1"):
        parse_config(BASE.format(beta=0.3).replace("version = 1", "version = 2"))


def test_missing_section():
    text = BASE.format(beta=0.3).split("[perturbation]")[0]
    with pytest.raises(ParseError, match="perturbation: required table is missing"):
        parse_config(text)


def test_x0_outside_domain():
    text = BASE.format(beta=0.3) + "\n[run]\nx0 = [2.0]\n"
    with pytest.raises(ValidationError, match="outside the domain"):
        parse_config(text)


def test_datadep_needs_a_bounded_scheme():
    text = BASE.format(beta=0.3).replace('name = "new_multistep"\nk = 2', 'name = "thianwan"')
    text = text.replace("schedules.beta1", "schedules.beta")
    with pytest.raises(ValidationError, match="no data-dependence bound"):
        parse_config(text)


def test_certify_zamfirescu_needs_triple():
    text = """
version = 1
experiment = "certify"
[domain]
lower = [0.0]
upper = [1.0]
[operator]
family = "affine"
matrix = [[0.5]]
offset = [0.0]
[contract]
delta = 0.5
[certify]
condition = "zamfirescu"
"""
    with pytest.raises(ValidationError, match="triple"):
        parse_config(text)


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_round_trip(path):
    cfg = load_config(path)
    text = dump_config(cfg)
    again = parse_config(text)
    assert again.raw == cfg.raw
    assert dump_config(again) == text
    assert again.experiment == cfg.experiment and again.seed == cfg.seed


def test_round_trip_of_defaults():
    cfg = parse_config(BASE.format(beta=0.3))
    again = parse_config(dump_config(cfg))
    assert again.raw == cfg.raw
    assert again.stop == cfg.stop and again.contract == cfg.contract
