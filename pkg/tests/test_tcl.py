from importlib import resources

import numpy as np
import pytest

from padoa.baselines import milp_direct
from padoa.model import AbsL1, Affine, Power, validate
from padoa.padoa import padoa_solve
from padoa.tcl import (
    FIXTURE_PARAMS,
    TclConfig,
    decode_solution,
    generate,
    load_ambient,
    price_profile,
    simulate,
    synth_ambient,
    topology,
)


def test_structure_three_rooms():
    p = generate(TclConfig(rooms=3, horizon=8))
    assert p.N == 3
    assert [b.nx for b in p.blocks] == [17] * 3
    assert [b.nz for b in p.blocks] == [8] * 3
    assert p.A.shape[0] == 24
    assert validate(p).ok


def test_no_comfort_means_piecewise_linear():
    p = generate(TclConfig(gamma=0.0))
    assert p.is_piecewise_linear()
    assert all(isinstance(t, (Affine, AbsL1)) for b in p.blocks for t in b.terms)


def test_comfort_adds_power_terms():
    p = generate(TclConfig(gamma=1.0, order=4))
    powers = [t for t in p.blocks[0].terms if isinstance(t, Power)]
    assert len(powers) == 8 and all(t.p == 4 for t in powers)


def test_no_heat_exchange_gives_pure_switch_dynamics():
    cfg = TclConfig(rooms=2, horizon=4, topology="isolated", a=0.0, b=-1.5, t0=22.0)
    u = np.array([[1, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
    T = simulate(cfg, u)
    assert T[0].tolist() == [22.0, 20.5, 20.5, 19.0, 19.0]
    assert T[1].tolist() == [22.0, 22.0, 22.0, 22.0, 20.5]


def test_topologies():
    assert topology("three-room", 3).sum() == 6
    four = topology("four-room", 4)
    assert four.sum() == 8 and four[0, 2] == 0
    assert topology("linear-5", 5).sum() == 8
    with pytest.raises(ValueError):
        topology("star", 3)


def test_price_profile_windows():
    c = price_profile(48)
    assert c[6] == c[12] == c[29] == c[35] == max(c)
    assert c[5] != max(c) and c[13] != max(c)


def test_load_ambient_plain(tmp_path):
    f = tmp_path / "amb.csv"
    f.write_text("20\n21\n22\n")
    assert load_ambient(f, 2).tolist() == [20.0, 21.0, 22.0]


def test_load_ambient_with_header(tmp_path):
    f = tmp_path / "amb.csv"
    f.write_text("ambient_c\n20\n21\n")
    assert load_ambient(f).tolist() == [20.0, 21.0]


def test_load_ambient_too_short(tmp_path):
    f = tmp_path / "amb.csv"
    f.write_text("20\n21\n")
    with pytest.raises(ValueError, match="horizon 5"):
        load_ambient(f, 5)


def test_load_ambient_bad_value(tmp_path):
    f = tmp_path / "amb.csv"
    f.write_text("20\nwarm\n")
    with pytest.raises(ValueError, match=":2:"):
        load_ambient(f)


def test_synthetic_peak():
    amb = synth_ambient(24, 22.0, 6.0, -6.0)
    assert int(np.argmax(amb)) == 12
    assert amb.max() == pytest.approx(28.0)


def test_bundled_fixture_matches_parameters():
    ref = resources.files("padoa") / "data" / "ambient_synthetic.csv"
    with resources.as_file(ref) as path:
        amb = load_ambient(path)
    assert amb.size == 49
    assert amb == pytest.approx(synth_ambient(48, **FIXTURE_PARAMS), abs=1e-6)


def test_bad_config():
    with pytest.raises(ValueError):
        TclConfig(order=3)
    with pytest.raises(ValueError):
        TclConfig(t0=30.0)
    with pytest.raises(ValueError):
        TclConfig(horizon=8, ambient=np.zeros(5))


def test_decode_recovers_schedule():
    cfg = TclConfig(rooms=3, horizon=4)
    u = np.array([[1, 0, 0, 1], [0, 1, 0, 0], [1, 1, 0, 0]], dtype=float)
    T = simulate(cfg, u)
    x = np.hstack([T, u]).ravel()
    sol = decode_solution(cfg, x, u.ravel())
    assert sol.switches.tolist() == u.tolist()
    assert sol.simulation_error == 0.0 and sol.copy_error == 0.0
    assert sol.energy_cost == pytest.approx(float(np.sum(u @ cfg.prices[:4])))
    assert sol.comfort_cost == 0.0


@pytest.fixture(scope="module")
def solved_small():
    cfg = TclConfig(rooms=3, horizon=8)
    p = generate(cfg)
    return cfg, p, milp_direct(p)


def test_solution_is_physical(solved_small):
    cfg, p, res = solved_small
    sol = decode_solution(cfg, res.x, res.z)
    assert sol.copy_error <= 1e-9
    assert sol.simulation_error <= 1e-9
    assert sol.deadband_violation(cfg) <= 1e-9
    assert sol.energy_cost == pytest.approx(res.value, abs=1e-6)
    assert sol.energy_cost == pytest.approx(float(np.sum(sol.switches @ cfg.prices[:8])))


def test_padoa_matches_direct_model(solved_small):
    cfg, p, res = solved_small
    assert padoa_solve(p, 1e-6).value == pytest.approx(res.value, abs=1e-6)


def test_higher_prices_never_lower_the_cost(solved_small):
    cfg, p, res = solved_small
    dearer = TclConfig(rooms=3, horizon=8, prices=cfg.prices * 1.5 + 0.1)
    assert milp_direct(generate(dearer)).value >= res.value - 1e-9
