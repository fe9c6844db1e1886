import json
import math

import pytest

import bykov


def test_constants_and_omega_star():
    c = bykov.MapConstants.from_delta(3.0, 1.0)
    assert c.M == pytest.approx(0.3849001794597505, rel=1e-14)
    w = bykov.omega_star(1, c)
    assert w == pytest.approx(4 * math.pi / math.log(3.0), rel=1e-14)
    assert bykov.g_ell(w, 1, c) == pytest.approx(c.M, rel=1e-13)


def test_return_map_rigid_rotation():
    c = bykov.MapConstants.from_delta(2.0, 1.0)
    x, y = bykov.return_map(0.0, math.exp(-2 * math.pi), bykov.Params(0.0, 0.0, 1.0), c)
    assert x == pytest.approx(2 * math.pi)
    assert y == pytest.approx(math.exp(-4 * math.pi))


def test_domain_and_validation_errors():
    c = bykov.MapConstants.from_delta(3.0, 1.0)
    with pytest.raises(bykov.DomainError):
        bykov.return_map(1.5 * math.pi, -0.01, bykov.Params(0.01, 0.005, 1.0), c)
    with pytest.raises(ValueError):
        bykov.MapConstants.from_delta(0.5, 1.0)


def test_fixed_points_and_sink_orbit():
    c = bykov.MapConstants.from_delta(3.0, 1.0)
    mu = bykov.Params(0.35, 0.05, 8.0)
    fps = bykov.fixed_points(mu, c)
    assert len(fps) == 2
    assert {f["class"] for f in fps} == {"SinkFocus", "Saddle"}
    assert bykov.wedge_membership(mu, 1, c) == "Inside"
    cls, exps, rot = bykov.classify_attractor(mu, c)
    assert cls == "PeriodicSink"
    assert rot == pytest.approx(1.0)
    assert exps[0] == pytest.approx(0.5 * math.log(0.623639), rel=1e-2)


def test_scan_and_ode():
    c = bykov.MapConstants.from_delta(3.0, 2.0)
    g = bykov.scan_map(("omega", 1.0, 6.0, 2), ("A", 0.1, 0.3, 2), bykov.Params(0.0, 0.1, 0.0), c,
                       iterations=400, transient=100)
    assert [(cell["i"], cell["j"]) for cell in g["cells"]] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    f = bykov.vector_field([0.0, 0.0, 0.0, 1.0], tau1=0.5)
    assert f == pytest.approx([0.0, 0.0, 0.5, 0.0])
    r = bykov.lyapunov_spectrum(0.3, 0.3, t_final=100.0)
    assert sum(r["exponents"]) == pytest.approx(r["divergence_average"], abs=1e-5)


def test_run_cli_json():
    status, out, err = bykov.run_cli("constants", {"delta": "3", "K": "1"})
    assert status == 0
    doc = json.loads(out)
    assert doc["omega_star"] == bykov.omega_star(1, bykov.MapConstants.from_delta(3.0, 1.0))
    status, _, err = bykov.run_cli("constants", {"delta": "0.9"})
    assert status == 2
    assert "not weakly attracting" in err
