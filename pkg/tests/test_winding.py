"""Loop windings of the spin texture (F) and the complex energy (E)."""

import math
import warnings

import numpy as np
import pytest

from epband import (
    Loop,
    LoopThroughDefectError,
    ModelParams,
    Momentum,
    WindingError,
    locate_btps,
    make_loop,
    winding_additivity_check,
    winding_number,
)
from epband.bloch import torus_distance

ANCHOR = ModelParams(J=1.0, T=-1.5, t=0.5, gamma=0.5)
HALF_PI = math.pi / 2


def _wind(params, center, kind, radius=0.1, **kw):
    loop = Loop(center=Momentum(*center), radius=radius)
    return winding_number(params, loop, kind, **kw)


# ---------------------------------------------------------------- loop sizing


def test_make_loop_radius_cap():
    btps = locate_btps(ANCHOR)
    center = Momentum(math.pi / 3, -HALF_PI)
    loop = make_loop(center, ANCHOR, btps)
    # nearest neighbour is the hybrid at (0, -pi/2): 0.4*(pi/3) caps at 0.1
    assert loop.radius == pytest.approx(0.1)


def test_make_loop_single_point():
    center = Momentum(1.0, 2.0)
    loop = make_loop(center, ANCHOR, [])
    assert loop.radius == pytest.approx(0.1)


def test_make_loop_rejects_unresolved_pair():
    a = Momentum(1.0, 1.0)
    b = Momentum(1.0 + 1e-5, 1.0)
    fake = [type("B", (), {"k": b})()]
    with pytest.raises(ValueError):
        make_loop(a, ANCHOR, fake)


def test_loop_validation():
    with pytest.raises(ValueError):
        Loop(center=Momentum(0, 0), radius=-1.0)
    with pytest.raises(ValueError):
        Loop(center=Momentum(0, 0), radius=0.1, samples=16)


# ---------------------------------------------------------------- pinned values


def test_normal_ep_half_charges():
    r = _wind(ANCHOR, (-math.pi / 3, -HALF_PI), "F")
    assert r.value == pytest.approx(0.5, abs=1e-9)
    assert r.residual < 0.05
    assert r.branch_swapped
    r = _wind(ANCHOR, (-math.pi / 3, -HALF_PI), "E")
    assert r.value == pytest.approx(-0.5, abs=1e-9)


def test_hybrid_ep_zero_charges():
    for kind in ("F", "E"):
        r = _wind(ANCHOR, (0.0, -HALF_PI), kind)
        assert r.value == pytest.approx(0.0, abs=1e-9)
        assert not r.branch_swapped


def test_empty_loop_zero():
    for kind in ("F", "E"):
        assert _wind(ANCHOR, (1.0, 1.0), kind).value == 0.0


def test_charge_pattern_on_half_pi_line():
    # the three touchings on ky = -pi/2 with kx <= 0, ordered by kx:
    # wI = (+1/2, 0, -1/2), wII the negative
    kxs = (-math.pi / 3, 0.0, math.pi / 3)
    wi = [_wind(ANCHOR, (kx, -HALF_PI), "F").value for kx in kxs]
    wii = [_wind(ANCHOR, (kx, -HALF_PI), "E").value for kx in kxs]
    assert wi == pytest.approx([0.5, 0.0, -0.5], abs=1e-9)
    assert wii == pytest.approx([-0.5, 0.0, 0.5], abs=1e-9)


def test_dirac_point_unit_charge():
    p = ModelParams(1.0, -1.0, 0.5, 0.0)
    values = set()
    for b in locate_btps(p):
        loop = make_loop(b.k, p, locate_btps(p))
        values.add(round(winding_number(p, loop, "F").value, 6))
    assert values == {1.0, -1.0}


# ---------------------------------------------------------------- invariants


def test_independence_of_discretization():
    center = (-math.pi / 3, -HALF_PI)
    base = _wind(ANCHOR, center, "F").value
    assert _wind(ANCHOR, center, "F", radius=0.05).value == base
    r = winding_number(
        ANCHOR, Loop(center=Momentum(*center), radius=0.1, samples=1024), "F"
    )
    assert r.value == base
    assert _wind(ANCHOR, center, "F", start_branch="minus").value == base


def test_quantization_random_draws():
    rng = np.random.default_rng(41)
    checked = 0
    for _ in range(12):
        while True:
            gamma = rng.uniform(-2.0, 2.0)
            big_t = rng.uniform(-3.0, 3.0)
            if abs(big_t + gamma) <= 2.0 and abs(big_t - gamma) <= 2.0:
                break
        p = ModelParams(1.0, big_t, rng.uniform(0.1, 1.0), gamma)
        btps = locate_btps(p)
        total = 0.0
        for b in btps:
            r = winding_number(p, make_loop(b.k, p, btps), "F")
            assert abs(2.0 * r.value - round(2.0 * r.value)) < 1e-9
            assert r.residual < 0.05
            total += r.value
            checked += 1
        assert total == pytest.approx(0.0, abs=1e-9)
    assert checked > 40


def test_gamma_flip_laws():
    p = ModelParams(1.0, -1.5, 0.5, 0.5)
    q = ModelParams(1.0, -1.5, 0.5, -0.5)
    bp, bq = locate_btps(p), locate_btps(q)
    assert len(bp) == len(bq)
    for b in bp:
        partner = min(bq, key=lambda o: torus_distance(b.k, o.k))
        assert torus_distance(b.k, partner.k) < 1e-9
        wi_p = winding_number(p, make_loop(b.k, p, bp), "F").value
        wi_q = winding_number(q, make_loop(partner.k, q, bq), "F").value
        wii_p = winding_number(p, make_loop(b.k, p, bp), "E").value
        wii_q = winding_number(q, make_loop(partner.k, q, bq), "E").value
        assert wi_q == pytest.approx(wi_p, abs=1e-9)
        assert wii_q == pytest.approx(-wii_p, abs=1e-9)


def test_normal_ep_chirality_pairing():
    # convention-free: wII = -wI at every normal EP of the anchor set
    btps = locate_btps(ANCHOR)
    for b in btps:
        if b.kind != "NormalEP":
            continue
        wi = winding_number(ANCHOR, make_loop(b.k, ANCHOR, btps), "F").value
        wii = winding_number(ANCHOR, make_loop(b.k, ANCHOR, btps), "E").value
        assert wii == pytest.approx(-wi, abs=1e-9)
        assert abs(wi) == pytest.approx(0.5, abs=1e-9)


# ---------------------------------------------------------------- additivity


def test_split_pair_sums_to_parent_charge():
    p = ModelParams(1.0, -1.0, 0.5, 0.01)
    btps = locate_btps(p)
    parent = Momentum(math.acos(0.5), HALF_PI)
    pair = [b for b in btps if torus_distance(b.k, parent) < 0.05]
    assert len(pair) == 2
    big = Loop(center=parent, radius=0.05)
    total = winding_number(p, big, "F").value
    assert abs(total) == pytest.approx(1.0, abs=1e-9)
    parts = sum(winding_number(p, make_loop(b.k, p, btps), "F").value for b in pair)
    assert parts == pytest.approx(total, abs=1e-9)


def test_additivity_check_passes():
    p = ModelParams(1.0, -1.0, 0.5, 0.01)
    btps = locate_btps(p)
    big = Loop(center=Momentum(math.acos(0.5), HALF_PI), radius=0.05)
    assert winding_additivity_check(p, btps, big)


def test_additivity_rejects_touching_on_path():
    p = ModelParams(1.0, -1.0, 0.5, 0.01)
    btps = locate_btps(p)
    parent = Momentum(math.acos(0.5), HALF_PI)
    d = min(torus_distance(parent, b.k) for b in btps)
    bad = Loop(center=parent, radius=max(d, 1e-3))
    near = [b for b in btps if torus_distance(b.k, parent) < 0.02]
    with pytest.raises(ValueError):
        winding_additivity_check(p, near, bad)


# ---------------------------------------------------------------- errors


def test_loop_through_defect_rejected():
    # only a Dirac point can trip the field floor in float64 (h itself
    # vanishes there); at an EP the residual |E| never drops below ~1e-8.
    # Place the theta = pi sample right on the touching.
    p = ModelParams(1.0, -1.0, 0.5, 0.0)
    dp = Momentum(math.acos(0.5), HALF_PI)
    loop = Loop(center=Momentum(dp.kx + 0.1, dp.ky), radius=0.1)
    with pytest.raises(LoopThroughDefectError):
        winding_number(p, loop, "F")


def test_winding_error_is_runtime_error():
    assert issubclass(LoopThroughDefectError, WindingError)
    assert issubclass(WindingError, RuntimeError)


def test_field_kind_validation():
    loop = Loop(center=Momentum(1.0, 1.0), radius=0.1)
    with pytest.raises(ValueError):
        winding_number(ANCHOR, loop, "G")
    with pytest.raises(ValueError):
        winding_number(ANCHOR, loop, "F", start_branch="up")


def test_result_json_shape():
    r = _wind(ANCHOR, (1.0, 1.0), "F")
    d = r.to_json_dict()
    assert set(d) == {
        "value",
        "rawAngle",
        "residual",
        "fieldKind",
        "branchSwapped",
        "center",
        "radius",
        "samples",
    }
    assert d["fieldKind"] == "F"
