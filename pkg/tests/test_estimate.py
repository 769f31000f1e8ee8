from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from susyhom.estimate import (
    CHUNK,
    EstimatorConfig,
    PreconditionError,
    ReadoutModel,
    dqc1_qbne,
    hoeffding_count,
    llsd,
    qbne,
    sample_eigenvalue,
)
from susyhom.graph_complex import Graph, independence_complex
from susyhom.reduction import PauliHamiltonian, constrained_lift

C6 = independence_complex(Graph.cycle(6))


def _cfg(**kw):
    base = dict(b=1e-6, delta=0.1, eps=0.05, mu=0.9)
    base.update(kw)
    return EstimatorConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(eps=0)
    with pytest.raises(ValueError):
        _cfg(mu=0.4)
    with pytest.raises(ValueError):
        _cfg(delta=-1)
    with pytest.raises(ValueError):
        _cfg(b=float("nan"))


def test_sample_count():
    assert _cfg().samples == hoeffding_count(0.05, 0.1) == 600


def test_readout_two_values():
    rng = np.random.default_rng(0)
    draws = [sample_eigenvalue(np.diag([0.0, 2.0]), rng) for _ in range(4000)]
    assert set(draws) == {0.0, 2.0}
    assert abs(np.mean(np.array(draws) == 0.0) - 0.5) < 0.03


def test_readout_rounding_grid():
    model = ReadoutModel(np.diag([0.3]), t_bits=2)
    assert model.lam_scale == 1.0
    assert model.readouts[0] == 0.25


def test_coarse_grid_is_rejected():
    model = ReadoutModel(np.diag([0.3, 5.0]), t_bits=2)
    with pytest.raises(PreconditionError):
        model.threshold(_cfg())


def test_zero_fraction_on_c6():
    from susyhom.complex import laplacian

    model = ReadoutModel(laplacian(C6, 2))
    draws = model.draw(np.random.default_rng(1), 10_000)
    assert abs(np.mean(draws == 0) - 2 / 9) <= 0.02


def test_llsd_examples():
    assert abs(llsd(np.diag([0.0, 0, 1, 2]), _cfg(b=0.5, seed=3)).chi - 0.5) <= 0.05
    assert llsd(np.zeros((3, 3)), _cfg()).chi == 1.0
    assert llsd(np.eye(3), _cfg(b=0.5)).chi <= 0.05


def test_llsd_random_psd_within_eps():
    rng = np.random.default_rng(4)
    ev = np.concatenate([np.zeros(5), rng.uniform(1, 3, 11)])
    Q, _ = np.linalg.qr(rng.normal(size=(16, 16)))
    M = Q @ np.diag(ev) @ Q.T
    hits = sum(abs(llsd(M, _cfg(seed=s)).chi - 5 / 16) <= 0.05 for s in range(50))
    assert hits >= 45


def test_gapped_sector_gives_small_chi():
    rep = qbne(C6, 3, _cfg())
    assert rep.chi <= 0.05


def test_enumeration_mode_is_exact():
    rep = qbne(C6, 2, _cfg(enumerate=True))
    assert Fraction(rep.stage["exact"]) == Fraction(2, 9)
    assert rep.stage["mode"] == "enumeration"


def test_worker_count_does_not_change_result():
    cfg = _cfg(eps=0.002, seed=9)
    assert cfg.samples > CHUNK
    assert qbne(C6, 2, cfg, workers=1).chi == qbne(C6, 2, cfg, workers=4).chi


def test_report_is_json_serialisable():
    js = qbne(C6, 2, _cfg(seed=7)).to_json()
    assert json.loads(json.dumps(js))["N"] == 600


def test_empty_sector_rejected():
    with pytest.raises(ValueError):
        qbne(C6, 4, _cfg())


def test_dqc1_zero_hamiltonian():
    c, top = constrained_lift(PauliHamiltonian(2, ()))
    rep = dqc1_qbne(c, top, _cfg())
    assert abs(rep.chi - 1) <= rep.stage["bound"]


def test_dqc1_calibration_on_c6():
    inside = sum(
        abs((r := dqc1_qbne(C6, 2, _cfg(seed=s))).chi - 2 / 9) <= r.stage["bound"] for s in range(100)
    )
    assert inside >= 90


def test_dqc1_density_floor():
    with pytest.raises(PreconditionError):
        dqc1_qbne(independence_complex(Graph.complete(10)), 1, _cfg())
