import math

import numpy as np
import pytest

from rgdyn.asymptotics import PartitionLabel, enumerate_partitions
from rgdyn.model import ModelParams
from rgdyn.roots import (
    CoincidentRootsError,
    ansatz_roots,
    continue_roots,
    newton_solve,
    richardson_residual,
    scaled_residual,
    write_roots_csv,
)

FIG3 = ModelParams(2, 2, 0, nu=0.2, epsilon=(1.0, 2.0))


def test_ansatz_residual_decays_like_inverse_t():
    p = ModelParams(4, 2, 0, nu=4.0)
    part = PartitionLabel(((1, 3), (2,)))
    r = [scaled_residual(ansatz_roots(p, part, t)[0], p, t) for t in (1e2, 1e3, 1e4)]
    slopes = np.diff(np.log10(r))
    np.testing.assert_allclose(slopes, -1.0, atol=0.05)


def test_newton_reaches_tolerance():
    p = ModelParams(3, 2, 0, nu=1.0)
    part = enumerate_partitions(3, 2, 3)[2]
    lam0, _ = ansatz_roots(p, part, 50.0)
    lam, res = newton_solve(lam0, p, 50.0)
    assert res <= 1e-10
    assert np.max(np.abs(richardson_residual(lam, p, 50.0))) <= 1e-10 * (1 + p.nu * 50.0)


def test_fig3_trajectories():
    grid = np.logspace(-3, 4, 29)
    trs = [continue_roots(FIG3, part, grid) for part in enumerate_partitions(2, 2, 2)]
    assert len(trs) == 3
    by_class = {tuple(c.label for c in tr.classification): tr for tr in trs}
    # two singles stay real, the doubly raised pair stays complex conjugate
    singles = by_class[("single@1", "single@2")]
    assert np.max(np.abs(singles.roots.imag)) < 1e-8
    for labels, tr in by_class.items():
        if "pairedPlus" in labels[0]:
            np.testing.assert_allclose(tr.roots[:, 0], tr.roots[:, 1].conj(), atol=1e-8)
        assert np.all(tr.residuals <= tr.tolerance)


def test_large_t_offsets():
    p = ModelParams(3, 2, 0, nu=4.0)
    part = PartitionLabel(((1,), (3,)))
    tr = continue_roots(p, part, [1e3, 1e4])
    off = tr.scaled_offsets(p)[-1] * p.nu
    labels = [c.label for c in tr.classification]
    np.testing.assert_allclose(off[labels.index("single@1")], -1.0, atol=1e-3)
    np.testing.assert_allclose(off[labels.index("pairedPlus@3")], -(1 + 1j) / 2, atol=1e-3)


def test_coincident_roots_rejected():
    with pytest.raises(CoincidentRootsError):
        richardson_residual([0.3, 0.3], FIG3, 1.0)
    with pytest.raises(CoincidentRootsError):
        richardson_residual([1.0, 0.3], FIG3, 1.0)


def test_grid_validation_and_spin():
    part = enumerate_partitions(2, 2, 2)[0]
    with pytest.raises(ValueError):
        continue_roots(FIG3, part, [1.0, 0.5])
    with pytest.raises(NotImplementedError):
        ansatz_roots(ModelParams(2, 1, 0, nu=1.0), PartitionLabel(((1,),)), 1.0)


def test_csv(tmp_path):
    tr = continue_roots(FIG3, enumerate_partitions(2, 2, 2)[0], [1e2, 1e3])
    path = tmp_path / "roots.csv"
    write_roots_csv(path, [tr])
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"t,p,re,im,class"
    assert len([x for x in lines[1:] if x]) == 4
