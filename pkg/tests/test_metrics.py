import numpy as np
import pytest

from polyframe.builders import random_polymer, random_unit_topology
from polyframe.conformation import PolymerConformation
from polyframe.energy import ToyEnergyOracle
from polyframe.errors import GraphMismatch
from polyframe.geometry import kabsch_align
from polyframe.metrics import (
    ConformationSet,
    coverage_from_matrix,
    e_mat,
    evaluate_corpus,
    rmsd_matrix,
    s_cov,
    s_mat,
    summarize,
)


def quaternion_rmsd(p, q):
    """Optimal superposition RMSD from the largest eigenvalue of Horn's 4x4 matrix."""
    p = p - p.mean(0)
    q = q - q.mean(0)
    s = p.T @ q
    sxx, sxy, sxz, syx, syy, syz, szx, szy, szz = s.ravel()
    k = np.array([
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ])
    lam = np.linalg.eigvalsh(k)[-1]
    return np.sqrt(max(np.sum(p * p) + np.sum(q * q) - 2 * lam, 0) / len(p))


def sets(seed, n_gen, n_ref, n_units=4, n_atoms=7):
    rng = np.random.default_rng(seed)
    topo = random_unit_topology(n_atoms, rng)
    gen = [random_polymer(rng, n_units, topo=topo) for _ in range(n_gen)]
    ref = [random_polymer(rng, n_units, topo=topo) for _ in range(n_ref)]
    graph = gen[0][0]
    return (ConformationSet([g[1] for g in gen], graph, "generated"),
            ConformationSet([r[1] for r in ref], graph, "reference"))


def test_rmsd_matrix_vs_quaternion_oracle():
    gen, ref = sets(0, 3, 4)
    m = rmsd_matrix(gen, ref)
    assert m.shape == (4, 3)
    for i, r in enumerate(ref.members):
        for j, g in enumerate(gen.members):
            assert m[i, j] == pytest.approx(quaternion_rmsd(g.coords, r.coords), abs=1e-9)


def test_matching_double_loop():
    gen, ref = sets(1, 4, 3)
    oracle = ToyEnergyOracle()
    rec = np.mean([min(kabsch_align(g.coords, r.coords).rmsd for g in gen.members) for r in ref.members])
    prec = np.mean([min(kabsch_align(g.coords, r.coords).rmsd for r in ref.members) for g in gen.members])
    assert s_mat(gen, ref) == (rec, prec)
    er = [oracle(c, ref.graph) for c in ref.members]
    eg = [oracle(c, gen.graph) for c in gen.members]
    erec = np.mean([min(abs(a - b) for b in eg) for a in er])
    eprec = np.mean([min(abs(a - b) for a in er) for b in eg])
    assert e_mat(gen, ref, oracle) == (erec, eprec)


def test_identical_sets_are_perfect():
    gen, _ = sets(2, 3, 1)
    ref = ConformationSet(gen.members, gen.graph, "reference")
    r, p = s_mat(gen, ref)
    assert r < 1e-9 and p < 1e-9
    assert e_mat(gen, ref, ToyEnergyOracle()) == (0.0, 0.0)
    assert s_cov(gen, ref, 1e-6) == (1.0, 1.0)


def test_coverage_threshold_is_inclusive():
    cost = np.array([[1.0, 3.0], [2.0, 5.0], [4.0, 6.0]])
    # best per ref: 1, 2, 4; best per gen: 1, 3
    assert coverage_from_matrix(cost, 2.0) == (2 / 3, 0.5)
    assert coverage_from_matrix(cost, 1.999) == (1 / 3, 0.5)
    assert coverage_from_matrix(cost, 25.0) == (1.0, 1.0)
    with pytest.raises(ValueError):
        coverage_from_matrix(cost, 0)


def test_heavy_atom_flag():
    gen, ref = sets(3, 2, 2, n_atoms=12)
    heavy = ref.graph.heavy_mask()
    m = rmsd_matrix(gen, ref, heavy_only=True)
    g, r = gen.members[0], ref.members[0]
    assert m[0, 0] == pytest.approx(kabsch_align(g.coords[heavy], r.coords[heavy]).rmsd, abs=1e-12)


def test_graph_mismatch():
    gen, _ = sets(4, 2, 1)
    _, other = sets(5, 1, 2, n_atoms=9)
    with pytest.raises(GraphMismatch):
        s_mat(gen, other)
    with pytest.raises(GraphMismatch):
        ConformationSet([PolymerConformation(np.zeros((3, 3)), [0, 0, 0])], gen.graph)
    with pytest.raises(ValueError):
        ConformationSet([], gen.graph)


def test_summarize_median_midpoint():
    assert summarize([4.0, 1.0, 3.0, 2.0]) == (2.5, 2.5)
    assert summarize([1.0, 10.0, 2.0]) == (13 / 3, 2.0)


def test_corpus_aggregation_modes():
    pairs = [sets(10 + k, 2 + k, 3) for k in range(3)]
    oracle = ToyEnergyOracle()
    rep = evaluate_corpus(pairs, oracle)
    assert rep.names == ["S-MAT-R", "S-MAT-P", "E-MAT-R", "E-MAT-P"]
    assert rep.oracle == "toy-ff-v1" and rep.delta == 25.0
    vals = [s_mat(g, r)[0] for g, r in pairs]
    assert rep.mean["S-MAT-R"] == np.mean(vals)
    assert rep.median["S-MAT-R"] == np.median(vals)
    per_conf = evaluate_corpus(pairs, oracle, aggregate="conformation", coverage=True)
    pooled = np.concatenate([rmsd_matrix(g, r).min(axis=0) for g, r in pairs])
    assert per_conf.mean["S-MAT-P"] == pytest.approx(np.mean(pooled), abs=1e-15)
    assert "S-COV-R" in per_conf.names
    with pytest.raises(ValueError):
        evaluate_corpus(pairs, oracle, aggregate="atom")
    with pytest.raises(ValueError):
        evaluate_corpus([], oracle)


def test_parallel_matches_serial():
    pairs = [sets(20 + k, 2, 2) for k in range(3)]
    a = evaluate_corpus(pairs, ToyEnergyOracle(), coverage=True)
    b = evaluate_corpus(pairs, ToyEnergyOracle(), coverage=True, parallel=2)
    assert a.per_polymer == b.per_polymer and a.mean == b.mean and a.median == b.median
