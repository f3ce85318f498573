import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from topomask.cubical import BoundaryMatrix, boundary_matrix, build_complex, chain_boundary
from topomask.errors import ParameterError, UnsupportedDimensionError
from topomask.persistence import (PersistenceDiagram, betti_curve, compute_diagram, cycles_to_json,
                                  diagram_to_csv, extract_cycles, filter_by_persistence, read_diagram_csv,
                                  reduce_matrix)
from topomask.volume import Volume3D

int_volumes = arrays(np.int64, st.tuples(*[st.integers(1, 4)] * 3), elements=st.integers(0, 6))


def _diagram(a):
    return compute_diagram(build_complex(Volume3D(np.asarray(a, dtype=np.float64))))


def _finite(d, p):
    m = (d.dim == p) & ~d.essential & ~d.zero_persistence
    return sorted(zip(d.birth[m].tolist(), d.death[m].tolist()))


def python_reduce(m: BoundaryMatrix):
    """Textbook left-to-right reduction on Python sets."""
    cols = [set(int(r) for r in m.column(j)) for j in range(m.n_cols)]
    owner = {}
    low = []
    for j, col in enumerate(cols):
        while col and max(col) in owner:
            col ^= cols[owner[max(col)]]
        if col:
            owner[max(col)] = j
        low.append(max(col) if col else -1)
    return low, cols


# -- reduction -----------------------------------------------------------------


def test_ring_reduction(ring):
    c = build_complex(Volume3D(ring))
    r = reduce_matrix(boundary_matrix(c, 2))
    rows, cols = r.pairs()
    vals = [(c.values[1][i], c.values[2][j]) for i, j in zip(rows, cols)]
    assert [v for v in vals if v[0] != v[1]] == [(1.0, 5.0)]


def test_reduced_matrix_is_a_fixpoint(rng):
    c = build_complex(Volume3D(rng.integers(0, 5, (4, 4, 3)).astype(float)))
    r = reduce_matrix(boundary_matrix(c, 2))
    again = reduce_matrix(r.as_boundary_matrix())
    assert np.array_equal(again.low, r.low)
    for j in range(r.n_cols):
        assert np.array_equal(again.column(j), r.column(j))


def test_empty_matrix():
    r = reduce_matrix(BoundaryMatrix.from_columns(2, [], 0))
    assert r.pairs()[0].size == 0


@given(int_volumes)
def test_kernel_matches_python_reduction(a):
    c = build_complex(Volume3D(a.astype(float)))
    for p in (1, 2, 3):
        m = boundary_matrix(c, p)
        low, cols = python_reduce(m)
        r = reduce_matrix(m)
        assert list(r.low) == low
        for j in range(m.n_cols):
            assert set(r.column(j).tolist()) == cols[j]


@given(int_volumes)
def test_clearing_gives_identical_columns(a):
    c = build_complex(Volume3D(a.astype(float)))
    r3 = reduce_matrix(boundary_matrix(c, 3))
    cleared = np.zeros(c.counts[2], dtype=bool)
    cleared[r3.pairs()[0]] = True
    m2 = boundary_matrix(c, 2)
    plain, fast = reduce_matrix(m2), reduce_matrix(m2, cleared)
    for j in range(m2.n_cols):
        if cleared[j]:
            assert plain.column(j).size == 0 and plain.low[j] == -1
        else:
            assert np.array_equal(plain.column(j), fast.column(j))
            assert plain.low[j] == fast.low[j]


@given(int_volumes)
def test_union_find_matches_edge_reduction(a):
    res = _diagram(a)
    c = res.complex
    r1 = reduce_matrix(boundary_matrix(c, 1))
    rows, cols = r1.pairs()
    d = res.diagram
    m = (d.dim == 0) & ~d.essential
    assert sorted(zip(rows.tolist(), cols.tolist())) == sorted(zip(d.birth_cell[m].tolist(),
                                                                   d.death_cell[m].tolist()))


# -- diagrams --------------------------------------------------------------------


def test_constant_volume_diagram():
    d = _diagram(np.full((3, 4, 2), 2.5)).diagram
    assert _finite(d, 0) == [] and _finite(d, 1) == [] and _finite(d, 2) == []
    ess = d.essential
    assert ess.sum() == 1 and d.dim[ess][0] == 0 and d.birth[ess][0] == 2.5


def test_ring_and_shell_fixtures(ring, shell):
    assert _finite(_diagram(ring).diagram, 1) == [(1.0, 5.0)]
    assert _finite(_diagram(shell).diagram, 2) == [(1.0, 9.0)]
    assert _finite(_diagram(shell).diagram, 1) == []


@given(int_volumes)
def test_betti_curves_match_oracle(a):
    d = _diagram(a).diagram
    brute = oracles.BruteComplex(a)
    ts = brute.thresholds()
    for p in range(3):
        assert betti_curve(d, p, ts).counts.tolist() == [brute.betti(t)[p] for t in ts]
    assert all(brute.betti(t)[3] == 0 for t in ts)


@given(int_volumes)
def test_euler_identity(a):
    res = _diagram(a)
    for t in np.unique(np.concatenate(res.complex.values)):
        n = res.complex.sublevel_counts(t)
        chi = sum((-1) ** p * n[p] for p in range(4))
        betti = sum((-1) ** p * int(betti_curve(res.diagram, p, [t]).counts[0]) for p in range(3))
        assert chi == betti


@given(int_volumes)
def test_pairs_are_well_formed(a):
    d = _diagram(a).diagram
    assert np.all(d.death >= d.birth)
    assert np.sum(d.essential) == 1 and d.dim[d.essential][0] == 0


# -- cycles ------------------------------------------------------------------------


def test_ring_cycle(ring):
    cyc = extract_cycles(_diagram(ring), 1, include_zero_persistence=False)
    assert len(cyc) == 1
    cells = {tuple(c) for c in cyc[0].cells.tolist()}
    assert len(cells) == 8
    assert oracles.boundary_mod2(cells) == set()
    assert all(oracles.dim_of(c) == 1 for c in cells)
    # the loop runs around the centre: no edge touches it
    assert all((1, 1, 0) not in oracles.vertices(c) for c in cells)


def test_shell_cycle(shell):
    res = _diagram(shell)
    cyc = extract_cycles(res, 2, include_zero_persistence=False)
    assert len(cyc) == 1
    cells = {tuple(c) for c in cyc[0].cells.tolist()}
    assert oracles.boundary_mod2(cells) == set()
    assert all(oracles.cell_value(c, shell) == 1 for c in cells)
    assert all((1, 1, 1) not in oracles.vertices(c) for c in cells)


@given(int_volumes)
def test_cycles_are_valid(a):
    res = _diagram(a)
    for p in (1, 2):
        for cyc in extract_cycles(res, p):
            cells = [tuple(c) for c in cyc.cells.tolist()]
            assert oracles.boundary_mod2(cells) == set()
            assert chain_boundary(cyc.cell_ids, res.complex.dims).size == 0
            assert max(oracles.cell_value(c, a) for c in cells) == cyc.birth


def test_no_finite_pairs_means_no_cycles():
    res = _diagram(np.zeros((3, 3, 3)))
    assert extract_cycles(res, 1, include_zero_persistence=False) == []


def test_cycles_reject_dim0(ring):
    with pytest.raises(UnsupportedDimensionError):
        extract_cycles(_diagram(ring), 0)


@given(int_volumes, st.integers(-20, 20))
def test_adding_a_constant_shifts_everything(a, k):
    r1, r2 = _diagram(a), _diagram(a + k)
    d1, d2 = r1.diagram, r2.diagram
    assert np.array_equal(d1.birth + k, d2.birth) and np.array_equal(d1.death + k, d2.death)
    for p in (1, 2):
        c1 = [c.cell_ids.tolist() for c in extract_cycles(r1, p)]
        c2 = [c.cell_ids.tolist() for c in extract_cycles(r2, p)]
        assert c1 == c2
        f1 = filter_by_persistence(d1, p, fraction=0.3)
        f2 = filter_by_persistence(d2, p, fraction=0.3)
        assert np.array_equal(f1.death_cell, f2.death_cell)


# -- Betti curves and filtering ---------------------------------------------------


def test_betti_curve_examples():
    d = PersistenceDiagram.from_points(1, [(1, 5)])
    assert betti_curve(d, 1, [0, 1, 3, 5]).counts.tolist() == [0, 1, 1, 0]
    empty = PersistenceDiagram.from_points(1, np.empty((0, 2)))
    assert betti_curve(empty, 1, [0, 1]).counts.tolist() == [0, 0]
    ess = PersistenceDiagram.from_points(0, [(2, np.inf)])
    assert betti_curve(ess, 0, [2, 3, 100]).counts.tolist() == [1, 1, 1]
    with pytest.raises(ParameterError):
        betti_curve(d, 1, [3, 1])


def test_filter_examples():
    d = PersistenceDiagram.from_points(1, [(0, 9), (0, 5), (0, 1)])
    assert filter_by_persistence(d, 1, fraction=0.3).persistence.tolist() == [9]
    assert len(filter_by_persistence(d, 1, fraction=1.0)) == 3
    assert sorted(filter_by_persistence(d, 1, threshold=4).persistence.tolist()) == [5, 9]
    for bad in (0, 1.5, -0.1):
        with pytest.raises(ParameterError):
            filter_by_persistence(d, 1, fraction=bad)
    with pytest.raises(ParameterError):
        filter_by_persistence(d, 1)


def test_filter_ties_prefer_earlier_birth():
    d = PersistenceDiagram.from_points(1, [(3, 5), (1, 3), (2, 4), (0, 1)])
    kept = filter_by_persistence(d, 1, fraction=0.5)
    assert sorted(zip(kept.birth.tolist(), kept.death.tolist())) == [(1, 3), (2, 4)]


@given(st.lists(st.tuples(st.integers(0, 10), st.integers(0, 10)), min_size=1, max_size=30),
       st.floats(0.01, 1.0))
def test_filter_is_a_subset_of_the_right_size(pts, q):
    pts = [(min(a, b), max(a, b)) for a, b in pts]
    d = PersistenceDiagram.from_points(1, pts)
    kept = filter_by_persistence(d, 1, fraction=q)
    n = int((d.persistence > 0).sum())
    assert len(kept) == int(np.ceil(round(q * n, 9)))
    assert set(kept.birth_cell.tolist()) <= set(d.birth_cell.tolist())
    if len(kept) and len(kept) < n:
        rest = np.setdiff1d(np.flatnonzero(d.persistence > 0), kept.birth_cell)
        assert kept.persistence.min() >= d.persistence[rest].max()


# -- serialisation -----------------------------------------------------------------


def test_csv_round_trip(tmp_path, ring):
    d = _diagram(ring).diagram
    text = diagram_to_csv(d)
    lines = text.splitlines()
    assert lines[0] == "dim,birth,death"
    assert "1,1,5" in lines and "0,1,inf" in lines
    p = tmp_path / "d.csv"
    p.write_text(text)
    back = read_diagram_csv(p)
    assert np.array_equal(back.dim, d.dim) and np.array_equal(back.death, d.death)


def test_cycles_json(ring):
    cyc = extract_cycles(_diagram(ring), 1, include_zero_persistence=False)
    doc = json.loads(cycles_to_json(cyc))
    assert doc[0]["dim"] == 1 and doc[0]["birth"] == 1 and doc[0]["death"] == 5
    assert len(doc[0]["cells"]) == 8 and all(len(c) == 4 for c in doc[0]["cells"])
