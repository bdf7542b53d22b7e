import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshwalk.errors import (InvalidSplit, MalformedRecord, MeshFormatError, MeshTooSmall, NonExistentEdge,
                             NonManifoldMesh, SimplificationStalled, TopologyViolation)
from meshwalk.pm import mesh as meshmod
from meshwalk.pm.mesh import TriangleMesh, parse_mesh, format_mesh, validate
from meshwalk.pm.ops import VertexSplit, edge_collapse, vertex_split
from meshwalk.pm.pmfile import dump_pm, load_pm
from meshwalk.pm.primitives import grid, icosphere, random_sphere, torus
from meshwalk.pm.records import (BASE_RECORD_BYTES, HEADER_SIZE, LEVEL_RECORD_BYTES, ResolutionRecord,
                                 deserialize_record, encode_splits, pm_records, records_to_mesh, serialize_record,
                                 synthetic_object_sizes, synthetic_record)
from meshwalk.pm.simplify import simplify


def tetrahedron():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TriangleMesh(v, f)


# -- collapse / split ----------------------------------------------------------

def test_tetrahedron_collapse_counts():
    m = tetrahedron()
    validate(m)
    out, _ = edge_collapse(m, 0, 1)
    assert (out.n_vertices, out.n_faces) == (3, 2)


def test_tetrahedron_split_restores():
    m = tetrahedron()
    out, s = edge_collapse(m, 2, 3)
    assert vertex_split(out, s).same_as(m)


def test_collapse_errors_leave_input_alone():
    m = tetrahedron()
    before = m.copy()
    with pytest.raises(NonExistentEdge):
        edge_collapse(m, 0, 0)
    small, _ = edge_collapse(m, 0, 1)
    with pytest.raises(TopologyViolation):
        edge_collapse(small, 0, 1)
    assert m.same_as(before)


def test_invalid_split():
    m = tetrahedron()
    with pytest.raises(InvalidSplit):
        vertex_split(m, VertexSplit(0, 0, 1, (0, 0, 0), (0, 0, 0)))


def test_inverse_over_random_collapses():
    """Collapse a random legal edge and split it back, 150 times over assorted meshes."""
    rng = np.random.default_rng(11)
    meshes = [random_sphere(40, 1), icosphere(1), torus(10, 6), grid(5, 5, jitter=0.1, seed=2)]
    done = 0
    while done < 150:
        m = meshes[done % len(meshes)]
        e = meshmod.undirected_edges(m.faces)
        a, b = e[rng.integers(len(e))]
        if rng.random() < 0.5:
            a, b = b, a
        try:
            out, s = edge_collapse(m, a, b)
        except TopologyViolation:
            continue
        validate(out)
        back = vertex_split(out, s)
        validate(back)
        assert back.same_as(m)
        done += 1


# -- simplify -----------------------------------------------------------------

def test_hundred_vertex_sphere_levels():
    pm = simplify(random_sphere(100, 0))
    assert pm.levels == 10
    assert 9 <= pm.base_mesh.n_vertices <= 11
    assert sum(1 for k in range(2, 11) if pm.level_splits(k)) == 9
    for k in range(1, 11):
        assert abs(pm.reconstruct(k).n_vertices - 10 * k) <= 1


def test_level_vertex_counts_monotone_and_exact_at_top():
    m = random_sphere(257, 4)
    pm = simplify(m)
    counts = [pm.reconstruct(k).n_vertices for k in range(1, 11)]
    assert counts == sorted(counts)
    assert counts[-1] == m.n_vertices
    assert pm.reconstruct(5).n_vertices == pm.base_mesh.n_vertices + pm.level_boundaries[4]
    assert list(pm.level_boundaries) == sorted(pm.level_boundaries)
    assert pm.level_boundaries[-1] == len(pm.splits)


def test_every_level_is_valid():
    pm = simplify(torus(14, 8))
    for k in range(1, 11):
        validate(pm.reconstruct(k))


def test_single_level_means_no_splits():
    m = icosphere(1)
    pm = simplify(m, levels=1)
    assert pm.splits == []
    assert pm.base_mesh.same_as(m)


def test_too_small():
    with pytest.raises(MeshTooSmall):
        simplify(tetrahedron())


def test_stalled_flat_grid_warns():
    with pytest.warns(SimplificationStalled):
        pm = simplify(grid(6, 6))
    assert pm.stalled
    assert pm.reconstruct().same_as(grid(6, 6))


def test_deterministic():
    m = random_sphere(200, 9)
    assert dump_pm(simplify(m)) == dump_pm(simplify(m))


# -- records and files ------------------------------------------------------------

def test_synthetic_sizes():
    assert synthetic_record(3, 1, BASE_RECORD_BYTES).byte_size == 8192
    assert synthetic_record(3, 2, LEVEL_RECORD_BYTES).byte_size == 5325
    sizes = synthetic_object_sizes()
    assert sizes == [8192] + [5325] * 9
    assert sum(sizes) == 56117
    assert sum(synthetic_object_sizes(10)) == 8192 + 10 * 5325


def test_empty_split_batch_round_trips():
    r = ResolutionRecord(7, 4, encode_splits([]))
    data = serialize_record(r)
    assert len(data) == r.byte_size == HEADER_SIZE + 5
    assert deserialize_record(data) == r


def test_header_layout():
    r = synthetic_record(0x01020304, 3, 20)
    data = serialize_record(r)
    assert data[:9] == bytes([4, 3, 2, 1, 3, 11, 0, 0, 0])


def test_pm_records_reassemble():
    m = random_sphere(120, 2)
    recs = [deserialize_record(serialize_record(r)) for r in pm_records(simplify(m))]
    assert records_to_mesh(recs).same_as(m)
    assert records_to_mesh(recs[:4]).same_as(simplify(m).reconstruct(4))


def test_pm_file_round_trip():
    pm = simplify(torus(16, 8))
    again = load_pm(dump_pm(pm))
    assert again.level_boundaries == pm.level_boundaries
    assert again.splits == pm.splits
    assert again.reconstruct().same_as(pm.reconstruct())


@pytest.mark.parametrize("cut", [1, 8, 9, 30])
def test_truncated_record(cut):
    data = serialize_record(pm_records(simplify(icosphere(1)))[1])
    with pytest.raises(MalformedRecord):
        deserialize_record(data[:-cut])


def test_trailing_bytes_and_bad_magic():
    data = serialize_record(synthetic_record(1, 1, 50))
    with pytest.raises(MalformedRecord):
        deserialize_record(data + b"\0")
    with pytest.raises(MalformedRecord):
        load_pm(b"XXXX" + dump_pm(simplify(icosphere(1)))[4:])


_coord = st.floats(allow_nan=False, allow_infinity=False, width=64)
_split = st.builds(VertexSplit, st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1),
                   st.tuples(_coord, _coord, _coord), st.tuples(_coord, _coord, _coord))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 255), st.lists(_split, max_size=6))
def test_split_record_fuzz(oid, level, splits):
    r = ResolutionRecord(oid, level, encode_splits(splits))
    data = serialize_record(r)
    assert len(data) == r.byte_size
    assert deserialize_record(data) == r


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 255), st.integers(HEADER_SIZE + 1, 4000))
def test_synthetic_record_fuzz(oid, level, size):
    r = synthetic_record(oid, level, size)
    assert deserialize_record(serialize_record(r)) == r


@settings(max_examples=100, deadline=None)
@given(st.binary(max_size=80))
def test_garbage_never_crashes(blob):
    try:
        deserialize_record(blob)
    except MalformedRecord:
        pass


# -- ASCII mesh format ----------------------------------------------------------

def test_mesh_text_round_trip(tmp_path):
    m = icosphere(1)
    p = tmp_path / "m.obj"
    meshmod.write_mesh(m, p)
    assert meshmod.read_mesh(p).same_as(m)
    assert parse_mesh(format_mesh(m)).same_as(m)


@pytest.mark.parametrize("text", ["v 0 0\n", "v 0 0 0\nf 1 2 3\n", "q 1\n", "v a b c\n"])
def test_mesh_format_errors(text):
    with pytest.raises(MeshFormatError):
        parse_mesh(text)


def test_non_manifold_rejected():
    v = np.zeros((5, 3))
    v[:, 0] = np.arange(5)
    # three faces on one edge
    f = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(NonManifoldMesh):
        validate(TriangleMesh(v, f))
