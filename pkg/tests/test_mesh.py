import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helmpso.errors import InvalidArgument, NotFound
from helmpso.mesh import (
    Mesh,
    Tag,
    boundary_segment,
    build_unit_disc_mesh,
    build_unit_square_mesh,
    read_mesh,
    validate,
    write_mesh,
)


def _edge_tag(mesh, p, q):
    for (a, b), t in zip(mesh.edges, mesh.edge_tags):
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        if (np.allclose(pa, p) and np.allclose(pb, q)) or (np.allclose(pa, q) and np.allclose(pb, p)):
            return t
    raise AssertionError(f"no boundary edge {p}-{q}")


def test_square_counts():
    m = build_unit_square_mesh(2)
    assert m.n_nodes == 9
    assert len(m.triangles) == 8


def test_square_tags():
    m = build_unit_square_mesh(4)
    assert _edge_tag(m, (0, 0.25), (0, 0.5)) is Tag.I
    assert _edge_tag(m, (1, 0), (1, 0.25)) is Tag.C
    assert _edge_tag(m, (0, 0), (0, 0.25)) is Tag.I
    assert m.tag_length(Tag.I) == pytest.approx(1.0)
    assert m.tag_length(Tag.C) == pytest.approx(3.0)


def test_square_rejects_small_n():
    with pytest.raises(InvalidArgument):
        build_unit_square_mesh(1)


@pytest.mark.parametrize("n", [10, 18, 15])
def test_disc_rejects_bad_n(n):
    with pytest.raises(InvalidArgument):
        build_unit_disc_mesh(n)


def test_disc_tags():
    m = build_unit_disc_mesh(16)
    for (a, b), t in zip(m.edges, m.edge_tags):
        mid = 0.5 * (m.nodes[a] + m.nodes[b])
        ang = math.atan2(mid[1], mid[0]) % (2 * math.pi)
        assert (t is Tag.I) == (0 < ang < math.pi / 2)
    q = [t for (a, b), t in zip(m.edges, m.edge_tags)
         if abs(math.atan2(*(0.5 * (m.nodes[a] + m.nodes[b]))[::-1]) - math.pi) < 0.2]
    assert q and all(t is Tag.C for t in q)


def test_disc_boundary_nodes_on_circle():
    m = build_unit_disc_mesh(32)
    b = m.nodes[m.edges[:, 0]]
    np.testing.assert_allclose(np.linalg.norm(b, axis=1), 1.0, atol=1e-14)
    ang = np.sort(np.arctan2(b[:, 1], b[:, 0]) % (2 * np.pi))
    np.testing.assert_allclose(ang, 2 * np.pi * np.arange(32) / 32, atol=1e-12)


@pytest.mark.parametrize("n", range(16, 132, 4))
def test_disc_valid(n):
    m = build_unit_disc_mesh(n)
    assert validate(m) == []
    assert np.all(m.areas() > 0)
    area = m.areas().sum()
    assert area <= math.pi
    assert abs(area - math.pi) <= 2 * math.pi**3 / (3 * n**2) * 1.5


@given(st.integers(min_value=2, max_value=40))
def test_square_valid(n):
    m = build_unit_square_mesh(n)
    assert validate(m) == []
    assert m.areas().sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("build,n", [(build_unit_square_mesh, 8), (build_unit_square_mesh, 16),
                                     (build_unit_disc_mesh, 32), (build_unit_disc_mesh, 64)])
def test_refinement_halves_h(build, n):
    r = build(n).h / build(2 * n).h
    assert 1.8 <= r <= 2.2


def test_validate_negative_area():
    m = build_unit_square_mesh(3)
    tri = m.triangles.copy()
    tri[4, [1, 2]] = tri[4, [2, 1]]
    bad = Mesh(m.nodes.copy(), tri, m.edges.copy(), m.edge_tags)
    assert any("negative area" in v for v in validate(bad))


def test_validate_missing_tag():
    m = build_unit_square_mesh(3)
    tags = list(m.edge_tags)
    tags[2] = None
    bad = Mesh(m.nodes.copy(), m.triangles.copy(), m.edges.copy(), tuple(tags))
    assert any("missing tag" in v for v in validate(bad))


def test_validate_empty_tag_and_uncovered():
    m = build_unit_square_mesh(3)
    allc = Mesh(m.nodes.copy(), m.triangles.copy(), m.edges.copy(), (Tag.C,) * len(m.edges))
    assert any("empty tag" in v for v in validate(allc))
    short = Mesh(m.nodes.copy(), m.triangles.copy(), m.edges[:-1].copy(), m.edge_tags[:-1])
    msgs = validate(short)
    assert any("boundary not covered" in v for v in msgs)


def test_validate_tag_lengths():
    m = build_unit_square_mesh(4)
    flipped = tuple(t.other for t in m.edge_tags)
    assert any("tag lengths" in v for v in validate(
        Mesh(m.nodes.copy(), m.triangles.copy(), m.edges.copy(), flipped)))


def test_square_segments():
    m = build_unit_square_mesh(4)
    seg = boundary_segment(m, Tag.I)
    assert seg.length == pytest.approx(1.0)
    p = seg.points(m)
    np.testing.assert_allclose(p[:, 0], 0.0)
    assert np.all(np.diff(p[:, 1]) > 0)
    mid = np.flatnonzero(np.isclose(p[:, 1], 0.5))[0]
    assert seg.t[mid] == pytest.approx(0.0, abs=1e-15)
    assert boundary_segment(m, Tag.C).length == pytest.approx(3.0)


def test_disc_segment():
    m = build_unit_disc_mesh(64)
    seg = boundary_segment(m, Tag.I)
    assert abs(seg.length - math.pi / 2) / (math.pi / 2) <= 0.02
    ang = np.arctan2(seg.points(m)[:, 1], seg.points(m)[:, 0])
    assert np.all(np.diff(ang) > 0)
    assert ang[0] == pytest.approx(0.0) and ang[-1] == pytest.approx(math.pi / 2)


@given(st.sampled_from([4, 7, 16]), st.sampled_from([Tag.I, Tag.C]))
def test_segment_coordinates(n, tag):
    seg = boundary_segment(build_unit_square_mesh(n), tag)
    assert seg.s[0] == 0.0
    assert np.all(np.diff(seg.s) > 0)
    np.testing.assert_allclose(seg.t, 2 * seg.s / seg.length - 1, atol=1e-15)
    assert seg.t[0] == -1.0 and seg.t[-1] == pytest.approx(1.0)


def test_segment_missing_tag():
    m = build_unit_square_mesh(3)
    allc = Mesh(m.nodes.copy(), m.triangles.copy(), m.edges.copy(), (Tag.C,) * len(m.edges))
    with pytest.raises(NotFound):
        boundary_segment(allc, Tag.I)


@pytest.mark.parametrize("build,n", [(build_unit_square_mesh, 5), (build_unit_disc_mesh, 24)])
def test_mesh_file_round_trip(tmp_path, build, n):
    m = build(n)
    path = tmp_path / "m.txt"
    write_mesh(m, path)
    header = path.read_text().splitlines()[0].split()
    assert [int(v) for v in header] == [m.n_nodes, len(m.triangles), len(m.edges)]
    r = read_mesh(path)
    np.testing.assert_array_equal(r.nodes, m.nodes)
    np.testing.assert_array_equal(r.triangles, m.triangles)
    np.testing.assert_array_equal(r.edges, m.edges)
    assert r.edge_tags == m.edge_tags
    assert r.geometry == m.geometry


def test_read_mesh_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 1 3\n0 0\n1 0\n")
    with pytest.raises(InvalidArgument):
        read_mesh(path)


def test_mesh_arrays_read_only():
    m = build_unit_square_mesh(3)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 5.0
