use std::io::{BufReader, Cursor};

use proptest::prelude::*;
use voxmesh::io::{
    load_mesh, load_point_cloud, read_obj, read_ply, read_xyz, save_mesh, write_obj, write_ply, write_xyz,
    MeshWriteOptions, PlyEncoding, PlyExtras,
};
use voxmesh::{HalfEdgeMesh, Point};

fn octahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let v = vec![
        Point::new(1.0, 0.0, 0.0),
        Point::new(-1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, -1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
        Point::new(0.0, 0.0, -1.0),
    ];
    let f = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    (v, f)
}

#[test]
fn obj_output_reads_back_with_tobj() {
    let (v, f) = octahedron();
    let mut buf = Vec::new();
    write_obj(&mut buf, &v, &f).unwrap();
    let (models, _) = tobj::load_obj_buf(
        &mut BufReader::new(Cursor::new(&buf)),
        &tobj::LoadOptions { triangulate: true, ..Default::default() },
        |_| Ok(Default::default()),
    )
    .unwrap();
    assert_eq!(models.len(), 1);
    let m = &models[0].mesh;
    assert_eq!(m.positions.len(), 3 * v.len());
    assert_eq!(m.indices.len(), 3 * f.len());
    // tobj renumbers vertices by first use; compare corners by position.
    for (t, c) in f.iter().zip(m.indices.chunks(3)) {
        for k in 0..3 {
            let j = c[k] as usize;
            let theirs = Point::new(
                m.positions[3 * j] as f64,
                m.positions[3 * j + 1] as f64,
                m.positions[3 * j + 2] as f64,
            );
            assert_eq!(theirs, v[t[k]]);
        }
    }
}

#[test]
fn obj_from_tobj_fixture_matches() {
    // Quads and negative indices, fan-triangulated the same way by both readers.
    let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nf 1 2 3 4\nf -5 -4 -1\n";
    let (pts, faces) = read_obj(Cursor::new(text)).unwrap();
    let (models, _) = tobj::load_obj_buf(
        &mut BufReader::new(Cursor::new(text)),
        &tobj::LoadOptions { triangulate: true, ..Default::default() },
        |_| Ok(Default::default()),
    )
    .unwrap();
    let m = &models[0].mesh;
    assert_eq!(pts.len() * 3, m.positions.len());
    let theirs: Vec<[usize; 3]> = m
        .indices
        .chunks(3)
        .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
        .collect();
    assert_eq!(faces, theirs);
}

#[test]
fn mesh_files_round_trip() {
    let (v, f) = octahedron();
    let mesh = HalfEdgeMesh::new(v, f).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["m.obj", "m.ply"] {
        let path = dir.path().join(name);
        save_mesh(&mesh, &path, MeshWriteOptions::default()).unwrap();
        let back = load_mesh(&path).unwrap().into_halfedge().unwrap();
        assert_eq!(back.faces(), mesh.faces());
        assert_eq!(back.positions(), mesh.positions());
        let cloud = load_point_cloud(&path, None).unwrap();
        assert_eq!(cloud.len(), 6);
    }
}

fn coords() -> impl Strategy<Value = Vec<[f32; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1e4f32..1e4f32), 1..200)
}

proptest! {
    #[test]
    fn ply_round_trip(c in coords(), binary in any::<bool>()) {
        let pts: Vec<Point> = c.iter().map(|p| Point::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect();
        let labels: Vec<u32> = (0..pts.len() as u32).map(|i| i % 3).collect();
        let enc = if binary { PlyEncoding::BinaryLittleEndian } else { PlyEncoding::Ascii };
        let mut buf = Vec::new();
        write_ply(&mut buf, &pts, PlyExtras { labels: Some(&labels), ..Default::default() }, enc).unwrap();
        let back = read_ply(Cursor::new(buf)).unwrap();
        prop_assert_eq!(back.positions, pts);
        prop_assert_eq!(back.labels, Some(labels));
    }

    #[test]
    fn xyz_round_trip(c in coords()) {
        let pts: Vec<Point> = c.iter().map(|p| Point::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect();
        let mut buf = Vec::new();
        write_xyz(&mut buf, &pts).unwrap();
        prop_assert_eq!(read_xyz(Cursor::new(buf)).unwrap(), pts);
    }
}
