//! Wavefront OBJ output for three-dimensional solutions.

use std::collections::HashMap;
use std::fmt::Write;

use anyhow::{bail, Result};
use crossfit::bodies::ImplicitBody;
use crossfit::configuration::CrossConfig;
use nalgebra::{DVector, Vector3};

/// Subdivision depth of the body mesh: 162 vertices, 320 faces.
const ICOSPHERE_LEVEL: usize = 2;

/// Unit icosphere as (vertices, counter-clockwise triangles).
fn icosphere(level: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

fn vertex_line(out: &mut String, v: &DVector<f64>) {
    writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]).unwrap();
}

/// Octahedron faces, one per sign orthant, oriented outward. Vertex indices
/// are zero-based into `+a_1, -a_1, +a_2, -a_2, +a_3, -a_3`.
pub fn octahedron_faces(config: &CrossConfig) -> Vec<[usize; 3]> {
    let handed = config.axes().determinant().signum();
    let mut faces = Vec::with_capacity(8);
    for mask in 0..8usize {
        let pick = |i: usize| 2 * i + (mask >> i & 1);
        let signs = (0..3).map(|i| if mask >> i & 1 == 0 { 1.0 } else { -1.0 }).product::<f64>();
        let face = if signs * handed > 0.0 {
            [pick(0), pick(1), pick(2)]
        } else {
            [pick(0), pick(2), pick(1)]
        };
        faces.push(face);
    }
    faces
}

/// OBJ text with the crosspolytope as object `crosspolytope` and a sampled
/// surface as object `body`. Bytes depend only on the inputs.
pub fn to_obj(body: &ImplicitBody, config: &CrossConfig) -> Result<String> {
    if config.dim() != 3 || body.dim() != 3 {
        bail!("OBJ export needs d = 3, got d = {}", config.dim());
    }
    let mut out = String::new();
    out.push_str("o crosspolytope\n");
    for v in config.vertices() {
        vertex_line(&mut out, &v);
    }
    for [a, b, c] in octahedron_faces(config) {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1).unwrap();
    }

    let origin = body.interior_point();
    let (dirs, faces) = icosphere(ICOSPHERE_LEVEL);
    out.push_str("o body\n");
    for u in &dirs {
        let dir = DVector::from_column_slice(u.as_slice());
        let t = body.ray_intersect(origin, &dir)?;
        vertex_line(&mut out, &(origin + dir * t));
    }
    for [a, b, c] in faces {
        writeln!(out, "f {} {} {}", a + 7, b + 7, c + 7).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossfit::configuration::{random_rotation, Rotation};

    fn face_normal(v: &[DVector<f64>], f: [usize; 3]) -> Vector3<f64> {
        let p = |i: usize| Vector3::new(v[i][0], v[i][1], v[i][2]);
        (p(f[1]) - p(f[0])).cross(&(p(f[2]) - p(f[0])))
    }

    #[test]
    fn icosphere_counts_and_orientation() {
        let (v, f) = icosphere(2);
        assert_eq!((v.len(), f.len()), (162, 320));
        for [a, b, c] in f {
            let n = (v[b] - v[a]).cross(&(v[c] - v[a]));
            assert!(n.dot(&(v[a] + v[b] + v[c])) > 0.0);
        }
    }

    #[test]
    fn octahedron_faces_point_outward() {
        for seed in 0..5 {
            let c = CrossConfig::standard(DVector::from_vec(vec![0.1, 0.2, -0.3]), 0.8, random_rotation(seed, 3)).unwrap();
            let verts = c.vertices();
            let faces = octahedron_faces(&c);
            assert_eq!(faces.len(), 8);
            for f in faces {
                let centroid = (&verts[f[0]] + &verts[f[1]] + &verts[f[2]]) / 3.0 - &c.center;
                let n = face_normal(&verts, f);
                assert!(n.dot(&Vector3::new(centroid[0], centroid[1], centroid[2])) > 0.0);
            }
        }
    }

    #[test]
    fn unit_octahedron_in_ball() {
        let ball = ImplicitBody::ball(3, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let obj = to_obj(&ball, &c).unwrap();
        let lines: Vec<&str> = obj.lines().collect();
        assert_eq!(lines[0], "o crosspolytope");
        assert_eq!(lines[1], "v 1.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0");
        assert_eq!(lines[2], "v -1.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0");
        assert_eq!(lines[6], "v 0.0000000000000000e0 0.0000000000000000e0 -1.0000000000000000e0");
        assert_eq!(lines[7..15].iter().filter(|l| l.starts_with("f ")).count(), 8);
        assert_eq!(lines.iter().filter(|l| l.starts_with("v ")).count(), 6 + 162);
        assert_eq!(lines.iter().filter(|l| l.starts_with("f ")).count(), 8 + 320);
        assert_eq!(obj, to_obj(&ball, &c).unwrap());
    }

    #[test]
    fn body_mesh_lies_on_surface() {
        let e = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]).unwrap();
        let c = CrossConfig::standard(DVector::zeros(3), 1.0, Rotation::identity(3)).unwrap();
        let obj = to_obj(&e, &c).unwrap();
        for line in obj.lines().skip_while(|l| *l != "o body").filter(|l| l.starts_with("v ")) {
            let x: Vec<f64> = line[2..].split(' ').map(|t| t.parse().unwrap()).collect();
            assert!(e.value_at(&x).abs() < 1e-9);
        }
    }

    #[test]
    fn other_dimensions_are_refused() {
        let ball = ImplicitBody::ball(4, 1.0).unwrap();
        let c = CrossConfig::standard(DVector::zeros(4), 1.0, Rotation::identity(4)).unwrap();
        assert!(to_obj(&ball, &c).is_err());
    }
}
