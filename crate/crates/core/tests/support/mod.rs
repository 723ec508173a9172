//! Fitted mesh of the unit square around the disc of radius 1/4 centred at
//! (1/2, 1/2). Ring `i` of the disc carries `6i` points; outside the disc,
//! `m` layers blend the circle into the square along rays from the centre.
//! `m` must be a multiple of 4 so the square's corners are ray points.

#![allow(dead_code)]

use pdwg_core::mesh::{InterfaceTag, Mesh, Triangle};

const C: [f64; 2] = [0.5, 0.5];
const R: f64 = 0.25;

fn ring_merge(a: &[usize], ta: &[f64], b: &[usize], tb: &[f64], sub: u32, out: &mut Vec<Triangle>) {
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let next_a = if i + 1 < na { ta[i + 1] } else { std::f64::consts::TAU };
        let next_b = if j + 1 < nb { tb[j + 1] } else { std::f64::consts::TAU };
        if i < na && (j == nb || next_a <= next_b) {
            out.push(Triangle { vertices: [a[i], a[(i + 1) % na], b[j % nb]], subdomain: sub });
            i += 1;
        } else {
            out.push(Triangle { vertices: [a[i % na], b[(j + 1) % nb], b[j]], subdomain: sub });
            j += 1;
        }
    }
}

pub fn disc_mesh(m: usize) -> Mesh<f64> {
    assert!(m.is_multiple_of(4) && m > 0);
    let mut verts = vec![C];
    let mut tris = Vec::new();
    let mut prev = vec![0usize];
    let mut prev_t = vec![0.0];
    for i in 1..=m {
        let n = 6 * i;
        let th: Vec<f64> = (0..n).map(|j| std::f64::consts::TAU * j as f64 / n as f64).collect();
        let r = R * i as f64 / m as f64;
        let ids: Vec<usize> = th
            .iter()
            .map(|t| {
                verts.push([C[0] + r * t.cos(), C[1] + r * t.sin()]);
                verts.len() - 1
            })
            .collect();
        if i == 1 {
            for j in 0..n {
                tris.push(Triangle { vertices: [0, ids[j], ids[(j + 1) % n]], subdomain: 1 });
            }
        } else {
            ring_merge(&prev, &prev_t, &ids, &th, 1, &mut tris);
        }
        prev = ids;
        prev_t = th;
    }
    let circle = prev.clone();
    let th = prev_t.clone();
    let n = circle.len();
    let tags: Vec<InterfaceTag> = (0..n)
        .map(|j| InterfaceTag { vertices: [circle[j], circle[(j + 1) % n]], piece: 1, plus: None })
        .collect();
    for l in 1..=m {
        let s = l as f64 / m as f64;
        let ids: Vec<usize> = th
            .iter()
            .map(|t| {
                let d = [t.cos(), t.sin()];
                let reach = 0.5 / d[0].abs().max(d[1].abs());
                let p = [
                    C[0] + ((1.0 - s) * R + s * reach) * d[0],
                    C[1] + ((1.0 - s) * R + s * reach) * d[1],
                ];
                // pin boundary points exactly onto the square
                let p = if l == m { p.map(|v| if (v - 1.0).abs() < 1e-12 { 1.0 } else if v.abs() < 1e-12 { 0.0 } else { v }) } else { p };
                verts.push(p);
                verts.len() - 1
            })
            .collect();
        ring_merge(&prev, &th, &ids, &th, 2, &mut tris);
        prev = ids;
    }
    Mesh::from_parts(verts, tris, &tags).expect("disc mesh is valid")
}
