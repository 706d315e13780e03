use alloc::vec;
use alloc::vec::Vec;

use super::grid::{advance_counts, for_each_cell, GridField, Region};
use crate::error::{Error, Result};
use crate::math::{self, Sum};

/// Per-node phase label: `false` for `a`, `true` for `b`.
pub fn well_labels(u: &GridField, a: &[f64], b: &[f64]) -> Result<Vec<bool>> {
    if a.len() != u.state_dim() || b.len() != u.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.state_dim(),
            got: a.len(),
        });
    }
    (0..u.node_count())
        .map(|node| {
            let v = u.value(node);
            if v == a {
                Ok(false)
            } else if v == b {
                Ok(true)
            } else {
                Err(Error::NotWellValued { node })
            }
        })
        .collect()
}

/// Face counting: every pair of neighbouring nodes with different labels
/// contributes the measure of their shared dual face (halved at the boundary).
pub fn face_perimeter(u: &GridField, a: &[f64], b: &[f64], region: &Region) -> Result<f64> {
    let labels = well_labels(u, a, b)?;
    let n = u.space_dim();
    let h = u.spacing();
    let strides = u.strides();
    let counts = u.counts().to_vec();
    let face = math::powi(h, n as i32 - 1);
    let lo = u.bounds().lo().to_vec();
    let mut idx = vec![0usize; n];
    let mut mid = vec![0.0; n];
    let mut sum = Sum::new();
    for node in 0..u.node_count() {
        for k in 0..n {
            if idx[k] + 1 >= counts[k] {
                continue;
            }
            let other = node + strides[k];
            if labels[node] == labels[other] {
                continue;
            }
            for j in 0..n {
                mid[j] = lo[j] + h * idx[j] as f64;
            }
            mid[k] += 0.5 * h;
            if !region.contains(&mid) {
                continue;
            }
            let mut w = face;
            for j in 0..n {
                if j != k && (idx[j] == 0 || idx[j] + 1 == counts[j]) {
                    w *= 0.5;
                }
            }
            sum.add(w);
        }
        advance_counts(&mut idx, &counts);
    }
    Ok(sum.value())
}

/// Blurred-indicator interface length (area in 3D, point count in 1D).
///
/// The `{a, b}` labels become `∓1`, are smoothed by a separable Gaussian of
/// width `1.5h` with mirrored boundaries, and the zero level set is extracted
/// with marching squares (2D) or marching tetrahedra (3D).
pub fn reconstructed_perimeter(u: &GridField, a: &[f64], b: &[f64], region: &Region) -> Result<f64> {
    let labels = well_labels(u, a, b)?;
    let n = u.space_dim();
    if n == 1 {
        let h = u.spacing();
        let lo = u.bounds().lo()[0];
        let mut count = 0.0;
        for i in 0..labels.len() - 1 {
            if labels[i] != labels[i + 1] && region.contains(&[lo + h * (i as f64 + 0.5)]) {
                count += 1.0;
            }
        }
        return Ok(count);
    }
    let mut phi: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    blur(&mut phi, u.counts(), 1.5);
    Ok(match n {
        2 => marching_squares(&phi, u, region),
        _ => marching_tetrahedra(&phi, u, region),
    })
}

/// `K_H` times the reconstructed perimeter.
pub fn sharp_energy(u: &GridField, a: &[f64], b: &[f64], kh: f64) -> Result<f64> {
    Ok(kh * reconstructed_perimeter(u, a, b, &Region::Full)?)
}

fn blur(phi: &mut [f64], counts: &[usize], sigma_nodes: f64) {
    let radius = libm::ceil(4.0 * sigma_nodes) as isize;
    let kernel: Vec<f64> = {
        let raw: Vec<f64> = (-radius..=radius)
            .map(|i| math::exp(-((i * i) as f64) / (2.0 * sigma_nodes * sigma_nodes)))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    };
    let n = counts.len();
    let mut strides = vec![1usize; n];
    for k in (0..n - 1).rev() {
        strides[k] = strides[k + 1] * counts[k + 1];
    }
    let mut line = Vec::new();
    for axis in 0..n {
        let len = counts[axis];
        let stride = strides[axis];
        // visit every line along `axis` by iterating the other axes
        let mut others: Vec<usize> = counts.to_vec();
        others[axis] = 1;
        let mut idx = vec![0usize; n];
        loop {
            let start: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            line.clear();
            line.extend((0..len).map(|i| phi[start + i * stride]));
            for i in 0..len {
                let mut acc = 0.0;
                for (t, w) in kernel.iter().enumerate() {
                    let j = mirror(i as isize + t as isize - radius, len);
                    acc += w * line[j];
                }
                phi[start + i * stride] = acc;
            }
            if !advance_counts(&mut idx, &others) {
                break;
            }
        }
    }
}

fn mirror(mut i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

#[inline]
fn crossing(p: &[f64; 2], q: &[f64; 2], fp: f64, fq: f64) -> [f64; 2] {
    let t = fp / (fp - fq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn marching_squares(phi: &[f64], u: &GridField, region: &Region) -> f64 {
    let mut sum = Sum::new();
    for (p, q) in level_segments(phi, u) {
        sum.add(clipped_length(&p, &q, region));
    }
    sum.value()
}

/// Zero level set of nodal values on a 2D grid as line segments.
fn level_segments(phi: &[f64], u: &GridField) -> Vec<([f64; 2], [f64; 2])> {
    let h = u.spacing();
    let lo = u.bounds().lo();
    let ny = u.counts()[1];
    let mut out = Vec::new();
    for_each_cell(u.counts(), |idx| {
        let (i, j) = (idx[0], idx[1]);
        let x0 = lo[0] + h * i as f64;
        let y0 = lo[1] + h * j as f64;
        // corners counter-clockwise: (0,0) (1,0) (1,1) (0,1)
        let pts = [[x0, y0], [x0 + h, y0], [x0 + h, y0 + h], [x0, y0 + h]];
        let f = [
            phi[i * ny + j],
            phi[(i + 1) * ny + j],
            phi[(i + 1) * ny + j + 1],
            phi[i * ny + j + 1],
        ];
        let inside = |v: f64| v >= 0.0;
        let mut cuts: Vec<[f64; 2]> = Vec::with_capacity(4);
        for e in 0..4 {
            let (p, q) = (e, (e + 1) % 4);
            if inside(f[p]) != inside(f[q]) {
                cuts.push(crossing(&pts[p], &pts[q], f[p], f[q]));
            }
        }
        match cuts.len() {
            2 => out.push((cuts[0], cuts[1])),
            4 => {
                // saddle: the cell centre decides which corners connect
                let centre = 0.25 * (f[0] + f[1] + f[2] + f[3]);
                if inside(centre) == inside(f[0]) {
                    out.push((cuts[0], cuts[1]));
                    out.push((cuts[2], cuts[3]));
                } else {
                    out.push((cuts[0], cuts[3]));
                    out.push((cuts[1], cuts[2]));
                }
            }
            _ => {}
        }
    });
    out
}

/// Segments of the reconstructed interface of a 2D `{a, b}`-valued field.
pub fn interface_segments(u: &GridField, a: &[f64], b: &[f64]) -> Result<Vec<([f64; 2], [f64; 2])>> {
    if u.space_dim() != 2 {
        return Err(Error::invalid("field", "interface segments need two axes"));
    }
    let labels = well_labels(u, a, b)?;
    let mut phi: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    blur(&mut phi, u.counts(), 1.5);
    Ok(level_segments(&phi, u))
}

/// Length of the part of segment `pq` inside the region.
fn clipped_length(p: &[f64; 2], q: &[f64; 2], region: &Region) -> f64 {
    let len = math::dist(p, q);
    let dx = [q[0] - p[0], q[1] - p[1]];
    match region {
        Region::Full => len,
        Region::Box(b) => {
            let (mut t0, mut t1) = (0.0f64, 1.0f64);
            for k in 0..2 {
                if dx[k] == 0.0 {
                    if p[k] < b.lo()[k] || p[k] > b.hi()[k] {
                        return 0.0;
                    }
                    continue;
                }
                let ta = (b.lo()[k] - p[k]) / dx[k];
                let tb = (b.hi()[k] - p[k]) / dx[k];
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
            if t1 > t0 {
                (t1 - t0) * len
            } else {
                0.0
            }
        }
        Region::Ball { center, radius } => {
            // |p + t·dx − c|² = r² for t in [0, 1]
            let w = [p[0] - center[0], p[1] - center[1]];
            let aa = dx[0] * dx[0] + dx[1] * dx[1];
            if aa == 0.0 {
                return 0.0;
            }
            let bb = 2.0 * (w[0] * dx[0] + w[1] * dx[1]);
            let cc = w[0] * w[0] + w[1] * w[1] - radius * radius;
            let disc = bb * bb - 4.0 * aa * cc;
            if disc <= 0.0 {
                return 0.0;
            }
            let root = math::sqrt(disc);
            let t0 = ((-bb - root) / (2.0 * aa)).max(0.0);
            let t1 = ((-bb + root) / (2.0 * aa)).min(1.0);
            if t1 > t0 {
                (t1 - t0) * len
            } else {
                0.0
            }
        }
    }
}

// Kuhn subdivision of the unit cube: one tetrahedron per axis permutation.
const KUHN: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn marching_tetrahedra(phi: &[f64], u: &GridField, region: &Region) -> f64 {
    let h = u.spacing();
    let lo = u.bounds().lo().to_vec();
    let strides = u.strides();
    let mut sum = Sum::new();
    for_each_cell(u.counts(), |idx| {
        let base = u.flat(idx);
        let origin = [
            lo[0] + h * idx[0] as f64,
            lo[1] + h * idx[1] as f64,
            lo[2] + h * idx[2] as f64,
        ];
        for perm in KUHN.iter() {
            let mut verts = [[0.0f64; 3]; 4];
            let mut vals = [0.0f64; 4];
            let mut corner = [0usize; 3];
            let mut node = base;
            verts[0] = origin;
            vals[0] = phi[node];
            for s in 0..3 {
                corner[perm[s]] = 1;
                node += strides[perm[s]];
                for k in 0..3 {
                    verts[s + 1][k] = origin[k] + h * corner[k] as f64;
                }
                vals[s + 1] = phi[node];
            }
            sum.add(tet_area(&verts, &vals, region));
        }
    });
    sum.value()
}

fn tet_area(v: &[[f64; 3]; 4], f: &[f64; 4], region: &Region) -> f64 {
    let inside: Vec<usize> = (0..4).filter(|&i| f[i] >= 0.0).collect();
    let outside: Vec<usize> = (0..4).filter(|&i| f[i] < 0.0).collect();
    let cut = |i: usize, j: usize| -> [f64; 3] {
        let t = f[i] / (f[i] - f[j]);
        [
            v[i][0] + t * (v[j][0] - v[i][0]),
            v[i][1] + t * (v[j][1] - v[i][1]),
            v[i][2] + t * (v[j][2] - v[i][2]),
        ]
    };
    match (inside.len(), outside.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if inside.len() == 1 { (inside[0], &outside) } else { (outside[0], &inside) };
            let tri = [cut(lone, rest[0]), cut(lone, rest[1]), cut(lone, rest[2])];
            triangle_area(&tri, region)
        }
        (2, 2) => {
            let (i0, i1, o0, o1) = (inside[0], inside[1], outside[0], outside[1]);
            let quad = [cut(i0, o0), cut(i0, o1), cut(i1, o1), cut(i1, o0)];
            triangle_area(&[quad[0], quad[1], quad[2]], region)
                + triangle_area(&[quad[0], quad[2], quad[3]], region)
        }
        _ => 0.0,
    }
}

fn triangle_area(t: &[[f64; 3]; 3], region: &Region) -> f64 {
    let centroid = [
        (t[0][0] + t[1][0] + t[2][0]) / 3.0,
        (t[0][1] + t[1][1] + t[2][1]) / 3.0,
        (t[0][2] + t[1][2] + t[2][2]) / 3.0,
    ];
    if !region.contains(&centroid) {
        return 0.0;
    }
    let e1 = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let e2 = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let c = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    0.5 * math::norm(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Bounds;

    fn labelled<F: Fn(&[f64]) -> bool>(n: usize, cells: usize, f: F) -> GridField {
        let bounds = Bounds::cube(n, -0.5, 0.5).unwrap();
        let counts = GridField::counts_for(&bounds, cells).unwrap();
        GridField::from_fn(bounds, counts, 1, |x, out| out[0] = if f(x) { 1.0 } else { -1.0 }).unwrap()
    }

    #[test]
    fn half_plane_face_count_is_exact() {
        let u = labelled(2, 64, |x| x[0] >= 0.0);
        let p = face_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_has_no_perimeter() {
        let u = labelled(2, 16, |_| true);
        assert_eq!(face_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap(), 0.0);
        assert_eq!(reconstructed_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap(), 0.0);
    }

    #[test]
    fn values_off_the_wells_are_rejected() {
        let u = GridField::constant(Bounds::unit(2), vec![3, 3], &[0.5]).unwrap();
        assert!(matches!(
            face_perimeter(&u, &[-1.0], &[1.0], &Region::Full),
            Err(Error::NotWellValued { node: 0 })
        ));
    }

    #[test]
    fn diagonal_face_count_overshoots_by_root_two() {
        let u = labelled(2, 256, |x| x[0] + x[1] >= 0.0);
        let face = face_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap();
        let rec = reconstructed_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap();
        let exact = core::f64::consts::SQRT_2;
        assert!((face - 2.0).abs() < 0.02);
        assert!((rec - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn sphere_area_in_3d() {
        let r = 0.3;
        let u = labelled(3, 64, |x| math::norm(x) <= r);
        let area = reconstructed_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap();
        let exact = 4.0 * core::f64::consts::PI * r * r;
        assert!((area - exact).abs() < 0.03 * exact, "{area} vs {exact}");
    }

    #[test]
    fn ball_region_clips_the_disc_boundary() {
        let u = labelled(2, 256, |x| x[1] >= 0.0);
        let region = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 0.3,
        };
        let rec = reconstructed_perimeter(&u, &[-1.0], &[1.0], &region).unwrap();
        assert!((rec - 0.6).abs() < 1e-3, "{rec}");
    }
}
