//! Shared test fixtures and independent oracles.
//!
//! The solvers here deliberately share no code with the library paths they
//! check: the minimum-snap oracle goes through an SVD null-space reduction
//! instead of the KKT system, and the quadrature oracle integrates the
//! squared fourth derivative numerically instead of using the closed form.

// Each integration-test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use omni360::scene::{CameraPose, Scene, ScenePrimitive, Shape};
use omni360::traj::Waypoint;

// ---------------------------------------------------------------------------
// Fixture scenes

/// Ground-slab fixture: a 30 x 30 m floor seen from 10 m above its center.
/// The slab is finite so grazing rays escape to the sky instead of producing
/// unbounded nearest-neighbor depth tails.
pub fn ground_plane_fixture() -> (Scene, CameraPose) {
    let scene = Scene::new(vec![ScenePrimitive {
        shape: Shape::AxisBox {
            min: [-15.0, -11.0, -15.0],
            max: [15.0, -10.0, 15.0],
        },
        albedo: [95, 140, 70],
        semantic_id: 3,
        entity_id: 1,
    }])
    .unwrap();
    (scene, CameraPose::identity())
}

/// Enclosing-sphere fixture: constant-albedo sphere of radius 20 m around
/// the camera. Every ray hits at exactly 20 m, so stitched output must be
/// constant across all seams.
pub fn enclosing_sphere_fixture() -> (Scene, CameraPose) {
    let scene = Scene::new(vec![ScenePrimitive {
        shape: Shape::Sphere {
            center: [0.0; 3],
            radius: 20.0,
        },
        albedo: [180, 180, 180],
        semantic_id: 5,
        entity_id: 2,
    }])
    .unwrap();
    (scene, CameraPose::identity())
}

/// Box-canyon fixture: floor, two side walls and two end walls around the
/// camera, open to the sky above. Coordinates are deliberately non-round:
/// geometry aligned to dyadic pixel grids produces degenerate silhouette
/// sampling (a coarse grid can luck into zero label disagreements, which a
/// finer grid then cannot match).
pub fn box_canyon_fixture() -> (Scene, CameraPose) {
    let mk = |min: [f64; 3], max: [f64; 3], albedo: [u8; 3], sem: u8, ent: u32| ScenePrimitive {
        shape: Shape::AxisBox { min, max },
        albedo,
        semantic_id: sem,
        entity_id: ent,
    };
    let scene = Scene::new(vec![
        mk([-5.13, -3.47, -10.21], [5.07, -2.96, 9.87], [120, 110, 100], 1, 1), // floor
        mk([-5.13, -3.20, -10.21], [-4.18, 5.91, 9.87], [160, 60, 60], 2, 2),   // left wall
        mk([4.09, -3.20, -10.21], [5.07, 5.77, 9.87], [60, 60, 160], 2, 3),     // right wall
        mk([-5.13, -3.20, -11.13], [5.07, 5.83, -10.21], [60, 160, 60], 4, 4),  // near end
        mk([-5.13, -3.20, 9.87], [5.07, 5.69, 10.79], [160, 160, 60], 4, 5),    // far end
    ])
    .unwrap();
    (scene, CameraPose::identity())
}

pub fn all_fixtures() -> Vec<(&'static str, Scene, CameraPose)> {
    let (plane, plane_pose) = ground_plane_fixture();
    let (sphere, sphere_pose) = enclosing_sphere_fixture();
    let (canyon, canyon_pose) = box_canyon_fixture();
    vec![
        ("ground_plane", plane, plane_pose),
        ("enclosing_sphere", sphere, sphere_pose),
        ("box_canyon", canyon, canyon_pose),
    ]
}

// ---------------------------------------------------------------------------
// Numerical oracles

/// Composite Simpson quadrature of `f` over [a, b] with `2 * half_steps`
/// panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, half_steps: usize) -> f64 {
    let n = 2 * half_steps;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Snap cost of a trajectory by numeric quadrature of the squared fourth
/// derivative of each segment polynomial.
pub fn snap_cost_by_quadrature(traj: &omni360::traj::PolyTrajectory) -> f64 {
    traj.segments
        .iter()
        .map(|seg| {
            (0..3)
                .map(|axis| {
                    let a4 = seg.coeffs[axis][4];
                    let a5 = seg.coeffs[axis][5];
                    simpson(
                        |t| {
                            let snap = 24.0 * a4 + 120.0 * a5 * t;
                            snap * snap
                        },
                        0.0,
                        seg.duration,
                        2000,
                    )
                })
                .sum::<f64>()
        })
        .sum()
}

fn constraint_basis(deriv: usize, tau: f64) -> [f64; 6] {
    let mut row = [0.0; 6];
    for (j, slot) in row.iter_mut().enumerate() {
        if j >= deriv {
            let fall: f64 = (0..deriv).map(|k| (j - k) as f64).product();
            *slot = fall * tau.powi((j - deriv) as i32);
        }
    }
    row
}

/// Independent minimum-snap solve: builds the constraint system, computes a
/// min-norm particular solution and an explicit SVD null-space basis, then
/// minimizes the snap quadratic form over the null-space coordinates with a
/// dense least-squares solve. Returns the total snap cost over the three
/// axes.
pub fn min_snap_cost_nullspace(wps: &[Waypoint], times: &[f64]) -> f64 {
    let m = times.len();
    let n = 6 * m;
    let n_con = 5 * m + 1;

    let mut a = DMatrix::<f64>::zeros(n_con, n);
    let mut b = DMatrix::<f64>::zeros(n_con, 3);
    let mut row = 0;
    let mut add = |a: &mut DMatrix<f64>,
                   b: &mut DMatrix<f64>,
                   terms: &[(usize, [f64; 6])],
                   rhs: [f64; 3]| {
        for (seg, basis) in terms {
            for (j, &c) in basis.iter().enumerate() {
                a[(row, 6 * seg + j)] = c;
            }
        }
        for (axis, &v) in rhs.iter().enumerate() {
            b[(row, axis)] = v;
        }
        row += 1;
    };

    for i in 0..m {
        let (w0, w1) = (wps[i], wps[i + 1]);
        add(&mut a, &mut b, &[(i, constraint_basis(0, 0.0))], [w0.x, w0.y, w0.z]);
        add(&mut a, &mut b, &[(i, constraint_basis(0, times[i]))], [w1.x, w1.y, w1.z]);
    }
    add(&mut a, &mut b, &[(0, constraint_basis(1, 0.0))], [0.0; 3]);
    add(&mut a, &mut b, &[(0, constraint_basis(2, 0.0))], [0.0; 3]);
    add(&mut a, &mut b, &[(m - 1, constraint_basis(1, times[m - 1]))], [0.0; 3]);
    add(&mut a, &mut b, &[(m - 1, constraint_basis(2, times[m - 1]))], [0.0; 3]);
    for (i, &knot_time) in times.iter().enumerate().take(m - 1) {
        for deriv in 1..=3 {
            let left = constraint_basis(deriv, knot_time);
            let mut right = constraint_basis(deriv, 0.0);
            for c in right.iter_mut() {
                *c = -*c;
            }
            add(&mut a, &mut b, &[(i, left), (i + 1, right)], [0.0; 3]);
        }
    }
    assert_eq!(row, n_con);

    // Snap quadratic form.
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (i, &t) in times.iter().enumerate() {
        let base = 6 * i;
        q[(base + 4, base + 4)] = 576.0 * t;
        q[(base + 4, base + 5)] = 1440.0 * t * t;
        q[(base + 5, base + 4)] = 1440.0 * t * t;
        q[(base + 5, base + 5)] = 4800.0 * t.powi(3);
    }

    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * 1e-12;

    // Full null-space basis of A from the eigendecomposition of A^T A (the
    // thin SVD only spans the row space).
    let ata = a.transpose() * &a;
    let eig = nalgebra::SymmetricEigen::new(ata);
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut null_cols: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        if eig.eigenvalues[k].abs() <= max_eig * 1e-10 {
            null_cols.push(eig.eigenvectors.column(k).into_owned());
        }
    }

    let mut total_cost = 0.0;
    for axis in 0..3 {
        let rhs = b.column(axis).into_owned();
        // Min-norm particular solution via the pseudo-inverse.
        let particular: DVector<f64> = svd
            .solve(&rhs, tol)
            .expect("pseudo-inverse solve")
            .column(0)
            .into_owned();

        let cost_of = |x: &DVector<f64>| (x.transpose() * &q * x)[(0, 0)];
        if null_cols.is_empty() {
            total_cost += cost_of(&particular);
            continue;
        }
        let dim = null_cols.len();
        let mut nq_n = DMatrix::<f64>::zeros(dim, dim);
        let mut nq_p = DVector::<f64>::zeros(dim);
        let q_cols: Vec<DVector<f64>> = null_cols.iter().map(|c| &q * c).collect();
        for r in 0..dim {
            for c in 0..dim {
                nq_n[(r, c)] = null_cols[r].dot(&q_cols[c]);
            }
            nq_p[r] = null_cols[r].dot(&(&q * &particular));
        }
        let z = nq_n
            .lu()
            .solve(&(-nq_p))
            .expect("reduced snap system solvable");
        let mut solution = particular;
        for (k, col) in null_cols.iter().enumerate() {
            solution += col * z[k];
        }
        total_cost += cost_of(&solution);
    }
    total_cost
}
