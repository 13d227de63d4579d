//! Minimum-snap trajectory planning: quintic segments through waypoints,
//! snap-cost quadratic program solved through a regularized KKT system,
//! uniform time scaling for dynamic feasibility, analytic sampling into
//! (position, velocity, acceleration) rows, and a seeded waypoint-route
//! generator.
//!
//! Per axis, segment `i` is `p_i(t) = a_0 + a_1 t + ... + a_5 t^5` on
//! `t in [0, dT_i]`. The solver minimizes the integral of squared snap
//! subject to waypoint interpolation, continuity of velocity/acceleration/
//! jerk at interior knots, and rest-to-rest boundaries (v = a = 0 at the
//! global start and end). The snap Hessian only touches `a_4, a_5`, so a
//! Tikhonov term (1e-10) selects the minimum-norm completion of the
//! remaining coefficients without materially changing the cost.
//!
//! ```
//! use omni360::traj::{allocate_times, enforce_limits, sample, solve_min_snap,
//!                     KinematicLimits, Waypoint};
//!
//! let wps = [
//!     Waypoint::new(0.0, 10.0, 0.0),
//!     Waypoint::new(12.0, 12.0, 3.0),
//!     Waypoint::new(20.0, 11.0, -4.0),
//! ];
//! let lim = KinematicLimits::new(3.0, 16.0, 0.5);
//! let times = allocate_times(&wps, &lim)?;
//! let traj = enforce_limits(&solve_min_snap(&wps, &times)?, &lim);
//! let rows = sample(&traj, lim.dt);
//! assert_eq!(rows[0].t, 0.0);
//! assert!(rows.iter().all(|r| r.velocity.norm() <= lim.v_max * (1.0 + 1e-6)));
//! # Ok::<(), omni360::Error>(())
//! ```

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scene::Aabb;
use crate::{Error, Result};

const TIKHONOV_EPS: f64 = 1e-10;
/// Grid points per segment used when searching velocity/acceleration extrema.
const LIMIT_GRID_STEPS: usize = 1000;

/// A 3D waypoint in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }

    pub fn distance_to(&self, other: &Waypoint) -> f64 {
        (self.as_vector() - other.as_vector()).norm()
    }
}

/// Dynamic limits and output sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// Maximum acceleration magnitude, m/s^2.
    pub a_max: f64,
    /// Maximum speed, m/s.
    pub v_max: f64,
    /// Output sampling interval, seconds.
    pub dt: f64,
}

impl KinematicLimits {
    pub fn new(a_max: f64, v_max: f64, dt: f64) -> Self {
        Self { a_max, v_max, dt }
    }
}

/// Stock kinematic parameter sets (a_max, v_max, sampling interval) covering
/// two typical UAV flight regimes.
pub const DEFAULT_KINEMATIC_SETS: [KinematicLimits; 2] = [
    KinematicLimits {
        a_max: 3.0,
        v_max: 16.0,
        dt: 0.5,
    },
    KinematicLimits {
        a_max: 5.0,
        v_max: 21.0,
        dt: 1.0,
    },
];

/// One quintic segment: six coefficients per axis plus a duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySegment {
    /// `coeffs[axis][power]`, axis order x, y, z.
    pub coeffs: [[f64; 6]; 3],
    /// Segment duration in seconds.
    pub duration: f64,
}

/// Falling factorial j * (j-1) * ... * (j-d+1); 1 for d = 0.
fn falling(j: usize, d: usize) -> f64 {
    (0..d).map(|k| (j - k) as f64).product()
}

fn eval_axis(coeffs: &[f64; 6], deriv: usize, tau: f64) -> f64 {
    let mut acc = 0.0;
    for j in (deriv..6).rev() {
        acc = acc * tau + falling(j, deriv) * coeffs[j];
    }
    // Horner over the shifted coefficients: powers tau^(j-deriv).
    acc
}

impl PolySegment {
    /// Evaluates the `deriv`-th derivative at local time `tau`.
    pub fn eval(&self, deriv: usize, tau: f64) -> Vector3<f64> {
        Vector3::new(
            eval_axis(&self.coeffs[0], deriv, tau),
            eval_axis(&self.coeffs[1], deriv, tau),
            eval_axis(&self.coeffs[2], deriv, tau),
        )
    }
}

/// A full trajectory: ordered segments and the achieved snap cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrajectory {
    pub segments: Vec<PolySegment>,
    /// Integral of squared snap summed over axes, (m/s^4)^2 * s.
    pub snap_cost: f64,
}

impl PolyTrajectory {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Position, velocity, acceleration at global time `t` (clamped to the
    /// trajectory's time span).
    pub fn state_at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let mut remaining = t.max(0.0);
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            if remaining <= seg.duration || i == last {
                let tau = remaining.min(seg.duration);
                return (seg.eval(0, tau), seg.eval(1, tau), seg.eval(2, tau));
            }
            remaining -= seg.duration;
        }
        unreachable!("trajectory has at least one segment")
    }
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

/// Allocates segment durations from a trapezoidal speed profile over each
/// leg length `d`: the segment either reaches `v_max` (trapezoid) or stays
/// triangular, `T = 2 * sqrt(d / a_max)`.
pub fn allocate_times(wps: &[Waypoint], lim: &KinematicLimits) -> Result<Vec<f64>> {
    if wps.len() < 2 {
        return Err(Error::Trajectory(format!(
            "need at least 2 waypoints, got {}",
            wps.len()
        )));
    }
    if !(lim.a_max > 0.0 && lim.v_max > 0.0) {
        return Err(Error::Trajectory(
            "kinematic limits must be positive".into(),
        ));
    }
    let mut times = Vec::with_capacity(wps.len() - 1);
    for (i, pair) in wps.windows(2).enumerate() {
        let d = pair[0].distance_to(&pair[1]);
        if d < 1e-9 {
            return Err(Error::Trajectory(format!(
                "waypoints {i} and {} coincide",
                i + 1
            )));
        }
        let t = if d >= lim.v_max * lim.v_max / lim.a_max {
            d / lim.v_max + lim.v_max / lim.a_max
        } else {
            2.0 * (d / lim.a_max).sqrt()
        };
        times.push(t);
    }
    Ok(times)
}

/// Snap cost of a quintic segment, per axis:
/// snap(t) = 24 a4 + 120 a5 t, so the integral of its square over [0, T] is
/// 576 a4^2 T + 2880 a4 a5 T^2 + 4800 a5^2 T^3.
fn segment_snap_cost(coeffs: &[f64; 6], duration: f64) -> f64 {
    let (a4, a5) = (coeffs[4], coeffs[5]);
    576.0 * a4 * a4 * duration
        + 2880.0 * a4 * a5 * duration * duration
        + 4800.0 * a5 * a5 * duration.powi(3)
}

fn trajectory_snap_cost(segments: &[PolySegment]) -> f64 {
    segments
        .iter()
        .map(|s| {
            (0..3)
                .map(|ax| segment_snap_cost(&s.coeffs[ax], s.duration))
                .sum::<f64>()
        })
        .sum()
}

/// Basis row of the `deriv`-th derivative at local time `tau`:
/// entry j is falling(j, deriv) * tau^(j - deriv).
fn basis_row(deriv: usize, tau: f64) -> [f64; 6] {
    let mut row = [0.0; 6];
    for (j, slot) in row.iter_mut().enumerate() {
        if j >= deriv {
            *slot = falling(j, deriv) * tau.powi((j - deriv) as i32);
        }
    }
    row
}

/// Solves the minimum-snap QP through the given waypoints with fixed segment
/// durations. Boundary conditions are rest-to-rest; interior knots are
/// continuous up to jerk.
pub fn solve_min_snap(wps: &[Waypoint], times: &[f64]) -> Result<PolyTrajectory> {
    let m = times.len();
    if wps.len() < 2 || m != wps.len() - 1 {
        return Err(Error::Trajectory(format!(
            "{} segment durations do not match {} waypoints",
            m,
            wps.len()
        )));
    }
    if let Some(bad) = times.iter().position(|t| !t.is_finite() || *t <= 0.0) {
        return Err(Error::Trajectory(format!(
            "segment {bad} has non-positive duration {}",
            times[bad]
        )));
    }

    let n = 6 * m; // unknowns
    let n_con = 5 * m + 1; // constraint rows
    let dim = n + n_con;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DMatrix::<f64>::zeros(dim, 3);

    // Hessian: snap quadratic form per segment plus Tikhonov regularization.
    for (i, &t) in times.iter().enumerate() {
        let b = 6 * i;
        kkt[(b + 4, b + 4)] += 576.0 * t;
        kkt[(b + 4, b + 5)] += 1440.0 * t * t;
        kkt[(b + 5, b + 4)] += 1440.0 * t * t;
        kkt[(b + 5, b + 5)] += 4800.0 * t.powi(3);
    }
    for d in 0..n {
        kkt[(d, d)] += TIKHONOV_EPS;
    }

    let mut row = n;
    let mut push_constraint =
        |kkt: &mut DMatrix<f64>, rhs: &mut DMatrix<f64>, terms: &[(usize, [f64; 6])], b: [f64; 3]| {
            for (seg, basis) in terms {
                for (j, &c) in basis.iter().enumerate() {
                    let col = 6 * seg + j;
                    kkt[(row, col)] = c;
                    kkt[(col, row)] = c;
                }
            }
            for (axis, &v) in b.iter().enumerate() {
                rhs[(row, axis)] = v;
            }
            row += 1;
        };

    for (i, &t) in times.iter().enumerate() {
        let w0 = wps[i];
        let w1 = wps[i + 1];
        push_constraint(&mut kkt, &mut rhs, &[(i, basis_row(0, 0.0))], [w0.x, w0.y, w0.z]);
        push_constraint(&mut kkt, &mut rhs, &[(i, basis_row(0, t))], [w1.x, w1.y, w1.z]);
    }
    // Rest-to-rest boundaries.
    push_constraint(&mut kkt, &mut rhs, &[(0, basis_row(1, 0.0))], [0.0; 3]);
    push_constraint(&mut kkt, &mut rhs, &[(0, basis_row(2, 0.0))], [0.0; 3]);
    let t_last = times[m - 1];
    push_constraint(&mut kkt, &mut rhs, &[(m - 1, basis_row(1, t_last))], [0.0; 3]);
    push_constraint(&mut kkt, &mut rhs, &[(m - 1, basis_row(2, t_last))], [0.0; 3]);
    // Interior continuity of velocity, acceleration, jerk.
    for (i, &knot_time) in times.iter().enumerate().take(m - 1) {
        for deriv in 1..=3 {
            let left = basis_row(deriv, knot_time);
            let mut neg = basis_row(deriv, 0.0);
            for c in neg.iter_mut() {
                *c = -*c;
            }
            push_constraint(&mut kkt, &mut rhs, &[(i, left), (i + 1, neg)], [0.0; 3]);
        }
    }
    debug_assert_eq!(row, dim);

    let solution = kkt.lu().solve(&rhs).ok_or_else(|| degenerate_error(times))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(degenerate_error(times));
    }

    let mut segments = Vec::with_capacity(m);
    for (i, &t) in times.iter().enumerate() {
        let mut coeffs = [[0.0; 6]; 3];
        for (axis, axis_coeffs) in coeffs.iter_mut().enumerate() {
            for (j, c) in axis_coeffs.iter_mut().enumerate() {
                *c = solution[(6 * i + j, axis)];
            }
        }
        segments.push(PolySegment {
            coeffs,
            duration: t,
        });
    }
    let snap_cost = trajectory_snap_cost(&segments);
    Ok(PolyTrajectory {
        segments,
        snap_cost,
    })
}

fn degenerate_error(times: &[f64]) -> Error {
    let (idx, t) = times
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty durations");
    Error::Trajectory(format!(
        "KKT system singular beyond regularization; most degenerate segment {idx} (duration {t})"
    ))
}

/// Measured velocity/acceleration extrema over the dense per-segment grid.
fn measure_extrema(traj: &PolyTrajectory) -> (f64, f64) {
    let mut max_v: f64 = 0.0;
    let mut max_a: f64 = 0.0;
    for seg in &traj.segments {
        for k in 0..=LIMIT_GRID_STEPS {
            let tau = seg.duration * k as f64 / LIMIT_GRID_STEPS as f64;
            max_v = max_v.max(seg.eval(1, tau).norm());
            max_a = max_a.max(seg.eval(2, tau).norm());
        }
    }
    (max_v, max_a)
}

/// Uniformly stretches time by the smallest factor k >= 1 that brings the
/// grid-sampled speed and acceleration under the limits. Velocity scales as
/// 1/k and acceleration as 1/k^2, so k = max(1, v/v_max, sqrt(a/a_max)); the
/// geometric path is unchanged. A trajectory already within limits is
/// returned as-is (k = 1).
pub fn enforce_limits(traj: &PolyTrajectory, lim: &KinematicLimits) -> PolyTrajectory {
    let (max_v, max_a) = measure_extrema(traj);
    let k = (max_v / lim.v_max).max((max_a / lim.a_max).sqrt()).max(1.0);
    if k <= 1.0 {
        return traj.clone();
    }
    let segments: Vec<PolySegment> = traj
        .segments
        .iter()
        .map(|seg| {
            let mut coeffs = seg.coeffs;
            for axis_coeffs in coeffs.iter_mut() {
                let mut scale = 1.0;
                for c in axis_coeffs.iter_mut() {
                    *c *= scale;
                    scale /= k;
                }
            }
            PolySegment {
                coeffs,
                duration: seg.duration * k,
            }
        })
        .collect();
    let snap_cost = trajectory_snap_cost(&segments);
    PolyTrajectory {
        segments,
        snap_cost,
    }
}

/// Samples the trajectory at t = 0, dt, 2dt, ...; the final endpoint is
/// always included as the last row.
pub fn sample(traj: &PolyTrajectory, dt: f64) -> Vec<TrajectorySample> {
    assert!(dt > 0.0, "sampling interval must be positive");
    let total = traj.total_duration();
    let eps = 1e-9 * total.max(1.0);
    let mut rows = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        if t >= total - eps {
            break;
        }
        let (p, v, a) = traj.state_at(t);
        rows.push(TrajectorySample {
            t,
            position: p,
            velocity: v,
            acceleration: a,
        });
        k += 1;
    }
    let (p, v, a) = traj.state_at(total);
    rows.push(TrajectorySample {
        t: total,
        position: p,
        velocity: v,
        acceleration: a,
    });
    rows
}

/// Generates `count` seeded pseudo-random routes of 3-8 waypoints whose
/// polyline length falls in `length_range`, with every waypoint inside
/// `bounds` and every leg at least `min_leg` long.
pub fn gen_waypoint_routes(
    seed: u64,
    count: usize,
    length_range: (f64, f64),
    bounds: &Aabb,
    min_leg: f64,
) -> Result<Vec<Vec<Waypoint>>> {
    let (len_min, len_max) = length_range;
    if count == 0 {
        return Err(Error::Trajectory("route count must be >= 1".into()));
    }
    if !(len_min > 0.0 && len_max >= len_min) {
        return Err(Error::Trajectory(format!(
            "invalid length range [{len_min}, {len_max}]"
        )));
    }
    if (0..3).any(|a| bounds.max[a] <= bounds.min[a]) {
        return Err(Error::Trajectory("bounds must have positive extent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut routes = Vec::with_capacity(count);
    for idx in 0..count {
        let mut built = None;
        for _ in 0..200 {
            if let Some(route) = try_build_route(&mut rng, len_min, len_max, bounds, min_leg) {
                built = Some(route);
                break;
            }
        }
        match built {
            Some(route) => routes.push(route),
            None => {
                return Err(Error::Trajectory(format!(
                    "bounds too small for routes of length [{len_min}, {len_max}] (failed at route {idx})"
                )))
            }
        }
    }
    Ok(routes)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * theta.cos(), z, r * theta.sin())
}

fn try_build_route(
    rng: &mut ChaCha8Rng,
    len_min: f64,
    len_max: f64,
    bounds: &Aabb,
    min_leg: f64,
) -> Option<Vec<Waypoint>> {
    let span = len_max - len_min;
    let target = len_min + span * (0.001 + 0.998 * rng.gen::<f64>());
    let leg_cap = 0.45 * bounds.diagonal();
    let min_leg = min_leg.max(1e-6);
    let feasible: Vec<usize> = (2..=7)
        .filter(|&n| {
            let mean = target / n as f64;
            mean >= min_leg && mean <= leg_cap
        })
        .collect();
    if feasible.is_empty() {
        return None;
    }
    let n_legs = feasible[rng.gen_range(0..feasible.len())];

    let mut legs = vec![0.0; n_legs];
    let mut legs_ok = false;
    for _ in 0..32 {
        let mut sum = 0.0;
        for leg in legs.iter_mut() {
            *leg = 0.5 + rng.gen::<f64>();
            sum += *leg;
        }
        for leg in legs.iter_mut() {
            *leg = *leg / sum * target;
        }
        if legs.iter().all(|&l| l >= min_leg && l <= leg_cap) {
            legs_ok = true;
            break;
        }
    }
    if !legs_ok {
        return None;
    }

    let start = Vector3::new(
        rng.gen_range(bounds.min[0]..bounds.max[0]),
        rng.gen_range(bounds.min[1]..bounds.max[1]),
        rng.gen_range(bounds.min[2]..bounds.max[2]),
    );
    let mut points = vec![start];
    for &leg in &legs {
        let mut placed = false;
        for _ in 0..64 {
            let candidate = points.last().unwrap() + leg * random_unit(rng);
            if bounds.contains(&candidate) {
                points.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }

    let total: f64 = points
        .windows(2)
        .map(|pair| (pair[1] - pair[0]).norm())
        .sum();
    if total < len_min || total > len_max {
        return None;
    }
    Some(points.iter().map(|p| Waypoint::from_vector(*p)).collect())
}

/// Formats a float with 9 significant digits, trimming trailing zeros
/// (the formatting used by trajectory CSV files).
pub fn fmt_sig9(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let epos = sci.find('e').expect("scientific format");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = sci[..epos].trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    }
}

/// Renders samples as CSV with the fixed header
/// `t,x,y,z,vx,vy,vz,ax,ay,az` and 9-significant-digit floats.
pub fn trajectory_csv(samples: &[TrajectorySample]) -> String {
    let mut out = String::from("t,x,y,z,vx,vy,vz,ax,ay,az\n");
    for s in samples {
        let fields = [
            s.t,
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
            s.acceleration.x,
            s.acceleration.y,
            s.acceleration.z,
        ];
        let line: Vec<String> = fields.iter().map(|v| fmt_sig9(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses a route file: either a single route (`[[x,y,z], ...]`) or a list
/// of routes (`[[[x,y,z], ...], ...]`).
pub fn routes_from_json(text: &str) -> Result<Vec<Vec<Waypoint>>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let to_route = |triples: &[serde_json::Value]| -> Result<Vec<Waypoint>> {
        triples
            .iter()
            .map(|t| {
                let xyz: [f64; 3] = serde_json::from_value(t.clone())
                    .map_err(|_| Error::Format("route entries must be [x,y,z] triples".into()))?;
                Ok(Waypoint::new(xyz[0], xyz[1], xyz[2]))
            })
            .collect()
    };
    let arr = value
        .as_array()
        .ok_or_else(|| Error::Format("route file must be a JSON array".into()))?;
    if arr.is_empty() {
        return Err(Error::Format("route file is empty".into()));
    }
    let nested = arr[0]
        .as_array()
        .map(|inner| inner.first().is_some_and(|v| v.is_array()))
        .unwrap_or(false);
    if nested {
        arr.iter()
            .map(|route| {
                let inner = route
                    .as_array()
                    .ok_or_else(|| Error::Format("each route must be an array".into()))?;
                to_route(inner)
            })
            .collect()
    } else {
        Ok(vec![to_route(arr)?])
    }
}

/// Serializes routes as JSON lists of `[x,y,z]` triples.
pub fn routes_to_json(routes: &[Vec<Waypoint>]) -> String {
    let raw: Vec<Vec<[f64; 3]>> = routes
        .iter()
        .map(|r| r.iter().map(|w| [w.x, w.y, w.z]).collect())
        .collect();
    serde_json::to_string_pretty(&raw).expect("route serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_time_allocation() {
        let lim = KinematicLimits::new(5.0, 5.0, 0.1);
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(10.0, 0.0, 0.0)];
        let times = allocate_times(&wps, &lim).unwrap();
        assert!((times[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_time_allocation() {
        // Short leg with the (a_max=3, v_max=16) set never reaches v_max.
        let lim = KinematicLimits::new(3.0, 16.0, 0.5);
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let times = allocate_times(&wps, &lim).unwrap();
        assert!((times[0] - 2.0 * (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((times[0] - 1.1547005383792515).abs() < 1e-9);
    }

    #[test]
    fn equal_legs_get_equal_times() {
        let lim = KinematicLimits::new(3.0, 16.0, 0.5);
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(4.0, 0.0, 0.0),
            Waypoint::new(8.0, 0.0, 0.0),
        ];
        let times = allocate_times(&wps, &lim).unwrap();
        assert_eq!(times[0], times[1]);
    }

    #[test]
    fn duplicate_waypoints_rejected() {
        let lim = KinematicLimits::new(3.0, 16.0, 0.5);
        let wps = [
            Waypoint::new(1.0, 2.0, 3.0),
            Waypoint::new(1.0, 2.0, 3.0),
        ];
        assert!(allocate_times(&wps, &lim).is_err());
    }

    #[test]
    fn single_segment_matches_analytic_quintic() {
        // Rest-to-rest unit displacement over T=1 is fully determined:
        // x(s) = 10 s^3 - 15 s^4 + 6 s^5.
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[1.0]).unwrap();
        let expected = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        for (j, &e) in expected.iter().enumerate() {
            assert!(
                (traj.segments[0].coeffs[0][j] - e).abs() < 1e-9,
                "coeff {j}: {} vs {e}",
                traj.segments[0].coeffs[0][j]
            );
        }
        let (p, _, _) = traj.state_at(0.5);
        assert!((p.x - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_segment_snap_cost() {
        // J = integral of (360 (2s-1))^2 over [0,1] = 43200.
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[1.0]).unwrap();
        assert!((traj.snap_cost - 43200.0).abs() / 43200.0 < 1e-9);
    }

    #[test]
    fn collinear_waypoints_keep_zero_axes() {
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(2.0, 0.0, 0.0),
            Waypoint::new(5.0, 0.0, 0.0),
        ];
        let traj = solve_min_snap(&wps, &[1.0, 1.5]).unwrap();
        for t in [0.0, 0.3, 1.0, 1.7, 2.5] {
            let (p, v, _) = traj.state_at(t);
            assert!(p.y.abs() < 1e-9 && p.z.abs() < 1e-9);
            assert!(v.y.abs() < 1e-9 && v.z.abs() < 1e-9);
        }
    }

    #[test]
    fn axis_permutation_permutes_solution() {
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(1.0, 2.0, -1.0),
            Waypoint::new(3.0, 1.0, 0.5),
        ];
        let times = [1.2, 0.9];
        let base = solve_min_snap(&wps, &times).unwrap();
        let swapped: Vec<Waypoint> = wps
            .iter()
            .map(|w| Waypoint::new(w.y, w.z, w.x))
            .collect();
        let perm = solve_min_snap(&swapped, &times).unwrap();
        for (a, b) in base.segments.iter().zip(&perm.segments) {
            for j in 0..6 {
                assert!((a.coeffs[0][j] - b.coeffs[2][j]).abs() < 1e-9);
                assert!((a.coeffs[1][j] - b.coeffs[0][j]).abs() < 1e-9);
                assert!((a.coeffs[2][j] - b.coeffs[1][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn knot_continuity_and_interpolation() {
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(3.0, 1.0, -2.0),
            Waypoint::new(4.0, -1.0, 1.0),
            Waypoint::new(7.0, 0.5, 0.0),
        ];
        let lim = KinematicLimits::new(3.0, 16.0, 0.5);
        let times = allocate_times(&wps, &lim).unwrap();
        let traj = solve_min_snap(&wps, &times).unwrap();

        // Interpolation at every knot.
        let mut t_acc = 0.0;
        for (i, w) in wps.iter().enumerate() {
            let (p, _, _) = traj.state_at(t_acc);
            assert!((p - w.as_vector()).norm() < 1e-6, "waypoint {i}");
            if i < times.len() {
                t_acc += times[i];
            }
        }
        // C0..C3 continuity at interior knots.
        for i in 0..traj.segments.len() - 1 {
            let left = &traj.segments[i];
            let right = &traj.segments[i + 1];
            for deriv in 0..=3 {
                let gap = (left.eval(deriv, left.duration) - right.eval(deriv, 0.0)).norm();
                assert!(gap < 1e-6, "knot {i} derivative {deriv}: gap {gap}");
            }
        }
        // Rest-to-rest boundaries.
        let (_, v0, a0) = traj.state_at(0.0);
        assert!(v0.norm() < 1e-9 && a0.norm() < 1e-9);
    }

    #[test]
    fn enforce_limits_identity_when_within() {
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[10.0]).unwrap();
        let lim = KinematicLimits::new(5.0, 21.0, 1.0);
        let out = enforce_limits(&traj, &lim);
        assert_eq!(out, traj);
    }

    #[test]
    fn enforce_limits_velocity_bound_scaling_law() {
        // Single rest-to-rest segment: peak speed 1.875 D/T at midpoint, peak
        // accel (10/sqrt(3)) D/T^2. Pick limits so v is the binding factor at
        // exactly k = 2 while a stays under a_max / 4.
        let d = 8.0;
        let t = 2.0;
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(d, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[t]).unwrap();
        let peak_v = 1.875 * d / t;
        let peak_a = 10.0 / 3f64.sqrt() * d / (t * t);
        let lim = KinematicLimits::new(4.0 * peak_a, peak_v / 2.0, 0.1);
        let out = enforce_limits(&traj, &lim);
        assert!((out.total_duration() - 2.0 * t).abs() < 1e-9);
        let (max_v, max_a) = super::measure_extrema(&out);
        assert!(max_v <= lim.v_max * (1.0 + 1e-9));
        assert!((max_v - lim.v_max).abs() < 1e-6);
        assert!(max_a <= lim.a_max);
    }

    #[test]
    fn feasibility_under_stock_kinematic_sets() {
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(1.0, 0.2, 0.0),
            Waypoint::new(1.5, 1.0, 0.7),
            Waypoint::new(0.2, 2.0, 0.3),
        ];
        for lim in DEFAULT_KINEMATIC_SETS {
            let times = allocate_times(&wps, &lim).unwrap();
            let traj = enforce_limits(&solve_min_snap(&wps, &times).unwrap(), &lim);
            let (max_v, max_a) = super::measure_extrema(&traj);
            assert!(max_v <= lim.v_max * (1.0 + 1e-6), "{max_v} vs {}", lim.v_max);
            assert!(max_a <= lim.a_max * (1.0 + 1e-6), "{max_a} vs {}", lim.a_max);
        }
    }

    #[test]
    fn sample_grid_includes_endpoint() {
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[1.0]).unwrap();
        let rows = sample(&traj, 0.5);
        let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 0.5, 1.0]);
        assert!(rows[0].velocity.norm() < 1e-9);
        assert!(rows[0].acceleration.norm() < 1e-9);

        // Non-multiple duration keeps the endpoint as final row.
        let traj2 = solve_min_snap(&wps, &[0.9]).unwrap();
        let ts2: Vec<f64> = sample(&traj2, 0.5).iter().map(|r| r.t).collect();
        assert_eq!(ts2, vec![0.0, 0.5, 0.9]);
    }

    #[test]
    fn sampled_velocity_matches_central_difference() {
        let wps = [
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(2.0, 1.0, 0.0),
            Waypoint::new(3.0, -1.0, 1.0),
        ];
        let traj = solve_min_snap(&wps, &[1.3, 1.1]).unwrap();
        let dt = 0.01;
        let rows = sample(&traj, dt);
        let max_a = rows
            .iter()
            .map(|r| r.acceleration.norm())
            .fold(0.0f64, f64::max);
        let tol = 10.0 * dt * dt * max_a;
        for w in rows.windows(3) {
            // Only interior rows on the uniform grid.
            if (w[2].t - w[0].t - 2.0 * dt).abs() > 1e-12 {
                continue;
            }
            let fd = (w[2].position - w[0].position) / (2.0 * dt);
            assert!((fd - w[1].velocity).norm() < tol.max(1e-9));
        }
    }

    #[test]
    fn route_generation_is_seeded_and_in_range() {
        let bounds = Aabb::new([-60.0, 2.0, -60.0], [60.0, 40.0, 60.0]);
        let a = gen_waypoint_routes(7, 50, (20.0, 50.0), &bounds, 2.0).unwrap();
        let b = gen_waypoint_routes(7, 50, (20.0, 50.0), &bounds, 2.0).unwrap();
        assert_eq!(a, b);
        for route in &a {
            assert!(route.len() >= 3 && route.len() <= 8);
            let len: f64 = route
                .windows(2)
                .map(|p| p[0].distance_to(&p[1]))
                .sum();
            assert!((20.0..=50.0).contains(&len), "length {len}");
            for pair in route.windows(2) {
                assert!(pair[0].distance_to(&pair[1]) >= 2.0 - 1e-9);
            }
            for w in route {
                assert!(bounds.contains(&w.as_vector()));
            }
        }
    }

    #[test]
    fn route_generation_rejects_infeasible_bounds() {
        let bounds = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        assert!(gen_waypoint_routes(1, 3, (100.0, 200.0), &bounds, 1.0).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(43200.0), "43200");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(-123.456789123), "-123.456789");
        assert_eq!(fmt_sig9(1.23456789e12), "1.23456789e12");
        assert_eq!(fmt_sig9(9.87654321e-7), "9.87654321e-7");
        assert_eq!(fmt_sig9(0.999999999951), "1");
    }

    #[test]
    fn csv_header_and_shape() {
        let wps = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 0.0, 0.0)];
        let traj = solve_min_snap(&wps, &[1.0]).unwrap();
        let csv = trajectory_csv(&sample(&traj, 0.5));
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x,y,z,vx,vy,vz,ax,ay,az");
        assert_eq!(lines.clone().count(), 3);
        for line in lines {
            assert_eq!(line.split(',').count(), 10);
        }
    }

    #[test]
    fn route_json_round_trip() {
        let routes = vec![
            vec![Waypoint::new(0.0, 1.0, 2.0), Waypoint::new(3.0, 4.0, 5.0)],
            vec![
                Waypoint::new(-1.0, 0.5, 0.0),
                Waypoint::new(2.0, 2.0, 2.0),
                Waypoint::new(4.0, 0.0, 1.0),
            ],
        ];
        let parsed = routes_from_json(&routes_to_json(&routes)).unwrap();
        assert_eq!(parsed, routes);

        // A bare single route parses as one route.
        let single = routes_from_json("[[0,0,0],[1,2,3]]").unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].len(), 2);
    }
}
