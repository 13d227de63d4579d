//! Exact coordinate conversions among ERP image coordinates, unit viewing
//! directions, and cube-face tangent coordinates.
//!
//! Conventions, fixed crate-wide:
//! - World frame: +x right, +y up, +z front.
//! - ERP coordinate (u, v) with u in `[0,1)` and v in `[0,1]`; longitude
//!   `lambda = 2*pi*u - pi`, latitude `phi = pi/2 - pi*v`.
//! - Pixel (i, j) of a W x H raster samples u = (i+0.5)/W, v = (j+0.5)/H.
//! - Cube faces are ideal 90-degree pinholes. Tangent coordinates (s, t)
//!   span [-1, 1] with the per-face frames listed at [`Face`].
//! - The lambda = +pi seam wraps to u = 0; directions on a face edge or
//!   corner resolve by face priority Front > Back > Right > Left > Up > Down.

use nalgebra::Vector3;
use std::f64::consts::PI;

/// Unit viewing direction in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    /// Builds a direction from any non-zero vector, normalizing it.
    ///
    /// Panics on a zero-length input.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        let n = (x * x + y * y + z * z).sqrt();
        assert!(n > 0.0, "cannot normalize a zero direction");
        Self {
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// Normalized ERP image coordinate; u wraps in longitude, v spans pole to pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErpCoord {
    pub u: f64,
    pub v: f64,
}

impl ErpCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Center of pixel (i, j) in a `width` x `height` ERP raster.
    pub fn from_pixel(i: usize, j: usize, width: usize, height: usize) -> Self {
        Self {
            u: (i as f64 + 0.5) / width as f64,
            v: (j as f64 + 0.5) / height as f64,
        }
    }

    /// Continuous pixel coordinates of this point in a `width` x `height` raster.
    pub fn to_pixel(&self, width: usize, height: usize) -> (f64, f64) {
        (
            self.u * width as f64 - 0.5,
            self.v * height as f64 - 0.5,
        )
    }
}

/// The six cube faces. Each face's optical axis is the matching signed
/// world axis; its tangent frame is:
///
/// | face      | axis | s    | t    |
/// |-----------|------|------|------|
/// | Front     | +z   | +x   | -y   |
/// | Back      | -z   | -x   | -y   |
/// | Right     | +x   | -z   | -y   |
/// | Left      | -x   | +z   | -y   |
/// | Up        | +y   | +x   | +z   |
/// | Down      | -y   | +x   | -z   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Front,
    Back,
    Right,
    Left,
    Up,
    Down,
}

impl Face {
    /// All faces, in the fixed storage/tie-break order.
    pub const ALL: [Face; 6] = [
        Face::Front,
        Face::Back,
        Face::Right,
        Face::Left,
        Face::Up,
        Face::Down,
    ];

    pub fn index(&self) -> usize {
        match self {
            Face::Front => 0,
            Face::Back => 1,
            Face::Right => 2,
            Face::Left => 3,
            Face::Up => 4,
            Face::Down => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Face::Front => "front",
            Face::Back => "back",
            Face::Right => "right",
            Face::Left => "left",
            Face::Up => "up",
            Face::Down => "down",
        }
    }

    /// The face's optical axis in the world frame.
    pub fn axis(&self) -> Vector3<f64> {
        match self {
            Face::Front => Vector3::new(0.0, 0.0, 1.0),
            Face::Back => Vector3::new(0.0, 0.0, -1.0),
            Face::Right => Vector3::new(1.0, 0.0, 0.0),
            Face::Left => Vector3::new(-1.0, 0.0, 0.0),
            Face::Up => Vector3::new(0.0, 1.0, 0.0),
            Face::Down => Vector3::new(0.0, -1.0, 0.0),
        }
    }
}

/// A point on a cube face: tangent-plane coordinates with |s|, |t| <= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeCoord {
    pub face: Face,
    pub s: f64,
    pub t: f64,
}

impl CubeCoord {
    pub fn new(face: Face, s: f64, t: f64) -> Self {
        Self { face, s, t }
    }

    /// Center of face pixel (i, j) at the given square face resolution.
    pub fn from_pixel(face: Face, i: usize, j: usize, resolution: usize) -> Self {
        Self {
            face,
            s: 2.0 * (i as f64 + 0.5) / resolution as f64 - 1.0,
            t: 2.0 * (j as f64 + 0.5) / resolution as f64 - 1.0,
        }
    }
}

fn wrap_unit(u: f64) -> f64 {
    let w = u - u.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Maps an ERP coordinate to its viewing direction.
pub fn erp_to_dir(c: ErpCoord) -> Direction {
    let lambda = 2.0 * PI * c.u - PI;
    let phi = 0.5 * PI - PI * c.v;
    Direction {
        x: phi.cos() * lambda.sin(),
        y: phi.sin(),
        z: phi.cos() * lambda.cos(),
    }
}

/// Inverse of [`erp_to_dir`]; u is wrapped into [0,1) and defined as 0.5 at
/// the poles.
pub fn dir_to_erp(d: Direction) -> ErpCoord {
    let horiz = d.x * d.x + d.z * d.z;
    let phi = d.y.clamp(-1.0, 1.0).asin();
    let v = (0.5 * PI - phi) / PI;
    if horiz == 0.0 {
        return ErpCoord { u: 0.5, v };
    }
    let lambda = d.x.atan2(d.z);
    ErpCoord {
        u: wrap_unit((lambda + PI) / (2.0 * PI)),
        v,
    }
}

/// Picks the cube face whose signed axis dominates `d` and returns the
/// tangent coordinates there. Exact ties resolve by the priority
/// Front > Back > Right > Left > Up > Down.
pub fn dir_to_cube(d: Direction) -> CubeCoord {
    let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
    let face = if d.z > 0.0 && az >= ax && az >= ay {
        Face::Front
    } else if d.z < 0.0 && az >= ax && az >= ay {
        Face::Back
    } else if d.x > 0.0 && ax >= ay && ax >= az {
        Face::Right
    } else if d.x < 0.0 && ax >= ay && ax >= az {
        Face::Left
    } else if d.y > 0.0 && ay >= ax && ay >= az {
        Face::Up
    } else {
        Face::Down
    };
    let (s, t) = match face {
        Face::Front => (d.x / az, -d.y / az),
        Face::Back => (-d.x / az, -d.y / az),
        Face::Right => (-d.z / ax, -d.y / ax),
        Face::Left => (d.z / ax, -d.y / ax),
        Face::Up => (d.x / ay, d.z / ay),
        Face::Down => (d.x / ay, -d.z / ay),
    };
    CubeCoord { face, s, t }
}

/// Inverse of [`dir_to_cube`] for interior points.
pub fn cube_to_dir(c: CubeCoord) -> Direction {
    let (s, t) = (c.s, c.t);
    let v = match c.face {
        Face::Front => Vector3::new(s, -t, 1.0),
        Face::Back => Vector3::new(-s, -t, -1.0),
        Face::Right => Vector3::new(1.0, -t, -s),
        Face::Left => Vector3::new(-1.0, -t, s),
        Face::Up => Vector3::new(s, 1.0, t),
        Face::Down => Vector3::new(s, -1.0, -t),
    };
    Direction::from_vector(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn erp_to_dir_identity_case() {
        let d = erp_to_dir(ErpCoord::new(0.5, 0.5));
        assert!(close(d.x, 0.0, 1e-15));
        assert!(close(d.y, 0.0, 1e-15));
        assert!(close(d.z, 1.0, 1e-15));
    }

    #[test]
    fn erp_to_dir_quarter_turn() {
        let d = erp_to_dir(ErpCoord::new(0.25, 0.5));
        assert!(close(d.x, -1.0, 1e-15));
        assert!(close(d.y, 0.0, 1e-15));
        assert!(close(d.z, 0.0, 1e-15));
    }

    #[test]
    fn erp_to_dir_north_pole() {
        let d = erp_to_dir(ErpCoord::new(0.5, 0.0));
        assert!(close(d.x, 0.0, 1e-15));
        assert!(close(d.y, 1.0, 1e-15));
        assert!(close(d.z, 0.0, 1e-15));
    }

    #[test]
    fn dir_to_erp_identity_and_seam() {
        let c = dir_to_erp(Direction::new(0.0, 0.0, 1.0));
        assert!(close(c.u, 0.5, 1e-15) && close(c.v, 0.5, 1e-15));

        // The lambda = pi seam wraps into [0,1); exactly -z lands on u = 0.
        let seam = dir_to_erp(Direction::new(0.0, 0.0, -1.0));
        assert!(seam.u == 0.0 || seam.u < 1.0 && seam.u > 1.0 - 1e-12);
        assert!(close(seam.v, 0.5, 1e-15));

        let pole = dir_to_erp(Direction::new(0.0, 1.0, 0.0));
        assert!(close(pole.u, 0.5, 1e-15) && close(pole.v, 0.0, 1e-15));
    }

    #[test]
    fn dir_to_cube_face_centers() {
        let f = dir_to_cube(Direction::new(0.0, 0.0, 1.0));
        assert_eq!(f.face, Face::Front);
        assert!(close(f.s, 0.0, 1e-15) && close(f.t, 0.0, 1e-15));

        let b = dir_to_cube(Direction::new(0.0, 0.0, -1.0));
        assert_eq!(b.face, Face::Back);
        assert!(close(b.s, 0.0, 1e-15) && close(b.t, 0.0, 1e-15));
    }

    #[test]
    fn dir_to_cube_corner_tie_break() {
        // All three axes tie at the (1,1,1) corner; the stated priority
        // Front > Back > Right > Left > Up > Down selects Front.
        let c = dir_to_cube(Direction::new(1.0, 1.0, 1.0));
        assert_eq!(c.face, Face::Front);
        assert!(close(c.s, 1.0, 1e-12) && close(c.t, -1.0, 1e-12));
    }

    #[test]
    fn cube_to_dir_centers_and_edge() {
        let d = cube_to_dir(CubeCoord::new(Face::Front, 0.0, 0.0));
        assert!(close(d.z, 1.0, 1e-15));

        let u = cube_to_dir(CubeCoord::new(Face::Up, 0.0, 0.0));
        assert!(close(u.y, 1.0, 1e-15));

        let e = cube_to_dir(CubeCoord::new(Face::Front, 1.0, 0.0));
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!(close(e.x, inv_sqrt2, 1e-15));
        assert!(close(e.y, 0.0, 1e-15));
        assert!(close(e.z, inv_sqrt2, 1e-15));
    }

    #[test]
    fn erp_round_trip_is_subpixel_at_high_resolution() {
        // Round-trip drift must stay below 1e-6 pixels even for a large frame.
        let (w_e, h_e) = (4096.0, 2048.0);
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut rand01 = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100_000 {
            let c = ErpCoord::new(rand01(), 0.01 + 0.98 * rand01());
            let back = dir_to_erp(erp_to_dir(c));
            let raw = (back.u - c.u).abs();
            let du = raw.min(1.0 - raw); // wrap-around distance in u
            assert!(du * w_e < 1e-6, "u drift: {} -> {}", c.u, back.u);
            assert!((back.v - c.v).abs() * h_e < 1e-6, "v drift: {} -> {}", c.v, back.v);
        }
    }

    #[test]
    fn cube_round_trip_is_exact_for_interior_points() {
        let mut rng_state = 0x51a9b2c3d4e5f607u64;
        let mut rand01 = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for face in Face::ALL {
            for _ in 0..20_000 {
                let s = 1.998 * rand01() - 0.999;
                let t = 1.998 * rand01() - 0.999;
                let back = dir_to_cube(cube_to_dir(CubeCoord::new(face, s, t)));
                assert_eq!(back.face, face);
                assert!((back.s - s).abs() < 1e-12);
                assert!((back.t - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cube_faces_tile_the_sphere() {
        let mut rng_state = 0x1234_5678_9abc_def0u64;
        let mut rand01 = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1_000_000 {
            let z = 2.0 * rand01() - 1.0;
            let theta = 2.0 * PI * rand01();
            let r = (1.0 - z * z).max(0.0).sqrt();
            let d = Direction::new(r * theta.cos(), z, r * theta.sin());
            let c = dir_to_cube(d);
            assert!(c.s.abs() <= 1.0 + 1e-12 && c.t.abs() <= 1.0 + 1e-12);
        }
    }
}
