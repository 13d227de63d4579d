//! Analytic CPU scene renderer: casts rays against plane/sphere/box
//! primitives to produce per-face RGB, z-depth, semantic and entity rasters,
//! and (as an independent reference path) direct per-pixel ERP ground truth.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::raster::Raster;
use crate::sphere::{cube_to_dir, erp_to_dir, CubeCoord, ErpCoord, Face};
use crate::stitch::ErpFrame;
use crate::{Error, Result};

/// Semantic id written where no primitive is hit.
pub const SKY_SEMANTIC_ID: u8 = 255;
/// Entity id written where no primitive is hit; scene entities start at 1.
pub const SKY_ENTITY_ID: u32 = 0;
/// Depth sentinel for sky pixels.
pub const SKY_DEPTH: f64 = f64::INFINITY;
/// Exclusive upper bound on entity ids (24-bit RGB packing).
pub const ENTITY_ID_LIMIT: u32 = 1 << 24;

const RAY_EPS: f64 = 1e-9;

/// Axis-aligned box, also used as a spatial bound for route generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn diagonal(&self) -> f64 {
        let d = [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

/// Geometric support of a scene primitive, all lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Points p with dot(normal, p) = offset.
    Plane { normal: [f64; 3], offset: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    AxisBox { min: [f64; 3], max: [f64; 3] },
}

/// One renderable object: a shape with flat albedo and label ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePrimitive {
    pub shape: Shape,
    pub albedo: [u8; 3],
    pub semantic_id: u8,
    pub entity_id: u32,
}

/// A validated set of primitives.
#[derive(Debug, Clone)]
pub struct Scene {
    primitives: Vec<ScenePrimitive>,
}

impl Scene {
    /// Validates and wraps a primitive list. Rejects empty scenes, degenerate
    /// shapes, out-of-range ids, and duplicate entity ids (0 is reserved for
    /// sky).
    pub fn new(primitives: Vec<ScenePrimitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::InvalidScene("scene has no primitives".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, prim) in primitives.iter().enumerate() {
            match &prim.shape {
                Shape::Plane { normal, .. } => {
                    let n = Vector3::from(*normal);
                    if n.norm() <= 0.0 || !n.norm().is_finite() {
                        return Err(Error::InvalidScene(format!(
                            "primitive {i}: plane normal must be non-zero and finite"
                        )));
                    }
                }
                Shape::Sphere { radius, .. } => {
                    if !radius.is_finite() || *radius <= 0.0 {
                        return Err(Error::InvalidScene(format!(
                            "primitive {i}: sphere radius must be > 0, got {radius}"
                        )));
                    }
                }
                Shape::AxisBox { min, max } => {
                    if !(0..3).all(|a| min[a] < max[a]) {
                        return Err(Error::InvalidScene(format!(
                            "primitive {i}: box min must be < max componentwise"
                        )));
                    }
                }
            }
            if prim.entity_id == SKY_ENTITY_ID || prim.entity_id >= ENTITY_ID_LIMIT {
                return Err(Error::InvalidScene(format!(
                    "primitive {i}: entity id {} outside [1, 2^24)",
                    prim.entity_id
                )));
            }
            if !seen.insert(prim.entity_id) {
                return Err(Error::InvalidScene(format!(
                    "primitive {i}: duplicate entity id {}",
                    prim.entity_id
                )));
            }
        }
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> &[ScenePrimitive] {
        &self.primitives
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let prims: Vec<ScenePrimitive> = serde_json::from_str(text)?;
        Self::new(prims)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.primitives).expect("scene serialization")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    /// Nearest positive intersection of the unit-direction ray, if any.
    /// The returned distance is Euclidean along the ray.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (index, prim) in self.primitives.iter().enumerate() {
            if let Some(t) = intersect_shape(&prim.shape, origin, dir) {
                if best.as_ref().is_none_or(|b| t < b.distance) {
                    best = Some(Hit {
                        distance: t,
                        primitive: index,
                    });
                }
            }
        }
        best
    }
}

/// A ray/primitive intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Euclidean distance from the ray origin (the slant range).
    pub distance: f64,
    /// Index into [`Scene::primitives`].
    pub primitive: usize,
}

fn intersect_shape(shape: &Shape, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    match shape {
        Shape::Plane { normal, offset } => {
            let n = Vector3::from(*normal);
            let denom = n.dot(dir);
            if denom.abs() < 1e-300 {
                return None;
            }
            let t = (offset - n.dot(origin)) / denom;
            (t > RAY_EPS).then_some(t)
        }
        Shape::Sphere { center, radius } => {
            let oc = origin - Vector3::from(*center);
            let b = oc.dot(dir);
            let c = oc.dot(&oc) - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t0 = -b - sq;
            if t0 > RAY_EPS {
                return Some(t0);
            }
            let t1 = -b + sq;
            (t1 > RAY_EPS).then_some(t1)
        }
        Shape::AxisBox { min, max } => {
            let mut t_enter = f64::NEG_INFINITY;
            let mut t_exit = f64::INFINITY;
            for a in 0..3 {
                if dir[a].abs() < 1e-300 {
                    if origin[a] < min[a] || origin[a] > max[a] {
                        return None;
                    }
                    continue;
                }
                let inv = 1.0 / dir[a];
                let (mut t0, mut t1) = ((min[a] - origin[a]) * inv, (max[a] - origin[a]) * inv);
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
                if t_enter > t_exit {
                    return None;
                }
            }
            if t_enter > RAY_EPS {
                Some(t_enter)
            } else {
                (t_exit > RAY_EPS).then_some(t_exit)
            }
        }
    }
}

/// Camera position and yaw/pitch/roll rotation, angles in degrees.
///
/// The rotation applies yaw about world-up, then pitch about the camera's
/// right axis, then roll about the camera's forward axis; positive pitch
/// tilts the view down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            position: [0.0; 3],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    pub fn new(position: [f64; 3], yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            position,
            yaw,
            pitch,
            roll,
        }
    }

    pub fn position_vec(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    /// World-from-camera rotation: R_y(yaw) * R_x(pitch) * R_z(roll).
    pub fn rotation(&self) -> Rotation3<f64> {
        let yaw = self.yaw.to_radians();
        let pitch = self.pitch.to_radians();
        let roll = self.roll.to_radians();
        Rotation3::from_axis_angle(&Vector3::y_axis(), yaw)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), pitch)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), roll)
    }

    /// The camera forward axis (+z of the camera frame) in world coordinates.
    /// Positive pitch tilts it below the horizon.
    pub fn forward(&self) -> Vector3<f64> {
        // R_x(pitch) sends +z toward -y for positive pitch.
        let r = self.rotation();
        r * Vector3::new(0.0, 0.0, 1.0)
    }
}

/// The four aligned rasters of one cube face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceLayers {
    pub rgb: Raster<[u8; 3]>,
    /// Hit distance projected on the face optical axis (z-depth), meters;
    /// sky pixels hold `SKY_DEPTH`.
    pub zdepth: Raster<f64>,
    pub semantic: Raster<u8>,
    pub entity: Raster<u32>,
}

impl FaceLayers {
    fn sky(resolution: usize) -> Self {
        Self {
            rgb: Raster::filled(resolution, resolution, [0u8; 3]),
            zdepth: Raster::filled(resolution, resolution, SKY_DEPTH),
            semantic: Raster::filled(resolution, resolution, SKY_SEMANTIC_ID),
            entity: Raster::filled(resolution, resolution, SKY_ENTITY_ID),
        }
    }
}

/// Six identically calibrated square faces sharing one camera pose.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFaceSet {
    pub pose: CameraPose,
    resolution: usize,
    faces: Vec<FaceLayers>,
}

impl CubeFaceSet {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn face(&self, face: Face) -> &FaceLayers {
        &self.faces[face.index()]
    }
}

/// Renders the scene into six cube faces. Depth is stored as z-depth along
/// each face's optical axis, not slant range.
pub fn render_cube(scene: &Scene, pose: &CameraPose, resolution: usize) -> Result<CubeFaceSet> {
    if resolution < 2 {
        return Err(Error::InvalidScene(format!(
            "cube resolution must be >= 2, got {resolution}"
        )));
    }
    let rot = pose.rotation();
    let origin = pose.position_vec();
    let mut faces = Vec::with_capacity(6);
    for face in Face::ALL {
        let mut layers = FaceLayers::sky(resolution);
        for j in 0..resolution {
            for i in 0..resolution {
                let cc = CubeCoord::from_pixel(face, i, j, resolution);
                let local = cube_to_dir(cc).as_vector();
                let world = rot * local;
                if let Some(hit) = scene.intersect(&origin, &world) {
                    let prim = &scene.primitives()[hit.primitive];
                    // Unit ray's optical-axis component is 1/sqrt(1+s^2+t^2).
                    let slant_factor = (1.0 + cc.s * cc.s + cc.t * cc.t).sqrt();
                    layers.zdepth.set(i, j, hit.distance / slant_factor);
                    layers.rgb.set(i, j, prim.albedo);
                    layers.semantic.set(i, j, prim.semantic_id);
                    layers.entity.set(i, j, prim.entity_id);
                }
            }
        }
        faces.push(layers);
    }
    Ok(CubeFaceSet {
        pose: *pose,
        resolution,
        faces,
    })
}

/// Renders the scene directly into an ERP frame by casting one ray per ERP
/// pixel. Depth is the Euclidean slant range. This path never touches the
/// cube faces, so it can serve as an independent reference for the stitcher.
pub fn render_erp_direct(scene: &Scene, pose: &CameraPose, erp_height: usize) -> Result<ErpFrame> {
    if erp_height < 2 {
        return Err(Error::InvalidScene(format!(
            "ERP height must be >= 2, got {erp_height}"
        )));
    }
    let width = 2 * erp_height;
    let rot = pose.rotation();
    let origin = pose.position_vec();
    let mut frame = ErpFrame::sky(*pose, erp_height);
    for j in 0..erp_height {
        for i in 0..width {
            let dir = erp_to_dir(ErpCoord::from_pixel(i, j, width, erp_height));
            let world = rot * dir.as_vector();
            if let Some(hit) = scene.intersect(&origin, &world) {
                let prim = &scene.primitives()[hit.primitive];
                frame.depth.set(i, j, hit.distance);
                frame.rgb.set(i, j, prim.albedo);
                frame.semantic.set(i, j, prim.semantic_id);
                frame.entity.set(i, j, prim.entity_id);
            }
        }
    }
    Ok(frame)
}
