//! Seeded discrete-time pedestrian world: agents walk inside a rectangular
//! active area, pair up into chats when they meet, occasionally take phone
//! calls, and export a canonical 17-joint skeleton per frame.
//!
//! Every run is a pure function of (seed, params, step count). The RNG is a
//! single seeded stream consumed in a documented order: spawn draws
//! (position attempts, then heading) per agent in id order; per step, one
//! phone roll per agent that is Walking when rolls are processed, in
//! ascending id order.
//!
//! Step phases, in order: state timers expire, mobile agents advance
//! (reflecting off the area walls), chat triggers fire for Walking pairs
//! within `chat_radius` in ascending (min id, max id) order, then phone
//! rolls. Ending a chat reverses both headings and starts a short cooldown
//! so a pair still standing within trigger range walks apart instead of
//! re-chatting forever.

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scene::{CameraPose, Scene};
use crate::sphere::{dir_to_erp, Direction};
use crate::{Error, Result};

/// Minimum pairwise spawn separation, meters.
pub const MIN_SPAWN_SEPARATION: f64 = 0.5;
/// Height of the skeleton root above the ground, meters.
pub const ROOT_HEIGHT: f64 = 0.95;
/// Number of joints in the canonical skeleton.
pub const JOINT_COUNT: usize = 17;

/// Canonical rigid skeleton: (name, offset from the agent's ground position
/// in the body frame), body frame x right / y up / z forward. Order is fixed
/// across all agents and frames.
pub const SKELETON: [(&str, [f64; 3]); JOINT_COUNT] = [
    ("root_pelvis", [0.0, ROOT_HEIGHT, 0.0]),
    ("spine", [0.0, 1.15, 0.0]),
    ("neck", [0.0, 1.40, 0.0]),
    ("head", [0.0, 1.58, 0.0]),
    ("nose", [0.0, 1.52, 0.10]),
    ("l_shoulder", [-0.20, 1.42, 0.0]),
    ("r_shoulder", [0.20, 1.42, 0.0]),
    ("l_elbow", [-0.26, 1.16, 0.0]),
    ("r_elbow", [0.26, 1.16, 0.0]),
    ("l_wrist", [-0.28, 0.92, 0.0]),
    ("r_wrist", [0.28, 0.92, 0.0]),
    ("l_hip", [-0.10, 0.92, 0.0]),
    ("r_hip", [0.10, 0.92, 0.0]),
    ("l_knee", [-0.11, 0.50, 0.0]),
    ("r_knee", [0.11, 0.50, 0.0]),
    ("l_ankle", [-0.12, 0.08, 0.0]),
    ("r_ankle", [0.12, 0.08, 0.0]),
];

/// Behavior parameters. All the trigger numbers are tunable; the defaults
/// are plausible street-walking values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PedParams {
    /// Walking speed, m/s.
    pub walk_speed: f64,
    /// Two Walking agents within this distance start chatting, meters.
    pub chat_radius: f64,
    /// Chat length, seconds.
    pub chat_duration: f64,
    /// Per-tick probability that a Walking agent starts a phone call.
    pub phone_prob_per_tick: f64,
    /// Phone call length, seconds.
    pub phone_duration: f64,
    /// Seconds after a chat during which an agent ignores chat triggers.
    pub chat_cooldown: f64,
}

impl Default for PedParams {
    fn default() -> Self {
        Self {
            walk_speed: 1.4,
            chat_radius: 1.5,
            chat_duration: 5.0,
            phone_prob_per_tick: 0.002,
            phone_duration: 10.0,
            chat_cooldown: 2.0,
        }
    }
}

/// Rectangular active area on the ground plane (x across, z along).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Rect {
    /// A width x depth rectangle centered on the origin.
    pub fn centered(width: f64, depth: f64) -> Self {
        Self {
            x_min: -0.5 * width,
            x_max: 0.5 * width,
            z_min: -0.5 * depth,
            z_max: 0.5 * depth,
        }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }
}

/// Behavioral state of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentState {
    Walking,
    Chatting { partner: u32, remaining: f64 },
    OnPhoneCall { remaining: f64 },
}

impl AgentState {
    pub fn name(&self) -> &'static str {
        match self {
            AgentState::Walking => "Walking",
            AgentState::Chatting { .. } => "Chatting",
            AgentState::OnPhoneCall { .. } => "OnPhoneCall",
        }
    }
}

/// One pedestrian. Position lives on the ground plane (y = 0); the heading
/// is the walking direction, with direction vector (sin h, 0, cos h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub x: f64,
    pub z: f64,
    pub heading: f64,
    pub speed: f64,
    pub state: AgentState,
    /// Remaining chat-trigger cooldown, seconds.
    pub cooldown: f64,
    /// Odometer: distance walked since spawn, meters.
    pub traveled: f64,
}

impl Agent {
    pub fn ground_position(&self) -> Vector3<f64> {
        Vector3::new(self.x, 0.0, self.z)
    }
}

/// Kinds of simulation events, in log ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    ChatStart,
    ChatEnd,
    PhoneStart,
    PhoneEnd,
    Spawn,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ChatStart => "ChatStart",
            EventKind::ChatEnd => "ChatEnd",
            EventKind::PhoneStart => "PhoneStart",
            EventKind::PhoneEnd => "PhoneEnd",
            EventKind::Spawn => "Spawn",
        }
    }
}

/// A logged event; pair events store the lower id first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub agent: u32,
    pub partner: Option<u32>,
}

impl SimEvent {
    pub fn log_line(&self) -> String {
        match self.partner {
            Some(p) => format!("{} {} {} {}", self.tick, self.kind.name(), self.agent, p),
            None => format!("{} {} {}", self.tick, self.kind.name(), self.agent),
        }
    }
}

/// Renders an event list as a plain-text log, one event per line.
pub fn event_log_text(events: &[SimEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.log_line());
        out.push('\n');
    }
    out
}

/// A projected skeleton joint in ERP coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectedJoint {
    pub u: f64,
    pub v: f64,
    /// Euclidean camera-to-joint distance, meters.
    pub depth: f64,
    pub visible: bool,
}

/// Ground-truth pedestrian range and bearing relative to a camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpdeGroundTruth {
    /// Euclidean camera-to-root distance, meters.
    pub distance: f64,
    /// Angle between the camera forward axis and the camera-to-root ray, degrees.
    pub angle: f64,
}

/// The seeded world: agents, clock, event log, and one RNG stream.
#[derive(Debug, Clone)]
pub struct PedestrianWorld {
    params: PedParams,
    area: Rect,
    agents: Vec<Agent>,
    rng: ChaCha8Rng,
    tick: u64,
    log: Vec<SimEvent>,
}

impl PedestrianWorld {
    /// Spawns `n_agents` Walking agents at seeded non-overlapping positions.
    pub fn spawn(seed: u64, n_agents: usize, area: Rect, params: PedParams) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::Simulation("need at least one agent".into()));
        }
        if !(area.x_max > area.x_min && area.z_max > area.z_min) {
            return Err(Error::Simulation("active area must have positive extent".into()));
        }
        if !params.walk_speed.is_finite() || params.walk_speed <= 0.0 {
            return Err(Error::Simulation("walk speed must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agents: Vec<Agent> = Vec::with_capacity(n_agents);
        let mut log = Vec::with_capacity(n_agents);
        for id in 0..n_agents as u32 {
            let mut placed = false;
            for _ in 0..1000 {
                let x = rng.gen_range(area.x_min..area.x_max);
                let z = rng.gen_range(area.z_min..area.z_max);
                let clear = agents.iter().all(|a| {
                    let (dx, dz) = (a.x - x, a.z - z);
                    (dx * dx + dz * dz).sqrt() >= MIN_SPAWN_SEPARATION
                });
                if clear {
                    let heading = rng.gen_range(0.0..std::f64::consts::TAU);
                    agents.push(Agent {
                        id,
                        x,
                        z,
                        heading,
                        speed: params.walk_speed,
                        state: AgentState::Walking,
                        cooldown: 0.0,
                        traveled: 0.0,
                    });
                    log.push(SimEvent {
                        tick: 0,
                        kind: EventKind::Spawn,
                        agent: id,
                        partner: None,
                    });
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Simulation(format!(
                    "area too small to place agent {id} with {MIN_SPAWN_SEPARATION} m separation"
                )));
            }
        }
        Ok(Self {
            params,
            area,
            agents,
            rng,
            tick: 0,
            log,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn params(&self) -> &PedParams {
        &self.params
    }

    pub fn area(&self) -> &Rect {
        &self.area
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Full event log since spawn.
    pub fn events(&self) -> &[SimEvent] {
        &self.log
    }

    /// Repositions an agent; scenario-setup helper for reproducible tests
    /// and demos.
    pub fn place_agent(&mut self, id: u32, x: f64, z: f64, heading: f64) -> Result<()> {
        if !self.area.contains(x, z) {
            return Err(Error::Simulation(format!(
                "position ({x}, {z}) is outside the active area"
            )));
        }
        let agent = self
            .agents
            .get_mut(id as usize)
            .ok_or_else(|| Error::Simulation(format!("no agent {id}")))?;
        agent.x = x;
        agent.z = z;
        agent.heading = heading;
        Ok(())
    }

    /// Advances the world by `dt` seconds and returns this tick's events,
    /// sorted by (agent id, kind).
    pub fn step(&mut self, dt: f64) -> Vec<SimEvent> {
        assert!(dt > 0.0, "step interval must be positive");
        self.tick += 1;
        let tick = self.tick;
        let mut events = Vec::new();

        // Phase 1: timers.
        for i in 0..self.agents.len() {
            match self.agents[i].state {
                AgentState::Chatting { partner, remaining } => {
                    let j = partner as usize;
                    if j < i {
                        continue; // handled when the lower id was visited
                    }
                    let left = remaining - dt;
                    if left > 1e-12 {
                        self.agents[i].state = AgentState::Chatting {
                            partner,
                            remaining: left,
                        };
                        self.agents[j].state = AgentState::Chatting {
                            partner: i as u32,
                            remaining: left,
                        };
                    } else {
                        for &k in &[i, j] {
                            let a = &mut self.agents[k];
                            a.state = AgentState::Walking;
                            a.speed = self.params.walk_speed;
                            a.heading = wrap_angle(a.heading + std::f64::consts::PI);
                            a.cooldown = self.params.chat_cooldown;
                        }
                        events.push(SimEvent {
                            tick,
                            kind: EventKind::ChatEnd,
                            agent: i as u32,
                            partner: Some(partner),
                        });
                    }
                }
                AgentState::OnPhoneCall { remaining } => {
                    let left = remaining - dt;
                    if left > 1e-12 {
                        self.agents[i].state = AgentState::OnPhoneCall { remaining: left };
                    } else {
                        let a = &mut self.agents[i];
                        a.state = AgentState::Walking;
                        a.speed = self.params.walk_speed;
                        events.push(SimEvent {
                            tick,
                            kind: EventKind::PhoneEnd,
                            agent: i as u32,
                            partner: None,
                        });
                    }
                }
                AgentState::Walking => {}
            }
            let a = &mut self.agents[i];
            a.cooldown = (a.cooldown - dt).max(0.0);
        }

        // Phase 2: movement with wall reflection (chatting agents stand still).
        for agent in &mut self.agents {
            if matches!(agent.state, AgentState::Chatting { .. }) {
                continue;
            }
            let dist = agent.speed * dt;
            agent.traveled += dist;
            let mut x = agent.x + dist * agent.heading.sin();
            let mut z = agent.z + dist * agent.heading.cos();
            for _ in 0..64 {
                let mut bounced = false;
                if x < self.area.x_min {
                    x = 2.0 * self.area.x_min - x;
                    agent.heading = wrap_angle(-agent.heading);
                    bounced = true;
                } else if x > self.area.x_max {
                    x = 2.0 * self.area.x_max - x;
                    agent.heading = wrap_angle(-agent.heading);
                    bounced = true;
                }
                if z < self.area.z_min {
                    z = 2.0 * self.area.z_min - z;
                    agent.heading = wrap_angle(std::f64::consts::PI - agent.heading);
                    bounced = true;
                } else if z > self.area.z_max {
                    z = 2.0 * self.area.z_max - z;
                    agent.heading = wrap_angle(std::f64::consts::PI - agent.heading);
                    bounced = true;
                }
                if !bounced {
                    break;
                }
            }
            agent.x = x;
            agent.z = z;
        }

        // Phase 3: chat triggers over Walking pairs, ascending (min, max).
        let radius2 = self.params.chat_radius * self.params.chat_radius;
        for i in 0..self.agents.len() {
            for j in (i + 1)..self.agents.len() {
                let (ai, aj) = (&self.agents[i], &self.agents[j]);
                if ai.state != AgentState::Walking || aj.state != AgentState::Walking {
                    continue;
                }
                if ai.cooldown > 0.0 || aj.cooldown > 0.0 {
                    continue;
                }
                let (dx, dz) = (aj.x - ai.x, aj.z - ai.z);
                if dx * dx + dz * dz > radius2 {
                    continue;
                }
                let face = dx.atan2(dz);
                {
                    let a = &mut self.agents[i];
                    a.state = AgentState::Chatting {
                        partner: j as u32,
                        remaining: self.params.chat_duration,
                    };
                    a.speed = 0.0;
                    a.heading = wrap_angle(face);
                }
                {
                    let a = &mut self.agents[j];
                    a.state = AgentState::Chatting {
                        partner: i as u32,
                        remaining: self.params.chat_duration,
                    };
                    a.speed = 0.0;
                    a.heading = wrap_angle(face + std::f64::consts::PI);
                }
                events.push(SimEvent {
                    tick,
                    kind: EventKind::ChatStart,
                    agent: i as u32,
                    partner: Some(j as u32),
                });
            }
        }

        // Phase 4: phone rolls, one RNG draw per Walking agent in id order.
        for i in 0..self.agents.len() {
            if self.agents[i].state != AgentState::Walking {
                continue;
            }
            let roll: f64 = self.rng.gen();
            if roll < self.params.phone_prob_per_tick {
                let a = &mut self.agents[i];
                a.state = AgentState::OnPhoneCall {
                    remaining: self.params.phone_duration,
                };
                a.speed = 0.5 * self.params.walk_speed;
                events.push(SimEvent {
                    tick,
                    kind: EventKind::PhoneStart,
                    agent: i as u32,
                    partner: None,
                });
            }
        }

        events.sort_by_key(|e| (e.agent, e.kind, e.partner));
        self.log.extend(events.iter().copied());
        events
    }

    /// World-frame positions of every agent's joints, in skeleton order.
    pub fn export_keypoints(&self) -> Vec<Vec<(&'static str, Vector3<f64>)>> {
        self.agents
            .iter()
            .map(|agent| {
                let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), agent.heading);
                SKELETON
                    .iter()
                    .map(|(name, offset)| {
                        (*name, agent.ground_position() + rot * Vector3::from(*offset))
                    })
                    .collect()
            })
            .collect()
    }

    /// Projects every joint into ERP coordinates as seen from `cam`.
    /// Visibility is tested against `scene` primitives when given; agents do
    /// not occlude each other.
    pub fn project_keypoints(
        &self,
        cam: &CameraPose,
        scene: Option<&Scene>,
    ) -> Vec<Vec<ProjectedJoint>> {
        let cam_pos = cam.position_vec();
        let rot_inv = cam.rotation().inverse();
        self.export_keypoints()
            .iter()
            .map(|joints| {
                joints
                    .iter()
                    .map(|(_, world)| {
                        let offset = world - cam_pos;
                        let depth = offset.norm();
                        if depth < 1e-12 {
                            return ProjectedJoint {
                                u: 0.5,
                                v: 0.5,
                                depth: 0.0,
                                visible: false,
                            };
                        }
                        let ray = offset / depth;
                        let erp = dir_to_erp(Direction::from_vector(rot_inv * ray));
                        let visible = match scene {
                            Some(scene) => scene
                                .intersect(&cam_pos, &ray)
                                .is_none_or(|hit| hit.distance >= depth - 1e-9),
                            None => true,
                        };
                        ProjectedJoint {
                            u: erp.u,
                            v: erp.v,
                            depth,
                            visible,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Per-agent Euclidean distance and angular position of the skeleton
    /// root relative to the camera.
    pub fn mpde_ground_truth(&self, cam: &CameraPose) -> Vec<MpdeGroundTruth> {
        let cam_pos = cam.position_vec();
        let forward = cam.forward();
        self.agents
            .iter()
            .map(|agent| {
                let root = agent.ground_position() + Vector3::new(0.0, ROOT_HEIGHT, 0.0);
                let offset = root - cam_pos;
                let distance = offset.norm();
                let cos = (forward.dot(&offset) / distance).clamp(-1.0, 1.0);
                MpdeGroundTruth {
                    distance,
                    angle: cos.acos().to_degrees(),
                }
            })
            .collect()
    }

    /// Full per-frame export: camera, agent states, world joints, ERP
    /// projections, and MPDE ground truth.
    pub fn export_frame(&self, cam: &CameraPose, scene: Option<&Scene>) -> FrameExport {
        let joints = self.export_keypoints();
        let erp = self.project_keypoints(cam, scene);
        let gt = self.mpde_ground_truth(cam);
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, agent)| AgentExport {
                id: agent.id,
                state: agent.state.name().to_string(),
                joints: joints[i]
                    .iter()
                    .map(|(name, p)| JointExport {
                        name: name.to_string(),
                        x: p.x,
                        y: p.y,
                        z: p.z,
                    })
                    .collect(),
                erp: erp[i].clone(),
                gt: gt[i],
            })
            .collect();
        FrameExport {
            tick: self.tick,
            camera: *cam,
            agents,
        }
    }
}

fn wrap_angle(h: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = h % tau;
    if w < 0.0 {
        w + tau
    } else {
        w
    }
}

/// Per-frame keypoint export, serialized with the fixed field names
/// `{tick, camera, agents:[{id, state, joints, erp, gt}]}`.
#[derive(Debug, Clone, Serialize)]
pub struct FrameExport {
    pub tick: u64,
    pub camera: CameraPose,
    pub agents: Vec<AgentExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentExport {
    pub id: u32,
    pub state: String,
    pub joints: Vec<JointExport>,
    pub erp: Vec<ProjectedJoint>,
    pub gt: MpdeGroundTruth,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointExport {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}
