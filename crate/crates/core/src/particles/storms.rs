use super::{move_tracer, Exit, Mover, Particle, SeedingPolicy, SpawnSites};
use crate::events::Diagnostic;
use crate::geometry::Vec2;
use crate::terrain::ObstacleField;
use crate::windsim::GridSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Storm {
    pub id: u32,
    pub pos: Vec2,
    pub spawn_step: u64,
    /// Reached the X target. Stays set until the storm respawns.
    pub hit: bool,
    #[serde(skip)]
    tracer: Option<Particle>,
}

/// Storm icons entering on the northern third of the west edge.
#[derive(Clone, Debug)]
pub struct StormSet {
    pub storms: Vec<Storm>,
    policy: SeedingPolicy,
    sites: SpawnSites,
    rng: ChaCha8Rng,
    band: (f64, f64),
}

impl StormSet {
    pub fn new(policy: &SeedingPolicy, obs: &ObstacleField) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        rng.set_stream(2);
        let ny = obs.dims().1 as f64;
        Self {
            storms: Vec::new(),
            policy: *policy,
            sites: SpawnSites::new(obs),
            rng,
            band: (ny * 2.0 / 3.0, ny),
        }
    }

    pub fn set_obstacles(&mut self, obs: &ObstacleField) {
        self.sites = SpawnSites::new(obs);
    }

    fn spawn_pos(&mut self) -> Option<Vec2> {
        self.sites.west(&mut self.rng, self.band.0, self.band.1)
    }

    fn place(&mut self, k: usize, step: u64) {
        if let Some(pos) = self.spawn_pos() {
            let s = &mut self.storms[k];
            s.pos = pos;
            s.spawn_step = step;
            s.hit = false;
            s.tracer = Some(Particle::spawn(s.id, pos));
        }
    }

    /// One frame at simulation step `step`: respawn storms that hit the
    /// target last frame, spawn a new storm every `storm_spawn_period` steps
    /// up to `n_storms`, move every storm, then check for target hits and
    /// east-edge exits. Exited storms respawn at once; hit storms keep their
    /// flag for the frame in which the hit happened and respawn on the next.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        step: u64,
        mover: &impl Mover,
        obs: &ObstacleField,
        grid: &GridSpec,
        dt: f64,
        target: Option<Vec2>,
        hit_radius: f64,
    ) -> Vec<Diagnostic> {
        let mut events = Vec::new();
        for k in 0..self.storms.len() {
            if self.storms[k].hit {
                self.place(k, step);
            }
        }
        if step.is_multiple_of(self.policy.storm_spawn_period) && self.storms.len() < self.policy.n_storms {
            let id = self.storms.len() as u32;
            self.storms.push(Storm {
                id,
                pos: Vec2::ZERO,
                spawn_step: step,
                hit: false,
                tracer: None,
            });
            self.place(self.storms.len() - 1, step);
        }

        let (max_age, slow) = (self.policy.max_age, self.policy.stagnation_speed);
        for k in 0..self.storms.len() {
            let Some(mut tracer) = self.storms[k].tracer else {
                continue;
            };
            match move_tracer(&mut tracer, mover, obs, dt, max_age, slow) {
                None => {
                    let s = &mut self.storms[k];
                    s.pos = tracer.pos;
                    s.tracer = Some(tracer);
                    if let Some(t) = target {
                        if s.pos.distance(t) <= hit_radius {
                            s.hit = true;
                            events.push(Diagnostic::StormHit {
                                step,
                                storm: s.id,
                                pos: [s.pos.x, s.pos.y],
                            });
                        }
                    }
                }
                Some(exit) => {
                    if exit == Exit::East {
                        events.push(Diagnostic::StormExit {
                            step,
                            storm: self.storms[k].id,
                            lat: grid.latitude_at(tracer.pos.y),
                        });
                    }
                    self.place(k, step);
                }
            }
        }
        events
    }
}
