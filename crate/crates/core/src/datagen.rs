//! Synthetic sequences with known temporal structure.
//!
//! * [`generate_robot_walk`]: a robot on a rectangular board taking a uniformly
//!   random step each tick. The next position is a deterministic function of
//!   the current position and action, so the relation is p-causal.
//! * [`generate_periodic`]: a single counter cycling modulo a period, equally
//!   predictable forwards and backwards.
//! * [`generate_uniform_noise`]: a class attribute unrelated to anything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Attribute, EventSequence, Schema, Value};
use crate::error::{Error, Result};

pub const ACTIONS: [&str; 4] = ["L", "R", "U", "D"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotWorldConfig {
    pub width: u32,
    pub height: u32,
    pub steps: usize,
    pub seed: u64,
}

impl Default for RobotWorldConfig {
    fn default() -> Self {
        RobotWorldConfig {
            width: 8,
            height: 8,
            steps: 3000,
            seed: 42,
        }
    }
}

impl RobotWorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "robot world needs width, height and steps >= 1 (got {}x{}, {} steps)",
                self.width, self.height, self.steps
            )));
        }
        Ok(())
    }
}

/// Applies one action to a 1-indexed position. Moves off the board leave the
/// position unchanged.
pub fn robot_step(width: u32, height: u32, x: u32, y: u32, action: &str) -> (u32, u32) {
    match action {
        "L" if x > 1 => (x - 1, y),
        "R" if x < width => (x + 1, y),
        "U" if y > 1 => (x, y - 1),
        "D" if y < height => (x, y + 1),
        _ => (x, y),
    }
}

fn numbered_domain(count: u32, from: u32) -> Vec<String> {
    (from..from + count).map(|v| v.to_string()).collect()
}

/// Emits records `(x, y, a)`: the position before the move and the action
/// chosen at that tick.
pub fn generate_robot_walk(cfg: &RobotWorldConfig) -> Result<EventSequence> {
    cfg.validate()?;
    let schema = Schema::new(vec![
        Attribute::discrete("x", numbered_domain(cfg.width, 1)),
        Attribute::discrete("y", numbered_domain(cfg.height, 1)),
        Attribute::discrete("a", ACTIONS.iter().map(|s| s.to_string()).collect()),
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = rng.gen_range(1..=cfg.width);
    let mut y = rng.gen_range(1..=cfg.height);
    let mut records = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let action = rng.gen_range(0..ACTIONS.len());
        records.push(vec![
            Value::Sym(x - 1),
            Value::Sym(y - 1),
            Value::Sym(action as u32),
        ]);
        (x, y) = robot_step(cfg.width, cfg.height, x, y, ACTIONS[action]);
    }
    EventSequence::new(schema, records)
}

/// A single discrete attribute `x` cycling `0, 1, .., period - 1, 0, ..`.
pub fn generate_periodic(period: usize, steps: usize) -> Result<EventSequence> {
    if period < 2 || steps < period {
        return Err(Error::InvalidParameter(format!(
            "periodic series needs period >= 2 and steps >= period (got {period}, {steps})"
        )));
    }
    let schema = Schema::new(vec![Attribute::discrete(
        "x",
        numbered_domain(period as u32, 0),
    )])?;
    let records = (0..steps)
        .map(|i| vec![Value::Sym((i % period) as u32)])
        .collect();
    EventSequence::new(schema, records)
}

/// `noise_attributes` uniform attributes `n1..` plus a class attribute `c`,
/// all drawn independently.
pub fn generate_uniform_noise(
    classes: usize,
    noise_attributes: usize,
    steps: usize,
    seed: u64,
) -> Result<EventSequence> {
    if classes < 2 || steps == 0 {
        return Err(Error::InvalidParameter(
            "noise needs >= 2 classes and >= 1 step".into(),
        ));
    }
    let levels = 4u32;
    let mut attributes: Vec<Attribute> = (1..=noise_attributes)
        .map(|i| Attribute::discrete(format!("n{i}"), numbered_domain(levels, 0)))
        .collect();
    attributes.push(Attribute::discrete(
        "c",
        (0..classes).map(|i| format!("c{i}")).collect(),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..steps)
        .map(|_| {
            let mut rec: Vec<Value> = (0..noise_attributes)
                .map(|_| Value::Sym(rng.gen_range(0..levels)))
                .collect();
            rec.push(Value::Sym(rng.gen_range(0..classes as u32)));
            rec
        })
        .collect();
    EventSequence::new(Schema::new(attributes)?, records)
}

/// Everything needed to regenerate a synthetic file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum Manifest {
    Robot(RobotWorldConfig),
    Periodic {
        period: usize,
        steps: usize,
    },
    Noise {
        classes: usize,
        noise_attributes: usize,
        steps: usize,
        seed: u64,
    },
}

impl Manifest {
    pub fn generate(&self) -> Result<EventSequence> {
        match self {
            Manifest::Robot(cfg) => generate_robot_walk(cfg),
            Manifest::Periodic { period, steps } => generate_periodic(*period, *steps),
            Manifest::Noise {
                classes,
                noise_attributes,
                steps,
                seed,
            } => generate_uniform_noise(*classes, *noise_attributes, *steps, *seed),
        }
    }
}
