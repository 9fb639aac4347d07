use crate::fv::InitialData;
use std::f64::consts::PI;

/// Initial data of a run. In experiment mode the inflow boundary value is
/// the `x = 0` trace of the same data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `S₀(x, z) = g(x)·S_in(z)` with `g(x) = (1−x)²/(k x² + (1−x)²)` and
    /// `S_in = plateau` on `(1/4, 3/4]`, zero elsewhere.
    Slab { plateau: f64, steepness: f64 },
    /// `S₀ ≡ c`, inflow `c`.
    Constant(f64),
    /// `a·sin(πx)·sin(πz)`; vanishes on the boundary, for analysis runs.
    Bump { amplitude: f64 },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Slab { plateau: 0.9, steepness: 1e5 }
    }
}

/// Injection profile: `plateau` on `(1/4, 3/4]`, zero elsewhere.
pub fn slab_profile(z: f64, plateau: f64) -> f64 {
    if z > 0.25 && z <= 0.75 {
        plateau
    } else {
        0.0
    }
}

/// Sharp decay from 1 at `x = 0` to 0 at `x = 1`.
pub fn decay_profile(x: f64, steepness: f64) -> f64 {
    let r = (1.0 - x) * (1.0 - x);
    r / (steepness * x * x + r)
}

impl InitialCondition {
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        match *self {
            InitialCondition::Slab { plateau, steepness } => decay_profile(x, steepness) * slab_profile(z, plateau),
            InitialCondition::Constant(c) => c,
            InitialCondition::Bump { amplitude } => amplitude * (PI * x).sin() * (PI * z).sin(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Slab { .. } => "slab",
            InitialCondition::Constant(_) => "constant",
            InitialCondition::Bump { .. } => "bump",
        }
    }

    /// Every value the data can take lies in `[0, 1]`.
    pub fn is_admissible(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match *self {
            InitialCondition::Slab { plateau, steepness } => unit(plateau) && steepness > 0.0 && steepness.is_finite(),
            InitialCondition::Constant(c) => unit(c),
            InitialCondition::Bump { amplitude } => unit(amplitude),
        }
    }
}

impl InitialData for InitialCondition {
    fn saturation(&self, x: f64, z: f64) -> f64 {
        self.eval(x, z)
    }

    fn inflow(&self, z: f64) -> f64 {
        self.eval(0.0, z)
    }

    fn plateau(&self) -> f64 {
        match *self {
            InitialCondition::Slab { plateau, .. } => plateau,
            InitialCondition::Constant(c) => c,
            InitialCondition::Bump { amplitude } => amplitude,
        }
    }
}
