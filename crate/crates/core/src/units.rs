//! Physical constants (SI).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of a rubidium-87 atom, kg.
pub const RB87_MASS: f64 = 86.909_180_527 * AMU;

pub const PI: f64 = core::f64::consts::PI;
pub const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
