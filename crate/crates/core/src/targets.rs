//! Analytic targets, their exact controls `z = -Laplace(u)`, and the
//! constraint presets used in the reference experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::field::{constant, field, Field};

/// Default steepness of the logistic plateau target.
pub const DEFAULT_K: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `sin(pi x) sin(pi y)`
    U1,
    /// `H_k(x) H_k(y)`, a smoothed indicator of `[0.25, 0.75]^2`.
    U2 { k: f64 },
    /// Indicator of the closed square `[0.25, 0.75]^2`.
    U3,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::U1 => "u1",
            Target::U2 { .. } => "u2",
            Target::U3 => "u3",
        }
    }

    pub fn parse(name: &str, k: f64) -> Result<Self> {
        match name {
            "u1" => Ok(Target::U1),
            "u2" => Ok(Target::U2 { k }),
            "u3" => Ok(Target::U3),
            other => Err(invalid(format!("unknown target '{other}' (expected u1, u2 or u3)"))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        eval_target(*self, x, y)
    }

    pub fn as_field(&self) -> Field {
        let t = *self;
        field(move |x, y| eval_target(t, x, y))
    }

    /// Gradient of the target, where it exists classically.
    pub fn gradient(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        match *self {
            Target::U1 => Some([
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ]),
            Target::U2 { k } => Some([plateau_d1(k, x) * plateau(k, y), plateau(k, x) * plateau_d1(k, y)]),
            Target::U3 => None,
        }
    }

    /// The exact control belonging to this target, if it is a function.
    pub fn exact_control(&self) -> Result<Field> {
        let kind = match *self {
            Target::U1 => ControlKind::Z1,
            Target::U2 { k } => ControlKind::Z2 { k },
            Target::U3 => ControlKind::Z3,
        };
        eval_exact_control(kind, 0.5, 0.5)?;
        Ok(field(move |x, y| eval_exact_control(kind, x, y).unwrap_or(f64::NAN)))
    }

    /// Quadrature subdivisions needed to resolve the target: the steep layer
    /// of `u2` and the jump of `u3` need refinement inside each element.
    pub fn default_subdivisions(&self) -> usize {
        match self {
            Target::U1 => 1,
            Target::U2 { .. } | Target::U3 => 4,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::U2 { k } => write!(f, "u2(k={k})"),
            t => f.write_str(t.name()),
        }
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `H_k(s) = sigma(k(s - 1/4)) - sigma(k(s - 3/4))`
pub fn plateau(k: f64, s: f64) -> f64 {
    logistic(k * (s - 0.25)) - logistic(k * (s - 0.75))
}

pub fn plateau_d1(k: f64, s: f64) -> f64 {
    let d = |t: f64| {
        let g = logistic(t);
        k * g * (1.0 - g)
    };
    d(k * (s - 0.25)) - d(k * (s - 0.75))
}

pub fn plateau_d2(k: f64, s: f64) -> f64 {
    let d = |t: f64| {
        let g = logistic(t);
        k * k * g * (1.0 - g) * (1.0 - 2.0 * g)
    };
    d(k * (s - 0.25)) - d(k * (s - 0.75))
}

pub fn eval_target(target: Target, x: f64, y: f64) -> f64 {
    match target {
        Target::U1 => (PI * x).sin() * (PI * y).sin(),
        Target::U2 { k } => plateau(k, x) * plateau(k, y),
        Target::U3 => {
            let inside = |s: f64| (0.25..=0.75).contains(&s);
            if inside(x) && inside(y) {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlKind {
    Z1,
    Z2 {
        k: f64,
    },
    /// Only a distribution; has no pointwise values.
    Z3,
}

pub fn eval_exact_control(kind: ControlKind, x: f64, y: f64) -> Result<f64> {
    match kind {
        ControlKind::Z1 => Ok(2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()),
        ControlKind::Z2 { k } => Ok(-(plateau_d2(k, x) * plateau(k, y) + plateau(k, x) * plateau_d2(k, y))),
        ControlKind::Z3 => Err(Error::Unsupported(
            "the control of the discontinuous target exists only as a distribution".into(),
        )),
    }
}

/// Named constraint presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    G1,
    G2,
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::G1 => "g1",
            Preset::G2 => "g2",
            Preset::F1 => "f1",
            Preset::F2 => "f2",
            Preset::F3 => "f3",
            Preset::F4 => "f4",
            Preset::F5 => "f5",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "g1" => Preset::G1,
            "g2" => Preset::G2,
            "f1" => Preset::F1,
            "f2" => Preset::F2,
            "f3" => Preset::F3,
            "f4" => Preset::F4,
            "f5" => Preset::F5,
            other => return Err(invalid(format!("unknown constraint preset '{other}'"))),
        })
    }
}

/// Which constraint set the problem is posed on.
#[derive(Clone)]
pub enum ConstraintSpec {
    None,
    /// Pointwise bounds `lower <= u <= upper` on the state.
    State {
        lower: Field,
        upper: Field,
    },
    /// Weak bounds `<lower, v> <= <grad u, grad v> <= <upper, v>` for all
    /// non-negative test functions `v`.
    Control {
        lower: Field,
        upper: Field,
    },
}

impl ConstraintSpec {
    pub fn mode(&self) -> &'static str {
        match self {
            ConstraintSpec::None => "none",
            ConstraintSpec::State { .. } => "state",
            ConstraintSpec::Control { .. } => "control",
        }
    }

    /// Bounds so wide that no constraint can become active.
    pub fn inactive_state() -> Self {
        ConstraintSpec::State {
            lower: constant(-1e9),
            upper: constant(1e9),
        }
    }

    pub fn inactive_control() -> Self {
        ConstraintSpec::Control {
            lower: constant(-1e9),
            upper: constant(1e9),
        }
    }
}

impl fmt::Debug for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mode())
    }
}

/// The preset bound pair as functions of `x`. `k` is the steepness of the
/// plateau target entering `g2` and `f3`-`f5`.
pub fn preset_constraints(preset: Preset, k: f64) -> ConstraintSpec {
    let u1 = |x: f64, y: f64| eval_target(Target::U1, x, y);
    let u2 = move |x: f64, y: f64| eval_target(Target::U2 { k }, x, y);
    let z1 = |x: f64, y: f64| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
    let z2 = move |x: f64, y: f64| -(plateau_d2(k, x) * plateau(k, y) + plateau(k, x) * plateau_d2(k, y));
    let zero = constant(0.0);
    match preset {
        Preset::G1 => ConstraintSpec::State {
            lower: zero,
            upper: field(move |x, y| 0.5 * u1(x, y)),
        },
        Preset::G2 => ConstraintSpec::State {
            lower: zero,
            upper: field(move |x, y| 0.5 * u2(x, y)),
        },
        Preset::F1 => ConstraintSpec::Control {
            lower: zero,
            upper: field(move |x, y| 0.5 * z1(x, y)),
        },
        Preset::F2 => ConstraintSpec::Control {
            lower: zero,
            upper: field(move |x, y| z1(x, y).min(10.0)),
        },
        Preset::F3 => ConstraintSpec::Control {
            lower: field(move |x, y| z2(x, y).min(0.0).max(-500.0)),
            upper: field(move |x, y| z2(x, y).max(0.0).min(500.0)),
        },
        Preset::F4 => ConstraintSpec::Control {
            lower: zero,
            upper: field(move |x, y| z2(x, y).max(0.0).min(1000.0)),
        },
        Preset::F5 => ConstraintSpec::Control {
            lower: zero,
            upper: field(move |x, y| 4.0 * z2(x, y).max(0.0).min(250.0)),
        },
    }
}
