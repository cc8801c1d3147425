//! Scalar fields on the unit square.

use std::sync::Arc;

/// Anything that can be evaluated pointwise on the domain.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// Shared, type-erased field.
pub type Field = Arc<dyn ScalarField>;

pub fn field<F>(f: F) -> Field
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

pub fn constant(c: f64) -> Field {
    field(move |_, _| c)
}
