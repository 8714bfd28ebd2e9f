//! Momentum recursions shared by every optimizer variant.
//!
//! `momentum_update` is the plain exponential average; `storm_update` adds the
//! recursive correction `(1 - beta)(g(x_t; xi) - g(x_{t-1}; xi))`, which
//! requires both gradients to be evaluated on the same sample. The sampling
//! API hands out such pairs as [`crate::problems::PairedGrad`].

use serde::{Deserialize, Serialize};

use crate::error::{LionError, Result};
use crate::vecops::Vector;

/// A momentum estimator together with its decay parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    pub m: Vector,
    pub beta: f64,
}

impl MomentumState {
    pub fn new(m: Vector, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { m, beta })
    }

    pub fn update(&mut self, g: &Vector) -> Result<()> {
        self.m = momentum_update(&self.m, g, self.beta)?;
        Ok(())
    }

    pub fn update_storm(&mut self, g_curr: &Vector, g_prev: &Vector) -> Result<()> {
        self.m = storm_update(&self.m, g_curr, g_prev, self.beta)?;
        Ok(())
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(LionError::InvalidParameter(format!(
            "momentum parameter must lie in (0, 1], got {beta}"
        )))
    }
}

fn check_dims(a: &Vector, b: &Vector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(LionError::Shape {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// `(1 - beta) * m_prev + beta * g`.
pub fn momentum_update(m_prev: &Vector, g: &Vector, beta: f64) -> Result<Vector> {
    check_beta(beta)?;
    Vector::axpby(1.0 - beta, m_prev, beta, g)
}

/// `(1 - beta) * m_prev + beta * g_curr + (1 - beta) * (g_curr - g_prev)`,
/// summed left to right per coordinate.
pub fn storm_update(
    m_prev: &Vector,
    g_curr: &Vector,
    g_prev: &Vector,
    beta: f64,
) -> Result<Vector> {
    check_beta(beta)?;
    check_dims(m_prev, g_curr)?;
    check_dims(m_prev, g_prev)?;
    let keep = 1.0 - beta;
    let out = m_prev
        .as_slice()
        .iter()
        .zip(g_curr.as_slice())
        .zip(g_prev.as_slice())
        .map(|((&m, &gc), &gp)| keep * m + beta * gc + keep * (gc - gp))
        .collect();
    Ok(Vector::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn momentum_examples() {
        assert_eq!(
            momentum_update(&v(&[9.0, -9.0]), &v(&[3.0, 4.0]), 1.0).unwrap(),
            v(&[3.0, 4.0])
        );
        assert_eq!(
            momentum_update(&v(&[2.0, 0.0]), &v(&[4.0, 2.0]), 0.5).unwrap(),
            v(&[3.0, 1.0])
        );
        let m = v(&[1.0, -2.0]);
        let out = momentum_update(&m, &v(&[100.0, 100.0]), 1e-9).unwrap();
        for k in 0..2 {
            assert!(((out[k] - m[k]) / m[k]).abs() <= 1e-6);
        }
        let out = momentum_update(&m, &v(&[1.5, -2.5]), 1e-9).unwrap();
        for k in 0..2 {
            assert!(((out[k] - m[k]) / m[k]).abs() <= 1e-8);
        }
    }

    #[test]
    fn beta_outside_range_rejected() {
        let m = v(&[1.0]);
        assert!(momentum_update(&m, &m, 0.0).is_err());
        assert!(momentum_update(&m, &m, 1.5).is_err());
        assert!(storm_update(&m, &m, &m, -0.1).is_err());
        assert!(MomentumState::new(m, 0.0).is_err());
    }

    #[test]
    fn storm_examples() {
        assert_eq!(
            storm_update(&v(&[0.0]), &v(&[2.0]), &v(&[1.0]), 0.5).unwrap(),
            v(&[1.5])
        );
        assert_eq!(
            storm_update(&v(&[7.0, 7.0]), &v(&[1.0, 2.0]), &v(&[-3.0, 5.0]), 1.0).unwrap(),
            v(&[1.0, 2.0])
        );
    }

    #[test]
    fn storm_shape_mismatch() {
        assert!(matches!(
            storm_update(&v(&[0.0]), &v(&[1.0, 2.0]), &v(&[1.0]), 0.5),
            Err(LionError::Shape { .. })
        ));
    }

    proptest! {
        #[test]
        fn storm_reduces_to_momentum_without_motion(
            m in prop::collection::vec(-100.0f64..100.0, 1..16),
            seed_g in prop::collection::vec(-100.0f64..100.0, 16),
            beta in 1e-6f64..=1.0,
        ) {
            let d = m.len();
            let m = Vector::new(m).unwrap();
            let g = Vector::new(seed_g[..d].to_vec()).unwrap();
            let a = storm_update(&m, &g, &g, beta).unwrap();
            let b = momentum_update(&m, &g, beta).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn storm_matches_rearranged_form(
            m in -10.0f64..10.0, gc in -10.0f64..10.0, gp in -10.0f64..10.0, beta in 1e-3f64..=1.0,
        ) {
            let a = storm_update(&v(&[m]), &v(&[gc]), &v(&[gp]), beta).unwrap()[0];
            let b = gc + (1.0 - beta) * (m - gp);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
