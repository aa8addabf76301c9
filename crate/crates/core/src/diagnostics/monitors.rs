use crate::material::{Branch, Truncation};
use crate::stepper::State;

/// A-priori-estimate monitors of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Monitors {
    pub min_rho: f64,
    /// Largest sparsity `1/ρ`.
    pub max_sparsity: f64,
    pub min_det_fe: f64,
    pub max_fe_norm: f64,
    pub max_inv_det_fe: f64,
    /// `λ − max|Fe|`.
    pub margin_norm: f64,
    /// `λ − max 1/det Fe`.
    pub margin_det: f64,
    pub margin_norm_2: f64,
    pub margin_det_2: f64,
    /// Share of cells in the blend or dead zone of the truncation.
    pub activation_fraction: f64,
}

pub fn monitors(state: &State, lambda: f64) -> Monitors {
    let trunc = Truncation::new(lambda);
    let mut m = Monitors {
        min_rho: f64::INFINITY,
        min_det_fe: f64::INFINITY,
        ..Default::default()
    };
    for &r in &state.rho {
        m.min_rho = m.min_rho.min(r);
    }
    m.max_sparsity = 1.0 / m.min_rho;
    let mut active = 0usize;
    for f in &state.fe {
        let j = f.det();
        m.min_det_fe = m.min_det_fe.min(j);
        m.max_fe_norm = m.max_fe_norm.max(f.frob());
        m.max_inv_det_fe = m.max_inv_det_fe.max(1.0 / j);
        if trunc.branch(f) != Branch::Untruncated {
            active += 1;
        }
    }
    m.margin_norm = lambda - m.max_fe_norm;
    m.margin_det = lambda - m.max_inv_det_fe;
    m.margin_norm_2 = 2.0 * lambda - m.max_fe_norm;
    m.margin_det_2 = 2.0 * lambda - m.max_inv_det_fe;
    m.activation_fraction = active as f64 / state.fe.len().max(1) as f64;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::tensor::Mat3;

    #[test]
    fn identity_state() {
        let g = Grid::uniform(2, 4, 1.0, Boundary::Periodic).unwrap();
        let s = State::rest(&g, 1.0);
        let m = monitors(&s, 4.0);
        assert_eq!(m.activation_fraction, 0.0);
        assert!((m.margin_norm - (4.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((m.margin_det - 3.0).abs() < 1e-15);
    }

    #[test]
    fn dead_zone_state() {
        let g = Grid::uniform(2, 4, 1.0, Boundary::Periodic).unwrap();
        let mut s = State::rest(&g, 1.0);
        s.fe.iter_mut().for_each(|f| *f = Mat3::diag(10.0, 1.0, 1.0));
        assert_eq!(monitors(&s, 4.0).activation_fraction, 1.0);
    }
}
