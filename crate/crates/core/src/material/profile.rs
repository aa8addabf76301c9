use crate::math;
use crate::tensor::Vec3;

/// A scalar function of the material coordinate X.
///
/// Used for heterogeneous parameter modulation (as a multiplicative factor)
/// and for spatially varying reference values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `inside` within a ball of `radius` around `center`, `outside` elsewhere.
    /// With `period` set, distances use the minimum image.
    TwoPhase {
        center: [f64; 3],
        radius: f64,
        inside: f64,
        outside: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        period: Option<[f64; 3]>,
    },
    /// `mean + amplitude · sin(k · X)`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        wavevector: [f64; 3],
    },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant { value: 1.0 }
    }
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPhase {
                center,
                radius,
                inside,
                outside,
                period,
            } => {
                let mut r2 = 0.0;
                for a in 0..3 {
                    let mut d = x.0[a] - center[a];
                    if let Some(p) = period {
                        if p[a] > 0.0 {
                            d -= p[a] * math::round(d / p[a]);
                        }
                    }
                    r2 += d * d;
                }
                if r2 <= radius * radius {
                    *inside
                } else {
                    *outside
                }
            }
            Profile::Sinusoidal {
                mean,
                amplitude,
                wavevector,
            } => {
                let phase = wavevector[0] * x.0[0] + wavevector[1] * x.0[1] + wavevector[2] * x.0[2];
                mean + amplitude * math::sin(phase)
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPhase {
                inside, outside, ..
            } => inside.min(*outside),
            Profile::Sinusoidal {
                mean, amplitude, ..
            } => mean - math::abs(*amplitude),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPhase {
                inside, outside, ..
            } => inside.max(*outside),
            Profile::Sinusoidal {
                mean, amplitude, ..
            } => mean + math::abs(*amplitude),
        }
    }

    /// ∂/∂X; zero almost everywhere for the piecewise-constant profile.
    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match self {
            Profile::Sinusoidal {
                amplitude,
                wavevector,
                ..
            } => {
                let phase = wavevector[0] * x.0[0] + wavevector[1] * x.0[1] + wavevector[2] * x.0[2];
                let c = amplitude * math::cos(phase);
                Vec3([c * wavevector[0], c * wavevector[1], c * wavevector[2]])
            }
            _ => Vec3::ZERO,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_phase_uses_minimum_image() {
        let p = Profile::TwoPhase {
            center: [0.1, 0.5, 0.0],
            radius: 0.2,
            inside: 5.0,
            outside: 1.0,
            period: Some([1.0, 1.0, 0.0]),
        };
        assert_eq!(p.value(&Vec3::new(0.95, 0.5, 0.0)), 5.0);
        assert_eq!(p.value(&Vec3::new(0.5, 0.5, 0.0)), 1.0);
        assert_eq!((p.min_value(), p.max_value()), (1.0, 5.0));
    }

    #[test]
    fn sinusoid_gradient_matches_difference_quotient() {
        let p = Profile::Sinusoidal {
            mean: 1.0,
            amplitude: 0.3,
            wavevector: [2.0, -1.0, 0.0],
        };
        let x = Vec3::new(0.3, 0.7, 0.0);
        let h = 1e-6;
        let g = p.gradient(&x);
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp.0[a] += h;
            xm.0[a] -= h;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
            assert!((fd - g.0[a]).abs() < 1e-8);
        }
    }
}
