//! Dissipation potentials and their conjugate flow rules.

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{Mat3, Vec3};

/// Viscoplastic potential ζ(X, L) on trace-free L.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum ViscoplasticPotential {
    /// `ζ = m(X)|L|²/(2θ)`; θ = 0 means no creep.
    Quadratic {
        fluidity: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        modulation: Profile,
    },
    /// `ζ = m(X)(a|L|²/2 + b|L|⁴/4)`, inverted by Newton.
    Quartic {
        a: f64,
        b: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        modulation: Profile,
    },
}

impl Default for ViscoplasticPotential {
    fn default() -> Self {
        ViscoplasticPotential::Quadratic {
            fluidity: 0.0,
            modulation: Profile::default(),
        }
    }
}

const CONJUGATE_MAX_ITER: usize = 100;

impl ViscoplasticPotential {
    pub fn quadratic(fluidity: f64) -> Self {
        ViscoplasticPotential::Quadratic {
            fluidity,
            modulation: Profile::default(),
        }
    }

    pub fn quartic(a: f64, b: f64) -> Self {
        ViscoplasticPotential::Quartic {
            a,
            b,
            modulation: Profile::default(),
        }
    }

    pub fn modulation(&self) -> &Profile {
        match self {
            ViscoplasticPotential::Quadratic { modulation, .. }
            | ViscoplasticPotential::Quartic { modulation, .. } => modulation,
        }
    }

    pub fn is_rigid(&self) -> bool {
        matches!(self, ViscoplasticPotential::Quadratic { fluidity, .. } if *fluidity == 0.0)
    }

    pub fn validate(&self) -> core::result::Result<(), &'static str> {
        if !(self.modulation().min_value() > 0.0) {
            return Err("viscoplastic modulation must stay positive");
        }
        match self {
            ViscoplasticPotential::Quadratic { fluidity, .. } => {
                if !(*fluidity >= 0.0) {
                    return Err("fluidity must be >= 0");
                }
            }
            ViscoplasticPotential::Quartic { a, b, .. } => {
                if !(*a > 0.0 && *b >= 0.0) {
                    return Err("quartic potential needs a > 0 and b >= 0");
                }
            }
        }
        Ok(())
    }

    /// ζ(X, L). For the rigid quadratic case this is the indicator of {0}.
    pub fn zeta(&self, x: &Vec3, l: &Mat3) -> f64 {
        let m = self.modulation().value(x);
        let n2 = l.ddot(l);
        match self {
            ViscoplasticPotential::Quadratic { fluidity, .. } => {
                if *fluidity == 0.0 {
                    if n2 == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    m * n2 / (2.0 * fluidity)
                }
            }
            ViscoplasticPotential::Quartic { a, b, .. } => m * (a * n2 / 2.0 + b * n2 * n2 / 4.0),
        }
    }

    /// ζ′(X, L).
    pub fn d_zeta(&self, x: &Vec3, l: &Mat3) -> Mat3 {
        let m = self.modulation().value(x);
        match self {
            ViscoplasticPotential::Quadratic { fluidity, .. } => *l * (m / fluidity),
            ViscoplasticPotential::Quartic { a, b, .. } => *l * (m * (a + b * l.ddot(l))),
        }
    }

    /// `[ζ*]′(M)`: the L with ζ′(X, L) = M.
    pub fn conjugate_rate(&self, x: &Vec3, m_dev: &Mat3) -> Result<Mat3> {
        let tr = m_dev.tr();
        if math::abs(tr) > 1e-12 * (1.0 + m_dev.frob()) {
            return Err(Error::NotDeviatoric { trace: tr });
        }
        let md = m_dev.dev();
        let m = self.modulation().value(x);
        match self {
            ViscoplasticPotential::Quadratic { fluidity, .. } => Ok(md * (fluidity / m)),
            ViscoplasticPotential::Quartic { a, b, .. } => newton_conjugate(m * a, m * b, &md),
        }
    }

    /// Upper bound on `|[ζ*]′(M)|` given `|M| <= m_bound`.
    pub fn rate_bound(&self, m_bound: f64) -> f64 {
        let mmin = self.modulation().min_value();
        match self {
            ViscoplasticPotential::Quadratic { fluidity, .. } => fluidity * m_bound / mmin,
            ViscoplasticPotential::Quartic { a, .. } => m_bound / (a * mmin),
        }
    }
}

/// Newton for `(a + b|L|²) L = M`. The solution is parallel to M, so this
/// reduces to `a s + b s³ = |M|` for `s = |L|`; started above the root, the
/// iterates decrease monotonically (convex, increasing).
fn newton_conjugate(a: f64, b: f64, m: &Mat3) -> Result<Mat3> {
    let target = m.frob();
    if target == 0.0 {
        return Ok(Mat3::ZERO);
    }
    let mut s = (target / a).min(math::cbrt(target / b));
    let mut res = a * s + b * s * s * s - target;
    let mut it = 0;
    while it < CONJUGATE_MAX_ITER && res > 1e-15 * target {
        let next = s - res / (a + 3.0 * b * s * s);
        it += 1;
        if !(next < s) {
            break;
        }
        s = next;
        res = a * s + b * s * s * s - target;
    }
    if !(math::abs(res) <= 1e-12 * (1.0 + target)) {
        return Err(Error::ConjugateNotConverged {
            residual: res,
            iterations: it,
        });
    }
    Ok(*m * (s / target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum DamageMode {
    #[default]
    Unidirectional,
    Bidirectional,
}

/// Which driving force enters the conjugate flow rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum DamageSign {
    /// `α̇ = [ζ*]′(−φ′_α)`: stored energy decreases along the flow.
    #[default]
    GradientFlow,
    /// `α̇ = [ζ*]′(+φ′_α)`, kept for comparison only.
    Literal,
}

/// `ζ(α̇) = G α̇²/2`, plus the indicator of `α̇ <= 0` when unidirectional.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DamagePotential {
    pub modulus: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mode: DamageMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sign: DamageSign,
}

impl DamagePotential {
    pub fn new(modulus: f64, mode: DamageMode) -> Self {
        DamagePotential {
            modulus,
            mode,
            sign: DamageSign::GradientFlow,
        }
    }

    pub fn zeta(&self, rate: f64) -> f64 {
        if self.mode == DamageMode::Unidirectional && rate > 0.0 {
            f64::INFINITY
        } else {
            0.5 * self.modulus * rate * rate
        }
    }

    /// `[ζ*]′(s)` for a driving force s.
    pub fn conjugate_rate(&self, s: f64) -> f64 {
        match self.mode {
            DamageMode::Unidirectional => s.min(0.0) / self.modulus,
            DamageMode::Bidirectional => s / self.modulus,
        }
    }

    /// Derivative of the conjugate rate with respect to the driving force.
    pub fn conjugate_slope(&self, s: f64) -> f64 {
        match self.mode {
            DamageMode::Unidirectional if s > 0.0 => 0.0,
            _ => 1.0 / self.modulus,
        }
    }

    /// The driving force from `∂φ_λ/∂α`.
    pub fn driving_force(&self, d_alpha: f64) -> f64 {
        match self.sign {
            DamageSign::GradientFlow => -d_alpha,
            DamageSign::Literal => d_alpha,
        }
    }

    /// `α̇ ζ′(α̇)`.
    pub fn dissipation(&self, rate: f64) -> f64 {
        self.modulus * rate * rate
    }
}

/// Diffusant mobility `m(X, α) = m₀ · s(X) · (1 + γ α(1 − α))`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct MobilityLaw {
    pub base: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub gain: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub modulation: Profile,
}

impl MobilityLaw {
    pub fn constant(base: f64) -> Self {
        MobilityLaw {
            base,
            gain: 0.0,
            modulation: Profile::default(),
        }
    }

    pub fn value(&self, x: &Vec3, alpha: f64) -> f64 {
        let a = alpha.clamp(0.0, 1.0);
        self.base * self.modulation.value(x) * (1.0 + self.gain * a * (1.0 - a))
    }

    pub fn d_alpha(&self, x: &Vec3, alpha: f64) -> f64 {
        if !(0.0..=1.0).contains(&alpha) {
            return 0.0;
        }
        self.base * self.modulation.value(x) * self.gain * (1.0 - 2.0 * alpha)
    }

    pub fn min_value(&self) -> f64 {
        self.base * self.modulation.min_value() * (1.0f64).min(1.0 + self.gain / 4.0)
    }

    pub fn max_value(&self) -> f64 {
        self.base * self.modulation.max_value() * (1.0f64).max(1.0 + self.gain / 4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_conjugate_closed_form() {
        let z = ViscoplasticPotential::quadratic(0.5);
        let l = z.conjugate_rate(&Vec3::ZERO, &Mat3::diag(1.0, -1.0, 0.0)).unwrap();
        assert_eq!(l, Mat3::diag(0.5, -0.5, 0.0));
        let zero = z.conjugate_rate(&Vec3::ZERO, &Mat3::ZERO).unwrap();
        assert_eq!(zero, Mat3::ZERO);
    }

    #[test]
    fn conjugate_rejects_trace() {
        let z = ViscoplasticPotential::quadratic(1.0);
        assert!(matches!(
            z.conjugate_rate(&Vec3::ZERO, &Mat3::identity()),
            Err(Error::NotDeviatoric { .. })
        ));
    }

    #[test]
    fn quartic_round_trip() {
        let z = ViscoplasticPotential::quartic(1.0, 1.0);
        let m = Mat3::from_rows([[3.0, 1.0, -2.0], [0.5, -1.0, 4.0], [0.0, 7.0, -2.0]]);
        let l = z.conjugate_rate(&Vec3::ZERO, &m).unwrap();
        let back = z.d_zeta(&Vec3::ZERO, &l);
        assert!((back - m).frob() <= 1e-10 * (1.0 + m.frob()));
        assert!(l.tr().abs() < 1e-14);
    }

    #[test]
    fn damage_rates() {
        let d = DamagePotential::new(1.0, DamageMode::Unidirectional);
        assert_eq!(d.conjugate_rate(d.driving_force(0.0)), 0.0);
        assert_eq!(d.conjugate_rate(-2.0), -2.0);
        assert_eq!(d.conjugate_rate(3.0), 0.0);
        let r = d.conjugate_rate(-0.7);
        assert!(r * d.modulus * r >= 0.0);
    }
}
