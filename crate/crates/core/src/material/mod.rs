//! Pointwise constitutive layer: stored energy with truncation, the truncated
//! Cauchy stress and plastic rate, damage rate, and chemical potential.

mod energy;
mod potentials;
mod profile;
mod truncation;

pub use energy::{EnergyDensity, StoredEnergy};
pub use potentials::{
    DamageMode, DamagePotential, DamageSign, MobilityLaw, ViscoplasticPotential,
};
pub use profile::Profile;
pub use truncation::{Branch, Truncation, Weight};

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{Mat3, Vec3};

/// Isotropic Stokes viscosity `𝔻ε = 2η_s dev ε + η_b (tr ε) 𝕀`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct Viscosity {
    pub shear: f64,
    pub bulk: f64,
}

impl Viscosity {
    pub fn apply(&self, eps: &Mat3) -> Mat3 {
        eps.dev() * (2.0 * self.shear) + Mat3::identity() * (self.bulk * eps.tr())
    }
}

/// Second-grade multipolar viscosity `𝔥 = ν|∇²v|^{p−2}∇²v`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct Hyperviscosity {
    pub nu: f64,
    pub exponent: f64,
}

impl Default for Hyperviscosity {
    fn default() -> Self {
        Hyperviscosity {
            nu: 0.0,
            exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct Material {
    pub energy: StoredEnergy,
    /// Truncation level λ (> √3).
    pub lambda: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub viscoplastic: ViscoplasticPotential,
    pub viscosity: Viscosity,
    #[cfg_attr(feature = "serde", serde(default))]
    pub hyperviscosity: Hyperviscosity,
    #[cfg_attr(feature = "serde", serde(default))]
    pub damage: Option<DamagePotential>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub diffusion: Option<MobilityLaw>,
}

/// `max(dual, 0)(1 − α) + max(−dual, 0)α` plus any bound violation: zero iff
/// `dual ∈ N_[0,1](α)`.
pub fn complementarity_residual(alpha: f64, dual: f64) -> f64 {
    let a = alpha.clamp(0.0, 1.0);
    dual.max(0.0) * (1.0 - a) + (-dual).max(0.0) * a + (alpha - a).abs()
}

impl Material {
    /// A plain neo-Hookean solid with no creep, damage or diffusion.
    pub fn elastic(shear_modulus: f64, bulk_modulus: f64, lambda: f64) -> Self {
        Material {
            energy: StoredEnergy::neo_hookean(shear_modulus, bulk_modulus),
            lambda,
            viscoplastic: ViscoplasticPotential::default(),
            viscosity: Viscosity {
                shear: 0.0,
                bulk: 0.0,
            },
            hyperviscosity: Hyperviscosity::default(),
            damage: None,
            diffusion: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |m: &'static str| Error::invalid(m);
        if !(self.lambda > math::sqrt(3.0)) {
            return Err(Error::invalid("truncation level lambda must exceed sqrt(3)"));
        }
        self.energy.validate().map_err(wrap)?;
        self.viscoplastic.validate().map_err(wrap)?;
        if !(self.viscosity.shear >= 0.0 && self.viscosity.bulk >= 0.0) {
            return Err(Error::invalid("viscosities must be >= 0"));
        }
        if !(self.hyperviscosity.nu >= 0.0 && self.hyperviscosity.exponent >= 2.0) {
            return Err(Error::invalid("hyperviscosity needs nu >= 0 and exponent >= 2"));
        }
        if self.damage.is_some() && self.diffusion.is_some() {
            return Err(Error::invalid("damage and diffusion cannot both be enabled"));
        }
        if let Some(d) = &self.damage {
            if !(d.modulus > 0.0) {
                return Err(Error::invalid("damage modulus must be > 0"));
            }
        }
        if let Some(m) = &self.diffusion {
            if !(m.min_value() > 0.0) {
                return Err(Error::invalid("mobility must stay positive"));
            }
        }
        Ok(())
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::new(self.lambda)
    }

    pub fn branch(&self, f: &Mat3) -> Branch {
        self.truncation().branch(f)
    }

    /// φ_λ(X, F, α).
    pub fn energy(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        self.truncation().energy(&self.energy, x, f, alpha)
    }

    /// ∂φ_λ/∂F.
    pub fn d_energy_f(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3 {
        self.truncation().d_f(&self.energy, x, f, alpha)
    }

    /// ∂φ_λ/∂α.
    pub fn d_energy_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        self.truncation().d_alpha(&self.energy, x, f, alpha)
    }

    pub fn d2_energy_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        self.truncation().d2_alpha(&self.energy, x, f, alpha)
    }

    /// 𝒯_λ = [φ_λ]′_F Fᵀ + φ_λ 𝕀.
    pub fn stress(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3 {
        let t = self.truncation();
        if t.branch(f) == Branch::Dead {
            return Mat3::ZERO;
        }
        let phi = t.energy(&self.energy, x, f, alpha);
        t.d_f(&self.energy, x, f, alpha) * f.transpose() + Mat3::identity() * phi
    }

    /// Mandel stress deviator `dev(Fᵀ[φ_λ]′_F)`.
    pub fn mandel(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3 {
        (f.transpose() * self.d_energy_f(x, f, alpha)).dev()
    }

    /// ℒ_λ = [ζ*]′(dev(Fᵀ[φ_λ]′_F)).
    pub fn plastic_rate(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Result<Mat3> {
        if self.viscoplastic.is_rigid() {
            return Ok(Mat3::ZERO);
        }
        let m = self.mandel(x, f, alpha);
        self.viscoplastic.conjugate_rate(x, &m)
    }

    /// 𝒟_λ; zero when damage is disabled.
    pub fn damage_rate(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        match &self.damage {
            None => 0.0,
            Some(d) => d.conjugate_rate(d.driving_force(self.d_energy_alpha(x, f, alpha))),
        }
    }

    /// ∂𝒟_λ/∂α.
    pub fn damage_rate_d_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        match &self.damage {
            None => 0.0,
            Some(d) => {
                let s = d.driving_force(self.d_energy_alpha(x, f, alpha));
                let ds = d.driving_force(self.d2_energy_alpha(x, f, alpha));
                d.conjugate_slope(s) * ds
            }
        }
    }

    /// μ = [φ_λ]′_α + dual and the complementarity residual of `dual ∈ N_[0,1](α)`.
    pub fn chemical_potential(
        &self,
        x: &Vec3,
        f: &Mat3,
        alpha: f64,
        dual: f64,
    ) -> Result<(f64, f64)> {
        if !(-1e-12..=1.0 + 1e-12).contains(&alpha) {
            return Err(Error::BoundViolation { value: alpha });
        }
        let a = alpha.clamp(0.0, 1.0);
        Ok((
            self.d_energy_alpha(x, f, a) + dual,
            complementarity_residual(a, dual),
        ))
    }

    /// A uniform bound on |ℒ_λ| over all F, α and X.
    pub fn plastic_rate_bound(&self) -> f64 {
        if self.viscoplastic.is_rigid() {
            return 0.0;
        }
        let t = self.truncation();
        let (phi_max, dphi_max) = self.energy.bounds_on_truncation_support(self.lambda);
        // on the support |F| < 2λ, w <= 1
        let dphi_l = dphi_max + phi_max * t.weight_derivative_bound();
        let m_bound = 2.0 * self.lambda * dphi_l;
        self.viscoplastic.rate_bound(m_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> Material {
        let mut m = Material::elastic(1.0, 1.0, 4.0);
        m.viscoplastic = ViscoplasticPotential::quadratic(1.0);
        m
    }

    #[test]
    fn reference_state_is_stress_free() {
        let m = mat();
        let s = m.stress(&Vec3::ZERO, &Mat3::identity(), 1.0);
        assert!(s.frob() < 1e-15);
        assert_eq!(m.plastic_rate(&Vec3::ZERO, &Mat3::identity(), 1.0).unwrap(), Mat3::ZERO);
    }

    #[test]
    fn dead_zone_is_inert() {
        let m = mat();
        let f = Mat3::diag(9.0, 1.0, 1.0);
        assert_eq!(m.energy(&Vec3::ZERO, &f, 1.0), 0.0);
        assert_eq!(m.stress(&Vec3::ZERO, &f, 1.0), Mat3::ZERO);
        assert_eq!(m.plastic_rate(&Vec3::ZERO, &f, 1.0).unwrap(), Mat3::ZERO);
    }

    #[test]
    fn stress_is_symmetric() {
        let m = mat();
        let f = Mat3::from_rows([[1.3, 0.4, 0.0], [-0.2, 0.8, 0.1], [0.0, 0.3, 1.1]]);
        let s = m.stress(&Vec3::ZERO, &f, 1.0);
        assert!((s - s.transpose()).frob() < 1e-13);
    }

    #[test]
    fn complementarity_examples() {
        let m = mat();
        let (mu, r) = m.chemical_potential(&Vec3::ZERO, &Mat3::identity(), 0.5, 0.0).unwrap();
        assert_eq!((mu, r), (0.0, 0.0));
        assert_eq!(complementarity_residual(1.0, 2.0), 0.0);
        assert_eq!(complementarity_residual(0.5, 1.0), 0.5);
        assert!(m.chemical_potential(&Vec3::ZERO, &Mat3::identity(), 1.1, 0.0).is_err());
    }

    #[test]
    fn validation() {
        let mut m = mat();
        assert!(m.validate().is_ok());
        m.lambda = 1.5;
        assert!(m.validate().is_err());
        let mut m = mat();
        m.damage = Some(DamagePotential::new(1.0, DamageMode::Unidirectional));
        m.diffusion = Some(MobilityLaw::constant(1.0));
        assert!(m.validate().is_err());
    }
}
