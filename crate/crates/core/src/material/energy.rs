//! Stored-energy densities φ(X, F, α), in J per m³ of actual volume.

use super::profile::Profile;
use crate::math;
use crate::tensor::{Mat3, Vec3};

/// A stored energy with its first derivatives.
///
/// Implementations must be C¹ on `det F > 0` and may return `+∞` for
/// `det F <= 0`; the truncation never evaluates them there.
pub trait EnergyDensity {
    fn energy(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64;
    /// ∂φ/∂F.
    fn d_f(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3;
    /// ∂φ/∂α.
    fn d_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64;
    /// ∂²φ/∂α², used by the diffusion Newton solve.
    fn d2_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        let h = 1e-6;
        (self.d_alpha(x, f, alpha + h) - self.d_alpha(x, f, alpha - h)) / (2.0 * h)
    }
    /// Upper bounds `(sup |φ|, sup |∂φ/∂F|)` over `|F| <= 2λ`, `det F >= 1/(2λ)`,
    /// `α ∈ [0, 1]` and all X.
    fn bounds_on_truncation_support(&self, lambda: f64) -> (f64, f64);
}

/// Built-in energy families. Moduli are multiplied by `modulation(X)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum StoredEnergy {
    /// `(μ/2)(J^{-2/3}|F|² − 3) + (κ/2)(J − 1)²`.
    NeoHookean {
        shear_modulus: f64,
        bulk_modulus: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        modulation: Profile,
    },
    /// `g(α)·φ_iso + (κ/2)(J − 1)² + G_c(1 − α)` with `g(α) = η + (1 − η)α²`;
    /// α = 1 is intact material.
    DamageNeoHookean {
        shear_modulus: f64,
        bulk_modulus: f64,
        residual_stiffness: f64,
        fracture_energy: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        modulation: Profile,
    },
    /// Neo-Hookean plus `(k/2)(α − α_ref(X))² + s·α·(J − 1)`; α is a
    /// concentration in [0, 1].
    ChemoNeoHookean {
        shear_modulus: f64,
        bulk_modulus: f64,
        chemical_stiffness: f64,
        reference_concentration: Profile,
        swelling_coupling: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        modulation: Profile,
    },
}

struct Iso {
    value: f64,
    deriv: Mat3,
}

/// `(μ/2)(J^{-2/3}|F|² − 3)` and its derivative.
fn isochoric(mu: f64, f: &Mat3, j: f64, cof: &Mat3) -> Iso {
    let jm23 = 1.0 / (math::cbrt(j) * math::cbrt(j));
    let n2 = f.ddot(f);
    let value = 0.5 * mu * (jm23 * n2 - 3.0);
    let f_inv_t = *cof * (1.0 / j);
    let deriv = (*f - f_inv_t * (n2 / 3.0)) * (mu * jm23);
    Iso { value, deriv }
}

impl StoredEnergy {
    pub fn neo_hookean(shear_modulus: f64, bulk_modulus: f64) -> Self {
        StoredEnergy::NeoHookean {
            shear_modulus,
            bulk_modulus,
            modulation: Profile::default(),
        }
    }

    pub fn modulation(&self) -> &Profile {
        match self {
            StoredEnergy::NeoHookean { modulation, .. }
            | StoredEnergy::DamageNeoHookean { modulation, .. }
            | StoredEnergy::ChemoNeoHookean { modulation, .. } => modulation,
        }
    }

    fn moduli(&self) -> (f64, f64) {
        match self {
            StoredEnergy::NeoHookean {
                shear_modulus,
                bulk_modulus,
                ..
            }
            | StoredEnergy::DamageNeoHookean {
                shear_modulus,
                bulk_modulus,
                ..
            }
            | StoredEnergy::ChemoNeoHookean {
                shear_modulus,
                bulk_modulus,
                ..
            } => (*shear_modulus, *bulk_modulus),
        }
    }

    pub fn depends_on_alpha(&self) -> bool {
        !matches!(self, StoredEnergy::NeoHookean { .. })
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let (mu, kappa) = self.moduli();
        if !(mu > 0.0 && kappa >= 0.0) {
            return Err("stored energy needs shear modulus > 0 and bulk modulus >= 0");
        }
        if !(self.modulation().min_value() > 0.0) {
            return Err("modulation profile must stay positive");
        }
        match self {
            StoredEnergy::DamageNeoHookean {
                residual_stiffness,
                fracture_energy,
                ..
            } => {
                if !(*residual_stiffness > 0.0 && *residual_stiffness < 1.0) {
                    return Err("residual stiffness must lie in (0, 1)");
                }
                if !(*fracture_energy >= 0.0) {
                    return Err("fracture energy must be >= 0");
                }
            }
            StoredEnergy::ChemoNeoHookean {
                chemical_stiffness, ..
            } => {
                if !(*chemical_stiffness > 0.0) {
                    return Err("chemical stiffness must be > 0 (strong convexity in α)");
                }
            }
            StoredEnergy::NeoHookean { .. } => {}
        }
        Ok(())
    }
}

impl EnergyDensity for StoredEnergy {
    fn energy(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        let j = f.det();
        if !(j > 0.0) {
            return f64::INFINITY;
        }
        let m = self.modulation().value(x);
        let (mu, kappa) = self.moduli();
        let cof = f.cof();
        let iso = isochoric(mu * m, f, j, &cof).value;
        let vol = 0.5 * kappa * m * (j - 1.0) * (j - 1.0);
        match self {
            StoredEnergy::NeoHookean { .. } => iso + vol,
            StoredEnergy::DamageNeoHookean {
                residual_stiffness: eta,
                fracture_energy: gc,
                ..
            } => (eta + (1.0 - eta) * alpha * alpha) * iso + vol + gc * (1.0 - alpha),
            StoredEnergy::ChemoNeoHookean {
                chemical_stiffness: k,
                reference_concentration,
                swelling_coupling: s,
                ..
            } => {
                let da = alpha - reference_concentration.value(x);
                iso + vol + 0.5 * k * da * da + s * alpha * (j - 1.0)
            }
        }
    }

    fn d_f(&self, x: &Vec3, f: &Mat3, alpha: f64) -> Mat3 {
        let j = f.det();
        if !(j > 0.0) {
            return Mat3([[f64::NAN; 3]; 3]);
        }
        let m = self.modulation().value(x);
        let (mu, kappa) = self.moduli();
        let cof = f.cof();
        let iso = isochoric(mu * m, f, j, &cof).deriv;
        let vol = cof * (kappa * m * (j - 1.0));
        match self {
            StoredEnergy::NeoHookean { .. } => iso + vol,
            StoredEnergy::DamageNeoHookean {
                residual_stiffness: eta,
                ..
            } => iso * (eta + (1.0 - eta) * alpha * alpha) + vol,
            StoredEnergy::ChemoNeoHookean {
                swelling_coupling: s,
                ..
            } => iso + vol + cof * (s * alpha),
        }
    }

    fn d_alpha(&self, x: &Vec3, f: &Mat3, alpha: f64) -> f64 {
        match self {
            StoredEnergy::NeoHookean { .. } => 0.0,
            StoredEnergy::DamageNeoHookean {
                shear_modulus,
                residual_stiffness: eta,
                fracture_energy: gc,
                ..
            } => {
                let j = f.det();
                if !(j > 0.0) {
                    return f64::NAN;
                }
                let m = self.modulation().value(x);
                let iso = isochoric(shear_modulus * m, f, j, &f.cof()).value;
                2.0 * (1.0 - eta) * alpha * iso - gc
            }
            StoredEnergy::ChemoNeoHookean {
                chemical_stiffness: k,
                reference_concentration,
                swelling_coupling: s,
                ..
            } => k * (alpha - reference_concentration.value(x)) + s * (f.det() - 1.0),
        }
    }

    fn d2_alpha(&self, x: &Vec3, f: &Mat3, _alpha: f64) -> f64 {
        match self {
            StoredEnergy::NeoHookean { .. } => 0.0,
            StoredEnergy::DamageNeoHookean {
                shear_modulus,
                residual_stiffness: eta,
                ..
            } => {
                let j = f.det();
                let m = self.modulation().value(x);
                2.0 * (1.0 - eta) * isochoric(shear_modulus * m, f, j, &f.cof()).value
            }
            StoredEnergy::ChemoNeoHookean {
                chemical_stiffness: k,
                ..
            } => *k,
        }
    }

    fn bounds_on_truncation_support(&self, lambda: f64) -> (f64, f64) {
        let m = self.modulation().max_value();
        let (mu, kappa) = self.moduli();
        let (mu, kappa) = (mu * m, kappa * m);
        let n_max = 2.0 * lambda;
        let j_min = 1.0 / (2.0 * lambda);
        // Hadamard: J <= |F|³ / 3^{3/2}
        let j_max = n_max * n_max * n_max / (3.0 * math::sqrt(3.0));
        let jm23_max = 1.0 / (math::cbrt(j_min) * math::cbrt(j_min));
        // |cof F|² is the second invariant of FᵀF, bounded by |F|⁴/3
        let cof_max = n_max * n_max / math::sqrt(3.0);
        let finv_max = cof_max / j_min;
        let iso = 0.5 * mu * (jm23_max * n_max * n_max + 3.0);
        let iso_d = mu * jm23_max * (n_max + n_max * n_max / 3.0 * finv_max);
        let jdev = (j_max - 1.0).max(1.0);
        let vol = 0.5 * kappa * jdev * jdev;
        let vol_d = kappa * jdev * cof_max;
        match self {
            StoredEnergy::NeoHookean { .. } => (iso + vol, iso_d + vol_d),
            StoredEnergy::DamageNeoHookean {
                fracture_energy, ..
            } => (iso + vol + fracture_energy, iso_d + vol_d),
            StoredEnergy::ChemoNeoHookean {
                chemical_stiffness,
                reference_concentration,
                swelling_coupling,
                ..
            } => {
                let da = 1.0 + math::abs(reference_concentration.max_value())
                    + math::abs(reference_concentration.min_value());
                let s = math::abs(*swelling_coupling);
                (
                    iso + vol + 0.5 * chemical_stiffness * da * da + s * jdev,
                    iso_d + vol_d + s * cof_max,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn damage_nh() -> StoredEnergy {
        StoredEnergy::DamageNeoHookean {
            shear_modulus: 1.3,
            bulk_modulus: 2.1,
            residual_stiffness: 1e-3,
            fracture_energy: 0.4,
            modulation: Profile::Sinusoidal {
                mean: 1.0,
                amplitude: 0.2,
                wavevector: [3.0, 1.0, 0.0],
            },
        }
    }

    #[test]
    fn neo_hookean_reference_values() {
        let e = StoredEnergy::neo_hookean(1.0, 1.0);
        let x = Vec3::ZERO;
        assert!(e.energy(&x, &Mat3::identity(), 1.0).abs() < 1e-15);
        assert!(e.d_f(&x, &Mat3::identity(), 1.0).frob() < 1e-15);
        // (1/2)(2^{-2/3}·6 − 3) + (1/2)(2 − 1)²
        let v = e.energy(&x, &Mat3::diag(2.0, 1.0, 1.0), 1.0);
        let expect = 0.5 * (6.0 / 2f64.powf(2.0 / 3.0) - 3.0) + 0.5;
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 0.8899).abs() < 1e-4);
    }

    #[test]
    fn energy_blows_up_as_det_vanishes() {
        let e = StoredEnergy::neo_hookean(1.0, 1.0);
        let x = Vec3::ZERO;
        let mut last = 0.0;
        for k in 1..8 {
            let s = 10f64.powi(-k);
            let v = e.energy(&x, &Mat3::diag(1.0, 1.0, s), 1.0);
            assert!(v > last);
            last = v;
        }
        assert!(last > 100.0);
        assert_eq!(e.energy(&x, &Mat3::diag(1.0, 1.0, -1.0), 1.0), f64::INFINITY);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let e = damage_nh();
        let x = Vec3::new(0.2, 0.4, 0.0);
        let f = Mat3::from_rows([[1.2, 0.3, 0.0], [-0.1, 0.9, 0.05], [0.02, 0.0, 1.1]]);
        let alpha = 0.7;
        let d = e.d_f(&x, &f, alpha);
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut fp = f;
                let mut fm = f;
                fp.0[i][j] += h;
                fm.0[i][j] -= h;
                let fd = (e.energy(&x, &fp, alpha) - e.energy(&x, &fm, alpha)) / (2.0 * h);
                assert!((fd - d.0[i][j]).abs() < 1e-8, "{i}{j}: {fd} vs {}", d.0[i][j]);
            }
        }
        let fd = (e.energy(&x, &f, alpha + h) - e.energy(&x, &f, alpha - h)) / (2.0 * h);
        assert!((fd - e.d_alpha(&x, &f, alpha)).abs() < 1e-8);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(StoredEnergy::neo_hookean(0.0, 1.0).validate().is_err());
        let bad = StoredEnergy::ChemoNeoHookean {
            shear_modulus: 1.0,
            bulk_modulus: 1.0,
            chemical_stiffness: 0.0,
            reference_concentration: Profile::constant(0.5),
            swelling_coupling: 0.0,
            modulation: Profile::default(),
        };
        assert!(bad.validate().is_err());
        assert!(damage_nh().validate().is_ok());
    }
}
