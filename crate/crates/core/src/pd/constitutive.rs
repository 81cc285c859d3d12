//! Plane-stress hypoelastic–plastic stress update.
//!
//! Stress is stored in Voigt order `(σ₁₁, σ₂₂, σ₁₂)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic linear hardening J2 plasticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plasticity {
    pub yield_stress: f64,
    pub hardening: f64,
}

/// Bond failure model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    None,
    /// Degradation ramps from 1 to 0 as the bond's plastic strain goes from
    /// `eps_threshold` to `eps_critical`.
    Ductile { eps_threshold: f64, eps_critical: f64 },
    /// A bond breaks once its maximum principal stress exceeds `sigma_critical`.
    Brittle { sigma_critical: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidMaterial {
    pub youngs: f64,
    pub poisson: f64,
    pub density: f64,
    pub plasticity: Option<Plasticity>,
    pub failure: Failure,
}

impl SolidMaterial {
    pub fn steel() -> Self {
        Self {
            youngs: 200e9,
            poisson: 0.29,
            density: 7870.0,
            plasticity: Some(Plasticity {
                yield_stress: 0.4e9,
                hardening: 0.1e9,
            }),
            failure: Failure::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ok = self.youngs > 0.0 && self.poisson > 0.0 && self.poisson < 0.5 && self.density > 0.0;
        if let Some(p) = self.plasticity {
            ok &= p.yield_stress > 0.0 && p.hardening >= 0.0;
        }
        match self.failure {
            Failure::Ductile { eps_threshold, eps_critical } => ok &= 0.0 <= eps_threshold && eps_threshold < eps_critical,
            Failure::Brittle { sigma_critical } => ok &= sigma_critical > 0.0,
            Failure::None => {}
        }
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid solid material {self:?}")))
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs / (2.0 * (1.0 + self.poisson))
    }

    /// Dilatational wave speed under plane stress.
    pub fn wave_speed(&self) -> f64 {
        (self.youngs / (self.density * (1.0 - self.poisson * self.poisson))).sqrt()
    }

    /// Objective stress update over `dt` with velocity gradient `l`.
    ///
    /// The stress is rotated with the Hughes–Winget increment, receives the
    /// elastic predictor, and is returned to the yield surface if needed.
    pub fn update_stress(&self, sigma: [f64; 3], eps_p: f64, l: [[f64; 2]; 2], dt: f64) -> ([f64; 3], f64) {
        let d11 = l[0][0];
        let d22 = l[1][1];
        let d12 = 0.5 * (l[0][1] + l[1][0]);
        let w12 = 0.5 * (l[0][1] - l[1][0]);
        let rotated = rotate(sigma, w12 * dt);
        let (e, nu) = (self.youngs, self.poisson);
        let c = e / (1.0 - nu * nu);
        let g = self.shear_modulus();
        let trial = [
            rotated[0] + c * (d11 + nu * d22) * dt,
            rotated[1] + c * (d22 + nu * d11) * dt,
            rotated[2] + 2.0 * g * d12 * dt,
        ];
        match self.plasticity {
            Some(p) => self.return_map(trial, eps_p, p),
            None => (trial, eps_p),
        }
    }

    fn return_map(&self, trial: [f64; 3], eps_p: f64, plast: Plasticity) -> ([f64; 3], f64) {
        let flow = |eps: f64| plast.yield_stress + plast.hardening * eps;
        if von_mises(trial) <= flow(eps_p) {
            return (trial, eps_p);
        }
        let (e, nu, g) = (self.youngs, self.poisson, self.shear_modulus());
        let a = trial[0] + trial[1];
        let b = trial[1] - trial[0];
        let s = trial[2];
        let factors = |dg: f64| (1.0 / (1.0 + e * dg / (3.0 * (1.0 - nu))), 1.0 / (1.0 + 2.0 * g * dg));
        let q_of = |dg: f64| {
            let (fa, fb) = factors(dg);
            (0.25 * (a * fa).powi(2) + (0.75 * b * b + 3.0 * s * s) * fb * fb).sqrt()
        };
        // Yield condition in terms of the consistency parameter; decreasing in dg.
        let residual = |dg: f64| {
            let q = q_of(dg);
            q - flow(eps_p + 2.0 / 3.0 * dg * q)
        };
        let mut lo = 0.0;
        let mut hi = 1.0 / g;
        while residual(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut dg = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = residual(dg);
            if r > 0.0 {
                lo = dg;
            } else {
                hi = dg;
            }
            // Secant step on the bracket, bisection if it leaves the interval.
            let (rl, rh) = (residual(lo), residual(hi));
            let secant = lo - rl * (hi - lo) / (rh - rl);
            dg = if secant > lo && secant < hi && secant.is_finite() { secant } else { 0.5 * (lo + hi) };
            if (hi - lo) <= 1e-15 * hi || r.abs() <= 1e-13 * plast.yield_stress {
                break;
            }
        }
        let (fa, fb) = factors(dg);
        let a1 = a * fa;
        let b1 = b * fb;
        let sigma = [0.5 * (a1 - b1), 0.5 * (a1 + b1), s * fb];
        (sigma, eps_p + 2.0 / 3.0 * dg * q_of(dg))
    }
}

/// Plane-stress von Mises stress.
pub fn von_mises(s: [f64; 3]) -> f64 {
    (s[0] * s[0] + s[1] * s[1] - s[0] * s[1] + 3.0 * s[2] * s[2]).max(0.0).sqrt()
}

/// Largest in-plane principal stress (the out-of-plane one is zero).
pub fn max_principal(s: [f64; 3]) -> f64 {
    let m = 0.5 * (s[0] + s[1]);
    let r = (0.25 * (s[0] - s[1]).powi(2) + s[2] * s[2]).sqrt();
    (m + r).max(0.0)
}

/// `Q σ Qᵀ` with `Q = (I − ½W)⁻¹(I + ½W)` for spin increment `w` (= W₁₂ dt).
fn rotate(s: [f64; 3], w: f64) -> [f64; 3] {
    if w == 0.0 {
        return s;
    }
    let denom = 1.0 + 0.25 * w * w;
    let cos = (1.0 - 0.25 * w * w) / denom;
    let sin = w / denom;
    // Q = [[cos, sin], [-sin, cos]]
    let (c2, s2, cs) = (cos * cos, sin * sin, cos * sin);
    [
        c2 * s[0] + 2.0 * cs * s[2] + s2 * s[1],
        s2 * s[0] - 2.0 * cs * s[2] + c2 * s[1],
        -cs * s[0] + (c2 - s2) * s[2] + cs * s[1],
    ]
}
