//! Closed-form reference solutions used to check the solvers.

/// Primitive 1D gas state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

/// Exact solution of the 1D Riemann problem for an ideal gas.
#[derive(Debug, Clone, Copy)]
pub struct RiemannSolution {
    pub left: GasState,
    pub right: GasState,
    pub gamma: f64,
    /// Pressure and velocity in the star region.
    pub p_star: f64,
    pub u_star: f64,
}

impl RiemannSolution {
    /// Newton iteration on the pressure function; no vacuum generation.
    pub fn solve(left: GasState, right: GasState, gamma: f64) -> Self {
        let c = |s: &GasState| (gamma * s.p / s.rho).sqrt();
        let (cl, cr) = (c(&left), c(&right));
        let wave = |p: f64, s: &GasState, cs: f64| -> (f64, f64) {
            if p > s.p {
                let a = 2.0 / ((gamma + 1.0) * s.rho);
                let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
                let q = (a / (p + b)).sqrt();
                ((p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (p + b)))
            } else {
                let e = (gamma - 1.0) / (2.0 * gamma);
                let ratio = p / s.p;
                (
                    2.0 * cs / (gamma - 1.0) * (ratio.powf(e) - 1.0),
                    ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (s.rho * cs),
                )
            }
        };
        let du = right.u - left.u;
        let mut p = (0.5 * (left.p + right.p)).max(1e-12);
        for _ in 0..100 {
            let (fl, dl) = wave(p, &left, cl);
            let (fr, dr) = wave(p, &right, cr);
            let next = (p - (fl + fr + du) / (dl + dr)).max(1e-14);
            let change = 2.0 * (next - p).abs() / (next + p);
            p = next;
            if change < 1e-14 {
                break;
            }
        }
        let (fl, _) = wave(p, &left, cl);
        let (fr, _) = wave(p, &right, cr);
        Self {
            left,
            right,
            gamma,
            p_star: p,
            u_star: 0.5 * (left.u + right.u) + 0.5 * (fr - fl),
        }
    }

    /// State at similarity coordinate `s = x / t`.
    pub fn sample(&self, s: f64) -> GasState {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let side = |st: &GasState, sign: f64| -> GasState {
            // sign = -1 for the left wave, +1 for the right wave.
            let c = (g * st.p / st.rho).sqrt();
            if ps > st.p {
                let ratio = ps / st.p;
                let gm = (g - 1.0) / (g + 1.0);
                let shock = st.u + sign * c * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
                if sign * (s - shock) >= 0.0 {
                    *st
                } else {
                    GasState { rho: st.rho * (ratio + gm) / (gm * ratio + 1.0), u: us, p: ps }
                }
            } else {
                let c_star = c * (ps / st.p).powf((g - 1.0) / (2.0 * g));
                let head = st.u + sign * c;
                let tail = us + sign * c_star;
                if sign * (s - head) >= 0.0 {
                    *st
                } else if sign * (s - tail) <= 0.0 {
                    GasState { rho: st.rho * (ps / st.p).powf(1.0 / g), u: us, p: ps }
                } else {
                    let u = 2.0 / (g + 1.0) * (-sign * c + (g - 1.0) / 2.0 * st.u + s);
                    let cf = -sign * (u - s);
                    let rho = st.rho * (cf / c).powf(2.0 / (g - 1.0));
                    GasState { rho, u, p: st.p * (cf / c).powf(2.0 * g / (g - 1.0)) }
                }
            }
        };
        if s <= us {
            side(&self.left, -1.0)
        } else {
            side(&self.right, 1.0)
        }
    }
}

/// The classic Sod problem: `(1, 0, 1)` against `(0.125, 0, 0.1)`, `γ = 1.4`.
pub fn sod() -> RiemannSolution {
    RiemannSolution::solve(
        GasState { rho: 1.0, u: 0.0, p: 1.0 },
        GasState { rho: 0.125, u: 0.0, p: 0.1 },
        1.4,
    )
}

/// Uniaxial-stress response of linear-hardening J2 plasticity under monotonic
/// loading: returns `(σ, ε̄ᵖ)` at total strain `strain`.
pub fn j2_uniaxial(youngs: f64, yield_stress: f64, hardening: f64, strain: f64) -> (f64, f64) {
    let trial = youngs * strain.abs();
    if trial <= yield_stress {
        return (youngs * strain, 0.0);
    }
    let eps_p = (trial - yield_stress) / (youngs + hardening);
    ((yield_stress + hardening * eps_p) * strain.signum(), eps_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sod_star_state() {
        let s = sod();
        assert!((s.p_star - 0.30313).abs() < 1e-4);
        assert!((s.u_star - 0.92745).abs() < 1e-4);
        let post_shock = s.sample(1.7);
        assert!((post_shock.rho - 0.26557).abs() < 1e-4);
        let contact_left = s.sample(0.9);
        assert!((contact_left.rho - 0.42632).abs() < 1e-4);
        assert_eq!(s.sample(-2.0).rho, 1.0);
        assert_eq!(s.sample(2.0).rho, 0.125);
    }

    #[test]
    fn rarefaction_is_continuous() {
        let s = sod();
        let c = 1.4f64.sqrt();
        let head = s.sample(-c + 1e-9);
        assert!((head.rho - 1.0).abs() < 1e-6);
    }

    #[test]
    fn j2_tangent() {
        let (e, sy, h) = (200e9, 0.4e9, 0.1e9);
        let (s1, _) = j2_uniaxial(e, sy, h, 0.01);
        let (s2, _) = j2_uniaxial(e, sy, h, 0.011);
        assert!(((s2 - s1) / 0.001 - e * h / (e + h)).abs() < 1e-3);
        assert_eq!(j2_uniaxial(e, sy, h, 1e-3), (2e8, 0.0));
    }
}
