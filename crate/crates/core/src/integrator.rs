//! Explicit lumped-mass generalized-α predictor–multicorrector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the first-order generalized-α family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenAlpha {
    pub rho_inf: f64,
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub gamma: f64,
    pub passes: usize,
}

impl GenAlpha {
    /// Second-order accurate parameters for spectral radius `rho_inf ∈ [0, 1]`.
    pub fn new(rho_inf: f64, passes: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_inf) || passes == 0 {
            return Err(Error::InvalidInput(format!(
                "need rho_inf in [0, 1] and at least one pass, got {rho_inf} and {passes}"
            )));
        }
        let alpha_m = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
        let alpha_f = 1.0 / (1.0 + rho_inf);
        Ok(Self {
            rho_inf,
            alpha_m,
            alpha_f,
            gamma: 0.5 + alpha_m - alpha_f,
            passes,
        })
    }

    /// Predicted rate: `Ẏ⁰ₙ₊₁ = (γ − 1)/γ Ẏₙ` (the state itself is held).
    pub fn predict_rate(&self, rate_n: f64) -> f64 {
        (self.gamma - 1.0) / self.gamma * rate_n
    }

    /// `Yₙ + α_f (Yₙ₊₁ − Yₙ)`.
    pub fn at_alpha_f(&self, n: f64, np1: f64) -> f64 {
        n + self.alpha_f * (np1 - n)
    }

    /// `Ẏₙ + α_m (Ẏₙ₊₁ − Ẏₙ)`.
    pub fn at_alpha_m(&self, n: f64, np1: f64) -> f64 {
        n + self.alpha_m * (np1 - n)
    }
}

impl Default for GenAlpha {
    fn default() -> Self {
        Self::new(0.5, 2).expect("valid defaults")
    }
}

/// A semi-discrete system advanced by [`step`].
pub trait ExplicitSystem {
    /// Sets the end-of-step iterates from the committed state.
    fn predict(&mut self, ga: &GenAlpha, dt: f64) -> Result<()>;
    /// Evaluates residuals at the α-levels and applies one lumped correction.
    fn correct(&mut self, ga: &GenAlpha, dt: f64, pass: usize) -> Result<()>;
    /// Commits the iterates and advances time.
    fn finish(&mut self, ga: &GenAlpha, dt: f64) -> Result<()>;
    /// Names the first non-finite unknown, if any.
    fn non_finite(&self) -> Option<String>;
    fn time(&self) -> f64;
    fn steps(&self) -> usize;
}

/// Advances `system` by one step of size `dt`.
pub fn step<S: ExplicitSystem + ?Sized>(system: &mut S, ga: &GenAlpha, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    system.predict(ga, dt)?;
    for pass in 0..ga.passes {
        system.correct(ga, dt, pass)?;
    }
    if let Some(what) = system.non_finite() {
        return Err(Error::Unstable {
            step: system.steps() + 1,
            time: system.time() + dt,
            what,
        });
    }
    system.finish(ga, dt)
}

/// `M ẏ = A y` with a diagonal (lumped) `M`, advanced with the same α-level
/// update as the background field.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub mass: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub y_t: Vec<f64>,
    y_new: Vec<f64>,
    yt_new: Vec<f64>,
    time: f64,
    steps: usize,
}

impl LinearSystem {
    /// Starts from `y` with the consistent rate `M⁻¹ A y`.
    pub fn new(mass: Vec<f64>, matrix: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if mass.len() != n || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("linear system dimensions disagree".into()));
        }
        if mass.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidInput("lumped masses must be positive".into()));
        }
        let y_t: Vec<f64> = (0..n).map(|i| dot(&matrix[i], &y) / mass[i]).collect();
        Ok(Self {
            mass,
            matrix,
            y_new: y.clone(),
            yt_new: y_t.clone(),
            y,
            y_t,
            time: 0.0,
            steps: 0,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

impl ExplicitSystem for LinearSystem {
    fn predict(&mut self, ga: &GenAlpha, _dt: f64) -> Result<()> {
        self.y_new.clone_from(&self.y);
        for (n, o) in self.yt_new.iter_mut().zip(&self.y_t) {
            *n = ga.predict_rate(*o);
        }
        Ok(())
    }

    fn correct(&mut self, ga: &GenAlpha, dt: f64, _pass: usize) -> Result<()> {
        let y_af: Vec<f64> = self.y.iter().zip(&self.y_new).map(|(a, b)| ga.at_alpha_f(*a, *b)).collect();
        for i in 0..self.y.len() {
            let yt_am = ga.at_alpha_m(self.y_t[i], self.yt_new[i]);
            let r = self.mass[i] * yt_am - dot(&self.matrix[i], &y_af);
            let d = -r / (ga.alpha_m * self.mass[i]);
            self.yt_new[i] += d;
            self.y_new[i] += ga.gamma * dt * d;
        }
        Ok(())
    }

    fn finish(&mut self, _ga: &GenAlpha, dt: f64) -> Result<()> {
        std::mem::swap(&mut self.y, &mut self.y_new);
        std::mem::swap(&mut self.y_t, &mut self.yt_new);
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    fn non_finite(&self) -> Option<String> {
        self.y_new
            .iter()
            .chain(&self.yt_new)
            .position(|v| !v.is_finite())
            .map(|i| format!("unknown {}", i % self.y.len()))
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
