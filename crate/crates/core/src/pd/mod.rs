//! Bond-associated correspondence peridynamics.
//!
//! Each bond `P → Q` carries its own deformation gradient, reconstructed with
//! reproducing-kernel weights over the nodes the two families share. The
//! resulting stress is mapped back to forces through the same weights, so the
//! discrete forces are exactly self-equilibrated.

pub mod constitutive;
pub mod family;
pub mod rk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use constitutive::{max_principal, von_mises, Failure, Plasticity, SolidMaterial};
pub use family::Families;
use rk::{gradient_weights, Consistency};

use crate::error::{Error, Result};

/// Reference geometry of the material points.
#[derive(Debug, Clone, PartialEq)]
pub struct PdNodes {
    pub reference: Vec<[f64; 2]>,
    /// Nodal volume including the out-of-plane thickness, m³.
    pub volume: Vec<f64>,
    /// Nodal spacing, m.
    pub spacing: Vec<f64>,
}

impl PdNodes {
    /// Cell-centered nodes of an `nx × ny` grid covering `[x0, x0 + w] × [y0, y0 + h]`.
    pub fn rectangle(origin: [f64; 2], size: [f64; 2], nx: usize, ny: usize, thickness: f64) -> Self {
        let (hx, hy) = (size[0] / nx as f64, size[1] / ny as f64);
        let mut reference = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                reference.push([origin[0] + (i as f64 + 0.5) * hx, origin[1] + (j as f64 + 0.5) * hy]);
            }
        }
        let n = reference.len();
        Self {
            reference,
            volume: vec![hx * hy * thickness; n],
            spacing: vec![hx.max(hy); n],
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 || self.volume.len() != n || self.spacing.len() != n {
            return Err(Error::InvalidInput("inconsistent PD node arrays".into()));
        }
        if self.volume.iter().chain(&self.spacing).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("PD volumes and spacings must be positive".into()));
        }
        Ok(())
    }
}

/// Where bond gradients are reconstructed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Over the nodes shared by the two families of the bond.
    BondAssociated,
    /// Over the whole family of the bond's origin (classical correspondence).
    NodeBased,
}

/// Gradient weight `Φ_R V_R` of a lens member `R`.
type LensEntry = (u32, [f64; 2]);

/// Trial bond quantities for the end of a step.
#[derive(Debug, Clone)]
pub struct BondTrial {
    pub sigma: Vec<[f64; 3]>,
    pub eps_p: Vec<f64>,
    /// Bonds whose deformation gradient became degenerate.
    pub distorted: Vec<bool>,
}

/// A peridynamic body with its kinematic state and bond history.
#[derive(Debug, Clone)]
pub struct PdSolid {
    pub material: SolidMaterial,
    pub nodes: PdNodes,
    pub delta: f64,
    pub mode: GradientMode,
    pub families: Families,
    pub intact: Vec<bool>,
    /// Stiffness degradation factor of each bond, 1 for pristine bonds.
    pub degradation: Vec<f64>,
    pub sigma: Vec<[f64; 3]>,
    pub eps_p: Vec<f64>,
    pub damage: Vec<f64>,
    pub x: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub a: Vec<[f64; 2]>,
    lens: Vec<Vec<LensEntry>>,
    family_volume: Vec<f64>,
}

/// Velocity gradient and degeneracy flag from a lens.
fn lens_gradient(lens: &[LensEntry], p: usize, field: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    let fp = field[p];
    for &(r, w) in lens {
        let fr = field[r as usize];
        for i in 0..2 {
            let d = fr[i] - fp[i];
            g[i][0] += d * w[0];
            g[i][1] += d * w[1];
        }
    }
    g
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let d = det2(m);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// Admissible range of the bond Jacobian before the bond is considered destroyed.
const MIN_JACOBIAN: f64 = 0.05;
const MAX_JACOBIAN: f64 = 20.0;

/// Largest accepted `|Φ_R V_R| δ`. Nearly unisolvent lenses produce weights far
/// above this and a bond stiff enough to break the explicit step.
const MAX_WEIGHT: f64 = 10.0;

impl PdSolid {
    /// Builds families with horizon `delta` and the initial bond weights.
    pub fn new(nodes: PdNodes, material: SolidMaterial, delta: f64, mode: GradientMode) -> Result<Self> {
        nodes.validate()?;
        material.validate()?;
        let families = Families::build(&nodes.reference, delta)?;
        let nb = families.n_bonds();
        let n = nodes.len();
        let family_volume = (0..n)
            .map(|p| families.neighbors(p).iter().map(|&q| nodes.volume[q]).sum())
            .collect();
        let mut solid = Self {
            material,
            x: nodes.reference.clone(),
            v: vec![[0.0; 2]; n],
            a: vec![[0.0; 2]; n],
            nodes,
            delta,
            mode,
            intact: vec![true; nb],
            degradation: vec![1.0; nb],
            sigma: vec![[0.0; 3]; nb],
            eps_p: vec![0.0; nb],
            damage: vec![0.0; n],
            lens: vec![Vec::new(); nb],
            family_volume,
            families,
        };
        let all: Vec<bool> = vec![true; n];
        solid.refresh_lenses(&all);
        if let Some(p) = (0..n).find(|&p| solid.families.bonds(p).all(|b| !solid.intact[b])) {
            return Err(Error::SingularMoment { node: p });
        }
        solid.update_damage_field();
        Ok(solid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mass(&self, p: usize) -> f64 {
        self.material.density * self.nodes.volume[p]
    }

    /// Members of the reconstruction set of bond `b = P → Q`.
    fn lens_members(&self, p: usize, b: usize, associated: bool) -> (Vec<usize>, Vec<[f64; 2]>, Vec<f64>) {
        let q = self.families.neighbor[b];
        let xp = self.nodes.reference[p];
        let mut idx = Vec::new();
        for bb in self.families.bonds(p) {
            if !self.intact[bb] {
                continue;
            }
            let r = self.families.neighbor[bb];
            let keep = !associated
                || r == q
                || self.families.find(q, r).is_some_and(|qr| self.intact[qr]);
            if keep {
                idx.push(r);
            }
        }
        let xi = idx
            .iter()
            .map(|&r| {
                let xr = self.nodes.reference[r];
                [xr[0] - xp[0], xr[1] - xp[1]]
            })
            .collect();
        let vol = idx.iter().map(|&r| self.nodes.volume[r]).collect();
        (idx, xi, vol)
    }

    /// Gradient weights for bond `b`, falling back to smaller consistency
    /// or the full family when the shared set is degenerate.
    fn compute_lens(&self, p: usize, b: usize) -> Option<Vec<LensEntry>> {
        let attempts: &[(bool, Consistency)] = match self.mode {
            GradientMode::BondAssociated => &[
                (true, Consistency::Quadratic),
                (true, Consistency::Linear),
                (false, Consistency::Quadratic),
                (false, Consistency::Linear),
            ],
            GradientMode::NodeBased => &[(false, Consistency::Quadratic), (false, Consistency::Linear)],
        };
        for &(associated, order) in attempts {
            let (idx, xi, vol) = self.lens_members(p, b, associated);
            let w = gradient_weights(&xi, &vol, self.delta, order)
                .filter(|w| w.iter().all(|w| w[0].hypot(w[1]) * self.delta <= MAX_WEIGHT));
            if let Some(w) = w {
                return Some(idx.into_iter().map(|r| r as u32).zip(w).collect());
            }
        }
        None
    }

    /// Recomputes weights of bonds touching a dirty node; breaks bonds that
    /// have no admissible weights left. Returns the number of bonds broken.
    fn refresh_lenses(&mut self, dirty: &[bool]) -> usize {
        let mut dirty = dirty.to_vec();
        let mut broken = 0;
        loop {
            let n = self.len();
            let this = &*self;
            let marked = &dirty;
            let updates: Vec<(usize, Option<Vec<LensEntry>>)> = (0..n)
                .into_par_iter()
                .flat_map_iter(|p| {
                    let fam = &this.families;
                    fam.bonds(p)
                        .filter(|&b| this.intact[b] && (marked[p] || marked[fam.neighbor[b]]))
                        .map(|b| (b, this.compute_lens(p, b)))
                        .collect::<Vec<_>>()
                })
                .collect();
            dirty.iter_mut().for_each(|d| *d = false);
            let mut any = false;
            for (b, lens) in updates {
                match lens {
                    Some(l) => self.lens[b] = l,
                    None if self.intact[b] => {
                        broken += self.break_pair(b, &mut dirty);
                        any = true;
                    }
                    None => {}
                }
            }
            if !any {
                return broken;
            }
        }
    }

    fn break_pair(&mut self, b: usize, dirty: &mut [bool]) -> usize {
        let r = self.families.reverse[b];
        let mut count = 0;
        for bond in [b, r] {
            if self.intact[bond] {
                self.intact[bond] = false;
                self.degradation[bond] = 0.0;
                self.sigma[bond] = [0.0; 3];
                self.lens[bond].clear();
                count += 1;
            }
        }
        let p = self.families.neighbor[r];
        let q = self.families.neighbor[b];
        dirty[p] = true;
        dirty[q] = true;
        count
    }

    fn origin_of(&self, b: usize) -> usize {
        self.families.neighbor[self.families.reverse[b]]
    }

    /// Deformation-type gradient `Σ_R (f_R − f_P) ⊗ Φ_R V_R` of bond `b` for any nodal field.
    pub fn bond_gradient(&self, b: usize, field: &[[f64; 2]]) -> [[f64; 2]; 2] {
        lens_gradient(&self.lens[b], self.origin_of(b), field)
    }

    /// Velocity gradient `L = Ḟ F⁻¹` of bond `b` in the configuration `x` with velocities `v`.
    pub fn bond_velocity_gradient(&self, b: usize, x: &[[f64; 2]], v: &[[f64; 2]]) -> Option<[[f64; 2]; 2]> {
        let f = self.bond_gradient(b, x);
        let fdot = self.bond_gradient(b, v);
        inv2(&f).map(|fi| mul2(&fdot, &fi))
    }

    /// Stress update of every intact bond for the motion `x_n → x_new` over `dt`,
    /// starting from the committed history.
    pub fn trial_bonds(&self, x_n: &[[f64; 2]], x_new: &[[f64; 2]], dt: f64) -> BondTrial {
        let nb = self.families.n_bonds();
        let per_node: Vec<Vec<([f64; 3], f64, bool)>> = (0..self.len())
            .into_par_iter()
            .map(|p| {
                self.families
                    .bonds(p)
                    .map(|b| {
                        if !self.intact[b] {
                            return ([0.0; 3], self.eps_p[b], false);
                        }
                        let f0 = lens_gradient(&self.lens[b], p, x_n);
                        let f1 = lens_gradient(&self.lens[b], p, x_new);
                        let mid = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (f0[i][j] + f1[i][j])));
                        let j1 = det2(&f1);
                        let ok = j1.is_finite() && (MIN_JACOBIAN..=MAX_JACOBIAN).contains(&j1);
                        match inv2(&mid) {
                            Some(mi) if ok => {
                                let fdot = std::array::from_fn(|i| {
                                    std::array::from_fn(|j| (f1[i][j] - f0[i][j]) / dt)
                                });
                                let l = mul2(&fdot, &mi);
                                let (s, e) = self.material.update_stress(self.sigma[b], self.eps_p[b], l, dt);
                                (s, e, false)
                            }
                            _ => ([0.0; 3], self.eps_p[b], true),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut trial = BondTrial {
            sigma: Vec::with_capacity(nb),
            eps_p: Vec::with_capacity(nb),
            distorted: Vec::with_capacity(nb),
        };
        for (s, e, d) in per_node.into_iter().flatten() {
            trial.sigma.push(s);
            trial.eps_p.push(e);
            trial.distorted.push(d);
        }
        trial
    }

    /// Internal force density `∫_H (T − T′) dH` at every node for bond Cauchy
    /// stresses `sigma` in configuration `x`.
    pub fn internal_force(&self, x: &[[f64; 2]], sigma: &[[f64; 3]]) -> Vec<[f64; 2]> {
        let vol = &self.nodes.volume;
        let per_node: Vec<([f64; 2], Vec<(u32, [f64; 2])>)> = (0..self.len())
            .into_par_iter()
            .map(|p| {
                let mut own = [0.0; 2];
                let mut others = Vec::new();
                for b in self.families.bonds(p) {
                    if !self.intact[b] || self.degradation[b] == 0.0 {
                        continue;
                    }
                    let q = self.families.neighbor[b];
                    let lens = &self.lens[b];
                    let f = lens_gradient(lens, p, x);
                    let Some(fi) = inv2(&f) else { continue };
                    let j = det2(&f);
                    let s = sigma[b];
                    let cauchy = [[s[0], s[2]], [s[2], s[1]]];
                    // First Piola–Kirchhoff stress J σ F⁻ᵀ.
                    let fit = [[fi[0][0], fi[1][0]], [fi[0][1], fi[1][1]]];
                    let pk = mul2(&cauchy, &fit).map(|row| row.map(|v| v * j));
                    let omega = self.degradation[b] / self.family_volume[p];
                    let scale = omega * vol[q];
                    for &(r, w) in lens {
                        let t = [
                            scale * (pk[0][0] * w[0] + pk[0][1] * w[1]),
                            scale * (pk[1][0] * w[0] + pk[1][1] * w[1]),
                        ];
                        own[0] += t[0];
                        own[1] += t[1];
                        let back = vol[p] / vol[r as usize];
                        others.push((r, [-t[0] * back, -t[1] * back]));
                    }
                }
                (own, others)
            })
            .collect();
        let mut force = vec![[0.0; 2]; self.len()];
        for (p, (own, _)) in per_node.iter().enumerate() {
            force[p][0] += own[0];
            force[p][1] += own[1];
        }
        for (_, others) in &per_node {
            for &(r, t) in others {
                force[r as usize][0] += t[0];
                force[r as usize][1] += t[1];
            }
        }
        force
    }

    /// Accepts the trial bond states as the new history.
    pub fn commit(&mut self, trial: &BondTrial) {
        for b in 0..self.families.n_bonds() {
            if self.intact[b] {
                self.sigma[b] = trial.sigma[b];
                self.eps_p[b] = self.eps_p[b].max(trial.eps_p[b]);
            }
        }
    }

    /// Applies the failure model to the committed bond states, breaks bonds,
    /// refreshes the affected weights and recomputes nodal damage.
    /// Returns the number of directed bonds broken.
    pub fn update_damage(&mut self, distorted: &[bool]) -> usize {
        let mut dirty = vec![false; self.len()];
        let mut broken = 0;
        for p in 0..self.len() {
            for b in self.families.bonds(p) {
                if !self.intact[b] {
                    continue;
                }
                let fail = distorted.get(b).copied().unwrap_or(false)
                    || match self.material.failure {
                        Failure::None => false,
                        Failure::Ductile { eps_threshold, eps_critical } => {
                            let e = self.eps_p[b];
                            let ramp = ((eps_critical - e) / (eps_critical - eps_threshold)).clamp(0.0, 1.0);
                            self.degradation[b] = self.degradation[b].min(ramp);
                            e >= eps_critical
                        }
                        Failure::Brittle { sigma_critical } => max_principal(self.sigma[b]) > sigma_critical,
                    };
                if fail {
                    broken += self.break_pair(b, &mut dirty);
                }
            }
        }
        if broken > 0 {
            broken += self.refresh_lenses(&dirty);
        }
        self.update_damage_field();
        broken
    }

    fn update_damage_field(&mut self) {
        for p in 0..self.len() {
            let kept: f64 = self
                .families
                .bonds(p)
                .filter(|&b| self.intact[b])
                .map(|b| self.degradation[b] * self.nodes.volume[self.families.neighbor[b]])
                .sum();
            let d = (1.0 - kept / self.family_volume[p]).clamp(0.0, 1.0);
            self.damage[p] = self.damage[p].max(d);
        }
    }

    /// Total linear momentum.
    pub fn momentum(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for p in 0..self.len() {
            let mass = self.mass(p);
            m[0] += mass * self.v[p][0];
            m[1] += mass * self.v[p][1];
        }
        m
    }

    pub fn n_bonds(&self) -> usize {
        self.families.n_bonds()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(nx: usize, ny: usize, mode: GradientMode) -> PdSolid {
        let h = 0.001;
        let nodes = PdNodes::rectangle([0.0, 0.0], [nx as f64 * h, ny as f64 * h], nx, ny, 0.0035);
        PdSolid::new(nodes, SolidMaterial::steel(), 2.5 * h, mode).unwrap()
    }

    fn interior(s: &PdSolid, p: usize) -> bool {
        let x = s.nodes.reference[p];
        let (w, h) = (
            s.nodes.reference.iter().map(|r| r[0]).fold(0.0, f64::max),
            s.nodes.reference.iter().map(|r| r[1]).fold(0.0, f64::max),
        );
        let m = 2.0 * s.delta;
        x[0] > m && x[1] > m && x[0] < w - m && x[1] < h - m
    }

    #[test]
    fn affine_velocity_gives_exact_gradient() {
        let s = block(14, 14, GradientMode::BondAssociated);
        let a = [[0.1, 0.2], [0.0, -0.1]];
        let v: Vec<[f64; 2]> = s.x.iter().map(|x| [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]).collect();
        for p in (0..s.len()).filter(|&p| interior(&s, p)) {
            for b in s.families.bonds(p) {
                let l = s.bond_velocity_gradient(b, &s.x, &v).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((l[i][j] - a[i][j]).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_stress_is_self_equilibrated_in_the_interior() {
        let s = block(16, 16, GradientMode::BondAssociated);
        let sigma = vec![[3e8, -1e8, 5e7]; s.n_bonds()];
        let f = s.internal_force(&s.x, &sigma);
        for p in (0..s.len()).filter(|&p| interior(&s, p)) {
            assert!(f[p][0].abs() < 1e-3 * 3e8 / s.delta && f[p][1].abs() < 1e-3 * 3e8 / s.delta);
        }
        let total = (0..s.len()).fold([0.0; 2], |t, p| {
            [t[0] + f[p][0] * s.nodes.volume[p], t[1] + f[p][1] * s.nodes.volume[p]]
        });
        let scale: f64 = (0..s.len()).map(|p| f[p][0].abs() * s.nodes.volume[p]).sum();
        assert!(total[0].abs() < 1e-10 * scale && total[1].abs() < 1e-10 * scale);
    }

    #[test]
    fn lenses_are_subsets_of_both_families() {
        let s = block(8, 8, GradientMode::BondAssociated);
        for p in 0..s.len() {
            for b in s.families.bonds(p) {
                let q = s.families.neighbor[b];
                for &(r, _) in &s.lens[b] {
                    let r = r as usize;
                    assert!(s.families.find(p, r).is_some());
                    assert!(r == q || s.families.find(q, r).is_some());
                }
            }
        }
    }

    #[test]
    fn ductile_degradation_and_damage() {
        let mut s = block(6, 6, GradientMode::BondAssociated);
        s.material.failure = Failure::Ductile { eps_threshold: 0.18, eps_critical: 0.2 };
        s.eps_p.iter_mut().for_each(|e| *e = 0.1);
        assert_eq!(s.update_damage(&[]), 0);
        assert!(s.damage.iter().all(|&d| d == 0.0));
        let b = s.families.bonds(14).start;
        s.eps_p[b] = 0.19;
        s.update_damage(&[]);
        assert!((s.degradation[b] - 0.5).abs() < 1e-12);
        s.eps_p.iter_mut().for_each(|e| *e = 0.25);
        s.update_damage(&[]);
        assert!(s.damage.iter().all(|&d| d == 1.0));
        assert!(s.intact.iter().all(|&i| !i));
    }

    #[test]
    fn brittle_breaking_is_permanent() {
        let mut s = block(6, 6, GradientMode::BondAssociated);
        s.material.failure = Failure::Brittle { sigma_critical: 3e9 };
        s.sigma.iter_mut().for_each(|x| *x = [-5e9, -5e9, 0.0]);
        assert_eq!(s.update_damage(&[]), 0);
        let b = s.families.bonds(20).start;
        s.sigma[b] = [3.1e9, 0.0, 0.0];
        assert!(s.update_damage(&[]) >= 2);
        assert!(!s.intact[b] && !s.intact[s.families.reverse[b]]);
        s.sigma.iter_mut().for_each(|x| *x = [0.0; 3]);
        s.update_damage(&[]);
        assert!(!s.intact[b]);
        assert!(s.damage[20] > 0.0);
    }
}
