//! Scalar measures reported during and after a run.

use crate::error::Result;
use crate::pd::PdSolid;
use crate::sim::FluidPart;

/// Damage above which a node counts as lost material.
pub const FAILED_DAMAGE: f64 = 0.99;

/// Mass fraction of nodes with `d ≥ 0.99`.
pub fn mass_loss(mass: &[f64], damage: &[f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let lost: f64 = mass
        .iter()
        .zip(damage)
        .filter(|(_, &d)| d >= FAILED_DAMAGE)
        .fold(0.0, |acc, (m, _)| acc + m);
    lost / total
}

pub fn solid_mass_loss(solid: &PdSolid) -> f64 {
    let mass: Vec<f64> = (0..solid.len()).map(|p| solid.mass(p)).collect();
    mass_loss(&mass, &solid.damage)
}

/// Mass-weighted mean of the positions `x`.
pub fn center_of_mass(solid: &PdSolid, x: &[[f64; 2]]) -> [f64; 2] {
    let mut c = [0.0; 2];
    let mut total = 0.0;
    for (p, xp) in x.iter().enumerate() {
        let m = solid.mass(p);
        c[0] += m * xp[0];
        c[1] += m * xp[1];
        total += m;
    }
    [c[0] / total, c[1] / total]
}

/// Displacement of the center of mass from the reference configuration.
pub fn com_displacement(solid: &PdSolid) -> [f64; 2] {
    let now = center_of_mass(solid, &solid.x);
    let then = center_of_mass(solid, &solid.nodes.reference);
    [now[0] - then[0], now[1] - then[1]]
}

/// Labels each node with its connected component in the intact-bond graph.
pub fn components(solid: &PdSolid) -> Vec<usize> {
    let n = solid.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for p in 0..n {
        for b in solid.families.bonds(p) {
            if solid.intact[b] {
                let (a, c) = (find(&mut parent, p), find(&mut parent, solid.families.neighbor[b]));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

/// Number of disconnected pieces, isolated nodes included.
pub fn fragment_count(solid: &PdSolid) -> usize {
    let labels = components(solid);
    labels.iter().enumerate().filter(|(i, &l)| *i == l).count()
}

/// Number of nodes with `d ≥ 0.99`.
pub fn failed_nodes(solid: &PdSolid) -> usize {
    solid.damage.iter().filter(|&&d| d >= FAILED_DAMAGE).count()
}

/// Background pressure at `x`, by spline interpolation.
pub fn probe_pressure(fluid: &FluidPart, x: [f64; 2]) -> Result<f64> {
    let (y, _) = fluid.problem.space.interpolate(&fluid.y, x)?;
    Ok(y[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_loss_counts() {
        assert_eq!(mass_loss(&[1.0, 1.0], &[0.0, 0.0]), 0.0);
        assert_eq!(mass_loss(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_eq!(mass_loss(&[2.0, 1.0, 1.0], &[0.995, 0.0, 0.5]), 0.5);
    }
}
