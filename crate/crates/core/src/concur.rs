//! Weighted agreement ("concur") projection shared by all problem encodings.
//!
//! A concur group is a set of coordinates that all encode the same latent
//! value `m`, coordinate `c` storing `s_c * m` where `s_c` is its metric scale.
//! The nearest point with that structure is
//! `m = Σ s_c x_c / Σ s_c²`, `x_c ← s_c m`. With unit scales this is the plain
//! mean. Coordinates outside every group are left unchanged.

/// Disjoint groups of coordinates stored in compressed-row form.
#[derive(Debug, Clone, Default)]
pub struct ConcurGroups {
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl ConcurGroups {
    pub fn new() -> Self {
        ConcurGroups {
            offsets: vec![0],
            members: Vec::new(),
        }
    }

    pub fn push(&mut self, members: impl IntoIterator<Item = usize>) {
        self.members.extend(members);
        self.offsets.push(self.members.len());
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.members[self.offsets[g]..self.offsets[g + 1]]
    }

    /// Latent value of group `g`.
    pub fn latent(&self, g: usize, x: &[f64], scales: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for &c in self.group(g) {
            num += scales[c] * x[c];
            den += scales[c] * scales[c];
        }
        num / den
    }

    pub fn project(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        for g in 0..self.len() {
            let m = self.latent(g, x, scales);
            for &c in self.group(g) {
                out[c] = scales[c] * m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scales_average() {
        let mut g = ConcurGroups::new();
        g.push([0, 2, 4]);
        let x = [0.2, 9.0, 0.4, 7.0, 0.6];
        let mut out = [0.0; 5];
        g.project(&x, &[1.0; 5], &mut out);
        for c in [0, 2, 4] {
            assert!((out[c] - 0.4).abs() < 1e-15);
        }
        assert_eq!(out[1], 9.0);
        assert_eq!(out[3], 7.0);
    }

    #[test]
    fn weighted_average_matches_domset_formula() {
        // y with scale eta, one out-edge with unit scale
        let mut g = ConcurGroups::new();
        g.push([0, 1]);
        let mut out = [0.0; 2];
        g.project(&[1.0, 0.0], &[1.0, 1.0], &mut out);
        assert_eq!(out, [0.5, 0.5]);

        let eta: f64 = 0.6;
        let (y, x) = (0.3, 0.8);
        let m = (eta * y + x) / (eta * eta + 1.0);
        g.project(&[y, x], &[eta, 1.0], &mut out);
        assert!((out[0] - eta * m).abs() < 1e-15);
        assert!((out[1] - m).abs() < 1e-15);
    }
}
