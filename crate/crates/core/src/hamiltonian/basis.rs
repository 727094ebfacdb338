use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `count`-particle occupations of `num_sites` orbitals of one spin,
/// as ascending bitmasks (bit `i` set ⇔ site `i` occupied).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfigs {
    num_sites: usize,
    count: usize,
    states: Vec<u64>,
}

impl SpinConfigs {
    pub fn new(num_sites: usize, count: usize) -> Result<Self> {
        if num_sites > 63 {
            return Err(Error::Sector(format!(
                "{num_sites} sites exceed the 63-site bitmask limit"
            )));
        }
        if count > num_sites {
            return Err(Error::Sector(format!(
                "{count} particles on {num_sites} sites"
            )));
        }
        let mut states = Vec::with_capacity(binomial(num_sites, count));
        if count == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks the fixed-popcount masks in increasing order.
            let limit = 1u64 << num_sites;
            let mut s: u64 = (1u64 << count) - 1;
            while s < limit {
                states.push(s);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        Ok(SpinConfigs {
            num_sites,
            count,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }
}

/// Configurations with exactly `n_up` up and `n_down` down electrons.
///
/// Index `a · D↓ + b` is the product of the `a`-th up and `b`-th down
/// configuration, so the state list is sorted by `(up, down)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    num_sites: usize,
    up: SpinConfigs,
    down: SpinConfigs,
}

impl SectorBasis {
    pub fn new(num_sites: usize, n_up: usize, n_down: usize) -> Result<Self> {
        Ok(SectorBasis {
            num_sites,
            up: SpinConfigs::new(num_sites, n_up)?,
            down: SpinConfigs::new(num_sites, n_down)?,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn n_up(&self) -> usize {
        self.up.count
    }

    pub fn n_down(&self) -> usize {
        self.down.count
    }

    pub fn up(&self) -> &SpinConfigs {
        &self.up
    }

    pub fn down(&self) -> &SpinConfigs {
        &self.down
    }

    pub fn dimension(&self) -> usize {
        self.up.len() * self.down.len()
    }

    /// `(up mask, down mask)` of basis state `index`.
    pub fn state(&self, index: usize) -> (u64, u64) {
        let nd = self.down.len();
        (self.up.states[index / nd], self.down.states[index % nd])
    }

    pub fn index_of(&self, up: u64, down: u64) -> Option<usize> {
        Some(self.up.index_of(up)? * self.down.len() + self.down.index_of(down)?)
    }

    pub fn states(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.up
            .states
            .iter()
            .flat_map(move |&u| self.down.states.iter().map(move |&d| (u, d)))
    }

    /// `⟨n_i⟩ = ⟨n_i↑ + n_i↓⟩` for a state given by per-basis-state weights
    /// `|ψ_k|²`.
    pub fn site_densities(&self, weights: impl Fn(usize) -> f64) -> Vec<f64> {
        let nd = self.down.len();
        let mut up_w = vec![0.0; self.up.len()];
        let mut down_w = vec![0.0; nd];
        for (a, uw) in up_w.iter_mut().enumerate() {
            for (b, dw) in down_w.iter_mut().enumerate() {
                let w = weights(a * nd + b);
                *uw += w;
                *dw += w;
            }
        }
        let mut n = vec![0.0; self.num_sites];
        for (mask, w) in self.up.states.iter().zip(&up_w) {
            add_bits(&mut n, *mask, *w);
        }
        for (mask, w) in self.down.states.iter().zip(&down_w) {
            add_bits(&mut n, *mask, *w);
        }
        n
    }
}

fn add_bits(n: &mut [f64], mut mask: u64, w: f64) {
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        n[i] += w;
        mask &= mask - 1;
    }
}

/// Build the basis for `(n_up, n_down)` on `num_sites` sites.
pub fn build_sector_basis(num_sites: usize, n_up: usize, n_down: usize) -> Result<SectorBasis> {
    SectorBasis::new(num_sites, n_up, n_down)
}
