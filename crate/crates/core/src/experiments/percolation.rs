use std::collections::BTreeSet;
use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::{mix2, RngStream};

use super::ids;

/// Wet sites of oriented site percolation on
/// `{(z, n) : z_1 + … + z_d + n even}`, level by level.
#[derive(Clone, Debug, PartialEq)]
pub struct PercolationField {
    pub p: f64,
    pub depth: usize,
    pub dim: usize,
    /// `wet[n]` holds the wet `z` at level `n`.
    pub wet: Vec<BTreeSet<Site>>,
}

impl PercolationField {
    pub fn wet_count(&self, level: usize) -> usize {
        self.wet[level].len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "level,wet_count")?;
        for (n, level) in self.wet.iter().enumerate() {
            writeln!(w, "{n},{}", level.len())?;
        }
        Ok(())
    }
}

/// Uniform attached to `(z, n)`; the same for every `p`, which couples the
/// fields across `p`.
fn site_uniform(rng: &RngStream, z: &Site, level: usize) -> f64 {
    rng.substream(ids::PERCOLATION)
        .substream(mix2(z.key(), level as u64))
        .rng()
        .random::<f64>()
}

/// A level-(n+1) site is wet iff it is open (probability `p`) and a nearest
/// neighbour at level `n` is wet.
pub fn oriented_percolation(
    p: f64,
    depth: usize,
    dim: usize,
    initial: &[Site],
    rng: &RngStream,
) -> Result<PercolationField> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if dim == 0 {
        return Err(Error::InvalidDomain("dimension must be >= 1".into()));
    }
    for z in initial {
        if z.dim() != dim {
            return Err(Error::InvalidDomain(format!("{z} is not {dim}-dimensional")));
        }
        if z.coords().iter().map(|&c| c as i64).sum::<i64>().rem_euclid(2) != 0 {
            return Err(Error::InvalidDomain(format!("{z} has odd coordinate sum at level 0")));
        }
    }
    let mut wet = vec![initial.iter().cloned().collect::<BTreeSet<Site>>()];
    for n in 1..=depth {
        let mut next = BTreeSet::new();
        for z in &wet[n - 1] {
            for axis in 0..dim {
                for delta in [-1, 1] {
                    let mut c = z.coords().to_vec();
                    c[axis] += delta;
                    let y = Site::new(&c);
                    if !next.contains(&y) && site_uniform(rng, &y, n) < p {
                        next.insert(y);
                    }
                }
            }
        }
        wet.push(next);
    }
    Ok(PercolationField { p, depth, dim, wet })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_one_wets_the_light_cone() {
        let f = oriented_percolation(1.0, 6, 2, &[Site::origin(2)], &RngStream::new(1, 0)).unwrap();
        for n in 0..=6i32 {
            // |z|_1 <= n with the parity of n
            let mut expect = 0;
            for a in -n..=n {
                for b in -n..=n {
                    if a.abs() + b.abs() <= n && (a + b + n).rem_euclid(2) == 0 {
                        expect += 1;
                    }
                }
            }
            assert_eq!(f.wet_count(n as usize), expect);
        }
    }

    #[test]
    fn p_zero_keeps_initial_only() {
        let init = [Site::new(&[0]), Site::new(&[4])];
        let f = oriented_percolation(0.0, 5, 1, &init, &RngStream::new(1, 0)).unwrap();
        assert_eq!(f.wet_count(0), 2);
        assert!((1..=5).all(|n| f.wet_count(n) == 0));
    }

    #[test]
    fn wet_sites_have_even_parity_and_wet_parents() {
        let f = oriented_percolation(0.7, 12, 1, &[Site::origin(1)], &RngStream::new(2, 0)).unwrap();
        for n in 1..=12 {
            for z in &f.wet[n] {
                assert_eq!((z.coords()[0] + n as i32).rem_euclid(2), 0);
                let c = z.coords()[0];
                assert!(f.wet[n - 1].contains(&Site::new(&[c - 1])) || f.wet[n - 1].contains(&Site::new(&[c + 1])));
            }
        }
    }

    #[test]
    fn coupled_in_p() {
        let rng = RngStream::new(3, 0);
        let init: Vec<Site> = (-10..=10).step_by(2).map(|c| Site::new(&[c])).collect();
        let fields: Vec<_> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&p| oriented_percolation(p, 20, 1, &init, &rng).unwrap())
            .collect();
        for w in fields.windows(2) {
            for n in 0..=20 {
                assert!(w[0].wet[n].is_subset(&w[1].wet[n]));
            }
        }
    }

    #[test]
    fn rejects_odd_initial_site() {
        assert!(oriented_percolation(0.5, 3, 1, &[Site::new(&[1])], &RngStream::new(1, 0)).is_err());
        assert!(oriented_percolation(1.5, 3, 1, &[], &RngStream::new(1, 0)).is_err());
    }
}
