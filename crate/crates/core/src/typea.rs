//! Schubert varieties in the ordinary (type A) Grassmannian.
//!
//! The restriction-variety machinery specializes, when there are no quadric
//! steps, to the classical picture for Schubert varieties in `G(k, n)`.
//! This module keeps that baseline available independently: a Schubert
//! variety is recorded by its strictly increasing jumping dimensions
//! `λ_1 < … < λ_k ≤ n`, and its singular locus is the union of one
//! component per consecutive pair of jump groups, obtained by the hook
//! move below.
//!
//! Grouping the jumps into maximal consecutive runs `(n_{a_1}, α_1), …,
//! (n_{a_t}, α_t)` (run `l` ends at `n_{a_l}` and has length `α_l`), the
//! component for `l = 1..t−1` replaces run `l` by the run of length
//! `α_l + 1` ending at `n_{a_l}` and removes the smallest member of run
//! `l + 1`.  Its codimension is
//!
//! ```text
//! n_{a_{l+1}} − n_{a_l} − (a_{l+1} − a_l) + α_l + 1
//! ```
//!
//! and the resolution of the ambient variety has fibers of dimension `α_l`
//! over it, so the preimage of the component sits in codimension at least
//! two exactly when the variety is normal — which is always the case here.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

// ====================================================================
// Basic data
// ====================================================================

fn check_jumps(jumps: &[u32], n: u32) -> Result<()> {
    if jumps.is_empty() {
        return Err(Error::ParseError("a Schubert variety needs at least one jump".into()));
    }
    for w in jumps.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::OrderError(format!(
                "jumping dimensions must strictly increase, got {} before {}",
                w[0], w[1]
            )));
        }
    }
    if jumps[0] == 0 {
        return Err(Error::ParseError("jumping dimensions start at 1".into()));
    }
    if *jumps.last().unwrap() > n {
        return Err(Error::AmbientError(format!(
            "jump {} exceeds the ambient dimension n = {n}",
            jumps.last().unwrap()
        )));
    }
    Ok(())
}

/// Maximal consecutive runs of the jumps, as `(end, length)` pairs.
///
/// `(2, 6, 7, 11, 12, 13, 15)` groups into `(2,1), (7,2), (13,3), (15,1)`.
pub fn schubert_partition(jumps: &[u32], n: u32) -> Result<Vec<(u32, u32)>> {
    check_jumps(jumps, n)?;
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for &j in jumps {
        match runs.last_mut() {
            Some((end, len)) if *end + 1 == j => {
                *end = j;
                *len += 1;
            }
            _ => runs.push((j, 1)),
        }
    }
    Ok(runs)
}

/// Dimension of the Schubert variety: `Σ_j (λ_j − j)`.
pub fn schubert_dim(jumps: &[u32], n: u32) -> Result<i64> {
    check_jumps(jumps, n)?;
    Ok(jumps
        .iter()
        .enumerate()
        .map(|(idx, &j)| j as i64 - (idx as i64 + 1))
        .sum())
}

/// One component of the singular locus of a Schubert variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchubertComponent {
    /// Jumping dimensions of the component.
    pub jumps: Vec<u32>,
    /// Codimension of the component inside the Schubert variety.
    pub codim: i64,
    /// Fiber dimension of the standard resolution over the component.
    pub fiber_dim: i64,
    /// `codim − fiber_dim`; always at least 2.
    pub preimage_codim: i64,
}

/// The singular locus of the Schubert variety with the given jumps.
///
/// One component per consecutive pair of runs; a single run (`t = 1`) means
/// the variety is smooth and the result is empty.
pub fn schubert_singular_locus(jumps: &[u32], n: u32) -> Result<Vec<SchubertComponent>> {
    let runs = schubert_partition(jumps, n)?;
    let total_dim = schubert_dim(jumps, n)?;
    let t = runs.len();
    let mut out = Vec::new();
    for l in 1..t {
        let (end_l, alpha_l) = runs[l - 1];
        let (_, alpha_next) = runs[l];
        if end_l == alpha_l {
            // Run l is the complete prefix 1..α_l; there is no room to
            // extend it, and the corresponding component does not exist.
            continue;
        }
        // a_l = cumulative run lengths through run l.
        let a_l: u32 = runs[..l].iter().map(|&(_, a)| a).sum();
        let a_next = a_l + alpha_next;
        let n_next_start = jumps[a_l as usize]; // smallest member of run l+1

        let mut new_jumps: Vec<u32> = Vec::with_capacity(jumps.len());
        for &j in jumps {
            if j == n_next_start {
                continue; // run l+1 loses its smallest member
            }
            new_jumps.push(j);
        }
        // Run l becomes the run of length α_l + 1 ending at end_l.
        new_jumps.retain(|&j| !(j > end_l - alpha_l && j <= end_l));
        for v in (end_l - alpha_l)..=end_l {
            new_jumps.push(v);
        }
        new_jumps.sort_unstable();

        let n_a_next = runs[l].0;
        let codim =
            n_a_next as i64 - end_l as i64 - (a_next as i64 - a_l as i64) + alpha_l as i64 + 1;
        // Independent check: the codimension must match the dimension drop.
        debug_assert_eq!(codim, total_dim - schubert_dim(&new_jumps, n).unwrap());
        let fiber_dim = alpha_l as i64;
        out.push(SchubertComponent {
            jumps: new_jumps,
            codim,
            fiber_dim,
            preimage_codim: codim - fiber_dim,
        });
    }
    Ok(out)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: [u32; 7] = [2, 6, 7, 11, 12, 13, 15];

    #[test]
    fn partition_and_dim() {
        assert_eq!(
            schubert_partition(&FIXTURE, 17).unwrap(),
            vec![(2, 1), (7, 2), (13, 3), (15, 1)]
        );
        assert_eq!(schubert_dim(&FIXTURE, 17).unwrap(), 38);
    }

    #[test]
    fn singular_locus_in_g7_17() {
        let comps = schubert_singular_locus(&FIXTURE, 17).unwrap();
        assert_eq!(comps.len(), 3);

        assert_eq!(comps[0].jumps, vec![1, 2, 7, 11, 12, 13, 15]);
        assert_eq!(
            (comps[0].codim, comps[0].fiber_dim, comps[0].preimage_codim),
            (5, 1, 4)
        );

        assert_eq!(comps[1].jumps, vec![2, 5, 6, 7, 12, 13, 15]);
        assert_eq!(
            (comps[1].codim, comps[1].fiber_dim, comps[1].preimage_codim),
            (6, 2, 4)
        );

        assert_eq!(comps[2].jumps, vec![2, 6, 7, 10, 11, 12, 13]);
        assert_eq!(
            (comps[2].codim, comps[2].fiber_dim, comps[2].preimage_codim),
            (5, 3, 2)
        );
    }

    #[test]
    fn codim_matches_dimension_drop() {
        for comp in schubert_singular_locus(&FIXTURE, 17).unwrap() {
            assert_eq!(
                comp.codim,
                38 - schubert_dim(&comp.jumps, 17).unwrap(),
                "{:?}",
                comp.jumps
            );
            assert!(comp.preimage_codim >= 2);
        }
    }

    #[test]
    fn single_run_is_smooth() {
        assert!(schubert_singular_locus(&[6, 7, 8], 16).unwrap().is_empty());
    }

    #[test]
    fn complete_prefix_run_has_no_component() {
        // (1, 2, 5) corresponds to a single-row Young diagram: smooth.
        assert!(schubert_singular_locus(&[1, 2, 5], 8).unwrap().is_empty());
        // Only the first run can be a complete prefix; later runs still
        // produce their components.
        let comps = schubert_singular_locus(&[1, 4, 5, 9], 12).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].jumps, vec![1, 3, 4, 5]);
        assert_eq!((comps[0].codim, comps[0].fiber_dim), (6, 2));
    }

    #[test]
    fn rejects_bad_jumps() {
        assert!(matches!(
            schubert_singular_locus(&[3, 3], 9),
            Err(Error::OrderError(_))
        ));
        assert!(matches!(
            schubert_singular_locus(&[3, 12], 9),
            Err(Error::AmbientError(_))
        ));
        assert!(matches!(
            schubert_singular_locus(&[], 9),
            Err(Error::ParseError(_))
        ));
    }
}
