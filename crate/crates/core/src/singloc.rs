//! Assembly of the singular locus from the degeneration loci.
//!
//! The resolution of a restriction variety contracts its exceptional locus
//! onto the degeneration loci computed in [`crate::degen`].  This module
//! collects those loci in a canonical order ([`exceptional_image`]),
//! decides containment between components ([`sequence_contains`]) and
//! produces the singular-locus report ([`singular_locus`]): the singular
//! components with redundancy flags, plus the components excluded because
//! the variety is smooth along them.

use crate::degen::{
    sigma_d, sigma_n_inner, sigma_ns, sigma_r, Classification, GateMode, Origin, SigmaLocus,
};
use crate::degen::{lin_group_info, quad_group_info};
use crate::seqmodel::{Sequence, Step};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

// ====================================================================
// Containment
// ====================================================================

/// Does the restriction variety of `inner` lie inside that of `outer`?
///
/// Both sequences must live in the same `OG(k, n)`; otherwise this is a
/// [`Error::LengthMismatch`].  Containment is decided stepwise on the
/// paired flag elements:
///
/// * `L_p ⊆ L_q` iff `p < q`, or `p = q` with equal primes;
/// * `L_p ⊆ Q^r_d` iff `p ≤ r + ⌊(d−r)/2⌋` (the cone's isotropic bound);
/// * `Q ⊆ L` never holds;
/// * `Q^{r_a}_{d_a} ⊆ Q^{r_b}_{d_b}` iff `d_a ≤ d_b`, `r_a ≥ r_b` and
///   `d_a + r_a ≤ d_b + r_b`.
pub fn sequence_contains(outer: &Sequence, inner: &Sequence) -> Result<bool> {
    if outer.n() != inner.n() || outer.k() != inner.k() {
        return Err(Error::LengthMismatch(format!(
            "containment compares sequences in the same OG(k, n); got k = {}, n = {} \
             against k = {}, n = {}",
            inner.k(),
            inner.n(),
            outer.k(),
            outer.n(),
        )));
    }
    for (si, so) in inner.steps().iter().zip(outer.steps()) {
        let fits = match (*si, *so) {
            (
                Step::Linear { dim: p, primed: pi },
                Step::Linear { dim: q, primed: po },
            ) => p < q || (p == q && pi == po),
            (Step::Linear { dim: p, .. }, Step::Quadric { corank: r, dim: d }) => {
                p as i64 <= r as i64 + (d as i64 - r as i64).div_euclid(2)
            }
            (Step::Quadric { .. }, Step::Linear { .. }) => false,
            (
                Step::Quadric { corank: ra, dim: da },
                Step::Quadric { corank: rb, dim: db },
            ) => da <= db && ra >= rb && da + ra <= db + rb,
        };
        if !fits {
            return Ok(false);
        }
    }
    Ok(true)
}

// ====================================================================
// Exceptional image
// ====================================================================

/// All degeneration loci of `seq` in canonical order: the linear jumps
/// `Σ_{n_{a_g}}` by group, then the jumps at `n_s` (plain before parity),
/// then the corank jumps `Σ_{r_{b_h}}` by group, then the dimension jumps
/// `Σ_{d_{b_h}}` by group.
pub fn exceptional_image(seq: &Sequence, mode: GateMode) -> Result<Vec<SigmaLocus>> {
    let t = lin_group_info(seq).len();
    let u = quad_group_info(seq)?.len();
    let mut out = Vec::new();
    for g in 1..t {
        if let Some(locus) = sigma_n_inner(seq, g, mode)? {
            out.push(locus);
        }
    }
    out.extend(sigma_ns(seq, mode)?);
    for h in 1..=u {
        if let Some(locus) = sigma_r(seq, h, mode)? {
            out.push(locus);
        }
    }
    for h in 1..u {
        if let Some(locus) = sigma_d(seq, h, mode)? {
            out.push(locus);
        }
    }
    Ok(out)
}

/// Recompute the smooth/singular classification of the locus with the
/// given origin.  [`Error::OriginMismatch`] when `seq` has no such locus.
pub fn classify_locus(seq: &Sequence, origin: Origin, mode: GateMode) -> Result<Classification> {
    let missing = || {
        Error::OriginMismatch(format!(
            "the sequence has no degeneration locus of origin {origin}"
        ))
    };
    let reremap = |e: Error| match e {
        Error::IndexError(msg) => Error::OriginMismatch(msg),
        other => other,
    };
    match origin {
        Origin::R { h } => sigma_r(seq, h, mode)
            .map_err(reremap)?
            .map(|l| l.classification)
            .ok_or_else(missing),
        Origin::N { g } => sigma_n_inner(seq, g, mode)
            .map_err(reremap)?
            .map(|l| l.classification)
            .ok_or_else(missing),
        Origin::D { h } => sigma_d(seq, h, mode)
            .map_err(reremap)?
            .map(|l| l.classification)
            .ok_or_else(missing),
        Origin::Ns | Origin::NsParity => sigma_ns(seq, mode)?
            .into_iter()
            .find(|l| l.origin == origin)
            .map(|l| l.classification)
            .ok_or_else(missing),
    }
}

// ====================================================================
// Singular locus report
// ====================================================================

/// One sequence of the singular locus (split pairs are flattened, so a
/// locus with a split pair contributes two components).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularComponent {
    /// Which degeneration produced the component.
    pub origin: Origin,
    /// The component itself.
    pub sequence: Sequence,
    /// Codimension inside the input variety.
    pub codim: i64,
    /// Fiber dimension of the resolution over the component.
    pub fiber_dim: i64,
    /// `codim − fiber_dim`.
    pub preimage_codim: i64,
    /// Smooth/singular classification.
    pub classification: Classification,
    /// Advisory: the component is contained in an earlier or larger one.
    pub redundant: bool,
}

/// The singular locus of a restriction variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularLocusReport {
    /// The input sequence.
    pub input: Sequence,
    /// Singular components in canonical order, with redundancy flags.
    pub components: Vec<SingularComponent>,
    /// Loci along which the variety is smooth, excluded from the locus.
    pub smooth_excluded: Vec<SingularComponent>,
}

fn flatten(locus: &SigmaLocus) -> Vec<SingularComponent> {
    locus
        .sequences
        .iter()
        .map(|s| SingularComponent {
            origin: locus.origin,
            sequence: s.clone(),
            codim: locus.codim,
            fiber_dim: locus.fiber_dim,
            preimage_codim: locus.preimage_codim,
            classification: locus.classification,
            redundant: false,
        })
        .collect()
}

/// Compute the singular locus of `seq`.
///
/// Every degeneration locus classified as singular contributes its
/// sequences as components; loci along which the variety is smooth are
/// reported separately in `smooth_excluded`.  A component contained in
/// another one is flagged `redundant` (kept in the list — the flag is
/// advisory, ties broken by canonical order).
pub fn singular_locus(seq: &Sequence, mode: GateMode) -> Result<SingularLocusReport> {
    let loci = exceptional_image(seq, mode)?;
    let mut components = Vec::new();
    let mut smooth_excluded = Vec::new();
    for locus in &loci {
        let entries = flatten(locus);
        if locus.classification == Classification::Smooth {
            smooth_excluded.extend(entries);
        } else {
            components.extend(entries);
        }
    }
    // Redundancy: e is redundant when some other component f contains it,
    // unless the containment is mutual and e comes first.
    let mut redundant = vec![false; components.len()];
    for (ei, e) in components.iter().enumerate() {
        for (fi, f) in components.iter().enumerate() {
            if ei == fi {
                continue;
            }
            if sequence_contains(&f.sequence, &e.sequence)? {
                let mutual = sequence_contains(&e.sequence, &f.sequence)?;
                if !mutual || fi < ei {
                    redundant[ei] = true;
                    break;
                }
            }
        }
    }
    for (c, r) in components.iter_mut().zip(redundant) {
        c.redundant = r;
    }
    Ok(SingularLocusReport {
        input: seq.clone(),
        components,
        smooth_excluded,
    })
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::{format_sequence, parse_sequence};

    fn seq(text: &str, n: u32) -> Sequence {
        parse_sequence(text, n).expect("test sequence must parse")
    }

    fn report(text: &str, n: u32) -> SingularLocusReport {
        singular_locus(&seq(text, n), GateMode::Default).unwrap()
    }

    fn fmt_components(report: &SingularLocusReport) -> Vec<(String, bool)> {
        report
            .components
            .iter()
            .map(|c| (format_sequence(&c.sequence), c.redundant))
            .collect()
    }

    fn fmt_smooth(report: &SingularLocusReport) -> Vec<String> {
        report
            .smooth_excluded
            .iter()
            .map(|c| format_sequence(&c.sequence))
            .collect()
    }

    // ----------------------------------------------------------------
    // Containment
    // ----------------------------------------------------------------

    #[test]
    fn containment_rules() {
        let outer = seq("L2 Q0_9", 9);
        assert!(sequence_contains(&outer, &seq("L1 L2", 9)).unwrap());
        // A quadric step never fits inside a linear step.
        assert!(!sequence_contains(&seq("L1 L2", 9), &outer).unwrap());
        // Linear inside quadric: the isotropic bound r + ⌊(d−r)/2⌋ = 4.
        assert!(sequence_contains(&seq("L2 Q3_6", 11), &seq("L2 L4", 11)).unwrap());
        assert!(!sequence_contains(&seq("L2 Q3_6", 11), &seq("L2 L5", 11)).unwrap());
        // Equal linear steps contain each other.
        assert!(sequence_contains(&seq("L2 L4", 11), &seq("L2 L4", 11)).unwrap());
        assert!(!sequence_contains(&seq("L2 L4", 11), &seq("L3 L4", 11)).unwrap());
        // Quadric inside quadric needs d, r and d + r all compatible.
        assert!(sequence_contains(&seq("Q2_7 Q0_9", 9), &seq("Q3_6 Q2_7", 9)).unwrap());
        assert!(!sequence_contains(&seq("Q3_6 Q2_7", 9), &seq("Q2_7 Q0_9", 9)).unwrap());
        // d ≤ d' and r ≥ r' alone are not enough: the sum bound can fail.
        assert!(!sequence_contains(&seq("L1 Q0_9", 10), &seq("L1 Q5_5", 10)).unwrap());
        // Mismatched ambient or length is an error, not `false`.
        assert!(matches!(
            sequence_contains(&seq("L2 Q0_9", 9), &seq("L2", 9)),
            Err(Error::LengthMismatch(_))
        ));
        assert!(matches!(
            sequence_contains(&seq("L2 Q0_9", 9), &seq("L1 Q0_8", 8)),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn primes_block_equality_containment() {
        let a = Sequence::new_unchecked(
            8,
            vec![Step::Linear { dim: 4, primed: false }],
        );
        let b = Sequence::new_unchecked(
            8,
            vec![Step::Linear { dim: 4, primed: true }],
        );
        assert!(!sequence_contains(&a, &b).unwrap());
        assert!(!sequence_contains(&b, &a).unwrap());
        assert!(sequence_contains(&a, &a).unwrap());
    }

    // ----------------------------------------------------------------
    // The worked examples, end to end
    // ----------------------------------------------------------------

    #[test]
    fn example_single_corank_jump() {
        let r = report("Q3_6 Q0_9", 9);
        assert_eq!(fmt_components(&r), [("L3 Q0_9".into(), false)]);
        assert!(fmt_smooth(&r).is_empty());
    }

    #[test]
    fn example_corank_and_dimension_jump() {
        let r = report("Q2_7 Q0_9", 9);
        assert_eq!(
            fmt_components(&r),
            [("L2 Q0_9".into(), false), ("Q3_6 Q2_7".into(), false)]
        );
    }

    #[test]
    fn example_jump_at_ns_equal_to_radical() {
        let r = report("L3 Q3_6 Q0_9", 9);
        assert_eq!(fmt_components(&r), [("L2 L3 Q0_9".into(), false)]);
    }

    #[test]
    fn example_split_pair() {
        let r = report("L3 Q1_7", 8);
        assert_eq!(
            fmt_components(&r),
            [
                ("L2 L3".into(), false),
                ("L1 L4".into(), false),
                ("L1 L4'".into(), false)
            ]
        );
    }

    #[test]
    fn example_smooth_exclusion() {
        let r = report("L2 L4 Q2_7", 9);
        assert_eq!(fmt_components(&r), [("L1 L2 L4".into(), false)]);
        assert_eq!(fmt_smooth(&r), ["L2 L3 L4"]);
    }

    #[test]
    fn example_all_three_origins() {
        // The printed union for this input keeps only the jump at n_s; the
        // corank and dimension jumps also fire here and are retained as
        // honest extra components (none of them redundant).
        let r = report("L3 Q1_7 Q0_9", 9);
        assert_eq!(
            fmt_components(&r),
            [
                ("L2 L3 Q0_9".into(), false),
                ("L1 L4 Q1_8".into(), false),
                ("L1 L4' Q1_8".into(), false),
                ("L1 Q2_6 Q1_7".into(), false)
            ]
        );
    }

    #[test]
    fn example_parity_and_corank() {
        let r = report("L4 Q2_7 Q1_8", 9);
        assert_eq!(
            fmt_components(&r),
            [("L2 L3 L4".into(), false), ("L1 L4 Q1_8".into(), false)]
        );
        assert_eq!(fmt_smooth(&r), ["L3 L4 Q1_8"]);
        // The corank component here has preimage codimension 1.
        let ib = &r.components[1];
        assert_eq!(
            (ib.codim, ib.fiber_dim, ib.preimage_codim),
            (3, 2, 1)
        );
    }

    #[test]
    fn example_linear_jump_and_ns() {
        let r = report("L2 L4 Q0_9", 9);
        assert_eq!(
            fmt_components(&r),
            [("L1 L2 Q2_7".into(), false), ("L2 L3 L4".into(), false)]
        );
    }

    #[test]
    fn example_redundant_components() {
        let r = report("L2 L4 Q2_7 Q0_9", 9);
        assert_eq!(
            fmt_components(&r),
            [
                ("L1 L2 L3 L4".into(), true),
                ("L1 L2 L4 Q2_7".into(), true),
                ("L1 L2 Q3_6 Q2_7".into(), false)
            ]
        );
        assert_eq!(fmt_smooth(&r), ["L2 L3 L4 Q0_9"]);
    }

    #[test]
    fn example_og_6_21() {
        let r = report("L3 L8 L9 Q6_12 Q5_13 Q1_20", 21);
        assert_eq!(
            fmt_components(&r),
            [
                ("L2 L3 L9 Q6_12 Q5_13 Q1_20".into(), false),
                ("L3 L6 L7 L8 L9 Q1_20".into(), false),
                ("L3 L5 L8 L9 Q5_13 Q1_20".into(), false),
                ("L3 L5 L8 L9' Q5_13 Q1_20".into(), false),
                ("L1 L8 L9 Q6_12 Q5_13 Q3_18".into(), false)
            ]
        );
        assert!(fmt_smooth(&r).is_empty());
    }

    // ----------------------------------------------------------------
    // Classification
    // ----------------------------------------------------------------

    #[test]
    fn classify_matches_the_loci() {
        let v = seq("L5 Q2_8", 11);
        assert_eq!(
            classify_locus(&v, Origin::Ns, GateMode::Default).unwrap(),
            Classification::Smooth
        );
        let v = seq("L4 Q1_8", 9);
        assert_eq!(
            classify_locus(&v, Origin::Ns, GateMode::Default).unwrap(),
            Classification::Singular
        );
        let v = seq("L2 L4 Q2_7", 9);
        assert_eq!(
            classify_locus(&v, Origin::R { h: 1 }, GateMode::Default).unwrap(),
            Classification::ByCodim
        );
        // Absent or out-of-range loci are origin mismatches.
        assert!(matches!(
            classify_locus(&v, Origin::D { h: 1 }, GateMode::Default),
            Err(Error::OriginMismatch(_))
        ));
        assert!(matches!(
            classify_locus(&v, Origin::NsParity, GateMode::Default),
            Err(Error::OriginMismatch(_))
        ));
    }

    #[test]
    fn exceptional_image_order() {
        let v = seq("L2 L4 Q2_7 Q0_9", 9);
        let origins: Vec<Origin> = exceptional_image(&v, GateMode::Default)
            .unwrap()
            .iter()
            .map(|l| l.origin)
            .collect();
        assert_eq!(
            origins,
            [
                Origin::Ns,
                Origin::NsParity,
                Origin::R { h: 1 },
                Origin::D { h: 1 }
            ]
        );
    }
}
