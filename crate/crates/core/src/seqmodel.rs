//! Sequence data model for restriction varieties.
//!
//! A restriction variety in `OG(k, n)` is recorded by a nested sequence
//!
//! ```text
//! L_{n_1} ⊆ … ⊆ L_{n_s} ⊆ Q^{r_{k-s}}_{d_{k-s}} ⊆ … ⊆ Q^{r_1}_{d_1}
//! ```
//!
//! of `s` isotropic linear spaces and `k − s` sub-quadrics.  Steps are stored
//! inner-to-outer: linear dimensions strictly increasing, then quadric
//! dimensions strictly increasing.  Quadrics are *indexed* from the outside
//! in ("paper index"): the outermost quadric is `i = 1` and the innermost is
//! `i = k − s`, so the stored position `p` (0-based among quadrics)
//! corresponds to the index `i = (k − s) − p`.
//!
//! The text grammar is whitespace-separated tokens, inner-to-outer:
//!
//! ```text
//! item := "L" INT ["'"] | "Q" INT "_" INT     e.g.  L2 L4' Q2_7
//! ```
//!
//! A primed linear step `L'_m` denotes the second family of maximal isotropic
//! subspaces and requires `2m = n`.  The JSON form mirrors the struct layout
//! (`{"n":…, "steps":[{"t":"L","dim":…,"primed":…},{"t":"Q","corank":…,"dim":…}],
//! "marking":…}`).
//!
//! This module also implements the compressed *partition* form, which records
//! each maximal run of consecutive dimensions by its largest member and
//! length: linear groups `(n_{a_g}, α_g)` for `g = 1..t`, quadric groups
//! `(d_{b_h}, β_h)` for `h = 1..u` (group 1 is the innermost group, the one
//! with the smallest dimensions), plus the full corank list `(r_1, …,
//! r_{k−s})` in paper order, which a partition does not otherwise determine.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

// ====================================================================
// Steps
// ====================================================================

/// One step of a restriction sequence: an isotropic linear space or a
/// sub-quadric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum Step {
    /// An isotropic linear space `L_dim`.  `primed` selects the second
    /// family of maximal isotropic subspaces and requires `2·dim = n`.
    #[serde(rename = "L")]
    Linear {
        dim: u32,
        #[serde(default)]
        primed: bool,
    },
    /// A sub-quadric `Q^corank_dim`: the quadric cut by a `dim`-dimensional
    /// linear section whose radical ("singular locus") has dimension
    /// `corank`.
    #[serde(rename = "Q")]
    Quadric { corank: u32, dim: u32 },
}

impl Step {
    /// Dimension of the linear span of the step.
    pub fn dim(&self) -> u32 {
        match *self {
            Step::Linear { dim, .. } => dim,
            Step::Quadric { dim, .. } => dim,
        }
    }

    /// True for linear steps.
    pub fn is_linear(&self) -> bool {
        matches!(self, Step::Linear { .. })
    }

    /// True for quadric steps.
    pub fn is_quadric(&self) -> bool {
        matches!(self, Step::Quadric { .. })
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::Linear { dim, primed } => {
                write!(f, "L{}{}", dim, if primed { "'" } else { "" })
            }
            Step::Quadric { corank, dim } => write!(f, "Q{}_{}", corank, dim),
        }
    }
}

// ====================================================================
// Sequences
// ====================================================================

/// A restriction sequence in `OG(k, n)`.
///
/// Construct through [`Sequence::new`] (which checks the structural
/// invariants below) or [`parse_sequence`].  The admissibility conditions
/// (1)–(9) are deliberately *not* checked here; see
/// [`crate::admissible::validate`].
///
/// Structural invariants enforced by `new`:
/// * every step dimension is at least 1 and at most `n`;
/// * all linear steps precede all quadric steps;
/// * linear dimensions strictly increase; quadric dimensions strictly
///   increase in storage order;
/// * `2k ≤ n`;
/// * a primed linear step satisfies `2·dim = n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequence {
    n: u32,
    steps: Vec<Step>,
    /// Optional marking: for each special index `i` (paper index, see
    /// [`crate::admissible::special_indices`]) the parity assigned to the
    /// component of maximal linear subspaces of `Q^{r_i}_{d_i}` containing
    /// the distinguished flag subspace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marking: Option<BTreeMap<usize, u8>>,
}

impl Sequence {
    /// Build a sequence, checking the structural invariants.
    pub fn new(n: u32, steps: Vec<Step>) -> Result<Self> {
        let seq = Sequence {
            n,
            steps,
            marking: None,
        };
        seq.check_structure()?;
        Ok(seq)
    }

    /// Build a sequence without structural checks.
    ///
    /// The degeneration rules pass through transient states that violate the
    /// public invariants (for example a primed step in an odd ambient while a
    /// split pair is being tracked); they use this constructor.  Anything
    /// user-facing should use [`Sequence::new`].
    pub fn new_unchecked(n: u32, steps: Vec<Step>) -> Self {
        Sequence {
            n,
            steps,
            marking: None,
        }
    }

    fn check_structure(&self) -> Result<()> {
        for st in &self.steps {
            if st.dim() == 0 {
                return Err(Error::ParseError(format!(
                    "step {st} has dimension 0; dimensions must be at least 1"
                )));
            }
            if st.dim() > self.n {
                return Err(Error::AmbientError(format!(
                    "step {st} does not fit in an ambient space of dimension {}",
                    self.n
                )));
            }
            if let Step::Linear { dim, primed: true } = *st {
                if 2 * dim != self.n {
                    return Err(Error::ParseError(format!(
                        "primed step L{dim}' requires 2·{dim} = n, but n = {}",
                        self.n
                    )));
                }
            }
        }
        if 2 * self.k() as u32 > self.n {
            return Err(Error::AmbientError(format!(
                "sequence of length {} does not define a point of OG({}, {})",
                self.k(),
                self.k(),
                self.n
            )));
        }
        let mut seen_quadric = false;
        let mut prev_linear: Option<u32> = None;
        let mut prev_quadric: Option<u32> = None;
        for st in &self.steps {
            match *st {
                Step::Linear { dim, .. } => {
                    if seen_quadric {
                        return Err(Error::OrderError(format!(
                            "linear step L{dim} appears after a quadric step"
                        )));
                    }
                    if let Some(p) = prev_linear {
                        if dim <= p {
                            return Err(Error::OrderError(format!(
                                "linear dimensions must strictly increase: L{p} then L{dim}"
                            )));
                        }
                    }
                    prev_linear = Some(dim);
                }
                Step::Quadric { dim, .. } => {
                    seen_quadric = true;
                    if let Some(p) = prev_quadric {
                        if dim <= p {
                            return Err(Error::OrderError(format!(
                                "quadric dimensions must strictly increase inner-to-outer: \
                                 dimension {p} then {dim}"
                            )));
                        }
                    }
                    prev_quadric = Some(dim);
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension `n`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of steps `k` (the sequence defines a subvariety of `OG(k, n)`).
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    /// Number of linear steps `s`.
    pub fn s(&self) -> usize {
        self.steps.iter().filter(|st| st.is_linear()).count()
    }

    /// Number of quadric steps `k − s`.
    pub fn num_quadrics(&self) -> usize {
        self.k() - self.s()
    }

    /// All steps, inner-to-outer.
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Linear dimensions `n_1 < … < n_s`.
    pub fn linear_dims(&self) -> Vec<u32> {
        self.steps
            .iter()
            .filter_map(|st| match *st {
                Step::Linear { dim, .. } => Some(dim),
                _ => None,
            })
            .collect()
    }

    /// Quadric steps `(corank, dim)` in storage order (dimensions
    /// increasing, i.e. paper index decreasing).
    pub fn quadrics_stored(&self) -> Vec<(u32, u32)> {
        self.steps
            .iter()
            .filter_map(|st| match *st {
                Step::Quadric { corank, dim } => Some((corank, dim)),
                _ => None,
            })
            .collect()
    }

    /// The quadric `(r_i, d_i)` with *paper index* `i ∈ 1..=k−s` (1 is the
    /// outermost quadric, the one with the largest dimension).
    pub fn quadric(&self, i: usize) -> Result<(u32, u32)> {
        let m = self.num_quadrics();
        if i == 0 || i > m {
            return Err(Error::IndexError(format!(
                "quadric index {i} out of range 1..={m}"
            )));
        }
        Ok(self.quadrics_stored()[m - i])
    }

    /// `x_i`: the number of linear steps contained in the singular locus of
    /// the `i`-th quadric, i.e. `|{j : n_j ≤ r_i}|`.
    pub fn x_of(&self, i: usize) -> Result<u32> {
        let (r_i, _) = self.quadric(i)?;
        Ok(self
            .linear_dims()
            .iter()
            .filter(|&&nj| nj <= r_i)
            .count() as u32)
    }

    /// The marking, if one is attached.
    pub fn marking(&self) -> Option<&BTreeMap<usize, u8>> {
        self.marking.as_ref()
    }

    /// Attach (or clear) a marking.  Parities other than 0/1 are rejected.
    pub fn set_marking(&mut self, marking: Option<BTreeMap<usize, u8>>) -> Result<()> {
        if let Some(m) = &marking {
            for (&i, &p) in m {
                if p > 1 {
                    return Err(Error::ParseError(format!(
                        "marking for index {i} must be a parity (0 or 1), got {p}"
                    )));
                }
            }
        }
        self.marking = marking;
        Ok(())
    }

    /// Canonical text form, e.g. `"L2 L4' Q2_7"`.
    pub fn format(&self) -> String {
        self.steps
            .iter()
            .map(|st| st.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Serialize to the documented JSON schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sequence serialization cannot fail")
    }

    /// Parse from the documented JSON schema, re-checking the structural
    /// invariants.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Sequence =
            serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        raw.check_structure()?;
        if let Some(m) = &raw.marking {
            for (&i, &p) in m {
                if p > 1 {
                    return Err(Error::ParseError(format!(
                        "marking for index {i} must be a parity (0 or 1), got {p}"
                    )));
                }
            }
        }
        Ok(raw)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format())
    }
}

// ====================================================================
// Text grammar
// ====================================================================

/// Parse the text grammar (`"L2 L4' Q2_7"`, inner-to-outer) into a sequence
/// in `OG(k, n)`.
pub fn parse_sequence(text: &str, n: u32) -> Result<Sequence> {
    let mut steps = Vec::new();
    for tok in text.split_whitespace() {
        steps.push(parse_step(tok)?);
    }
    Sequence::new(n, steps)
}

fn parse_step(tok: &str) -> Result<Step> {
    let bad = || Error::ParseError(format!("malformed step token `{tok}`"));
    if let Some(rest) = tok.strip_prefix('L') {
        let (digits, primed) = match rest.strip_suffix('\'') {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let dim: u32 = digits.parse().map_err(|_| bad())?;
        Ok(Step::Linear { dim, primed })
    } else if let Some(rest) = tok.strip_prefix('Q') {
        let (c, d) = rest.split_once('_').ok_or_else(bad)?;
        let corank: u32 = c.parse().map_err(|_| bad())?;
        let dim: u32 = d.parse().map_err(|_| bad())?;
        Ok(Step::Quadric { corank, dim })
    } else {
        Err(bad())
    }
}

/// Canonical text form of a sequence (inverse of [`parse_sequence`]).
pub fn format_sequence(seq: &Sequence) -> String {
    seq.format()
}

// ====================================================================
// Partition form
// ====================================================================

/// Compressed partition form of a sequence.
///
/// Each maximal run of consecutive dimensions is recorded as
/// `(largest member, run length)`:
///
/// * `linear[g-1] = (n_{a_g}, α_g)` for `g = 1..t`, smallest dimensions
///   first;
/// * `quadric[h-1] = (d_{b_h}, β_h)` for `h = 1..u`, *innermost group
///   first* (the group with the smallest dimensions is `h = 1`);
/// * `coranks = (r_1, …, r_{k−s})` in paper order (outermost quadric
///   first), which the group data does not determine;
/// * `primed_dims` lists the dimensions of primed linear steps so that the
///   round trip preserves the maximal-isotropic family choice.
///
/// Markings are not carried by the partition form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTriple {
    pub linear: Vec<(u32, u32)>,
    pub quadric: Vec<(u32, u32)>,
    pub coranks: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub primed_dims: Vec<u32>,
}

/// Split an ascending list into maximal runs of consecutive integers,
/// returning `(largest member, length)` per run.
fn runs(dims: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &d in dims {
        match out.last_mut() {
            Some((max, len)) if d == *max + 1 => {
                *max = d;
                *len += 1;
            }
            _ => out.push((d, 1)),
        }
    }
    out
}

/// Compute the partition form of a sequence.
pub fn to_partitions(seq: &Sequence) -> PartitionTriple {
    let linear = runs(&seq.linear_dims());
    let stored = seq.quadrics_stored();
    let qdims: Vec<u32> = stored.iter().map(|&(_, d)| d).collect();
    let quadric = runs(&qdims);
    // Stored coranks are inner-to-outer; paper order is outer-to-inner.
    let mut coranks: Vec<u32> = stored.iter().map(|&(r, _)| r).collect();
    coranks.reverse();
    let primed_dims = seq
        .steps()
        .iter()
        .filter_map(|st| match *st {
            Step::Linear { dim, primed: true } => Some(dim),
            _ => None,
        })
        .collect();
    PartitionTriple {
        linear,
        quadric,
        coranks,
        primed_dims,
    }
}

/// Reassemble a sequence from its partition form.
///
/// Fails with [`Error::InconsistentPartition`] if the group data is not in
/// compressed form (adjacent groups that should have merged), the corank
/// list length does not equal `Σ β_h`, a primed dimension is not a linear
/// dimension, or the reassembled steps violate the structural invariants.
pub fn from_partitions(triple: &PartitionTriple, n: u32) -> Result<Sequence> {
    let expand = |groups: &[(u32, u32)], what: &str| -> Result<Vec<u32>> {
        let mut dims = Vec::new();
        let mut prev_max: Option<u32> = None;
        for &(max, len) in groups {
            if len == 0 {
                return Err(Error::InconsistentPartition(format!(
                    "{what} group ({max}, {len}) has length 0"
                )));
            }
            if max < len {
                return Err(Error::InconsistentPartition(format!(
                    "{what} group ({max}, {len}) would start below dimension 1"
                )));
            }
            let min = max - len + 1;
            if let Some(p) = prev_max {
                if min <= p + 1 {
                    return Err(Error::InconsistentPartition(format!(
                        "{what} groups ending at {p} and {max} are not maximal runs"
                    )));
                }
            }
            dims.extend(min..=max);
            prev_max = Some(max);
        }
        Ok(dims)
    };

    let lin_dims = expand(&triple.linear, "linear")?;
    let quad_dims = expand(&triple.quadric, "quadric")?;
    let m = quad_dims.len();
    if triple.coranks.len() != m {
        return Err(Error::InconsistentPartition(format!(
            "corank list has {} entries but the quadric groups describe {m} quadrics",
            triple.coranks.len()
        )));
    }
    for &p in &triple.primed_dims {
        if !lin_dims.contains(&p) {
            return Err(Error::InconsistentPartition(format!(
                "primed dimension {p} is not a linear dimension of the partition"
            )));
        }
    }

    let mut steps = Vec::new();
    for &d in &lin_dims {
        steps.push(Step::Linear {
            dim: d,
            primed: triple.primed_dims.contains(&d),
        });
    }
    for (p, &d) in quad_dims.iter().enumerate() {
        // Stored position p (0-based, innermost first) has paper index m − p.
        let i = m - p;
        steps.push(Step::Quadric {
            corank: triple.coranks[i - 1],
            dim: d,
        });
    }
    Sequence::new(n, steps).map_err(|e| Error::InconsistentPartition(e.to_string()))
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(text: &str, n: u32) -> Sequence {
        parse_sequence(text, n).expect("test sequence must parse")
    }

    // ---------------- grammar ----------------

    #[test]
    fn parses_mixed_sequence() {
        let v = seq("L2 L3 Q7_17 Q6_18", 24);
        assert_eq!(v.k(), 4);
        assert_eq!(v.s(), 2);
        assert_eq!(v.num_quadrics(), 2);
        assert_eq!(v.linear_dims(), vec![2, 3]);
        // Paper index 1 is the outermost quadric.
        assert_eq!(v.quadric(1).unwrap(), (6, 18));
        assert_eq!(v.quadric(2).unwrap(), (7, 17));
        assert!(v.quadric(3).is_err());
        assert_eq!(v.format(), "L2 L3 Q7_17 Q6_18");
    }

    #[test]
    fn parses_minimal_and_primed() {
        let v = seq("L1", 2);
        assert_eq!(v.k(), 1);
        let v = seq("L4' Q1_7", 8);
        assert_eq!(
            v.steps()[0],
            Step::Linear {
                dim: 4,
                primed: true
            }
        );
        assert_eq!(v.format(), "L4' Q1_7");
    }

    #[test]
    fn rejects_bad_tokens() {
        for t in ["Lx", "Q5", "Q_7", "L", "Q5_", "X3", "L3''"] {
            assert!(
                matches!(parse_sequence(t, 20), Err(Error::ParseError(_))),
                "token {t} should be a parse error"
            );
        }
        assert!(matches!(
            parse_sequence("L0", 9),
            Err(Error::ParseError(_))
        ));
        // A primed step needs 2·dim = n.
        assert!(matches!(
            parse_sequence("L4'", 9),
            Err(Error::ParseError(_))
        ));
    }

    #[test]
    fn rejects_out_of_order_steps() {
        assert!(matches!(
            parse_sequence("Q1_7 L4", 16),
            Err(Error::OrderError(_))
        ));
        assert!(matches!(
            parse_sequence("L3 L3", 9),
            Err(Error::OrderError(_))
        ));
        assert!(matches!(
            parse_sequence("L4 L3", 9),
            Err(Error::OrderError(_))
        ));
        assert!(matches!(
            parse_sequence("Q2_7 Q2_6", 16),
            Err(Error::OrderError(_))
        ));
    }

    #[test]
    fn rejects_ambient_overflow() {
        assert!(matches!(
            parse_sequence("L1 L2 L3", 5),
            Err(Error::AmbientError(_))
        ));
        assert!(matches!(
            parse_sequence("Q0_10", 9),
            Err(Error::AmbientError(_))
        ));
    }

    // A corank exceeding the quadric dimension is *not* a structural error:
    // rejecting it is condition (7) territory, which `validate` owns.
    #[test]
    fn accepts_large_corank() {
        assert!(parse_sequence("Q18_11", 36).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let mut v = seq("L2 L4 Q2_7", 9);
        v.set_marking(Some([(1usize, 0u8)].into_iter().collect()))
            .unwrap();
        let j = v.to_json();
        let w = Sequence::from_json(&j).unwrap();
        assert_eq!(v, w);
        // JSON input is structurally checked too.
        let bad = r#"{"n":9,"steps":[{"t":"Q","corank":1,"dim":7},{"t":"L","dim":4}]}"#;
        assert!(matches!(
            Sequence::from_json(bad),
            Err(Error::OrderError(_))
        ));
    }

    // ---------------- x_of ----------------

    #[test]
    fn x_of_counts_linears_in_radical() {
        let v = seq("L2 L3 Q7_17 Q6_18", 24);
        assert_eq!(v.x_of(1).unwrap(), 2);
        assert_eq!(v.x_of(2).unwrap(), 2);

        // Only L3 lies in the 5-dimensional radical of the outer quadric;
        // it also lies in the 7-dimensional radical of the inner one.
        let v = seq("L3 Q7_10 Q5_20", 25);
        assert_eq!(v.x_of(1).unwrap(), 1);
        assert_eq!(v.x_of(2).unwrap(), 1);

        let v = seq("L4 Q2_7 Q1_8", 9);
        assert_eq!(v.x_of(1).unwrap(), 0);
        assert_eq!(v.x_of(2).unwrap(), 0);
    }

    // ---------------- partitions ----------------

    #[test]
    fn partition_form_of_mixed_sequence() {
        // Linear runs (2,3) and (6,7,8); quadric runs (11,12) and (18).
        let v = seq("L2 L3 L6 L7 L8 Q8_11 Q7_12 Q3_18", 36);
        let p = to_partitions(&v);
        assert_eq!(p.linear, vec![(3, 2), (8, 3)]);
        assert_eq!(p.quadric, vec![(12, 2), (18, 1)]);
        assert_eq!(p.coranks, vec![3, 7, 8]);
        assert!(p.primed_dims.is_empty());
        assert_eq!(from_partitions(&p, 36).unwrap(), v);
    }

    #[test]
    fn partition_form_of_pure_cases() {
        let v = seq("Q4_11 Q3_12 Q2_13", 15);
        let p = to_partitions(&v);
        assert_eq!(p.linear, vec![]);
        assert_eq!(p.quadric, vec![(13, 3)]);
        assert_eq!(p.coranks, vec![2, 3, 4]);
        assert_eq!(from_partitions(&p, 15).unwrap(), v);

        let v = seq("L6 L7 L8", 16);
        let p = to_partitions(&v);
        assert_eq!(p.linear, vec![(8, 3)]);
        assert_eq!(p.quadric, Vec::<(u32, u32)>::new());
        assert_eq!(p.coranks, Vec::<u32>::new());
        assert_eq!(from_partitions(&p, 16).unwrap(), v);

        let v = seq("L1", 2);
        assert_eq!(to_partitions(&v).linear, vec![(1, 1)]);
    }

    #[test]
    fn partition_form_keeps_primes() {
        let v = seq("L1 L4'", 8);
        let p = to_partitions(&v);
        assert_eq!(p.primed_dims, vec![4]);
        assert_eq!(from_partitions(&p, 8).unwrap(), v);
    }

    #[test]
    fn from_partitions_rejects_inconsistent_data() {
        // Mergeable linear groups (3) and (4) are not a compressed form.
        let p = PartitionTriple {
            linear: vec![(3, 1), (4, 1)],
            quadric: vec![],
            coranks: vec![],
            primed_dims: vec![],
        };
        assert!(matches!(
            from_partitions(&p, 12),
            Err(Error::InconsistentPartition(_))
        ));

        // Corank list length must equal the number of quadrics.
        let p = PartitionTriple {
            linear: vec![],
            quadric: vec![(13, 3)],
            coranks: vec![2, 3],
            primed_dims: vec![],
        };
        assert!(matches!(
            from_partitions(&p, 15),
            Err(Error::InconsistentPartition(_))
        ));

        // Primed dimension that is not a linear dimension.
        let p = PartitionTriple {
            linear: vec![(3, 1)],
            quadric: vec![],
            coranks: vec![],
            primed_dims: vec![4],
        };
        assert!(matches!(
            from_partitions(&p, 8),
            Err(Error::InconsistentPartition(_))
        ));
    }

    // ---------------- properties ----------------

    /// Structurally valid sequences whose coranks also weakly increase in
    /// paper order (condition (4)), which is what `x_of` monotonicity needs.
    pub(crate) fn arb_structural() -> impl Strategy<Value = Sequence> {
        (2u32..=40).prop_flat_map(|n| {
            let max_k = (n / 2).min(6) as usize;
            (0..=max_k).prop_flat_map(move |k| {
                (0..=k).prop_flat_map(move |s| {
                    let lin = proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), s);
                    let quad_dims =
                        proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), k - s);
                    let coranks = proptest::collection::vec(0u32..=n, k - s);
                    (lin, quad_dims, coranks).prop_map(move |(lin, qd, mut cr)| {
                        // Stored order is inner-to-outer: make the coranks
                        // weakly decreasing in storage order.
                        cr.sort_unstable_by(|a, b| b.cmp(a));
                        let mut steps: Vec<Step> = lin
                            .into_iter()
                            .map(|dim| Step::Linear { dim, primed: false })
                            .collect();
                        for (p, dim) in qd.into_iter().enumerate() {
                            steps.push(Step::Quadric {
                                corank: cr[p].min(n - dim.min(n)),
                                dim,
                            });
                        }
                        Sequence::new_unchecked(n, steps)
                    })
                })
            })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(v in arb_structural()) {
            prop_assume!(Sequence::new(v.n(), v.steps().to_vec()).is_ok());
            let text = format_sequence(&v);
            let w = parse_sequence(&text, v.n()).unwrap();
            prop_assert_eq!(v, w);
        }

        #[test]
        fn partition_round_trip(v in arb_structural()) {
            prop_assume!(Sequence::new(v.n(), v.steps().to_vec()).is_ok());
            let p = to_partitions(&v);
            let w = from_partitions(&p, v.n()).unwrap();
            prop_assert_eq!(v, w);
        }

        #[test]
        fn x_of_weakly_increases(v in arb_structural()) {
            prop_assume!(Sequence::new(v.n(), v.steps().to_vec()).is_ok());
            let m = v.num_quadrics();
            for i in 1..m {
                prop_assert!(v.x_of(i).unwrap() <= v.x_of(i + 1).unwrap());
            }
        }

        #[test]
        fn partition_groups_cover_all_steps(v in arb_structural()) {
            prop_assume!(Sequence::new(v.n(), v.steps().to_vec()).is_ok());
            let p = to_partitions(&v);
            let alpha: u32 = p.linear.iter().map(|&(_, a)| a).sum();
            let beta: u32 = p.quadric.iter().map(|&(_, b)| b).sum();
            prop_assert_eq!(alpha as usize, v.s());
            prop_assert_eq!(beta as usize, v.num_quadrics());
            prop_assert_eq!(p.coranks.len(), v.num_quadrics());
        }
    }
}
