//! Admissibility of restriction sequences.
//!
//! A sequence defines a restriction variety only when nine interlocking
//! conditions hold.  With `x_i = |{j : n_j ≤ r_i}|` they are:
//!
//! 1. `2·n_s ≤ d_{k−s} + r_{k−s}` — the innermost quadric has room for the
//!    largest isotropic linear space.
//! 2. `2(k−i+1) ≤ r_i + d_i` for every `i` — corank bound per quadric.
//! 3. `r_{i+1} + d_{i+1} ≤ r_i + d_i ≤ n` for every `i` — the quantity
//!    `r + d` grows outward and fits the ambient space.
//! 4. The radicals are nested: `r_{i−1} ≤ r_i` (the quadrics are indexed
//!    from the outside in, so radicals grow inward).
//! 5. `dim(L_{n_j} ∩ Q^{r_i,sing}_{d_i}) = min(n_j, r_i)` — the linear
//!    steps and the radicals are in the most special position.  With the
//!    reference flag all of these are prefix spans, so this condition has no
//!    independent failure mode on the sequence data; it constrains the flag
//!    realization (which the finite-field oracle verifies explicitly) and is
//!    never reported here.
//! 6. For every `i` either `r_i = r_1 = x_1`, or `r_l − r_i ≥ l − i − 1`
//!    for every `l > i`.  Furthermore, if `r_l = r_{l−1} > x_1` for some
//!    `l`, then `d_i − d_{i+1} = r_{i+1} − r_i` for all `i ≥ l`, and
//!    `d_{l−1} − d_l = 1`.
//! 7. `r_{k−s} ≤ d_{k−s} − 3` — every quadric step is irreducible (checked
//!    on the innermost, which is extremal by (3) and (4)).
//! 8. `x_i ≥ k − i + 1 − (d_i − r_i)/2` — the linear space bound.
//! 9. There is no pair with `n_j − r_i = 1` — tangency would vary the
//!    tangent space.
//!
//! When (8) is an *equality* at index `i`, the maximal linear subspaces on
//! `Q^{r_i}_{d_i}` split into two families; such an `i` is a *special
//! index*, and a marking assigns a parity to the family containing the
//! distinguished flag subspace.  [`validate_marking`] checks the three
//! coherence rules a marking must satisfy.

use crate::seqmodel::Sequence;
use serde::{Deserialize, Serialize};
use std::fmt;

// ====================================================================
// Violations
// ====================================================================

/// Identifier of a failed admissibility condition.
///
/// `C1`–`C9` are the numbered conditions; `COrder` and `CAmbient` flag
/// structurally broken sequences (possible when a sequence was built with
/// `new_unchecked`); `CMarking` flags marking incoherence reported by
/// [`validate_marking`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    COrder,
    CAmbient,
    CMarking,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::C1 => "C1",
            ConditionId::C2 => "C2",
            ConditionId::C3 => "C3",
            ConditionId::C4 => "C4",
            ConditionId::C5 => "C5",
            ConditionId::C6 => "C6",
            ConditionId::C7 => "C7",
            ConditionId::C8 => "C8",
            ConditionId::C9 => "C9",
            ConditionId::COrder => "COrder",
            ConditionId::CAmbient => "CAmbient",
            ConditionId::CMarking => "CMarking",
        };
        f.write_str(s)
    }
}

/// One failed condition with a human-readable explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition_id: ConditionId,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.condition_id, self.detail)
    }
}

fn violation(condition_id: ConditionId, detail: String) -> Violation {
    Violation {
        condition_id,
        detail,
    }
}

// ====================================================================
// Validation
// ====================================================================

/// Check all admissibility conditions, returning every violation found.
///
/// This is a total function: it never panics or errors.  A structurally
/// broken sequence (only possible via `new_unchecked`) reports `COrder` /
/// `CAmbient` and skips the numbered conditions, whose indexing would be
/// meaningless.  An empty result means the sequence is admissible.
///
/// Primed steps carry no extra conditions here; their ambient constraint
/// (`2·dim = n`) is structural.
pub fn validate(seq: &Sequence) -> Vec<Violation> {
    // Structural re-check (sequences from `new`/`parse_sequence` always pass).
    if let Err(e) = Sequence::new(seq.n(), seq.steps().to_vec()) {
        let id = match e {
            crate::Error::AmbientError(_) => ConditionId::CAmbient,
            _ => ConditionId::COrder,
        };
        return vec![violation(id, e.to_string())];
    }

    let mut out = Vec::new();
    let n = seq.n() as i64;
    let k = seq.k() as i64;
    let s = seq.s();
    let m = seq.num_quadrics();
    let linears = seq.linear_dims();

    // Paper-indexed quadric data, 1-based: (r_i, d_i, x_i).
    let quad = |i: usize| -> (i64, i64, i64) {
        let (r, d) = seq.quadric(i).expect("index in range");
        let x = seq.x_of(i).expect("index in range");
        (r as i64, d as i64, x as i64)
    };

    // (1) 2 n_s ≤ d_{k−s} + r_{k−s}.
    if s >= 1 && m >= 1 {
        let ns = *linears.last().unwrap() as i64;
        let (r, d, _) = quad(m);
        if 2 * ns > d + r {
            out.push(violation(
                ConditionId::C1,
                format!("2·n_s = {} exceeds d_{{k-s}} + r_{{k-s}} = {}", 2 * ns, d + r),
            ));
        }
    }

    // (2) 2(k−i+1) ≤ r_i + d_i.
    for i in 1..=m {
        let (r, d, _) = quad(i);
        let need = 2 * (k - i as i64 + 1);
        if need > r + d {
            out.push(violation(
                ConditionId::C2,
                format!("2(k-i+1) = {need} exceeds r_{i} + d_{i} = {}", r + d),
            ));
        }
    }

    // (3) r_{i+1} + d_{i+1} ≤ r_i + d_i ≤ n.
    for i in 1..=m {
        let (r, d, _) = quad(i);
        if r + d > n {
            out.push(violation(
                ConditionId::C3,
                format!("r_{i} + d_{i} = {} exceeds n = {n}", r + d),
            ));
        }
        if i < m {
            let (r2, d2, _) = quad(i + 1);
            if r2 + d2 > r + d {
                out.push(violation(
                    ConditionId::C3,
                    format!(
                        "r_{} + d_{} = {} exceeds r_{i} + d_{i} = {}",
                        i + 1,
                        i + 1,
                        r2 + d2,
                        r + d
                    ),
                ));
            }
        }
    }

    // (4) nested radicals: r_{i−1} ≤ r_i.
    for i in 2..=m {
        let (r_prev, _, _) = quad(i - 1);
        let (r, _, _) = quad(i);
        if r_prev > r {
            out.push(violation(
                ConditionId::C4,
                format!("radicals not nested: r_{} = {r_prev} exceeds r_{i} = {r}", i - 1),
            ));
        }
    }

    // (5) has no independent failure mode; see the module docs.

    // (6) corank gap condition.
    if m >= 1 {
        let x1 = quad(1).2;
        let r1 = quad(1).0;
        for i in 1..=m {
            let (ri, _, _) = quad(i);
            let branch1 = ri == r1 && r1 == x1;
            let branch2 = (i + 1..=m).all(|l| {
                let (rl, _, _) = quad(l);
                rl - ri >= l as i64 - i as i64 - 1
            });
            if !branch1 && !branch2 {
                out.push(violation(
                    ConditionId::C6,
                    format!(
                        "index {i}: r_{i} = {ri} is neither r_1 = x_1 nor within the gap bound \
                         r_l - r_{i} ≥ l - {i} - 1 for all l > {i}"
                    ),
                ));
            }
        }
        // Supplementary clause: a corank plateau above x_1 pins the dimensions.
        for l in 2..=m {
            let (rl, _, _) = quad(l);
            let (rl1, _, _) = quad(l - 1);
            if rl == rl1 && rl1 > x1 {
                for i in l..m {
                    let (ri, di, _) = quad(i);
                    let (ri1, di1, _) = quad(i + 1);
                    if di - di1 != ri1 - ri {
                        out.push(violation(
                            ConditionId::C6,
                            format!(
                                "equal coranks r_{} = r_{l} = {rl} force d_{i} - d_{} = \
                                 r_{} - d_{i}'s corank step, but {di} - {di1} ≠ {ri1} - {ri}",
                                l - 1,
                                i + 1,
                                i + 1
                            ),
                        ));
                    }
                }
                let (_, dl, _) = quad(l);
                let (_, dl1, _) = quad(l - 1);
                if dl1 - dl != 1 {
                    out.push(violation(
                        ConditionId::C6,
                        format!(
                            "equal coranks r_{} = r_{l} = {rl} force d_{} - d_{l} = 1, got {}",
                            l - 1,
                            l - 1,
                            dl1 - dl
                        ),
                    ));
                }
            }
        }
    }

    // (7) irreducibility of the innermost quadric.
    if m >= 1 {
        let (r, d, _) = quad(m);
        if r > d - 3 {
            out.push(violation(
                ConditionId::C7,
                format!("r_{{k-s}} = {r} exceeds d_{{k-s}} - 3 = {}", d - 3),
            ));
        }
    }

    // (8) linear space bound (kept in doubled form to stay in integers).
    for i in 1..=m {
        let (r, d, x) = quad(i);
        if 2 * x < 2 * (k - i as i64 + 1) - (d - r) {
            out.push(violation(
                ConditionId::C8,
                format!(
                    "x_{i} = {x} is below the linear space bound k-i+1 - (d_{i}-r_{i})/2 \
                     = ({} - ({d}-{r}))/2 halves",
                    2 * (k - i as i64 + 1)
                ),
            ));
        }
    }

    // (9) no tangency n_j − r_i = 1.
    for &nj in &linears {
        for i in 1..=m {
            let (r, _, _) = quad(i);
            if nj as i64 - r == 1 {
                out.push(violation(
                    ConditionId::C9,
                    format!("L{nj} is tangent to quadric {i}: n_j - r_{i} = 1"),
                ));
            }
        }
    }

    out
}

// ====================================================================
// Special indices and markings
// ====================================================================

/// All special indices in ascending paper order: the `i` where the linear
/// space bound (condition (8)) is an equality, `x_i = k−i+1 − (d_i−r_i)/2`.
///
/// The comparison is done in doubled integers, so an odd `d_i − r_i` is
/// never special (the bound is then a half-integer).
pub fn special_indices(seq: &Sequence) -> Vec<usize> {
    let k = seq.k() as i64;
    let m = seq.num_quadrics();
    (1..=m)
        .filter(|&i| {
            let (r, d) = seq.quadric(i).expect("index in range");
            let x = seq.x_of(i).expect("index in range") as i64;
            2 * x == 2 * (k - i as i64 + 1) - (d as i64 - r as i64)
        })
        .collect()
}

/// Check the marking attached to a sequence, if any.
///
/// A marking assigns, per special index `i`, the parity (0 even, 1 odd) of
/// the component of `(d_i+r_i)/2`-dimensional linear subspaces of
/// `Q^{r_i}_{d_i}` that contains the distinguished flag subspace.  The rules
/// checked are:
///
/// * a marked index must be special;
/// * special indices `i_1 < i_2` with `d_{i_1}+r_{i_1} = d_{i_2}+r_{i_2}`
///   must carry the same parity — the component containing a common linear
///   space is designated consistently;
/// * if `2·n_s = d_i + r_i` for a special `i`, the component of `L_{n_s}`
///   carries the parity of `s`;
/// * if `n = 2k`, the component containing `L_k` carries the parity that
///   characterizes the component of `OG(k, 2k)`, i.e. the parity of `k`.
///
/// A sequence without a marking validates trivially (markings are only
/// required to *distinguish* components, never to define the sequence).
pub fn validate_marking(seq: &Sequence) -> Vec<Violation> {
    let marking = match seq.marking() {
        Some(m) => m,
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    let special = special_indices(seq);
    let s = seq.s() as i64;
    let k = seq.k() as i64;
    let n = seq.n() as i64;
    let ns = seq.linear_dims().last().copied().unwrap_or(0) as i64;

    let sum = |i: usize| -> i64 {
        let (r, d) = seq.quadric(i).expect("marked index checked below");
        r as i64 + d as i64
    };

    for (&i, &p) in marking {
        if !special.contains(&i) {
            out.push(violation(
                ConditionId::CMarking,
                format!("index {i} carries a marking but is not a special index"),
            ));
            continue;
        }
        if p > 1 {
            out.push(violation(
                ConditionId::CMarking,
                format!("marking at index {i} must be a parity (0 or 1), got {p}"),
            ));
            continue;
        }
        // Parity of s rule.
        if s >= 1 && 2 * ns == sum(i) && i64::from(p) != s % 2 {
            out.push(violation(
                ConditionId::CMarking,
                format!(
                    "2·n_s = d_{i}+r_{i}: the component of L_{{n_s}} must carry the parity \
                     of s = {}, got {p}",
                    s % 2
                ),
            ));
        }
        // Maximal isotropic rule in OG(k, 2k).
        if n == 2 * k && sum(i) == n && i64::from(p) != k % 2 {
            out.push(violation(
                ConditionId::CMarking,
                format!(
                    "n = 2k: the component containing L_k must carry the parity of k = {}, \
                     got {p}",
                    k % 2
                ),
            ));
        }
    }

    // Consistency across equal d+r.
    let marked: Vec<(usize, u8)> = marking
        .iter()
        .filter(|(i, _)| special.contains(i))
        .map(|(&i, &p)| (i, p))
        .collect();
    for a in 0..marked.len() {
        for b in a + 1..marked.len() {
            let (i1, p1) = marked[a];
            let (i2, p2) = marked[b];
            if sum(i1) == sum(i2) && p1 != p2 {
                out.push(violation(
                    ConditionId::CMarking,
                    format!(
                        "special indices {i1} and {i2} share d+r = {} but carry different \
                         parities {p1} and {p2}",
                        sum(i1)
                    ),
                ));
            }
        }
    }

    out
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::{parse_sequence, Sequence, Step};

    fn seq(text: &str, n: u32) -> Sequence {
        parse_sequence(text, n).expect("test sequence must parse")
    }

    fn ids(violations: &[Violation]) -> Vec<ConditionId> {
        violations.iter().map(|v| v.condition_id).collect()
    }

    #[test]
    fn worked_examples_are_admissible() {
        for (text, n) in [
            ("Q3_6 Q0_9", 9),
            ("Q2_7 Q0_9", 9),
            ("L3 Q3_6 Q0_9", 9),
            ("L3 Q1_7", 8),
            ("L2 L4 Q2_7", 9),
            ("L3 Q1_7 Q0_9", 9),
            ("L4 Q2_7 Q1_8", 9),
            ("L2 L4 Q0_9", 9),
            ("L2 L4 Q2_7 Q0_9", 9),
            ("L3 L8 L9 Q6_12 Q5_13 Q1_20", 21),
            ("L2 L3 Q7_17 Q6_18", 24),
            ("L6 L7 L8", 16),
            ("L5 Q7_10 Q2_20", 22),
            ("Q4_11", 15),
            // Boundary cases: C7 and C8 hold with equality.
            ("Q0_3 Q0_9", 12),
            ("Q0_3 Q0_4", 5),
        ] {
            let v = validate(&seq(text, n));
            assert!(v.is_empty(), "{text} should be admissible, got {v:?}");
        }
    }

    #[test]
    fn condition_fixtures() {
        // One targeted fixture per condition.
        assert_eq!(ids(&validate(&seq("L5 Q2_7", 14))), vec![ConditionId::C1]);
        assert!(ids(&validate(&seq("Q0_1 Q0_9", 10))).contains(&ConditionId::C2));
        assert_eq!(ids(&validate(&seq("Q3_8", 10))), vec![ConditionId::C3]);
        assert_eq!(
            ids(&validate(&seq("Q2_7 Q0_8", 15))),
            vec![ConditionId::C3]
        );
        assert!(ids(&validate(&seq("Q1_7 Q2_8", 18))).contains(&ConditionId::C4));
        assert_eq!(ids(&validate(&seq("Q5_7", 13))), vec![ConditionId::C7]);
        // The linear space bound interlocks with (1) and (2); it cannot fail
        // alone, but it must be reported when it does fail.
        assert!(ids(&validate(&seq("L3 Q0_3", 10))).contains(&ConditionId::C8));
        assert_eq!(ids(&validate(&seq("L2 Q1_7", 9))), vec![ConditionId::C9]);
    }

    #[test]
    fn condition_six_fixtures() {
        // Plateau above x_1 with a dimension gap of 2 at the plateau: the
        // supplementary clause demands d_{l-1} - d_l = 1.
        let v = validate(&seq("Q1_6 Q1_8 Q0_9", 15));
        assert_eq!(ids(&v), vec![ConditionId::C6]);
        assert!(v[0].detail.contains("= 1"), "detail: {}", v[0].detail);

        // Plateau whose inner segment breaks the step-matching clause.
        let v = validate(&seq("Q2_6 Q1_8 Q1_9", 16));
        assert_eq!(ids(&v), vec![ConditionId::C6]);

        // The same plateau with compatible dimensions is fine.
        assert!(validate(&seq("Q2_7 Q1_8 Q1_9", 17)).is_empty());
    }

    #[test]
    fn structural_breakage_reports_order() {
        let broken = Sequence::new_unchecked(
            9,
            vec![
                Step::Quadric { corank: 1, dim: 7 },
                Step::Linear {
                    dim: 4,
                    primed: false,
                },
            ],
        );
        assert_eq!(ids(&validate(&broken)), vec![ConditionId::COrder]);

        let too_big = Sequence::new_unchecked(
            5,
            vec![
                Step::Linear {
                    dim: 1,
                    primed: false,
                },
                Step::Linear {
                    dim: 2,
                    primed: false,
                },
                Step::Linear {
                    dim: 3,
                    primed: false,
                },
            ],
        );
        assert_eq!(ids(&validate(&too_big)), vec![ConditionId::CAmbient]);
    }

    #[test]
    fn special_index_fixtures() {
        // Only the outer quadric attains the bound; the inner one has odd
        // d - r and is therefore not special.
        assert_eq!(special_indices(&seq("Q0_3 Q0_4", 5)), vec![1]);
        assert_eq!(special_indices(&seq("L2 Q0_4", 5)), vec![1]);
        // Both inner quadrics of the OG(6,21) example are special.
        assert_eq!(
            special_indices(&seq("L3 L8 L9 Q6_12 Q5_13 Q1_20", 21)),
            vec![2, 3]
        );
        // 2 x_1 = 2 while 2(k-i+1)-(d_1-r_1) = 6-5 = 1, so nothing is special
        // here even though the bound is close.
        assert!(special_indices(&seq("L2 L4 Q2_7", 9)).is_empty());
        assert!(special_indices(&seq("L4 Q2_7 Q1_8", 9)).is_empty());
    }

    #[test]
    fn marking_rules() {
        // No marking: nothing to check.
        assert!(validate_marking(&seq("L2 Q0_4", 5)).is_empty());

        // Parity-of-s rule: 2 n_s = d_1 + r_1 and s = 1, so the marking must
        // be odd.
        let mut v = seq("L2 Q0_4", 5);
        v.set_marking(Some([(1usize, 1u8)].into_iter().collect()))
            .unwrap();
        assert!(validate_marking(&v).is_empty());
        v.set_marking(Some([(1usize, 0u8)].into_iter().collect()))
            .unwrap();
        let viol = validate_marking(&v);
        assert_eq!(viol.len(), 1);
        assert_eq!(viol[0].condition_id, ConditionId::CMarking);

        // A marking on a non-special index is incoherent.
        let mut v = seq("L2 L3 Q7_17 Q6_18", 24);
        v.set_marking(Some([(1usize, 0u8)].into_iter().collect()))
            .unwrap();
        assert_eq!(validate_marking(&v).len(), 1);

        // Equal d+r across two special indices forces equal parities.
        let mut v = seq("Q1_3 Q0_4", 5);
        assert_eq!(special_indices(&v), vec![1, 2]);
        v.set_marking(Some([(1usize, 0u8), (2usize, 1u8)].into_iter().collect()))
            .unwrap();
        let viol = validate_marking(&v);
        assert_eq!(viol.len(), 1);
        assert!(viol[0].detail.contains("share d+r"));
        v.set_marking(Some([(1usize, 1u8), (2usize, 1u8)].into_iter().collect()))
            .unwrap();
        assert!(validate_marking(&v).is_empty());
    }

    #[test]
    fn marking_in_even_ambient() {
        // n = 2k: the component containing L_k carries the parity of k.
        let mut v = seq("L1 L2 L3 Q0_8", 8);
        assert_eq!(special_indices(&v), vec![1]);
        v.set_marking(Some([(1usize, 0u8)].into_iter().collect()))
            .unwrap();
        assert!(validate_marking(&v).is_empty());
        v.set_marking(Some([(1usize, 1u8)].into_iter().collect()))
            .unwrap();
        assert_eq!(validate_marking(&v).len(), 1);
    }

    #[test]
    fn marking_rules_can_conflict() {
        // 2 n_s = d_1 + r_1 with s odd, and n = 2k with k even: the two
        // parity rules disagree, so any marking draws one violation.  Both
        // rules are checked independently rather than silently merged.
        let mut v = seq("L2 Q0_4", 4);
        assert_eq!(special_indices(&v), vec![1]);
        for parity in [0u8, 1u8] {
            v.set_marking(Some([(1usize, parity)].into_iter().collect()))
                .unwrap();
            assert_eq!(validate_marking(&v).len(), 1, "parity {parity}");
        }
    }
}
