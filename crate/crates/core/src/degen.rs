//! The degeneration algorithm: specialization loci of a restriction variety.
//!
//! Degenerating the flag of a restriction variety `V` sweeps out loci where
//! the intersection conditions jump.  Each locus is named by its *origin*:
//!
//! * `Σ_{r_{b_h}}` ([`sigma_r`]) — the locus where the intersection with the
//!   radical of quadric group `h` jumps.  Four sub-cases apply depending on
//!   how `r_{b_h}` compares with the linear dimensions.
//! * `Σ_{n_{a_g}}` for an inner group `g < t` ([`sigma_n_inner`]) — the
//!   locus where the intersection with `L_{n_{a_g}}` jumps.
//! * `Σ_{n_s}` ([`sigma_ns`]) — the jump at the largest linear step.  This
//!   comes in a plain form and a parity form (a double jump consuming two
//!   quadric steps); near the boundary both can occur.
//! * `Σ_{d_{b_h}}` ([`sigma_d`]) — the locus where a quadric of group `h`
//!   degenerates onto the next group.
//!
//! Every transformation is assembled from three reusable rewriting rules
//! ([`apply_rule`]) followed by [`normalize`], which demotes quadrics that
//! have become linear spaces (corank ≥ dim − 2); a corank-(d−2) quadric is
//! a pair of hyperplanes and *forks* the output into a split pair, the
//! second member tagged with a prime.
//!
//! Dimensions of loci are always computed from the dimension formula of the
//! resulting sequences, never from case-specific closed forms; the worked
//! examples in the tests pin both routes against each other.

use crate::dims::dim_restriction;
use crate::seqmodel::{Sequence, Step};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

// ====================================================================
// Public types
// ====================================================================

/// Which degeneration produced a locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Corank jump at quadric group `h` (1-based, innermost first).
    R { h: usize },
    /// Linear jump at inner linear group `g` (1-based, `g < t`).
    N { g: usize },
    /// Plain jump at the largest linear step `n_s`.
    Ns,
    /// Parity (double) jump at `n_s`, consuming two quadric steps.
    NsParity,
    /// Dimension jump of quadric group `h` onto group `h + 1`.
    D { h: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::R { h } => write!(f, "R({h})"),
            Origin::N { g } => write!(f, "N({g})"),
            Origin::Ns => write!(f, "Ns"),
            Origin::NsParity => write!(f, "Ns-parity"),
            Origin::D { h } => write!(f, "D({h})"),
        }
    }
}

/// How a locus sits inside the variety.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Contained in the singular locus by the tangent-space argument.
    Singular,
    /// Contained in the smooth locus; excluded from the singular locus.
    Smooth,
    /// Singular by the codimension criterion on the resolution.
    ByCodim,
}

/// Gate selection for the case analysis.
///
/// `Default` applies the gates as corrected by the worked examples (for
/// instance, the dimension jump is suppressed when `b_h` is a special
/// index).  `Strict` applies the literal gates of the case analysis
/// verbatim; the two differ on a handful of documented boundary cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateMode {
    #[default]
    Default,
    Strict,
}

/// One degeneration locus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaLocus {
    /// Which degeneration produced the locus.
    pub origin: Origin,
    /// The sequences of the locus: one, or a split pair (unprimed first).
    pub sequences: Vec<Sequence>,
    /// Codimension of the locus inside the variety.
    pub codim: i64,
    /// Fiber dimension of the resolution over the locus.
    pub fiber_dim: i64,
    /// `codim − fiber_dim`: codimension of the preimage in the resolution.
    pub preimage_codim: i64,
    /// Smooth/singular classification of the locus.
    pub classification: Classification,
}

// ====================================================================
// Working representation
// ====================================================================

/// A sequence torn into mutable parts: linears ascending, quadrics as
/// `(corank, dim)` with dims ascending (innermost first).
#[derive(Debug, Clone)]
struct Parts {
    n: u32,
    linears: Vec<(u32, bool)>,
    quads: Vec<(u32, u32)>,
}

impl Parts {
    fn from_seq(seq: &Sequence) -> Self {
        let mut linears = Vec::new();
        let mut quads = Vec::new();
        for step in seq.steps() {
            match *step {
                Step::Linear { dim, primed } => linears.push((dim, primed)),
                Step::Quadric { corank, dim } => quads.push((corank, dim)),
            }
        }
        Parts {
            n: seq.n(),
            linears,
            quads,
        }
    }

    fn to_sequence(&self) -> Sequence {
        let mut steps: Vec<Step> = Vec::with_capacity(self.linears.len() + self.quads.len());
        for &(dim, primed) in &self.linears {
            steps.push(Step::Linear { dim, primed });
        }
        for &(corank, dim) in &self.quads {
            steps.push(Step::Quadric { corank, dim });
        }
        Sequence::new_unchecked(self.n, steps)
    }

    /// Re-sort quadrics by dimension after a rule application; two quadrics
    /// of equal dimension cannot coexist in a flag.
    fn sort_quads(&mut self) -> Result<()> {
        self.quads.sort_by_key(|&(_, d)| d);
        for w in self.quads.windows(2) {
            if w[0].1 == w[1].1 {
                return Err(Error::DegenerateCollision(format!(
                    "two sub-quadrics of dimension {} after rewriting",
                    w[0].1
                )));
            }
        }
        Ok(())
    }
}

/// Insert a linear step, displacing any occupant of the same dimension to
/// one dimension lower, recursively.  The incoming step keeps its prime;
/// displaced steps lose theirs (their identity as a marked half changes).
fn cascade_insert(linears: &mut Vec<(u32, bool)>, dim: u32, primed: bool) -> Result<()> {
    let mut cur = (dim, primed);
    loop {
        if cur.0 == 0 {
            return Err(Error::DegenerateCollision(
                "cascading linear insertion ran below dimension 1".into(),
            ));
        }
        match linears.binary_search_by_key(&cur.0, |e| e.0) {
            Err(pos) => {
                linears.insert(pos, cur);
                return Ok(());
            }
            Ok(pos) => {
                let displaced = linears[pos];
                linears[pos] = cur;
                cur = (displaced.0 - 1, false);
            }
        }
    }
}

// ====================================================================
// Group bookkeeping
// ====================================================================

/// One maximal run of consecutive linear dimensions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinGroupInfo {
    /// Largest dimension in the run, `n_{a_g}`.
    pub max: u32,
    /// Run length `α_g`.
    pub alpha: usize,
    /// 1-based index of the largest member, `a_g`.
    pub a: usize,
}

/// One maximal run of consecutive quadric dimensions (`h = 1` innermost).
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadGroupInfo {
    /// Paper index of the outermost member, `b_h` (so `k−b_h+1 = s+Σβ`).
    pub b: usize,
    /// Run length `β_h`.
    pub beta: usize,
    /// Corank at the outermost member, `r_{b_h}`.
    pub r_b: u32,
    /// Largest dimension in the run, `d_{b_h}`.
    pub d_b: u32,
    /// `x_{b_h}`: linears below the group corank.
    pub x_b: u32,
}

pub(crate) fn lin_group_info(seq: &Sequence) -> Vec<LinGroupInfo> {
    let dims = seq.linear_dims();
    let mut out: Vec<LinGroupInfo> = Vec::new();
    for (idx, &d) in dims.iter().enumerate() {
        match out.last_mut() {
            Some(g) if g.max + 1 == d => {
                g.max = d;
                g.alpha += 1;
                g.a = idx + 1;
            }
            _ => out.push(LinGroupInfo {
                max: d,
                alpha: 1,
                a: idx + 1,
            }),
        }
    }
    out
}

pub(crate) fn quad_group_info(seq: &Sequence) -> Result<Vec<QuadGroupInfo>> {
    let stored = seq.quadrics_stored();
    let m = stored.len();
    let mut runs: Vec<(usize, usize)> = Vec::new(); // (start, end) stored indices
    for p in 0..m {
        match runs.last_mut() {
            Some((_, end)) if stored[*end].1 + 1 == stored[p].1 => *end = p,
            _ => runs.push((p, p)),
        }
    }
    runs.iter()
        .map(|&(start, end)| {
            let b = m - end; // paper index of the outermost member
            let (r_b, d_b) = stored[end];
            Ok(QuadGroupInfo {
                b,
                beta: end - start + 1,
                r_b,
                d_b,
                x_b: seq.x_of(b)?,
            })
        })
        .collect()
}

// ====================================================================
// The three rewriting rules
// ====================================================================

/// Index (stored) of the innermost quadric whose corank is the largest one
/// strictly below `nj`; `None` when no corank is below `nj`.
fn rule1_target(quads: &[(u32, u32)], nj: u32) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (p, &(r, _)) in quads.iter().enumerate() {
        if r < nj {
            match best {
                Some(bp) if quads[bp].0 >= r => {}
                _ => best = Some(p),
            }
        }
    }
    best
}

/// Rule 1, single form: after a linear step `L_{nj}` has been replaced by a
/// smaller one, restore the flag by tightening the quadric at the target
/// index: `(r, d) → (nj, d − (nj − r))`.
fn rule1_single(parts: &mut Parts, nj: u32) -> Result<()> {
    let p = rule1_target(&parts.quads, nj)
        .ok_or_else(|| Error::RuleNotApplicable(format!("no quadric corank below {nj}")))?;
    let (r, d) = parts.quads[p];
    let delta = nj - r;
    let nd = d
        .checked_sub(delta)
        .filter(|&nd| nd >= 1)
        .ok_or_else(|| {
            Error::DegenerateCollision(format!(
                "rule 1 would collapse Q{r}_{d} below dimension 1"
            ))
        })?;
    parts.quads[p] = (nj, nd);
    parts.sort_quads()
}

/// Rule 1, group form: same target, but every member of the target's
/// dimension run that lies at the target's paper index or outward shifts by
/// the same amount, preserving the run's relative spacing.
fn rule1_group(parts: &mut Parts, nj: u32) -> Result<()> {
    let p0 = rule1_target(&parts.quads, nj)
        .ok_or_else(|| Error::RuleNotApplicable(format!("no quadric corank below {nj}")))?;
    let delta = nj - parts.quads[p0].0;
    // The dimension run containing p0.
    let mut start = p0;
    while start > 0 && parts.quads[start - 1].1 + 1 == parts.quads[start].1 {
        start -= 1;
    }
    let mut end = p0;
    while end + 1 < parts.quads.len() && parts.quads[end].1 + 1 == parts.quads[end + 1].1 {
        end += 1;
    }
    // Paper index decreases as the stored index grows, so "paper index at
    // p0 or outward" is the stored range p0..=end.
    for p in p0..=end {
        let (r, d) = parts.quads[p];
        let nd = d
            .checked_sub(delta)
            .filter(|&nd| nd >= 1)
            .ok_or_else(|| {
                Error::DegenerateCollision(format!(
                    "rule 1 would collapse Q{r}_{d} below dimension 1"
                ))
            })?;
        parts.quads[p] = (r + delta, nd);
    }
    let _ = start;
    parts.sort_quads()
}

/// Find the first tangency offender `(linear index, quadric index)` with
/// `n_j − r_i = 1`, scanning quadrics innermost-first.
fn find_offender(parts: &Parts) -> Option<(usize, usize)> {
    for (p, &(r, _)) in parts.quads.iter().enumerate() {
        for (j, &(nj, _)) in parts.linears.iter().enumerate() {
            if nj as i64 - r as i64 == 1 {
                return Some((j, p));
            }
        }
    }
    None
}

/// Rule 2, one application: fix the first tangency offender by raising the
/// quadric's corank to the smallest linear-group maximum at or above the
/// offending linear (a dimension-neutral rewrite).  Returns `Ok(false)`
/// when there is no offender.
fn rule2_once(parts: &mut Parts) -> Result<bool> {
    let (j, p) = match find_offender(parts) {
        Some(o) => o,
        None => return Ok(false),
    };
    let nj = parts.linears[j].0;
    // Linear group maxima: ends of maximal consecutive runs.
    let mut g0_max: Option<u32> = None;
    let dims: Vec<u32> = parts.linears.iter().map(|e| e.0).collect();
    for (idx, &d) in dims.iter().enumerate() {
        let is_run_end = idx + 1 == dims.len() || dims[idx + 1] != d + 1;
        if is_run_end && d >= nj {
            g0_max = Some(match g0_max {
                Some(cur) => cur.min(d),
                None => d,
            });
        }
    }
    let g0_max = g0_max.expect("the offending linear's own group qualifies");
    let (r, d) = parts.quads[p];
    let delta = g0_max - r;
    let nd = d
        .checked_sub(delta)
        .filter(|&nd| nd >= 1)
        .ok_or_else(|| {
            Error::DegenerateCollision(format!(
                "rule 2 would collapse Q{r}_{d} below dimension 1"
            ))
        })?;
    parts.quads[p] = (g0_max, nd);
    parts.sort_quads()?;
    Ok(true)
}

/// Rule 2 to a fixed point.
fn rule2_scan(parts: &mut Parts) -> Result<()> {
    // Each application strictly raises a corank, so this terminates.
    while rule2_once(parts)? {}
    Ok(())
}

/// The corank target for rule 3 given the offending quadric corank: the
/// largest group corank not exceeding `r_off`, if positive.
fn rule3_corank_target(parts: &Parts, r_off: u32) -> Option<u32> {
    let m = parts.quads.len();
    let mut best: Option<u32> = None;
    let mut p = 0;
    while p < m {
        // Find the dimension run starting at p; its outermost member is the
        // last one, carrying the group corank.
        let mut end = p;
        while end + 1 < m && parts.quads[end].1 + 1 == parts.quads[end + 1].1 {
            end += 1;
        }
        let r_b = parts.quads[end].0;
        if r_b <= r_off && r_b > 0 {
            best = Some(best.map_or(r_b, |cur: u32| cur.max(r_b)));
        }
        p = end + 1;
    }
    best
}

/// Rule 3, internal scan: repeatedly move tangency-offending linears down
/// onto the largest group corank below the offended quadric; offenders with
/// no positive target are skipped.
fn rule3_scan(parts: &mut Parts) -> Result<()> {
    loop {
        let mut applied = false;
        // Collect offenders fresh each pass.
        let offenders: Vec<(usize, usize)> = {
            let mut v = Vec::new();
            for (p, &(r, _)) in parts.quads.iter().enumerate() {
                for (j, &(nj, _)) in parts.linears.iter().enumerate() {
                    if nj as i64 - r as i64 == 1 {
                        v.push((j, p));
                    }
                }
            }
            v
        };
        for (j, p) in offenders {
            let r_off = parts.quads[p].0;
            if let Some(target) = rule3_corank_target(parts, r_off) {
                parts.linears.remove(j);
                cascade_insert(&mut parts.linears, target, false)?;
                applied = true;
                break;
            }
        }
        if !applied {
            return Ok(());
        }
    }
}

// ====================================================================
// Public rule interface
// ====================================================================

/// Apply one rewriting rule once.
///
/// * Rule 1 tightens a quadric after a linear step shrank; `context` must
///   give the *original* dimension of that linear step.
/// * Rule 2 fixes one tangency offender (`n_j − r_i = 1`) by a
///   dimension-neutral corank raise.
/// * Rule 3 fixes one tangency offender by moving the linear down onto the
///   largest group corank below the offended quadric.
///
/// Returns [`Error::RuleNotApplicable`] when the rule has nothing to do and
/// [`Error::IndexError`] for a rule number outside `1..=3`.
pub fn apply_rule(seq: &Sequence, rule: u8, context: Option<u32>) -> Result<Sequence> {
    let mut parts = Parts::from_seq(seq);
    match rule {
        1 => {
            let nj = context.ok_or_else(|| {
                Error::RuleNotApplicable(
                    "rule 1 needs the original linear dimension as context".into(),
                )
            })?;
            rule1_single(&mut parts, nj)?;
        }
        2 => {
            if !rule2_once(&mut parts)? {
                return Err(Error::RuleNotApplicable(
                    "no pair with n_j - r_i = 1".into(),
                ));
            }
        }
        3 => {
            let (j, p) = find_offender(&parts).ok_or_else(|| {
                Error::RuleNotApplicable("no pair with n_j - r_i = 1".into())
            })?;
            let target = rule3_corank_target(&parts, parts.quads[p].0).ok_or_else(|| {
                Error::RuleNotApplicable(
                    "no positive sub-quadric group corank at or below the offender".into(),
                )
            })?;
            parts.linears.remove(j);
            cascade_insert(&mut parts.linears, target, false)?;
        }
        other => {
            return Err(Error::IndexError(format!(
                "no rewriting rule {other}; the rules are 1, 2 and 3"
            )))
        }
    }
    Ok(parts.to_sequence())
}

// ====================================================================
// Normalization
// ====================================================================

fn normalize_parts(parts: Parts) -> Result<Vec<Parts>> {
    let mut done = Vec::new();
    let mut work = vec![parts];
    while let Some(mut p) = work.pop() {
        loop {
            // Innermost-first: the stored order is ascending in dimension.
            let pos = p
                .quads
                .iter()
                .position(|&(r, d)| r as i64 >= d as i64 - 2);
            let pos = match pos {
                Some(pos) => pos,
                None => break,
            };
            let (r, d) = p.quads.remove(pos);
            if r > d {
                return Err(Error::NotValidated(format!(
                    "Q{r}_{d}: corank exceeds dimension during normalization"
                )));
            }
            if r == d {
                cascade_insert(&mut p.linears, d, false)?;
                rule2_scan(&mut p)?;
            } else if r == d - 1 {
                cascade_insert(&mut p.linears, d - 1, false)?;
                rule2_scan(&mut p)?;
            } else {
                // r == d − 2: a pair of hyperplanes; fork into a split pair.
                let mut twin = p.clone();
                cascade_insert(&mut p.linears, d - 1, false)?;
                rule2_scan(&mut p)?;
                cascade_insert(&mut twin.linears, d - 1, true)?;
                rule2_scan(&mut twin)?;
                work.push(twin);
            }
        }
        done.push(p);
    }
    Ok(done)
}

/// Normalize a transient sequence: demote quadric steps that have become
/// linear (`corank ≥ dim − 2`), innermost first, repairing tangencies with
/// rule 2 after each demotion.
///
/// A corank of `dim` or `dim − 1` demotes to a single linear step of
/// dimension `dim` resp. `dim − 1`.  A corank of `dim − 2` means the
/// quadric is a pair of hyperplanes: the output *forks* into a split pair
/// `L_{d−1}`, `L'_{d−1}` (unprimed first).  The prime here distinguishes
/// the two hyperplanes of the pair, so it is attached even when
/// `2(d−1) ≠ n`; such sequences are interchange formats of the
/// degeneration, not inputs, and are built without structural checks.
pub fn normalize(seq: &Sequence) -> Result<Vec<Sequence>> {
    let out = normalize_parts(Parts::from_seq(seq))?;
    Ok(out.iter().map(Parts::to_sequence).collect())
}

// ====================================================================
// Locus assembly
// ====================================================================

/// True when no isotropic flag can satisfy `seq`: a linear step exceeds
/// the Witt index of the ambient form, or a quadric step is asked to hold
/// an isotropic subspace larger than its own Witt capacity
/// `⌊(r_i + d_i)/2⌋`.
fn capacity_empty(seq: &Sequence) -> bool {
    let n = i64::from(seq.n());
    let k = seq.k() as i64;
    for step in seq.steps() {
        if let Step::Linear { dim, .. } = *step {
            if 2 * i64::from(dim) > n {
                return true;
            }
        }
    }
    for i in 1..=seq.num_quadrics() {
        let (r, d) = seq.quadric(i).expect("index in range");
        if 2 * (k - i as i64 + 1) > i64::from(r) + i64::from(d) {
            return true;
        }
    }
    false
}

/// Assemble a locus from the surviving branches.
///
/// A branch over isotropic capacity (see [`capacity_empty`]) describes a
/// configuration no flag contains, so its piece of the locus is empty and
/// the branch is dropped; when every branch drops, the locus itself is
/// absent and `None` is returned.
fn finalize(
    v: &Sequence,
    origin: Origin,
    branches: Vec<Parts>,
    fiber_dim: i64,
    classification: Classification,
) -> Result<Option<SigmaLocus>> {
    let dim_v = dim_restriction(v)?.total;
    let sequences: Vec<Sequence> = branches
        .iter()
        .map(Parts::to_sequence)
        .filter(|s| !capacity_empty(s))
        .collect();
    if sequences.is_empty() {
        return Ok(None);
    }
    let mut codim: Option<i64> = None;
    for s in &sequences {
        let c = dim_v - dim_restriction(s)?.total;
        match codim {
            None => codim = Some(c),
            Some(c0) => debug_assert_eq!(c0, c, "split pair members must share a dimension"),
        }
    }
    let codim = codim.expect("a surviving branch exists");
    Ok(Some(SigmaLocus {
        origin,
        sequences,
        codim,
        fiber_dim,
        preimage_codim: codim - fiber_dim,
        classification,
    }))
}

fn check_structural(seq: &Sequence) -> Result<()> {
    let stripped: Vec<Step> = seq
        .steps()
        .iter()
        .map(|s| match *s {
            Step::Linear { dim, .. } => Step::Linear { dim, primed: false },
            q => q,
        })
        .collect();
    Sequence::new(seq.n(), stripped)
        .map(|_| ())
        .map_err(|e| Error::NotValidated(format!("degeneration needs a structurally valid sequence: {e}")))
}

/// Collapse a transform collision into an absent locus.
///
/// A rewriting step can demand a linear step below dimension 1 (the flag is
/// already packed down to `L_1`, so a cascading insertion runs off the
/// bottom) or two sub-quadrics of equal dimension.  No flag contains such a
/// configuration, so the locus the transform describes is empty — this is a
/// property of the jump, not a defect of the defining sequence.
fn absent_on_collision(r: Result<Option<SigmaLocus>>) -> Result<Option<SigmaLocus>> {
    match r {
        Err(Error::DegenerateCollision(_)) => Ok(None),
        other => other,
    }
}

// ====================================================================
// Σ_{r_{b_h}}: corank jump
// ====================================================================

/// The degeneration locus `Σ_{r_{b_h}}` of `seq`, where the intersection
/// with the radical of quadric group `h` jumps, or `None` when the locus is
/// absent (gate fails or it is contained in another locus).
///
/// `h` is 1-based with group 1 innermost; out of range is an error.
pub fn sigma_r(seq: &Sequence, h: usize, mode: GateMode) -> Result<Option<SigmaLocus>> {
    check_structural(seq)?;
    let qg = quad_group_info(seq)?;
    let lg = lin_group_info(seq);
    let u = qg.len();
    if h == 0 || h > u {
        return Err(Error::IndexError(format!(
            "no quadric group {h}: the sequence has {u} groups"
        )));
    }
    let _ = mode; // the sub-case gates below coincide in both modes
    let group = qg[h - 1];
    if group.r_b <= group.x_b {
        // The radical intersection is already forced by the linear steps.
        return Ok(None);
    }
    let s = seq.s();
    let ns = seq.linear_dims().last().copied().unwrap_or(0);
    let k = seq.k() as i64;
    let origin = Origin::R { h };

    if s == 0 || group.r_b >= ns {
        if h > 1 {
            // Contained in Σ_{r_{b_1}}.
            return Ok(None);
        }
        // Innermost group: replace the innermost quadric by a linear step.
        let new_linear = if group.r_b > ns || s == 0 {
            group.r_b // case: the radical sticks out beyond every linear
        } else {
            ns // case r_{b_1} = n_s: the jump happens at n_s itself
        };
        let base_fiber = group.d_b as i64
            - group.r_b as i64
            - 2 * (k - group.b as i64 - group.x_b as i64)
            - 2;
        let (fiber, classification) = if group.r_b > ns || s == 0 {
            (base_fiber, Classification::Singular)
        } else {
            let alpha_t = lg.last().expect("s ≥ 1").alpha as i64;
            (base_fiber + alpha_t, Classification::Singular)
        };
        return absent_on_collision((|| {
            let mut parts = Parts::from_seq(seq);
            parts.quads.remove(0);
            cascade_insert(&mut parts.linears, new_linear, false)?;
            rule2_scan(&mut parts)?;
            let branches = normalize_parts(parts)?;
            finalize(seq, origin, branches, fiber, classification)
        })());
    }

    // r_{b_h} < n_s from here on.
    if let Some((g_idx, lin_g)) = lg
        .iter()
        .enumerate()
        .find(|(_, g)| g.max == group.r_b)
        .map(|(i, g)| (i + 1, *g))
    {
        // r_{b_h} equals a linear group maximum: hook the group upward.
        debug_assert!(g_idx < lg.len(), "r_b < n_s puts the group strictly below the top");
        let nj_next = seq.linear_dims()[lin_g.a]; // n_{a_g + 1}
        if h >= 2 && nj_next as i64 >= qg[h - 2].r_b as i64 {
            // Sandwich gate: the displaced linear must stay below the next
            // radical inward, else the locus is contained in Σ_{r_{b_{h−1}}}.
            return Ok(None);
        }
        let next = lg[g_idx]; // group g+1 of the original sequence
        let fiber =
            next.max as i64 - lin_g.max as i64 - next.alpha as i64 + lin_g.alpha as i64;
        return absent_on_collision((|| {
            let mut parts = Parts::from_seq(seq);
            parts.linears.remove(lin_g.a); // remove L_{n_{a_g+1}}
            cascade_insert(&mut parts.linears, lin_g.max, false)?;
            rule1_group(&mut parts, nj_next)?;
            rule3_scan(&mut parts)?;
            let branches = normalize_parts(parts)?;
            finalize(seq, origin, branches, fiber, Classification::ByCodim)
        })());
    }

    // r_{b_h} is not a linear dimension: move the next linear above it down.
    let dims = seq.linear_dims();
    let (j_idx, &nj_sharp) = dims
        .iter()
        .enumerate()
        .find(|(_, &d)| d > group.r_b)
        .expect("r_b < n_s guarantees a linear above it");
    if h >= 2 && nj_sharp as i64 >= qg[h - 2].r_b as i64 {
        return Ok(None);
    }
    let j_sharp = j_idx as i64 + 1;
    let fiber = nj_sharp as i64 - (group.r_b as i64 + j_sharp - group.x_b as i64);
    absent_on_collision((|| {
        let mut parts = Parts::from_seq(seq);
        parts.linears.remove(j_idx);
        cascade_insert(&mut parts.linears, group.r_b, false)?;
        rule1_single(&mut parts, nj_sharp)?;
        rule3_scan(&mut parts)?;
        let branches = normalize_parts(parts)?;
        finalize(seq, origin, branches, fiber, Classification::ByCodim)
    })())
}

// ====================================================================
// Σ_{n_{a_g}}: linear jump at an inner group
// ====================================================================

/// The degeneration locus `Σ_{n_{a_g}}` for an inner linear group
/// (`1 ≤ g ≤ t−1`), or `None` when absent.
///
/// The jump at the last group (`g = t`) behaves differently and is handled
/// by [`sigma_ns`]; asking for it here is an error.
pub fn sigma_n_inner(seq: &Sequence, g: usize, mode: GateMode) -> Result<Option<SigmaLocus>> {
    check_structural(seq)?;
    let lg = lin_group_info(seq);
    let t = lg.len();
    if g == 0 || g + 1 > t || g == t {
        return Err(Error::IndexError(format!(
            "no inner linear group {g}: the sequence has {t} groups and the \
             last one belongs to the locus at n_s"
        )));
    }
    let group = lg[g - 1];
    // Absent when the group is a complete prefix (nothing to hook onto) or
    // its maximum already equals a quadric corank (the jump is not generic).
    if group.max as usize == group.a {
        return Ok(None);
    }
    let coranks: Vec<u32> = seq.quadrics_stored().iter().map(|&(r, _)| r).collect();
    if coranks.contains(&group.max) {
        return Ok(None);
    }
    if mode == GateMode::Strict {
        let qg = quad_group_info(seq)?;
        if let Some(first) = qg.first() {
            if first.r_b >= group.max {
                return Ok(None);
            }
        }
    }

    let nj_next = seq.linear_dims()[group.a];
    absent_on_collision((|| {
        let mut parts = Parts::from_seq(seq);
        parts.linears.remove(group.a);
        cascade_insert(&mut parts.linears, group.max, false)?;
        // The innermost quadric follows the hooked group down when its
        // radical is smaller; outer groups are never touched here.
        if let Some(&(r_inner, _)) = parts.quads.first() {
            if r_inner < group.max {
                rule1_group(&mut parts, group.max)?;
            }
        }
        if mode == GateMode::Strict {
            rule2_scan(&mut parts)?;
        }
        let branches = normalize_parts(parts)?;
        let _ = nj_next;
        finalize(
            seq,
            Origin::N { g },
            branches,
            group.alpha as i64,
            Classification::ByCodim,
        )
    })())
}

// ====================================================================
// Σ_{n_s}: jump at the largest linear step
// ====================================================================

/// The degeneration loci at `n_s`: the plain jump and/or the parity
/// (double) jump.  Near the boundary `D = 2` both can occur, hence a
/// vector (at most two entries, plain first).
///
/// With `D = d_{k−s} + x_{k−s} − s − n_s`, the plain jump exists when
/// `D ≥ 2` and is smooth exactly when `D = 2`; the parity jump exists when
/// `D ≤ 2` and there are at least two quadric steps.  In strict mode the
/// literal gates are applied instead: the preamble requires
/// `d_{b_1} + x_{b_1} − s − n_s > 2`, and the parity form fires exactly on
/// the trigger `b_1 special and 2 n_s = d_{b_1} + r_{b_1}`.
pub fn sigma_ns(seq: &Sequence, mode: GateMode) -> Result<Vec<SigmaLocus>> {
    check_structural(seq)?;
    let s = seq.s();
    let m = seq.num_quadrics();
    if s == 0 || m == 0 {
        return Ok(Vec::new());
    }
    let lg = lin_group_info(seq);
    let qg = quad_group_info(seq)?;
    let ns = *seq.linear_dims().last().unwrap();
    if qg[0].r_b >= ns {
        // Covered by the corank jump of the innermost group.
        return Ok(Vec::new());
    }
    if ns as usize <= s {
        // The linear steps are a complete prefix; no room to jump.
        return Ok(Vec::new());
    }
    let alpha_t = lg.last().unwrap().alpha as i64;
    let (r_inner, d_inner) = seq.quadric(m)?;
    let _ = r_inner;
    let x_inner = seq.x_of(m)? as i64;
    let d_cap = d_inner as i64 + x_inner - s as i64 - ns as i64;

    let plain = |classification: Classification| -> Result<Option<SigmaLocus>> {
        let mut parts = Parts::from_seq(seq);
        parts.quads.remove(0);
        cascade_insert(&mut parts.linears, ns, false)?;
        rule2_scan(&mut parts)?;
        let branches = normalize_parts(parts)?;
        finalize(seq, Origin::Ns, branches, alpha_t, classification)
    };
    let parity = || -> Result<Option<SigmaLocus>> {
        let mut parts = Parts::from_seq(seq);
        // Remove the two innermost quadric steps; insert the larger linear
        // step first so the cascade shifts settle deterministically.
        parts.quads.remove(0);
        parts.quads.remove(0);
        cascade_insert(&mut parts.linears, ns, false)?;
        cascade_insert(&mut parts.linears, ns - 1, false)?;
        rule2_scan(&mut parts)?;
        let branches = normalize_parts(parts)?;
        finalize(
            seq,
            Origin::NsParity,
            branches,
            2 * alpha_t,
            Classification::Singular,
        )
    };

    // The parity jump inserts two linear steps below n_s; when the flag has
    // only one free dimension slot there (n_s − s = 1) the insertion
    // cascades off the bottom and the locus is simply empty.  The same
    // collision semantics cover the plain jump for symmetry.
    let push_or_skip =
        |out: &mut Vec<SigmaLocus>, locus: Result<Option<SigmaLocus>>| -> Result<()> {
            match locus {
                Ok(Some(locus)) => {
                    out.push(locus);
                    Ok(())
                }
                Ok(None) => Ok(()),
                Err(Error::DegenerateCollision(_)) => Ok(()),
                Err(e) => Err(e),
            }
        };

    let mut out = Vec::new();
    match mode {
        GateMode::Default => {
            if d_cap >= 2 {
                let classification = if d_cap == 2 {
                    Classification::Smooth
                } else {
                    Classification::Singular
                };
                push_or_skip(&mut out, plain(classification))?;
            }
            if m >= 2 && d_cap <= 2 {
                push_or_skip(&mut out, parity())?;
            }
        }
        GateMode::Strict => {
            let b1 = &qg[0];
            let preamble = b1.d_b as i64 + b1.x_b as i64 - s as i64 - ns as i64 > 2;
            if preamble {
                let special = crate::admissible::special_indices(seq).contains(&b1.b);
                let trigger = special && 2 * ns as i64 == b1.d_b as i64 + b1.r_b as i64;
                if !trigger {
                    let classification = if d_cap == 2 {
                        Classification::Smooth
                    } else {
                        Classification::Singular
                    };
                    push_or_skip(&mut out, plain(classification))?;
                } else if seq.k() as i64 >= s as i64 + 2 {
                    push_or_skip(&mut out, parity())?;
                }
            }
        }
    }
    Ok(out)
}

// ====================================================================
// Σ_{d_{b_h}}: dimension jump
// ====================================================================

/// The degeneration locus `Σ_{d_{b_h}}`, where quadric group `h`
/// degenerates onto group `h+1` (`1 ≤ h ≤ u−1`), or `None` when the gate
/// `d_{b_h} − r_{b_h} − 2β_h ≥ 3` fails.
///
/// In the default mode the locus is additionally suppressed when `b_h` is a
/// special index (the jump then lands in the parity locus at `n_s`); strict
/// mode applies only the literal gate.
pub fn sigma_d(seq: &Sequence, h: usize, mode: GateMode) -> Result<Option<SigmaLocus>> {
    check_structural(seq)?;
    let qg = quad_group_info(seq)?;
    let u = qg.len();
    if h == 0 || h + 1 > u {
        return Err(Error::IndexError(format!(
            "the dimension jump needs quadric groups {h} and {}; the sequence has {u}",
            h + 1
        )));
    }
    let group = qg[h - 1];
    if (group.d_b as i64 - group.r_b as i64 - 2 * group.beta as i64) < 3 {
        return Ok(None);
    }
    if mode == GateMode::Default
        && crate::admissible::special_indices(seq).contains(&group.b)
    {
        return Ok(None);
    }

    let m = seq.num_quadrics();
    absent_on_collision((|| {
        let mut parts = Parts::from_seq(seq);
        // Stored positions: group h ends (outermost member) at stored index
        // m − b_h; the quadric at paper index b_h − 1 sits right after it.
        let p_outer = m - group.b;
        let p_next = p_outer + 1;
        debug_assert!(p_next < m);
        parts.quads[p_next] = (group.r_b, group.d_b);
        let p_start = p_outer + 1 - group.beta;
        for p in p_start..=p_outer {
            let (r, d) = parts.quads[p];
            parts.quads[p] = (r + 1, d - 1);
        }
        parts.sort_quads()?;
        rule3_scan(&mut parts)?;
        let branches = normalize_parts(parts)?;
        finalize(
            seq,
            Origin::D { h },
            branches,
            group.beta as i64,
            Classification::ByCodim,
        )
    })())
}

// ====================================================================
// Tests
// ====================================================================
