//! Reproducible random corpus of admissible sequences.
//!
//! Property tests and the acceptance suite need a broad supply of admissible
//! sequences beyond the ten worked examples.  This module provides:
//!
//! * [`golden_sequences`] — the ten worked examples, in their printed order;
//! * [`random_admissible`] — one random admissible sequence drawn from a
//!   mix of structural families;
//! * [`standard_corpus`] — a fixed-seed corpus of 240 instances with
//!   `k ≤ 8` and `8 ≤ n ≤ 40`, the first forty of which have `n ≤ 10` so
//!   the finite-field oracle can afford them.
//!
//! The generators construct candidates in paper order (outermost quadric
//! first) inside ranges chosen to satisfy most of the admissibility
//! conditions by design, then gate every candidate through `validate`;
//! nothing reaches the corpus on the strength of the construction alone.
//!
//! Three quadric families are mixed deliberately:
//!
//! 1. strictly increasing coranks, which keeps the corank gap condition
//!    satisfied with room to spare;
//! 2. constant corank equal to `x_1`, the branch of condition (6) where the
//!    linear spaces themselves fill the radical;
//! 3. an innermost corank plateau above `x_1`, which triggers the
//!    consecutive-dimension clause of condition (6).
//!
//! Pure linear sequences (no quadrics) are drawn as a fourth family.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::admissible::validate;
use crate::seqmodel::{parse_sequence, Sequence, Step};

// ====================================================================
// Golden examples
// ====================================================================

/// The ten worked examples, in their printed order.
pub fn golden_sequences() -> Vec<Sequence> {
    [
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
    ]
    .into_iter()
    .map(|(text, n)| parse_sequence(text, n).expect("golden sequences parse"))
    .collect()
}

// ====================================================================
// Random generation
// ====================================================================

/// Largest linear dimension that is isotropic without hitting the split
/// middle: `⌊(n−1)/2⌋`.
fn linear_cap(n: u32) -> u32 {
    (n - 1) / 2
}

/// Assembles a candidate from paper-ordered quadrics `(r_1, d_1), …` and
/// ascending linears, re-sorting the quadrics into storage order
/// (innermost, i.e. smallest dimension, first), then gates it through
/// `Sequence::new` and `validate`.
fn assemble(n: u32, linears: &[u32], paper_quads: &[(u32, u32)]) -> Option<Sequence> {
    let mut steps: Vec<Step> = linears
        .iter()
        .map(|&dim| Step::Linear { dim, primed: false })
        .collect();
    for &(r, d) in paper_quads.iter().rev() {
        steps.push(Step::Quadric { corank: r, dim: d });
    }
    let seq = Sequence::new(n, steps).ok()?;
    if validate(&seq).is_empty() {
        Some(seq)
    } else {
        None
    }
}

/// Draws `count` distinct linear dimensions from `1..=cap`, skipping the
/// forbidden values (the tangency dimensions `r_i + 1`).
fn draw_linears<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    cap: u32,
    forbidden: &[u32],
) -> Option<Vec<u32>> {
    let pool: Vec<u32> = (1..=cap).filter(|v| !forbidden.contains(v)).collect();
    if pool.len() < count {
        return None;
    }
    let mut picked: Vec<u32> = Vec::with_capacity(count);
    let mut pool = pool;
    for _ in 0..count {
        let idx = rng.gen_range(0..pool.len());
        picked.push(pool.swap_remove(idx));
    }
    picked.sort_unstable();
    Some(picked)
}

/// Family 1: strictly increasing coranks.  Each inward step raises the
/// corank by 1–3 and the dimension drops by at least as much, so the sums
/// `r_i + d_i` decrease inward as condition (3) demands.
fn draw_increasing<R: Rng + ?Sized>(rng: &mut R, n: u32, k_max: usize) -> Option<Sequence> {
    let k_cap = (k_max).min(linear_cap(n) as usize);
    if k_cap == 0 {
        return None;
    }
    let k = rng.gen_range(1..=k_cap);
    let s = rng.gen_range(0..k); // m = k − s ≥ 1
    let m = k - s;

    // Coranks outermost-first: r_1 then jumps of 1–3 inward.
    let r1 = rng.gen_range(0..=3u32);
    let mut coranks = vec![r1];
    for _ in 1..m {
        let jump = rng.gen_range(1..=3u32);
        coranks.push(coranks.last().unwrap() + jump);
    }
    let rm = *coranks.last().unwrap();
    if rm > (n.saturating_sub(3)) / 2 {
        return None;
    }

    // Dimensions innermost-first, then reverse into paper order.
    let dm = rm + 3 + rng.gen_range(0..=3u32);
    let mut dims_rev = vec![dm];
    for i in (1..m).rev() {
        let jump = coranks[i] - coranks[i - 1];
        let extra = rng.gen_range(0..=2u32);
        dims_rev.push(dims_rev.last().unwrap() + jump + extra);
    }
    let dims: Vec<u32> = dims_rev.into_iter().rev().collect();
    if coranks[0] + dims[0] > n {
        return None;
    }

    let paper: Vec<(u32, u32)> = coranks.iter().copied().zip(dims.iter().copied()).collect();
    let forbidden: Vec<u32> = coranks.iter().map(|&r| r + 1).collect();
    let cap = linear_cap(n).min((rm + dm) / 2);
    let linears = draw_linears(rng, s, cap, &forbidden)?;
    assemble(n, &linears, &paper)
}

/// Family 2: constant corank `r = x_1`.  The linears `1..=r` are all
/// present so the radical is filled by the flag itself, which is the first
/// branch of condition (6); up to one extra linear sits above the radical.
fn draw_constant<R: Rng + ?Sized>(rng: &mut R, n: u32, k_max: usize) -> Option<Sequence> {
    let r = rng.gen_range(0..=3u32);
    let extras = rng.gen_range(0..=1usize);
    let m = rng.gen_range(1..=3usize);
    let s = r as usize + extras;
    let k = s + m;
    if k > k_max || k > linear_cap(n) as usize {
        return None;
    }

    // Condition (8) at the innermost quadric needs the dimension cushion to
    // cover the extra linear above the radical.
    let e_min = if extras > 0 { 2 * extras as u32 - 1 } else { 0 };
    let dm = r + 3 + rng.gen_range(e_min..=e_min + 2);
    let mut dims_rev = vec![dm];
    for _ in 1..m {
        dims_rev.push(dims_rev.last().unwrap() + rng.gen_range(1..=3u32));
    }
    let dims: Vec<u32> = dims_rev.into_iter().rev().collect();
    if r + dims[0] > n {
        return None;
    }

    let paper: Vec<(u32, u32)> = dims.iter().map(|&d| (r, d)).collect();
    let mut linears: Vec<u32> = (1..=r).collect();
    if extras > 0 {
        let cap = linear_cap(n).min((r + dm) / 2);
        if cap <= r + 1 {
            return None;
        }
        linears.push(rng.gen_range(r + 2..=cap));
    }
    assemble(n, &linears, &paper)
}

/// Family 3: an innermost corank plateau above `x_1`.  The two innermost
/// quadrics share their corank, so condition (6) forces their dimensions to
/// be consecutive; no linears, so `x_1 = 0` and the plateau is genuinely
/// above it.
fn draw_plateau<R: Rng + ?Sized>(rng: &mut R, n: u32, k_max: usize) -> Option<Sequence> {
    let k_cap = k_max.min(linear_cap(n) as usize);
    if k_cap < 2 {
        return None;
    }
    let m = rng.gen_range(2..=k_cap.min(4));

    let r1 = rng.gen_range(0..=2u32);
    let mut coranks = vec![r1];
    for _ in 1..m - 1 {
        coranks.push(coranks.last().unwrap() + rng.gen_range(1..=2u32));
    }
    // Duplicate the innermost corank; keep it positive so it exceeds x_1 = 0.
    let rm = (*coranks.last().unwrap()).max(1);
    *coranks.last_mut().unwrap() = rm;
    coranks.push(rm);
    if rm > (n.saturating_sub(3)) / 2 {
        return None;
    }

    let dm = rm + 3 + rng.gen_range(0..=3u32);
    let mut dims_rev = vec![dm, dm + 1]; // the plateau pair, dimensions consecutive
    for i in (1..m - 1).rev() {
        let jump = coranks[i] - coranks[i - 1];
        let extra = rng.gen_range(0..=2u32);
        dims_rev.push(dims_rev.last().unwrap() + jump.max(1) + extra);
    }
    let dims: Vec<u32> = dims_rev.into_iter().rev().collect();
    if coranks[0] + dims[0] > n {
        return None;
    }

    let paper: Vec<(u32, u32)> = coranks.iter().copied().zip(dims.iter().copied()).collect();
    assemble(n, &[], &paper)
}

/// Family 4: pure linear sequences, every step isotropic.
fn draw_pure_linear<R: Rng + ?Sized>(rng: &mut R, n: u32, k_max: usize) -> Option<Sequence> {
    let cap = linear_cap(n);
    let k_cap = k_max.min(cap as usize);
    if k_cap == 0 {
        return None;
    }
    let k = rng.gen_range(1..=k_cap);
    let linears = draw_linears(rng, k, cap, &[])?;
    assemble(n, &linears, &[])
}

/// Draws one admissible sequence with `n` in `n_lo..=n_hi` and `k ≤ k_max`.
///
/// Candidates are drawn from the four families until one passes
/// `validate`; the families are chosen with weights that keep quadric-rich
/// sequences in the majority.
pub fn random_admissible<R: Rng + ?Sized>(
    rng: &mut R,
    n_lo: u32,
    n_hi: u32,
    k_max: usize,
) -> Sequence {
    assert!(n_lo >= 4 && n_lo <= n_hi && k_max >= 1, "degenerate corpus range");
    loop {
        let n = rng.gen_range(n_lo..=n_hi);
        let family = rng.gen_range(0..10u32);
        let drawn = match family {
            0..=4 => draw_increasing(rng, n, k_max),
            5..=6 => draw_constant(rng, n, k_max),
            7..=8 => draw_plateau(rng, n, k_max),
            _ => draw_pure_linear(rng, n, k_max),
        };
        if let Some(seq) = drawn {
            return seq;
        }
    }
}

/// The fixed-seed corpus: 40 small instances (`8 ≤ n ≤ 10`, `k ≤ 4`)
/// affordable to the finite-field oracle, then 200 instances across the
/// full range (`8 ≤ n ≤ 40`, `k ≤ 8`).
pub fn standard_corpus() -> Vec<Sequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0657_5245);
    let mut out = Vec::with_capacity(240);
    for _ in 0..40 {
        out.push(random_admissible(&mut rng, 8, 10, 4));
    }
    for _ in 0..200 {
        out.push(random_admissible(&mut rng, 8, 40, 8));
    }
    out
}

// ====================================================================
// Tests
// ====================================================================
