//! The resolution tower of a restriction variety.
//!
//! A restriction variety `V` admits a resolution `Ṽ → V` built as an
//! iterated tower of Grassmannian and orthogonal-Grassmannian bundles: one
//! row per linear group and one per quadric group, assembled bottom-to-top
//! in forgetful-map order.  Each row contributes an ordered list of bundle
//! factors whose dimensions follow five row types:
//!
//! 1. a linear group entirely inside the outermost radical:
//!    `G(α_g, n_{a_g} − a_{g−1})`;
//! 2. a linear group crossing radicals: a head `G(α_g, n_{a_g} − a_{g−1}
//!    − w_{η_g})` where `η_g` is the first group with `r_{b_h} < n_{a_g}`
//!    and `w_h = r_{b_h} − x_{b_h}`, one segment `G(α_g, α_g + w_{h−1} −
//!    w_h)` per remaining radical, and a tail `G(α_g, α_g + w_u)`;
//! 3. the innermost quadric group when its radical contains every linear
//!    step: `OG(β_1, d_{b_1} − r_{b_1})` plus segments and tail;
//! 4. the innermost quadric group otherwise: `OG(β_1, d_{b_1} − r_{b_1}
//!    − 2(a_t − x_{b_1}))` plus segments and tail;
//! 5. an outer quadric group: `OG(β_h, d_{b_h} − r_{b_h} − 2(k − b_{h−1}
//!    + 1 − x_{b_h}))` plus segments and tail.
//!
//! The total of all factor dimensions equals `dim V` — the resolution is
//! birational — which is the central consistency property tested here and
//! in the acceptance suite.
//!
//! Rows also carry the coordinate bookkeeping of the construction: the
//! flag coordinate `T`, the chart bound `Z` of a quadric row, and the
//! intermediate bounds `O` at each column crossed by the row.

use crate::degen::{lin_group_info, quad_group_info, Origin, SigmaLocus};
use crate::seqmodel::Sequence;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

// ====================================================================
// Types
// ====================================================================

/// Coordinate kind inside a tower row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordKind {
    /// Flag coordinate: how many of the `k` vectors are fixed after the row.
    T,
    /// Intermediate bound at a column the row crosses.
    O,
    /// Chart bound of a quadric row (the diagonal column).
    Z,
}

/// One coordinate entry of a tower row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerCoordinate {
    pub kind: CoordKind,
    /// Row level (1-based; linear rows `1..=t`, quadric rows `t+1..=t+u`).
    pub row: usize,
    /// The step the column attaches to, in sequence notation (`L5`,
    /// `Q7_10`); `flag` for the `T` coordinate.
    pub column: String,
    /// Dimension of the coordinate subspace.
    pub dim: i64,
}

/// One bundle factor of a tower row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerFactor {
    /// `true` for an orthogonal Grassmannian `OG(m, N)`, `false` for
    /// an ordinary Grassmannian `G(m, N)`.
    pub orthogonal: bool,
    /// Subspace dimension `m`.
    pub m: i64,
    /// Ambient dimension `N`.
    pub space: i64,
    /// `dim G(m,N) = m(N−m)`; `dim OG(m,N) = m(N−2m) + m(m−1)/2`.
    pub dim: i64,
    /// `OG(m, 2m)` has two isomorphic components (dimension unaffected).
    pub two_components: bool,
}

impl TowerFactor {
    fn label(&self) -> String {
        if self.orthogonal {
            format!("OG({},{})", self.m, self.space)
        } else {
            format!("G({},{})", self.m, self.space)
        }
    }
}

/// What a tower row is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// Linear group `g` (1-based).
    Linear { g: usize },
    /// Quadric group `h` (1-based, innermost first).
    Quadric { h: usize },
}

/// One row of the resolution tower.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerRow {
    /// Level `1..=t+u`; rows are stored bottom-to-top, i.e. highest first.
    pub level: usize,
    pub kind: RowKind,
    /// Row type 1–5.
    pub row_type: u8,
    pub coordinates: Vec<TowerCoordinate>,
    pub factors: Vec<TowerFactor>,
}

/// The resolution tower of a restriction variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDiagram {
    /// Rows in bottom-to-top (forgetful-map) order.
    pub rows: Vec<TowerRow>,
    /// A fixed-format rendering of the diagram; no semantics.
    pub ascii: String,
}

// ====================================================================
// Construction
// ====================================================================

fn g_factor(m: i64, space: i64) -> TowerFactor {
    debug_assert!(
        (0..=space).contains(&m),
        "Grassmannian G({m},{space}) out of range"
    );
    TowerFactor {
        orthogonal: false,
        m,
        space,
        dim: m * (space - m),
        two_components: false,
    }
}

fn og_factor(m: i64, space: i64) -> TowerFactor {
    debug_assert!(
        (0..=space).contains(&(2 * m)),
        "orthogonal Grassmannian OG({m},{space}) out of range"
    );
    TowerFactor {
        orthogonal: true,
        m,
        space,
        dim: m * (space - 2 * m) + m * (m - 1) / 2,
        two_components: space == 2 * m,
    }
}

/// Build the resolution tower of `seq`.
///
/// `seq` should be admissible; structurally broken sequences are rejected,
/// and the factor bookkeeping asserts the table preconditions in debug
/// builds.
pub fn build_tower(seq: &Sequence) -> Result<TowerDiagram> {
    if let Err(e) = Sequence::new(seq.n(), seq.steps().to_vec()) {
        return Err(Error::NotValidated(format!(
            "the tower is defined for structurally valid sequences: {e}"
        )));
    }
    let lg = lin_group_info(seq);
    let qg = quad_group_info(seq)?;
    let t = lg.len();
    let u = qg.len();
    let k = seq.k() as i64;
    // w_h = r_{b_h} − x_{b_h}: the part of radical h not yet hit by linears.
    let w: Vec<i64> = qg.iter().map(|q| q.r_b as i64 - q.x_b as i64).collect();

    let mut rows: Vec<TowerRow> = Vec::with_capacity(t + u);

    // Quadric rows, bottom (outermost, level t+u) to top (innermost, t+1).
    for h in (1..=u).rev() {
        let q = qg[h - 1];
        let level = t + h;
        let flag_count = k - q.b as i64 + 1; // s + Σ_{l ≤ h} β_l
        let own = format!("Q{}_{}", q.r_b, q.d_b);

        let mut coordinates = vec![TowerCoordinate {
            kind: CoordKind::T,
            row: level,
            column: "flag".into(),
            dim: flag_count,
        }];
        // Columns in ascending flag count: linear groups, then quadric
        // groups; the row's own column carries the Z chart bound.
        for lgi in &lg {
            coordinates.push(TowerCoordinate {
                kind: CoordKind::O,
                row: level,
                column: format!("L{}", lgi.max),
                dim: w[h - 1] + lgi.a as i64,
            });
        }
        for (theta, qt) in qg.iter().enumerate() {
            let count = k - qt.b as i64 + 1;
            coordinates.push(TowerCoordinate {
                kind: if theta + 1 == h { CoordKind::Z } else { CoordKind::O },
                row: level,
                column: format!("Q{}_{}", qt.r_b, qt.d_b),
                dim: w[h - 1] + count,
            });
        }

        let beta = q.beta as i64;
        let (row_type, z_factor) = if h == 1 {
            let inside = t == 0 || q.r_b >= lg[t - 1].max;
            if inside {
                (3, og_factor(beta, q.d_b as i64 - q.r_b as i64))
            } else {
                let a_t = lg[t - 1].a as i64;
                (
                    4,
                    og_factor(
                        beta,
                        q.d_b as i64 - q.r_b as i64 - 2 * (a_t - q.x_b as i64),
                    ),
                )
            }
        } else {
            let count_prev = k - qg[h - 2].b as i64 + 1; // k − b_{h−1} + 1
            (
                5,
                og_factor(
                    beta,
                    q.d_b as i64 - q.r_b as i64 - 2 * (count_prev - q.x_b as i64),
                ),
            )
        };
        let mut factors = vec![z_factor];
        for theta in (h + 1)..=u {
            factors.push(g_factor(beta, beta + w[theta - 2] - w[theta - 1]));
        }
        if u > 0 {
            factors.push(g_factor(beta, beta + w[u - 1]));
        }
        let _ = own;
        rows.push(TowerRow {
            level,
            kind: RowKind::Quadric { h },
            row_type,
            coordinates,
            factors,
        });
    }

    // Linear rows, level t down to 1.
    for g in (1..=t).rev() {
        let lgi = lg[g - 1];
        let a_prev = if g >= 2 { lg[g - 2].a as i64 } else { 0 };
        let alpha = lgi.alpha as i64;
        let coordinates = vec![TowerCoordinate {
            kind: CoordKind::T,
            row: g,
            column: format!("L{}", lgi.max),
            dim: lgi.a as i64,
        }];
        let (row_type, factors) = if u == 0 || lgi.max <= qg[u - 1].r_b {
            (1, vec![g_factor(alpha, lgi.max as i64 - a_prev)])
        } else {
            let eta = qg
                .iter()
                .position(|q| q.r_b < lgi.max)
                .expect("r_{b_u} < n_{a_g} guarantees a crossing")
                + 1;
            let mut factors = vec![g_factor(
                alpha,
                lgi.max as i64 - a_prev - w[eta - 1],
            )];
            for theta in (eta + 1)..=u {
                factors.push(g_factor(alpha, alpha + w[theta - 2] - w[theta - 1]));
            }
            factors.push(g_factor(alpha, alpha + w[u - 1]));
            (2, factors)
        };
        rows.push(TowerRow {
            level: g,
            kind: RowKind::Linear { g },
            row_type,
            coordinates,
            factors,
        });
    }

    let ascii = render_ascii(&rows);
    Ok(TowerDiagram { rows, ascii })
}

fn render_ascii(rows: &[TowerRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let kind = match row.kind {
            RowKind::Linear { g } => format!("linear group {g}"),
            RowKind::Quadric { h } => format!("quadric group {h}"),
        };
        let coords: Vec<String> = row
            .coordinates
            .iter()
            .map(|c| {
                let tag = match c.kind {
                    CoordKind::T => "T",
                    CoordKind::O => "O",
                    CoordKind::Z => "Z",
                };
                format!("{tag}({})={}", c.column, c.dim)
            })
            .collect();
        let factors: Vec<String> = row.factors.iter().map(TowerFactor::label).collect();
        out.push_str(&format!(
            "level {:>2}  {:<16} [type {}]  {}  |  {}\n",
            row.level,
            kind,
            row.row_type,
            coords.join(" "),
            factors.join(" "),
        ));
    }
    out
}

/// Total dimension of the tower: the sum of all factor dimensions.
pub fn tower_dim(diagram: &TowerDiagram) -> i64 {
    diagram
        .rows
        .iter()
        .flat_map(|r| r.factors.iter())
        .map(|f| f.dim)
        .sum()
}

// ====================================================================
// Generic fiber dimensions
// ====================================================================

/// The generic fiber dimension of the resolution `Ṽ → V` over the
/// degeneration locus with the given origin, from the per-case closed
/// forms.  Always equals the `fiber_dim` recorded on the locus emitted by
/// the degeneration (the two are computed by independent routes).
///
/// [`Error::OriginMismatch`] when `seq` cannot have emitted such a locus.
pub fn generic_fiber_dim(seq: &Sequence, locus: &SigmaLocus) -> Result<i64> {
    let lg = lin_group_info(seq);
    let qg = quad_group_info(seq)?;
    let t = lg.len();
    let u = qg.len();
    let s = seq.s();
    let m = seq.num_quadrics();
    let ns = seq.linear_dims().last().copied().unwrap_or(0);
    let k = seq.k() as i64;
    match locus.origin {
        Origin::R { h } => {
            if h == 0 || h > u {
                return Err(Error::OriginMismatch(format!(
                    "no quadric group {h} in a sequence with {u} groups"
                )));
            }
            let q = qg[h - 1];
            if q.r_b <= q.x_b {
                return Err(Error::OriginMismatch(
                    "the radical intersection cannot jump here".into(),
                ));
            }
            if s == 0 || q.r_b >= ns {
                if h > 1 {
                    return Err(Error::OriginMismatch(
                        "only the innermost group jumps beyond the linear steps".into(),
                    ));
                }
                let base = q.d_b as i64
                    - q.r_b as i64
                    - 2 * (k - q.b as i64 - q.x_b as i64)
                    - 2;
                if s > 0 && q.r_b == ns {
                    Ok(base + lg[t - 1].alpha as i64)
                } else {
                    Ok(base)
                }
            } else if let Some((g_idx, lin_g)) =
                lg.iter().enumerate().find(|(_, lgi)| lgi.max == q.r_b)
            {
                let next = lg[g_idx + 1];
                Ok(next.max as i64 - lin_g.max as i64 - next.alpha as i64
                    + lin_g.alpha as i64)
            } else {
                let sharp = lg
                    .iter()
                    .find(|lgi| lgi.max > q.r_b)
                    .expect("r_b < n_s guarantees a group above it");
                Ok(sharp.max as i64 - (q.r_b as i64 + sharp.a as i64 - q.x_b as i64))
            }
        }
        Origin::N { g } => {
            if g == 0 || g >= t {
                return Err(Error::OriginMismatch(format!(
                    "no inner linear group {g} in a sequence with {t} groups"
                )));
            }
            Ok(lg[g - 1].alpha as i64)
        }
        Origin::Ns => {
            if s == 0 || m == 0 {
                return Err(Error::OriginMismatch(
                    "the locus at n_s needs both linear and quadric steps".into(),
                ));
            }
            Ok(lg[t - 1].alpha as i64)
        }
        Origin::NsParity => {
            if s == 0 || m < 2 {
                return Err(Error::OriginMismatch(
                    "the parity locus needs a linear step and two quadric steps".into(),
                ));
            }
            Ok(2 * lg[t - 1].alpha as i64)
        }
        Origin::D { h } => {
            if h == 0 || h >= u {
                return Err(Error::OriginMismatch(format!(
                    "the dimension jump needs groups {h} and {}; the sequence has {u}",
                    h + 1
                )));
            }
            Ok(qg[h - 1].beta as i64)
        }
    }
}

// ====================================================================
// Tests
// ====================================================================
