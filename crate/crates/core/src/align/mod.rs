//! Dynamic-programming engines for alignment scores.
//!
//! All engines use the separable two-stage recurrence: a column stage
//! P(j') = max_a [M(i-1-a, j') - g(a)] followed by a row stage over P. Scores
//! are accumulated in one fixed floating-point order,
//! `K + ((prev - g(a)) - g(b))`, shared with [`alignment_score`], so the
//! score of a traced alignment reproduces the DP value bit for bit.
//!
//! Unreachable cells hold `f64::NEG_INFINITY` and are skipped rather than
//! combined arithmetically.

pub mod brute;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Alignment, GapPenalty, ScoreMatrix};

const NEG_INF: f64 = f64::NEG_INFINITY;

/// g(0), …, g(max_k) tabulated for the inner loops. Tables stop at their
/// last defined entry; [`GapTable::max_k`] reports the effective limit.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    vals: Vec<f64>,
}

impl GapTable {
    pub fn new(g: &GapPenalty, max_k: usize) -> Result<Self> {
        Ok(Self { vals: g.tabulate(max_k.min(g.max_len()))? })
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.vals[k]
    }

    pub fn max_k(&self) -> usize {
        self.vals.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals
    }

    fn require(&self, k: usize) -> Result<()> {
        if k > self.max_k() {
            Err(Error::TableExhausted { len: self.max_k(), k })
        } else {
            Ok(())
        }
    }
}

/// Largest local score H with its canonical optimal alignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalResult {
    pub score: f64,
    pub optimal: Alignment,
    pub match_count: usize,
}

/// Reusable DP buffers. One workspace serves one call at a time.
#[derive(Debug, Default, Clone)]
pub struct DpWorkspace {
    mat: Vec<f64>,
    layer: Vec<f64>,
    col: Vec<f64>,
}

impl DpWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(buf: &mut Vec<f64>, len: usize, fill: f64) {
        buf.clear();
        buf.resize(len, fill);
    }
}

fn check_nonempty(x: &[u8], y: &[u8]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        Err(Error::EmptySequence)
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scores of given alignments
// ---------------------------------------------------------------------------

/// Interior-gap score accumulated in DP order; `None` when out of range.
fn interior_score(
    pairs: &[(usize, usize)],
    x: &[u8],
    y: &[u8],
    k: &ScoreMatrix,
    g: &GapPenalty,
    start: f64,
) -> Result<Option<f64>> {
    let (li, lj) = pairs[pairs.len() - 1];
    if li > x.len() || lj > y.len() {
        return Ok(None);
    }
    let (i1, j1) = pairs[0];
    let mut s = k.get(x[i1 - 1], y[j1 - 1]) + start;
    for w in pairs.windows(2) {
        let ((pi, pj), (i, j)) = (w[0], w[1]);
        let ga = g.eval(i - pi - 1)?;
        let gb = g.eval(j - pj - 1)?;
        s = k.get(x[i - 1], y[j - 1]) + ((s - ga) - gb);
    }
    Ok(Some(s))
}

/// S_z: sum of pair scores minus interior gap penalties. Returns -∞ when the
/// alignment runs past either sequence.
pub fn alignment_score(z: &Alignment, x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    Ok(interior_score(z.pairs(), x, y, k, g, 0.0)?.unwrap_or(NEG_INF))
}

/// S_z with the four flanking gaps also penalized.
pub fn restricted_score(z: &Alignment, x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    let (i1, j1) = z.first();
    let (lx, ly) = z.last();
    if lx > x.len() || ly > y.len() {
        return Ok(NEG_INF);
    }
    let start = (0.0 - g.eval(i1 - 1)?) - g.eval(j1 - 1)?;
    let s = interior_score(z.pairs(), x, y, k, g, start)?.unwrap_or(NEG_INF);
    Ok((s - g.eval(x.len() - lx)?) - g.eval(y.len() - ly)?)
}

// ---------------------------------------------------------------------------
// Local alignment
// ---------------------------------------------------------------------------

/// Largest a <= cap with g(a) < bound, starting the search from `from`.
#[inline]
fn grow_window(gaps: &GapTable, bound: f64, from: usize, cap: usize) -> usize {
    let mut w = from;
    while w < cap && gaps.get(w + 1) < bound {
        w += 1;
    }
    w
}

/// H = max over nonempty alignments of S_z, with the canonical z*.
pub fn local_align(x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<LocalResult> {
    check_nonempty(x, y)?;
    let gaps = GapTable::new(g, x.len().max(y.len()))?;
    local_align_ws(&mut DpWorkspace::new(), x, y, k, &gaps)
}

/// [`local_align`] with caller-supplied buffers.
///
/// Predecessors whose value cannot exceed zero are never examined: with B the
/// largest cell value in completed rows, a gap of length a with g(a) >= B
/// yields a contribution <= 0, which the fresh-start option already covers.
/// The window therefore stays exact while usually being much shorter than
/// the sequences.
pub fn local_align_ws(
    ws: &mut DpWorkspace,
    x: &[u8],
    y: &[u8],
    k: &ScoreMatrix,
    gaps: &GapTable,
) -> Result<LocalResult> {
    check_nonempty(x, y)?;
    let (m, n) = (x.len(), y.len());
    let wcap = m.max(n).saturating_sub(2);
    gaps.require(wcap)?;
    DpWorkspace::reset(&mut ws.mat, m * n, 0.0);
    DpWorkspace::reset(&mut ws.col, n, NEG_INF);
    let mat = &mut ws.mat;
    let col = &mut ws.col;

    let mut best = NEG_INF;
    let mut best_cell = (1, 1);
    let mut bound = NEG_INF;
    let mut w = 0usize;

    for i in 1..=m {
        let krow = k.row(x[i - 1]);
        let use_pred = i >= 2 && bound > 0.0;
        if use_pred {
            w = grow_window(gaps, bound, w, wcap);
            let wa = w.min(i - 2);
            for jp in 1..n {
                let mut v = NEG_INF;
                for a in 0..=wa {
                    let c = mat[(i - 2 - a) * n + (jp - 1)] - gaps.get(a);
                    if c > v {
                        v = c;
                    }
                }
                col[jp - 1] = v;
            }
        }
        let row = &mut mat[(i - 1) * n..i * n];
        let mut row_max = NEG_INF;
        for j in 1..=n {
            let mut bp = 0.0;
            if use_pred && j >= 2 {
                let wb = w.min(j - 2);
                for b in 0..=wb {
                    let c = col[j - 2 - b] - gaps.get(b);
                    if c > bp {
                        bp = c;
                    }
                }
            }
            let v = krow[y[j - 1] as usize] + bp;
            row[j - 1] = v;
            if v > row_max {
                row_max = v;
            }
            if v > best {
                best = v;
                best_cell = (i, j);
            }
        }
        if row_max > bound {
            bound = row_max;
        }
    }

    let w_final = grow_window(gaps, bound, 0, wcap);
    let pairs = local_traceback(mat, n, best_cell, w_final, gaps);
    let match_count = pairs.len();
    Ok(LocalResult { score: best, optimal: Alignment::from_valid(pairs), match_count })
}

/// Follows the lexicographically smallest maximizing predecessor, stopping
/// as soon as starting fresh is at least as good.
fn local_traceback(mat: &[f64], n: usize, end: (usize, usize), w: usize, gaps: &GapTable) -> Vec<(usize, usize)> {
    let mut pairs = vec![end];
    let (mut i, mut j) = end;
    while i >= 2 && j >= 2 {
        let mut best = 0.0;
        let mut pred = None;
        let (wa, wb) = (w.min(i - 2), w.min(j - 2));
        for a in (0..=wa).rev() {
            let ip = i - 1 - a;
            for b in (0..=wb).rev() {
                let jp = j - 1 - b;
                let c = (mat[(ip - 1) * n + (jp - 1)] - gaps.get(a)) - gaps.get(b);
                if c > best {
                    best = c;
                    pred = Some((ip, jp));
                }
            }
        }
        match pred {
            Some(p) => {
                pairs.push(p);
                (i, j) = p;
            }
            None => break,
        }
    }
    pairs.reverse();
    pairs
}

/// H∞: best contiguous diagonal run.
pub fn gapless_local(x: &[u8], y: &[u8], k: &ScoreMatrix) -> Result<f64> {
    check_nonempty(x, y)?;
    let (m, n) = (x.len() as isize, y.len() as isize);
    let mut best = NEG_INF;
    for d in -(m - 1)..n {
        let (mut i, mut j) = if d < 0 { ((-d) as usize, 0usize) } else { (0usize, d as usize) };
        let mut run = 0.0f64;
        let mut first = true;
        while i < x.len() && j < y.len() {
            let prev = if first || run <= 0.0 { 0.0 } else { run };
            run = k.get(x[i], y[j]) + prev;
            first = false;
            if run > best {
                best = run;
            }
            i += 1;
            j += 1;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Global and fixed-match scores
// ---------------------------------------------------------------------------

/// Column stage over all rows above `i`: col[j'] = max_a [src(i-1-a, j') - g(a)].
#[inline]
fn column_stage(src: &[f64], n: usize, i: usize, first_row: usize, gaps: &GapTable, col: &mut [f64]) {
    for jp in 1..n {
        let mut v = NEG_INF;
        let mut ip = i - 1;
        while ip >= first_row {
            let a = i - 1 - ip;
            let ga = gaps.get(a);
            if ga == f64::INFINITY {
                break;
            }
            let s = src[(ip - 1) * n + (jp - 1)];
            if s != NEG_INF {
                let c = s - ga;
                if c > v {
                    v = c;
                }
            }
            ip -= 1;
        }
        col[jp - 1] = v;
    }
}

/// Row stage: max_b [col[j-1-b] - g(b)] over columns >= first_col.
#[inline]
fn row_stage(col: &[f64], j: usize, first_col: usize, gaps: &GapTable) -> f64 {
    let mut v = NEG_INF;
    let mut jp = j - 1;
    while jp >= first_col {
        let b = j - 1 - jp;
        let gb = gaps.get(b);
        if gb == f64::INFINITY {
            break;
        }
        let s = col[jp - 1];
        if s != NEG_INF {
            let c = s - gb;
            if c > v {
                v = c;
            }
        }
        jp -= 1;
    }
    v
}

fn finalize(mat: &[f64], m: usize, n: usize, first: usize, gaps: &GapTable) -> f64 {
    let mut best = NEG_INF;
    for i in first..=m {
        let gi = gaps.get(m - i);
        if gi == f64::INFINITY {
            continue;
        }
        for j in first..=n {
            let gj = gaps.get(n - j);
            let v = mat[(i - 1) * n + (j - 1)];
            if v == NEG_INF || gj == f64::INFINITY {
                continue;
            }
            let s = (v - gi) - gj;
            if s > best {
                best = s;
            }
        }
    }
    best
}

/// G: best alignment score with all four flanks penalized.
pub fn global_score(x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    check_nonempty(x, y)?;
    let gaps = GapTable::new(g, x.len().max(y.len()))?;
    global_score_ws(&mut DpWorkspace::new(), x, y, k, &gaps)
}

pub fn global_score_ws(ws: &mut DpWorkspace, x: &[u8], y: &[u8], k: &ScoreMatrix, gaps: &GapTable) -> Result<f64> {
    check_nonempty(x, y)?;
    let (m, n) = (x.len(), y.len());
    gaps.require(m.max(n) - 1)?;
    DpWorkspace::reset(&mut ws.mat, m * n, NEG_INF);
    DpWorkspace::reset(&mut ws.col, n, NEG_INF);
    for i in 1..=m {
        let gi = gaps.get(i - 1);
        if i >= 2 {
            column_stage(&ws.mat, n, i, 1, gaps, &mut ws.col);
        }
        let krow = k.row(x[i - 1]);
        for j in 1..=n {
            let gj = gaps.get(j - 1);
            let mut best = if gi == f64::INFINITY || gj == f64::INFINITY {
                NEG_INF
            } else {
                (0.0 - gi) - gj
            };
            if i >= 2 && j >= 2 {
                let p = row_stage(&ws.col, j, 1, gaps);
                if p > best {
                    best = p;
                }
            }
            if best != NEG_INF {
                ws.mat[(i - 1) * n + (j - 1)] = krow[y[j - 1] as usize] + best;
            }
        }
    }
    Ok(finalize(&ws.mat, m, n, 1, gaps))
}

/// G_κ: best flank-penalized score over alignments with exactly κ pairs, the
/// first being (1, 1).
pub fn fixed_match_score(kappa: usize, x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    let gaps = GapTable::new(g, x.len().max(y.len()))?;
    fixed_match_score_ws(&mut DpWorkspace::new(), kappa, x, y, k, &gaps)
}

pub fn fixed_match_score_ws(
    ws: &mut DpWorkspace,
    kappa: usize,
    x: &[u8],
    y: &[u8],
    k: &ScoreMatrix,
    gaps: &GapTable,
) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::InvalidArgument("kappa must be >= 1".into()));
    }
    let (m, n) = (x.len(), y.len());
    if m < kappa || n < kappa {
        return Err(Error::SequenceTooShort { need: kappa, got: m.min(n) });
    }
    gaps.require(m.max(n) - 1)?;
    if kappa == 1 {
        let s = k.get(x[0], y[0]) + ((0.0 - gaps.get(0)) - gaps.get(0));
        let (gm, gn) = (gaps.get(m - 1), gaps.get(n - 1));
        if gm == f64::INFINITY || gn == f64::INFINITY {
            return Ok(NEG_INF);
        }
        return Ok((s - gm) - gn);
    }
    DpWorkspace::reset(&mut ws.mat, m * n, NEG_INF);
    DpWorkspace::reset(&mut ws.layer, m * n, NEG_INF);
    DpWorkspace::reset(&mut ws.col, n, NEG_INF);
    ws.mat[0] = k.get(x[0], y[0]) + ((0.0 - gaps.get(0)) - gaps.get(0));
    for t in 2..=kappa {
        std::mem::swap(&mut ws.mat, &mut ws.layer);
        ws.mat.fill(NEG_INF);
        // Layer t - 1 lives in `layer`, supported on rows/cols >= t - 1.
        for i in t..=m {
            column_stage(&ws.layer, n, i, t - 1, gaps, &mut ws.col);
            let krow = k.row(x[i - 1]);
            for j in t..=n {
                let p = row_stage(&ws.col, j, t - 1, gaps);
                if p != NEG_INF {
                    ws.mat[(i - 1) * n + (j - 1)] = krow[y[j - 1] as usize] + p;
                }
            }
        }
    }
    Ok(finalize(&ws.mat, m, n, kappa, gaps))
}
