//! Exhaustive enumeration over candidate alignments. Used as a test oracle.

use crate::error::{Error, Result};
use crate::model::{Alignment, GapPenalty, ScoreMatrix};

use super::{alignment_score, restricted_score};

/// Largest sequence length accepted by the enumerators.
pub const MAX_LEN: usize = 7;

fn check(x: &[u8], y: &[u8]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    if x.len() > MAX_LEN || y.len() > MAX_LEN {
        return Err(Error::SizeCap(format!(
            "brute force limited to lengths <= {MAX_LEN}, got {}x{}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Calls `f` on every nonempty strictly increasing pair list inside [1,m]x[1,n]
/// whose first pair satisfies `first`.
fn for_each_alignment(
    m: usize,
    n: usize,
    first: impl Fn(usize, usize) -> bool,
    f: &mut dyn FnMut(&[(usize, usize)]) -> Result<()>,
) -> Result<()> {
    fn extend(
        m: usize,
        n: usize,
        pairs: &mut Vec<(usize, usize)>,
        f: &mut dyn FnMut(&[(usize, usize)]) -> Result<()>,
    ) -> Result<()> {
        f(pairs)?;
        let (pi, pj) = pairs[pairs.len() - 1];
        for i in pi + 1..=m {
            for j in pj + 1..=n {
                pairs.push((i, j));
                extend(m, n, pairs, f)?;
                pairs.pop();
            }
        }
        Ok(())
    }
    let mut pairs = Vec::with_capacity(MAX_LEN);
    for i in 1..=m {
        for j in 1..=n {
            if first(i, j) {
                pairs.push((i, j));
                extend(m, n, &mut pairs, f)?;
                pairs.pop();
            }
        }
    }
    Ok(())
}

fn maximize(
    x: &[u8],
    y: &[u8],
    first: impl Fn(usize, usize) -> bool,
    keep: impl Fn(usize) -> bool,
    score: impl Fn(&Alignment) -> Result<f64>,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for_each_alignment(x.len(), y.len(), first, &mut |pairs| {
        if keep(pairs.len()) {
            let s = score(&Alignment::new(pairs.to_vec())?)?;
            if s > best {
                best = s;
            }
        }
        Ok(())
    })?;
    Ok(best)
}

/// max S_z over all nonempty alignments.
pub fn brute_force_local(x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    check(x, y)?;
    maximize(x, y, |_, _| true, |_| true, |z| alignment_score(z, x, y, k, g))
}

/// max of the flank-penalized score over all nonempty alignments.
pub fn brute_force_global(x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    check(x, y)?;
    maximize(x, y, |_, _| true, |_| true, |z| restricted_score(z, x, y, k, g))
}

/// max of the flank-penalized score over alignments with exactly κ pairs
/// starting at (1, 1).
pub fn brute_force_fixed_match(kappa: usize, x: &[u8], y: &[u8], k: &ScoreMatrix, g: &GapPenalty) -> Result<f64> {
    check(x, y)?;
    if x.len() < kappa || y.len() < kappa {
        return Err(Error::SequenceTooShort { need: kappa, got: x.len().min(y.len()) });
    }
    maximize(
        x,
        y,
        |i, j| i == 1 && j == 1,
        |len| len == kappa,
        |z| restricted_score(z, x, y, k, g),
    )
}

/// Every nonempty alignment inside [1,m]x[1,n], in lexicographic order.
pub fn all_alignments(m: usize, n: usize) -> Result<Vec<Alignment>> {
    if m > MAX_LEN || n > MAX_LEN {
        return Err(Error::SizeCap(format!("lengths must be <= {MAX_LEN}")));
    }
    let mut out = Vec::new();
    for_each_alignment(m, n, |_, _| true, &mut |p| {
        out.push(Alignment::new(p.to_vec())?);
        Ok(())
    })?;
    Ok(out)
}
