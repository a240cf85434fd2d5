//! Text formats: score matrices, letter distributions, sequences and gap
//! specifications.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Alphabet, AsymptoticClass, GapPenalty, LetterDist, ScoreMatrix, ScoringModel};

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn number(source: &str, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(source, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(source, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Header line of symbols followed by one row of scores per symbol.
pub fn parse_score_matrix(text: &str) -> Result<(Alphabet, ScoreMatrix)> {
    const SRC: &str = "score matrix";
    let mut lines = content_lines(text);
    let header = lines.next().ok_or_else(|| Error::parse(SRC, "empty file"))?;
    let alphabet = Alphabet::new(header.split_whitespace())?;
    let size = alphabet.len();
    let mut entries = Vec::with_capacity(size * size);
    for row in 0..size {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(SRC, format!("expected {size} rows, got {row}")))?;
        let mut toks: Vec<&str> = line.split_whitespace().collect();
        // Rows may optionally start with their symbol.
        if toks.len() == size + 1 && toks[0] == alphabet.symbols()[row] {
            toks.remove(0);
        }
        if toks.len() != size {
            return Err(Error::parse(SRC, format!("row {} has {} entries", row + 1, toks.len())));
        }
        for t in toks {
            entries.push(number(SRC, t)?);
        }
    }
    if lines.next().is_some() {
        return Err(Error::parse(SRC, "trailing rows after matrix"));
    }
    Ok((alphabet, ScoreMatrix::new(size, entries)?))
}

/// Lines of `symbol probability`; every alphabet symbol exactly once.
pub fn parse_distribution(text: &str, alphabet: &Alphabet) -> Result<LetterDist> {
    const SRC: &str = "distribution";
    let mut probs = vec![None; alphabet.len()];
    for line in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(SRC, format!("expected `symbol probability`, got {line:?}")));
        }
        let ix = alphabet
            .index_of(toks[0])
            .ok_or_else(|| Error::parse(SRC, format!("unknown symbol {:?}", toks[0])))?;
        if probs[ix as usize].replace(number(SRC, toks[1])?).is_some() {
            return Err(Error::parse(SRC, format!("symbol {:?} listed twice", toks[0])));
        }
    }
    let probs = probs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::parse(SRC, format!("missing symbol {:?}", alphabet.symbols()[i])))
        })
        .collect::<Result<Vec<_>>>()?;
    LetterDist::new(probs)
}

/// Builds a model from a score-matrix file and an optional distribution
/// file (uniform letters when absent).
pub fn load_model(scores: &Path, dist: Option<&Path>) -> Result<ScoringModel> {
    let (alphabet, matrix) = parse_score_matrix(&read(scores)?)?;
    let dist = match dist {
        Some(p) => parse_distribution(&read(p)?, &alphabet)?,
        None => LetterDist::uniform(alphabet.len())?,
    };
    ScoringModel::new(alphabet, dist, matrix)
}

/// Sequence text with header lines (`>`) removed.
pub fn parse_sequence(text: &str, alphabet: &Alphabet) -> Result<Vec<u8>> {
    let body: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with('>')).collect();
    let seq = alphabet.encode(&body.join("\n"))?;
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(seq)
}

pub fn load_sequence(path: &Path, alphabet: &Alphabet) -> Result<Vec<u8>> {
    parse_sequence(&read(path)?, alphabet)
}

fn gap_args(kind: &str, args: &str, want: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = args
        .split(',')
        .map(|t| number("gap spec", t))
        .collect::<Result<_>>()?;
    if vals.len() != want {
        return Err(Error::parse(
            "gap spec",
            format!("{kind} takes {want} comma-separated values, got {}", vals.len()),
        ));
    }
    Ok(vals)
}

/// Asymptotic class of a table: `unknown`, `affine/δ`, `power/δ/α` or `log/δ`.
pub fn parse_class(spec: &str) -> Result<AsymptoticClass> {
    let parts: Vec<&str> = spec.trim().split('/').collect();
    let nums = |n: usize| -> Result<Vec<f64>> {
        if parts.len() != n + 1 {
            return Err(Error::parse("gap class", format!("bad class {spec:?}")));
        }
        parts[1..].iter().map(|t| number("gap class", t)).collect()
    };
    match parts[0] {
        "unknown" if parts.len() == 1 => Ok(AsymptoticClass::Unknown),
        "affine" => Ok(AsymptoticClass::Affine { delta: nums(1)?[0] }),
        "log" => Ok(AsymptoticClass::Logarithmic { delta: nums(1)?[0] }),
        "power" => {
            let v = nums(2)?;
            Ok(AsymptoticClass::PowerLaw { delta: v[0], alpha: v[1] })
        }
        _ => Err(Error::parse("gap class", format!("bad class {spec:?}"))),
    }
}

/// Gap table file: whitespace-separated g(1), g(2), …. Δ is g(1) and
/// γ(k) = g(k) - g(1).
pub fn parse_gap_table(text: &str, class: AsymptoticClass) -> Result<GapPenalty> {
    let vals: Vec<f64> = content_lines(text)
        .flat_map(str::split_whitespace)
        .map(|t| number("gap table", t))
        .collect::<Result<_>>()?;
    let first = *vals.first().ok_or_else(|| Error::parse("gap table", "empty table"))?;
    GapPenalty::table(first, vals.iter().map(|v| v - first).collect(), class)
}

/// Parses `affine:Δ,δ`, `power:Δ,δ,α`, `log:Δ,δ`, `inf` or `table:FILE,CLASS`.
/// Relative table paths resolve against `base`.
pub fn parse_gap_spec(spec: &str, base: &Path) -> Result<GapPenalty> {
    let spec = spec.trim();
    if spec == "inf" {
        return Ok(GapPenalty::infinite());
    }
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| Error::parse("gap spec", format!("missing ':' in {spec:?}")))?;
    match kind {
        "affine" => {
            let v = gap_args(kind, args, 2)?;
            GapPenalty::affine(v[0], v[1])
        }
        "power" => {
            let v = gap_args(kind, args, 3)?;
            GapPenalty::power_law(v[0], v[1], v[2])
        }
        "log" => {
            let v = gap_args(kind, args, 2)?;
            GapPenalty::logarithmic(v[0], v[1])
        }
        "table" => {
            let (file, class) = args
                .rsplit_once(',')
                .ok_or_else(|| Error::parse("gap spec", "table needs FILE,CLASS"))?;
            let class = parse_class(class)?;
            parse_gap_table(&read(&base.join(file))?, class)
        }
        _ => Err(Error::parse("gap spec", format!("unknown family {kind:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GapFamily;

    #[test]
    fn score_matrix_roundtrip() {
        let (a, k) = parse_score_matrix("A C\n1 -2\n-2 1\n").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(k.get(0, 1), -2.0);
        let (_, k) = parse_score_matrix("A C\nA 1 -2\nC -2 1\n").unwrap();
        assert_eq!(k.get(1, 1), 1.0);
        assert!(parse_score_matrix("A C\n1 -2\n-1 1\n").is_err());
        assert!(parse_score_matrix("A C\n1 -2\n").is_err());
        assert!(parse_score_matrix("A C\n1 x\n-2 1").is_err());
    }

    #[test]
    fn distribution_by_symbol() {
        let a = Alphabet::from_chars("AC").unwrap();
        let d = parse_distribution("C 0.25\nA 0.75\n", &a).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.25]);
        assert!(parse_distribution("A 1.0\n", &a).is_err());
        assert!(parse_distribution("A 0.5\nA 0.5\n", &a).is_err());
        assert!(parse_distribution("A 0.5\nC 0.6\n", &a).is_err());
    }

    #[test]
    fn sequence_skips_headers() {
        let a = Alphabet::from_chars("ACGT").unwrap();
        assert_eq!(parse_sequence(">seq1\nAC\nGT\n", &a).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(parse_sequence(">only\n", &a), Err(Error::EmptySequence)));
    }

    #[test]
    fn gap_specs() {
        let base = Path::new(".");
        assert_eq!(parse_gap_spec("affine:2,1", base).unwrap(), GapPenalty::affine(2.0, 1.0).unwrap());
        assert_eq!(
            parse_gap_spec("power:1,1,0.5", base).unwrap(),
            GapPenalty::power_law(1.0, 1.0, 0.5).unwrap()
        );
        assert_eq!(parse_gap_spec("log:0,2", base).unwrap(), GapPenalty::logarithmic(0.0, 2.0).unwrap());
        assert!(parse_gap_spec("inf", base).unwrap().is_infinite());
        for bad in ["affine:2", "affine", "cubic:1,2", "log:1,x", "power:1,1,2"] {
            assert!(parse_gap_spec(bad, base).is_err(), "{bad}");
        }
    }

    #[test]
    fn gap_table_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g.txt"), "2 3 3.5\n3.9\n").unwrap();
        let g = parse_gap_spec("table:g.txt,log/2", dir.path()).unwrap();
        assert_eq!(g.delta, 2.0);
        assert_eq!(g.eval(4).unwrap(), 3.9);
        match g.family {
            GapFamily::Table { class, .. } => assert_eq!(class, AsymptoticClass::Logarithmic { delta: 2.0 }),
            _ => panic!("expected table"),
        }
        assert_eq!(parse_class("power/1/0.5").unwrap(), AsymptoticClass::PowerLaw { delta: 1.0, alpha: 0.5 });
        assert!(parse_class("log").is_err());
    }
}
