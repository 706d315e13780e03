//! Plain-text field files.
//!
//! ```text
//! mmhom-field 1
//! space_dim 2
//! state_dim 1
//! counts 33 33
//! lo 0 0
//! hi 1 1
//! <one node per line, state_dim values, row-major with the last axis fastest>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use mmhom_core::field::GridField;
use mmhom_core::Bounds;

use crate::error::{LabError, Result};

const MAGIC: &str = "mmhom-field 1";

pub fn to_text(u: &GridField) -> String {
    let mut s = String::new();
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    let counts: Vec<String> = u.counts().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "space_dim {}", u.space_dim());
    let _ = writeln!(s, "state_dim {}", u.state_dim());
    let _ = writeln!(s, "counts {}", counts.join(" "));
    let _ = writeln!(s, "lo {}", join(u.bounds().lo()));
    let _ = writeln!(s, "hi {}", join(u.bounds().hi()));
    for node in 0..u.node_count() {
        let _ = writeln!(s, "{}", join(u.value(node)));
    }
    s
}

pub fn from_text(text: &str, path: &Path) -> Result<GridField> {
    let err = |line: usize, reason: String| LabError::Format {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        let (no, line) = lines.next().ok_or_else(|| err(0, format!("missing {what}")))?;
        Ok((no, line.split_whitespace().map(str::to_owned).collect()))
    };
    let (no, magic) = next("header")?;
    if magic.join(" ") != MAGIC {
        return Err(err(no, "not a field file".into()));
    }
    let mut keyed = |key: &str| -> Result<(usize, Vec<String>)> {
        let (no, mut words) = next(key)?;
        if words.first().map(String::as_str) != Some(key) {
            return Err(err(no, format!("expected `{key}`")));
        }
        words.remove(0);
        Ok((no, words))
    };
    fn parse<T: std::str::FromStr>(words: &[String]) -> Option<Vec<T>> {
        words.iter().map(|w| w.parse().ok()).collect()
    }
    let (no, w) = keyed("space_dim")?;
    let space_dim: usize = parse(&w).and_then(|v| v.first().copied()).ok_or_else(|| err(no, "bad space_dim".into()))?;
    let (no, w) = keyed("state_dim")?;
    let state_dim: usize = parse(&w).and_then(|v| v.first().copied()).ok_or_else(|| err(no, "bad state_dim".into()))?;
    let (no, w) = keyed("counts")?;
    let counts: Vec<usize> = parse(&w)
        .filter(|v: &Vec<usize>| v.len() == space_dim)
        .ok_or_else(|| err(no, "bad counts".into()))?;
    let (no, w) = keyed("lo")?;
    let lo: Vec<f64> = parse(&w).filter(|v: &Vec<f64>| v.len() == space_dim).ok_or_else(|| err(no, "bad lo".into()))?;
    let (no, w) = keyed("hi")?;
    let hi: Vec<f64> = parse(&w).filter(|v: &Vec<f64>| v.len() == space_dim).ok_or_else(|| err(no, "bad hi".into()))?;

    let nodes: usize = counts.iter().product();
    let mut values = Vec::with_capacity(nodes * state_dim);
    for _ in 0..nodes {
        let (no, w) = next("node values")?;
        let v: Vec<f64> = parse(&w)
            .filter(|v: &Vec<f64>| v.len() == state_dim)
            .ok_or_else(|| err(no, format!("expected {state_dim} values")))?;
        values.extend(v);
    }
    if let Ok((no, w)) = next("") {
        if !w.is_empty() {
            return Err(err(no, "trailing data".into()));
        }
    }
    Ok(GridField::new(Bounds::new(lo, hi)?, counts, state_dim, values)?)
}

pub fn write_field(u: &GridField, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(u)).map_err(|e| LabError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<GridField> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_round_trip_bit_for_bit() {
        let b = Bounds::new(vec![-0.5, 1.0 / 3.0], vec![0.5, 5.0 / 6.0]).unwrap();
        let u = GridField::from_fn(b, vec![5, 3], 2, |x, out| {
            out[0] = (x[0] / 0.07).tanh();
            out[1] = x[1].exp() * 1e-300;
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.field");
        write_field(&u, &path).unwrap();
        assert_eq!(read_field(&path).unwrap(), u);
    }

    #[test]
    fn truncated_files_report_the_problem() {
        let u = GridField::constant(Bounds::unit(1), vec![4], &[1.0]).unwrap();
        let text = to_text(&u);
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        let e = from_text(&cut, Path::new("x.field")).unwrap_err();
        assert!(e.to_string().contains("missing node values"), "{e}");
        let e = from_text("hello\n", Path::new("x.field")).unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }
}
