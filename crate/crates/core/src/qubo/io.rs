//! On-disk formats for compiled problems.
//!
//! Coordinate list: a header `# qubo m=<m> constant=<c>` followed by one
//! `i j value` line per upper-triangle entry (0-based, `i <= j`), where the
//! value of an off-diagonal entry is the sum of the two symmetric matrix
//! entries so that the quadratic form is preserved. Floats are printed in
//! shortest round-trip form; writing, reading and writing again reproduces
//! the file byte for byte.
//!
//! JSON carries the same entries plus the variable groups.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{to_ising, QuboProblem, VarGroup};

/// Upper-triangle entries `(i, j, v)` with `i <= j`, off-diagonal values
/// doubled, zeros skipped: `xi' Q xi = sum v * xi_i * xi_j`.
fn combined_upper_entries(q: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let m = q.nrows();
    let mut entries = Vec::new();
    for i in 0..m {
        for j in i..m {
            let v = if i == j { q[(i, i)] } else { q[(i, j)] + q[(j, i)] };
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    entries
}

fn matrix_from_entries(m: usize, entries: &[(usize, usize, f64)]) -> Result<DMatrix<f64>> {
    let mut q = DMatrix::zeros(m, m);
    for &(i, j, v) in entries {
        if i > j || j >= m {
            return Err(Error::Parse(format!(
                "entry ({i}, {j}) outside the upper triangle of a {m}-variable problem"
            )));
        }
        if i == j {
            q[(i, i)] += v;
        } else {
            q[(i, j)] += v / 2.0;
            q[(j, i)] += v / 2.0;
        }
    }
    Ok(q)
}

/// Write the coordinate-list form.
pub fn write_coo<W: Write>(problem: &QuboProblem, out: &mut W) -> Result<()> {
    writeln!(out, "# qubo m={} constant={}", problem.m(), problem.constant())?;
    for (i, j, v) in combined_upper_entries(problem.matrix()) {
        writeln!(out, "{i} {j} {v}")?;
    }
    Ok(())
}

pub fn write_coo_file(problem: &QuboProblem, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_coo(problem, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parse the coordinate-list form. Groups and decode information are not
/// part of this format.
pub fn read_coo<R: BufRead>(input: R) -> Result<QuboProblem> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty coordinate-list file".into()))??;
    let rest = header
        .strip_prefix("# qubo m=")
        .ok_or_else(|| Error::Parse(format!("bad header: {header:?}")))?;
    let (m_text, c_text) = rest
        .split_once(" constant=")
        .ok_or_else(|| Error::Parse(format!("bad header: {header:?}")))?;
    let m: usize = m_text
        .parse()
        .map_err(|_| Error::Parse(format!("bad variable count: {m_text:?}")))?;
    let constant: f64 = c_text
        .parse()
        .map_err(|_| Error::Parse(format!("bad constant: {c_text:?}")))?;
    let mut entries = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (i, j, v) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(i), Some(j), Some(v), None) => (i, j, v),
            _ => return Err(Error::Parse(format!("bad entry line: {trimmed:?}"))),
        };
        entries.push((
            i.parse()
                .map_err(|_| Error::Parse(format!("bad row index: {i:?}")))?,
            j.parse()
                .map_err(|_| Error::Parse(format!("bad column index: {j:?}")))?,
            v.parse()
                .map_err(|_| Error::Parse(format!("bad value: {v:?}")))?,
        ));
    }
    Ok(QuboProblem::new(matrix_from_entries(m, &entries)?, constant))
}

pub fn read_coo_file(path: &Path) -> Result<QuboProblem> {
    let file = fs::File::open(path)?;
    read_coo(std::io::BufReader::new(file))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuboJson {
    m: usize,
    constant: f64,
    entries: Vec<(usize, usize, f64)>,
    groups: Vec<VarGroup>,
}

/// Serialize to the JSON form (entries share the coordinate-list convention).
pub fn to_json(problem: &QuboProblem) -> String {
    let doc = QuboJson {
        m: problem.m(),
        constant: problem.constant(),
        entries: combined_upper_entries(problem.matrix()),
        groups: problem.groups().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("qubo document serializes")
}

pub fn write_json_file(problem: &QuboProblem, path: &Path) -> Result<()> {
    fs::write(path, to_json(problem))?;
    Ok(())
}

pub fn from_json(text: &str) -> Result<QuboProblem> {
    let doc: QuboJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("qubo json: {e}")))?;
    Ok(QuboProblem::new(matrix_from_entries(doc.m, &doc.entries)?, doc.constant)
        .with_groups(doc.groups))
}

pub fn read_json_file(path: &Path) -> Result<QuboProblem> {
    from_json(&fs::read_to_string(path)?)
}

/// Load either format, picking by file extension (`.json` or anything else
/// for the coordinate list).
pub fn read_problem_file(path: &Path) -> Result<QuboProblem> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json_file(path),
        _ => read_coo_file(path),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsingJson {
    m: usize,
    offset: f64,
    entries: Vec<(usize, usize, f64)>,
    h: Vec<f64>,
    groups: Vec<VarGroup>,
}

/// Serialize the spin-variable form of a problem to JSON.
pub fn ising_to_json(problem: &QuboProblem) -> String {
    let ising = to_ising(problem);
    let doc = IsingJson {
        m: problem.m(),
        offset: ising.offset(),
        entries: combined_upper_entries(ising.coupling()),
        h: ising.field().iter().copied().collect(),
        groups: problem.groups().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("ising document serializes")
}

pub fn write_ising_json_file(problem: &QuboProblem, path: &Path) -> Result<()> {
    fs::write(path, ising_to_json(problem))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, m: usize) -> QuboProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DMatrix::from_fn(m, m, |_, _| {
            if rng.gen_bool(0.7) {
                rng.gen_range(-3.0..3.0)
            } else {
                0.0
            }
        });
        QuboProblem::new(q, rng.gen_range(-5.0..5.0))
            .with_groups(vec![VarGroup::new("encoding", 0, m)])
    }

    #[test]
    fn coordinate_list_round_trip_is_byte_exact() {
        let problem = random_problem(1, 7);
        let mut first = Vec::new();
        write_coo(&problem, &mut first).unwrap();
        let reread = read_coo(&first[..]).unwrap();
        let mut second = Vec::new();
        write_coo(&reread, &mut second).unwrap();
        assert_eq!(first, second);
        // quadratic form preserved
        let bits: Vec<u8> = (0..7).map(|i| (i % 2) as u8).collect();
        assert_eq!(problem.value(&bits), reread.value(&bits));
    }

    #[test]
    fn json_round_trip_preserves_form_and_groups() {
        let problem = random_problem(2, 5);
        let text = to_json(&problem);
        let reread = from_json(&text).unwrap();
        assert_eq!(reread.groups(), problem.groups());
        for w in 0..32u64 {
            let bits: Vec<u8> = (0..5).map(|i| ((w >> i) & 1) as u8).collect();
            assert_eq!(problem.value(&bits), reread.value(&bits));
        }
        assert_eq!(to_json(&reread), text);
    }

    #[test]
    fn bad_headers_are_rejected(){
        assert!(read_coo("# quobo m=2 constant=0\n".as_bytes()).is_err());
        assert!(read_coo("# qubo m=x constant=0\n".as_bytes()).is_err());
        assert!(read_coo("# qubo m=2 constant=0\n0 0 1 9\n".as_bytes()).is_err());
        assert!(read_coo("# qubo m=2 constant=0\n1 0 1\n".as_bytes()).is_err());
    }

    #[test]
    fn ising_json_exports_fields() {
        let problem = random_problem(3, 4);
        let text = ising_to_json(&problem);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["m"], 4);
        assert!(doc["h"].as_array().unwrap().len() == 4);
        assert!(doc["entries"].is_array());
    }
}
