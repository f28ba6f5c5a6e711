//! Symmetric binary networks with missing entries.
//!
//! Edge lists hold one pair per line, `i j` (a link) or `i j v` with
//! `v ∈ {0, 1}`, separated by whitespace or commas. Indices are 0-based when
//! any index is 0 and 1-based otherwise. A `# nodes N` comment fixes the node
//! count. Unlisted pairs are either non-links (dense) or missing (sparse).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// How unlisted pairs of an edge list are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unlisted {
    Absent,
    Missing,
}

/// Symmetric `m × m` binary network; the diagonal is always missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkData {
    m: usize,
    y: Vec<Option<bool>>,
}

impl NetworkData {
    /// Every off-diagonal pair set to `fill`.
    pub fn filled(m: usize, fill: Option<bool>) -> Self {
        let mut y = vec![fill; m * m];
        for i in 0..m {
            y[i * m + i] = None;
        }
        Self { m, y }
    }

    /// From a square matrix with 0/1 entries and `NaN` or `−1` for missing.
    /// The diagonal is ignored.
    pub fn from_matrix(mat: &DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension(format!(
                "network matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let m = mat.nrows();
        let mut net = Self::filled(m, None);
        let decode = |v: f64| -> Result<Option<bool>> {
            if v.is_nan() || v == -1.0 {
                Ok(None)
            } else if v == 0.0 || v == 1.0 {
                Ok(Some(v == 1.0))
            } else {
                Err(Error::Data(format!("network entries must be 0, 1, -1 or NA, found {v}")))
            }
        };
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (decode(mat[(i, j)])?, decode(mat[(j, i)])?);
                let v = match (a, b) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(Error::Data(format!("asymmetric entries at ({}, {})", i + 1, j + 1)))
                    }
                    (Some(x), _) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                };
                net.set(i, j, v);
            }
        }
        Ok(net)
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Option<bool> {
        self.y[i * self.m + j]
    }

    /// Sets the pair `{i, j}`; ignored on the diagonal.
    pub fn set(&mut self, i: usize, j: usize, v: Option<bool>) {
        if i != j {
            self.y[i * self.m + j] = v;
            self.y[j * self.m + i] = v;
        }
    }

    /// Observed pairs `(i, j, y)` with `i < j`.
    pub fn observed_pairs(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        (0..self.m).flat_map(move |i| ((i + 1)..self.m).filter_map(move |j| self.get(i, j).map(|v| (i, j, v))))
    }

    pub fn n_observed(&self) -> usize {
        self.observed_pairs().count()
    }

    /// Fraction of observed pairs that are links.
    pub fn density(&self) -> f64 {
        let (mut ones, mut n) = (0usize, 0usize);
        for (_, _, v) in self.observed_pairs() {
            n += 1;
            ones += usize::from(v);
        }
        ones as f64 / n as f64
    }

    /// 0/1 matrix with `NaN` for missing entries.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| match self.get(i, j) {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => f64::NAN,
        })
    }
}

/// Parses an edge list. `nodes` overrides both the `# nodes` comment and
/// the largest index.
pub fn parse_edge_list(text: &str, origin: &Path, nodes: Option<usize>, unlisted: Unlisted) -> Result<NetworkData> {
    let err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let mut declared = None;
    let mut entries: Vec<(usize, usize, usize, bool)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("nodes") {
                let n = words.next().and_then(|w| w.parse().ok());
                declared = Some(n.ok_or_else(|| err(no, "malformed '# nodes' line".into()))?);
            }
            continue;
        }
        let toks: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(err(no, format!("expected 'i j' or 'i j v', found {} fields", toks.len())));
        }
        let index = |t: &str| t.parse::<usize>().map_err(|_| err(no, format!("bad node index {t:?}")));
        let (i, j) = (index(toks[0])?, index(toks[1])?);
        let v = match toks.get(2) {
            None | Some(&"1") => true,
            Some(&"0") => false,
            Some(t) => return Err(err(no, format!("edge value must be 0 or 1, found {t:?}"))),
        };
        entries.push((no, i, j, v));
    }

    let zero_based = entries.iter().any(|&(_, i, j, _)| i == 0 || j == 0);
    let shift = usize::from(!zero_based);
    let max_index = entries.iter().map(|&(_, i, j, _)| i.max(j) + 1 - shift).max().unwrap_or(0);
    let m = nodes.or(declared).unwrap_or(max_index);
    if let Some(&(no, i, j, _)) = entries.iter().find(|&&(_, i, j, _)| i.max(j) + 1 - shift > m) {
        return Err(err(no, format!("pair ({i}, {j}) exceeds {m} nodes")));
    }

    let fill = match unlisted {
        Unlisted::Absent => Some(false),
        Unlisted::Missing => None,
    };
    let mut net = NetworkData::filled(m, fill);
    let mut seen: Vec<Option<(bool, usize)>> = vec![None; m * m];
    for (no, i, j, v) in entries {
        let (i, j) = (i - shift, j - shift);
        if i == j {
            continue;
        }
        let key = i.min(j) * m + i.max(j);
        if let Some((prev, prev_no)) = seen[key] {
            if prev != v {
                return Err(Error::Data(format!(
                    "{}: line {no} sets pair ({}, {}) to {} but line {prev_no} set it to {}",
                    origin.display(),
                    i + shift,
                    j + shift,
                    u8::from(v),
                    u8::from(prev)
                )));
            }
        }
        seen[key] = Some((v, no));
        net.set(i, j, Some(v));
    }
    Ok(net)
}

pub fn load_edge_list(path: &Path, nodes: Option<usize>, unlisted: Unlisted) -> Result<NetworkData> {
    parse_edge_list(&fs::read_to_string(path)?, path, nodes, unlisted)
}

/// 1-based `i j v` lines for every observed pair, preceded by `# nodes m`.
/// Reading it back in either mode with its node count restores the network.
pub fn format_edge_list(net: &NetworkData) -> String {
    let mut s = format!("# nodes {}\n", net.nodes());
    for (i, j, v) in net.observed_pairs() {
        writeln!(s, "{} {} {}", i + 1, j + 1, u8::from(v)).expect("write to string");
    }
    s
}

pub fn write_edge_list(path: &Path, net: &NetworkData) -> Result<()> {
    fs::write(path, format_edge_list(net))?;
    Ok(())
}
