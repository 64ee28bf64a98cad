use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt::Write as _;
use std::path::Path;

/// Sparse binary parity-check matrix `H` (m x n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl LdpcCode {
    /// Build from per-check variable lists. Rejects duplicate edges,
    /// out-of-range indices and empty columns.
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let m = rows.len();
        if n == 0 || m == 0 || m >= n {
            return Err(Error::InvalidParameter(format!(
                "need 0 < m < n for a code of positive rate, got n={n} m={m}"
            )));
        }
        let mut cols = vec![Vec::new(); n];
        let mut rows = rows;
        for (c, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Format(format!("duplicate edge in check {c}")));
            }
            for &v in row.iter() {
                let col = cols
                    .get_mut(v as usize)
                    .ok_or_else(|| Error::Format(format!("check {c} references variable {v} >= n={n}")))?;
                col.push(c as u32);
            }
        }
        if let Some(v) = cols.iter().position(Vec::is_empty) {
            return Err(Error::Format(format!("variable {v} is in no check")));
        }
        Ok(LdpcCode { n, m, rows, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Design rate `(n - m) / n`.
    pub fn rate(&self) -> f64 {
        (self.n - self.m) as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `s = H c mod 2`.
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: bits.len(),
            });
        }
        Ok(self.syndrome_unchecked(bits))
    }

    pub(crate) fn syndrome_unchecked(&self, bits: &[u8]) -> Vec<u8> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)))
            .collect()
    }

    /// Parse the alist layout: `n m`, max column/row weights, the column
    /// weights, the row weights, then one line per column and one per row of
    /// 1-based indices (zero padding ignored).
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut nums = |what: &str| -> Result<Vec<usize>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("alist ended before {what}")))?;
            line.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad number {t:?} in {what}")))
                })
                .collect()
        };
        let header = nums("header")?;
        let [n, m] = header[..] else {
            return Err(Error::Format("alist header must be `n m`".into()));
        };
        let maxw = nums("max weights")?;
        if maxw.len() != 2 {
            return Err(Error::Format("alist max-weight line must have two entries".into()));
        }
        let col_w = nums("column weights")?;
        let row_w = nums("row weights")?;
        if col_w.len() != n || row_w.len() != m {
            return Err(Error::Format("alist weight lists do not match n and m".into()));
        }
        let mut col_lists = Vec::with_capacity(n);
        for (v, &w) in col_w.iter().enumerate() {
            let entries: Vec<usize> = nums("column list")?.into_iter().filter(|&x| x != 0).collect();
            if entries.len() != w || entries.iter().any(|&c| c > m) {
                return Err(Error::Format(format!("column {} list inconsistent with its weight", v + 1)));
            }
            col_lists.push(entries);
        }
        let mut rows = Vec::with_capacity(m);
        for (c, &w) in row_w.iter().enumerate() {
            let entries: Vec<u32> = nums("row list")?
                .into_iter()
                .filter(|&x| x != 0)
                .map(|x| x as u32 - 1)
                .collect();
            if entries.len() != w {
                return Err(Error::Format(format!("row {} list inconsistent with its weight", c + 1)));
            }
            rows.push(entries);
        }
        let code = LdpcCode::from_rows(n, rows)?;
        for (v, list) in col_lists.iter().enumerate() {
            let mut a: Vec<u32> = list.iter().map(|&c| c as u32 - 1).collect();
            a.sort_unstable();
            if a != code.cols[v] {
                return Err(Error::Format(format!("column {} disagrees with the row lists", v + 1)));
            }
        }
        Ok(code)
    }

    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let maxc = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let maxr = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let join = |it: &mut dyn Iterator<Item = usize>| it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(s, "{} {}", self.n, self.m).unwrap();
        writeln!(s, "{maxc} {maxr}").unwrap();
        writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len))).unwrap();
        writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len))).unwrap();
        for (lists, width) in [(&self.cols, maxc), (&self.rows, maxr)] {
            for l in lists {
                let mut e: Vec<usize> = l.iter().map(|&x| x as usize + 1).collect();
                e.resize(width, 0);
                writeln!(s, "{}", join(&mut e.into_iter())).unwrap();
            }
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_alist(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_alist())?;
        Ok(())
    }
}

/// Random `(col_weight, row_weight)`-regular code of length `n`.
///
/// Edge sockets are matched by a seeded random permutation; any check that
/// receives the same variable twice is repaired by swapping one of its sockets
/// with a random socket elsewhere.
pub fn generate_regular(n: usize, col_weight: usize, row_weight: usize, seed: u64) -> Result<LdpcCode> {
    if col_weight == 0 || row_weight <= col_weight {
        return Err(Error::InvalidParameter(format!(
            "need 0 < col_weight < row_weight, got ({col_weight}, {row_weight})"
        )));
    }
    if n == 0 || (n * col_weight) % row_weight != 0 {
        return Err(Error::InvalidParameter(format!(
            "n * col_weight = {} is not divisible by row_weight {row_weight}",
            n * col_weight
        )));
    }
    let m = n * col_weight / row_weight;
    if row_weight > n || col_weight > m {
        return Err(Error::InvalidParameter("degrees exceed the matrix size".into()));
    }
    let mut rng = SplitKey::new(seed).child(0x1dbc).rng();
    // sockets[e] = variable attached to edge e; edge e belongs to check e / row_weight.
    let mut sockets: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, col_weight)).collect();
    sockets.shuffle(&mut rng);

    let edges = sockets.len();
    let has_dup = |s: &[u32], c: usize, skip: usize, v: u32| {
        (c * row_weight..(c + 1) * row_weight).any(|e| e != skip && s[e] == v)
    };
    let max_rounds = 200;
    for _ in 0..max_rounds {
        let mut clean = true;
        for e in 0..edges {
            let c = e / row_weight;
            if !has_dup(&sockets, c, e, sockets[e]) {
                continue;
            }
            clean = false;
            for _attempt in 0..1000 {
                let f = rng.random_range(0..edges);
                let cf = f / row_weight;
                if cf == c {
                    continue;
                }
                let (ve, vf) = (sockets[e], sockets[f]);
                if !has_dup(&sockets, c, e, vf) && !has_dup(&sockets, cf, f, ve) {
                    sockets.swap(e, f);
                    break;
                }
            }
        }
        if clean {
            let rows = sockets.chunks(row_weight).map(<[u32]>::to_vec).collect();
            return LdpcCode::from_rows(n, rows);
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not remove duplicate edges for ({col_weight}, {row_weight}) at n={n}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn dense(code: &LdpcCode) -> Vec<Vec<u8>> {
        let mut h = vec![vec![0u8; code.n()]; code.m()];
        for (c, row) in code.rows().iter().enumerate() {
            for &v in row {
                h[c][v as usize] = 1;
            }
        }
        h
    }

    #[test]
    fn syndrome_matches_dense_multiply() {
        let code = generate_regular(24, 3, 6, 5).unwrap();
        let h = dense(&code);
        let mut rng = SplitKey::new(1).rng();
        for _ in 0..200 {
            let bits: Vec<u8> = (0..24).map(|_| rng.random_range(0..2)).collect();
            let want: Vec<u8> = h
                .iter()
                .map(|row| row.iter().zip(&bits).map(|(a, b)| a * b).sum::<u8>() % 2)
                .collect();
            assert_eq!(code.syndrome(&bits).unwrap(), want);
        }
        assert_eq!(code.syndrome(&[0; 24]).unwrap(), vec![0; 12]);
        assert!(code.syndrome(&[0; 23]).is_err());
    }

    #[test]
    fn generated_degrees_exact() {
        for (n, wc, wr) in [(24, 3, 6), (1000, 3, 6), (2000, 4, 5), (500, 2, 4)] {
            let code = generate_regular(n, wc, wr, 11).unwrap();
            assert_eq!(code.m(), n * wc / wr);
            assert!(code.cols().iter().all(|c| c.len() == wc));
            assert!(code.rows().iter().all(|r| r.len() == wr));
            for r in code.rows() {
                let mut s = r.clone();
                s.dedup();
                assert_eq!(s.len(), wr);
            }
        }
        let code = generate_regular(2000, 4, 5, 11).unwrap();
        assert!((code.rate() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn generator_is_seeded() {
        assert_eq!(generate_regular(120, 3, 6, 9).unwrap(), generate_regular(120, 3, 6, 9).unwrap());
        assert_ne!(generate_regular(120, 3, 6, 9).unwrap(), generate_regular(120, 3, 6, 10).unwrap());
    }

    #[test]
    fn infeasible_degrees() {
        assert!(generate_regular(10, 3, 7, 0).is_err());
        assert!(generate_regular(12, 6, 3, 0).is_err());
        assert!(generate_regular(12, 0, 3, 0).is_err());
        assert!(generate_regular(4, 3, 6, 0).is_err());
    }

    #[test]
    fn alist_header_and_layout() {
        let code = LdpcCode::from_rows(4, vec![vec![0, 1, 2], vec![1, 3]]).unwrap();
        let text = code.to_alist();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "4 2");
        assert_eq!(lines[1], "2 3");
        assert_eq!(lines[2], "1 2 1 1");
        assert_eq!(lines[3], "3 2");
        assert_eq!(lines[5], "1 2");
        assert_eq!(lines[9], "2 4 0");
        assert_eq!(LdpcCode::from_alist(&text).unwrap(), code);
    }

    #[test]
    fn alist_without_padding() {
        let text = "4 2\n2 3\n1 2 1 1\n3 2\n1\n1 2\n1\n2\n1 2 3\n2 4\n";
        let code = LdpcCode::from_alist(text).unwrap();
        assert_eq!(code.rows()[1], vec![1, 3]);
    }

    #[test]
    fn malformed_alist() {
        assert!(LdpcCode::from_alist("").is_err());
        assert!(LdpcCode::from_alist("4 2\n2 3\n1 2 1\n3 2\n").is_err());
        // row lists disagree with the column lists
        let bad = "4 2\n2 3\n1 2 1 1\n3 2\n1 0\n1 2\n1 0\n2 0\n1 2 4\n2 3 0\n";
        assert!(LdpcCode::from_alist(bad).is_err());
        // variable 4 unused
        assert!(LdpcCode::from_rows(4, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(LdpcCode::from_rows(4, vec![vec![0, 0, 3], vec![1, 2]]).is_err());
    }

    #[test]
    fn save_load_file() {
        let dir = std::env::temp_dir().join(format!("xrecon-alist-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.alist");
        let code = generate_regular(60, 3, 6, 1).unwrap();
        code.save(&path).unwrap();
        assert_eq!(LdpcCode::load(&path).unwrap(), code);
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn alist_roundtrip(seed in any::<u64>(), k in 2usize..20) {
            let code = generate_regular(6 * k, 3, 6, seed).unwrap();
            prop_assert_eq!(LdpcCode::from_alist(&code.to_alist()).unwrap(), code);
        }
    }
}
