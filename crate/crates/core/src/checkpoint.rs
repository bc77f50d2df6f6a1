//! Named-tensor text files used for checkpoints.
//!
//! One tensor per line:
//!
//! ```text
//! name,rows,cols,real|complex,v0,v1,...
//! ```
//!
//! Values are row-major; complex tensors interleave `re,im`. Lines starting
//! with `#` are comments. Floats are written in shortest round-trip form so
//! a save/load cycle is bit-exact.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::ComplexMatrix;

pub const CHECKPOINT_HEADER: &str = "# glnn checkpoint v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorFile {
    pub entries: Vec<(String, ComplexMatrix)>,
}

impl TensorFile {
    pub fn push(&mut self, name: impl Into<String>, t: ComplexMatrix) {
        self.entries.push((name.into(), t));
    }

    pub fn get(&self, name: &str) -> Result<&ComplexMatrix> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Contract(format!("checkpoint has no tensor `{name}`")))
    }

    /// Fetches `name` and checks its shape.
    pub fn get_shaped(&self, name: &str, shape: (usize, usize)) -> Result<ComplexMatrix> {
        let t = self.get(name)?;
        if t.shape() != shape {
            return Err(Error::Contract(format!(
                "checkpoint tensor `{name}` is {:?}, expected {:?}",
                t.shape(),
                shape
            )));
        }
        Ok(t.clone())
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{CHECKPOINT_HEADER}")?;
        for (name, t) in &self.entries {
            if name.contains(',') || name.contains('\n') {
                return Err(Error::Contract(format!("tensor name `{name}` contains a separator")));
            }
            let real = t.is_real();
            write!(out, "{name},{},{},{}", t.rows(), t.cols(), if real { "real" } else { "complex" })?;
            for i in 0..t.len() {
                if real {
                    write!(out, ",{:?}", t.re()[i])?;
                } else {
                    write!(out, ",{:?},{:?}", t.re()[i], t.im()[i])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut file = TensorFile::default();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: line_no, msg };
            let mut parts = line.split(',');
            let name = parts.next().unwrap_or_default().to_string();
            let rows: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad row count".into()))?;
            let cols: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad column count".into()))?;
            let complex = match parts.next() {
                Some("real") => false,
                Some("complex") => true,
                other => return Err(bad(format!("unknown tensor kind {other:?}"))),
            };
            let values = parts
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad value `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            let want = rows * cols * if complex { 2 } else { 1 };
            if values.len() != want {
                return Err(bad(format!("`{name}` has {} values, expected {want}", values.len())));
            }
            let t = if complex {
                let re = values.iter().step_by(2).copied().collect();
                let im = values.iter().skip(1).step_by(2).copied().collect();
                ComplexMatrix::new(rows, cols, re, im)?
            } else {
                ComplexMatrix::from_real(rows, cols, values)?
            };
            file.push(name, t);
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_text_cycle() {
        let mut f = TensorFile::default();
        f.push("a", ComplexMatrix::from_real(1, 3, vec![0.1, -1e-300, 1.0 / 3.0]).unwrap());
        f.push("b", ComplexMatrix::new(2, 1, vec![1.5, 2.0], vec![-0.7, 1e17]).unwrap());
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(TensorFile::read(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let text = "# c\na,1,2,real,1.0\n";
        assert!(matches!(TensorFile::read(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(TensorFile::read("a,1,1,quaternion,1".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut f = TensorFile::default();
        f.push("x", ComplexMatrix::zeros(2, 2));
        assert!(f.get_shaped("x", (2, 3)).is_err());
        assert!(f.get("y").is_err());
    }
}
