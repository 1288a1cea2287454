use std::io::Write;

use crate::error::{Error, Result};

/// Per-node vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    n: usize,
    dim: usize,
    input: Vec<f64>,
    /// Separate output vectors, present only after negative-sampling training.
    context: Option<Vec<f64>>,
}

impl EmbeddingModel {
    pub fn from_rows(
        n: usize,
        dim: usize,
        input: Vec<f64>,
        context: Option<Vec<f64>>,
    ) -> Result<Self> {
        if input.len() != n * dim || context.as_ref().is_some_and(|c| c.len() != n * dim) {
            return Err(Error::Domain(format!(
                "matrix size does not match {n} x {dim}"
            )));
        }
        let model = EmbeddingModel {
            n,
            dim,
            input,
            context,
        };
        model.check_finite()?;
        Ok(model)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, node: u32) -> &[f64] {
        let i = node as usize * self.dim;
        &self.input[i..i + self.dim]
    }

    /// Context vector; the input vector when the model has a single matrix.
    pub fn context_vector(&self, node: u32) -> &[f64] {
        let i = node as usize * self.dim;
        match &self.context {
            Some(c) => &c[i..i + self.dim],
            None => &self.input[i..i + self.dim],
        }
    }

    pub fn input_matrix(&self) -> &[f64] {
        &self.input
    }

    pub fn input_matrix_mut(&mut self) -> &mut [f64] {
        &mut self.input
    }

    pub fn has_context(&self) -> bool {
        self.context.is_some()
    }

    pub(super) fn parts_mut(&mut self) -> (&mut [f64], Option<&mut [f64]>) {
        (&mut self.input, self.context.as_deref_mut())
    }

    pub fn scale(&mut self, factor: f64) {
        self.input.iter_mut().for_each(|x| *x *= factor);
        if let Some(c) = &mut self.context {
            c.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.input.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::Numeric(format!(
                "non-finite entry at node {} component {}",
                i / self.dim,
                i % self.dim
            ))),
            None => Ok(()),
        }
    }

    /// Header `n d`, then `node_id v1 .. vd` per node. Values use the shortest
    /// representation that parses back to the same bits.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n, self.dim)?;
        for node in 0..self.n {
            write!(out, "{node}")?;
            for x in self.vector(node as u32) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("<model>", 1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_ascii_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse("<model>", 1, "invalid header"))
            })
            .collect::<Result<_>>()?;
        let [n, dim] = dims[..] else {
            return Err(Error::parse("<model>", 1, "header must be \"n d\""));
        };
        let mut input = vec![f64::NAN; n * dim];
        let mut seen = vec![false; n];
        for (i, line) in lines {
            let mut tokens = line.split_ascii_whitespace();
            let node: usize = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .filter(|&v| v < n)
                .ok_or_else(|| Error::parse("<model>", i + 1, "invalid node id"))?;
            let values: Vec<f64> = tokens
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse("<model>", i + 1, format!("invalid value {t:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dim || seen[node] {
                return Err(Error::parse(
                    "<model>",
                    i + 1,
                    "wrong width or repeated node",
                ));
            }
            seen[node] = true;
            input[node * dim..(node + 1) * dim].copy_from_slice(&values);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Domain(format!(
                "model file has no row for node {missing}"
            )));
        }
        Self::from_rows(n, dim, input, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let m =
            EmbeddingModel::from_rows(2, 3, vec![0.1, -1e-300, 1.0 / 3.0, 5.0, 0.0, -2.5], None)
                .unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("2 3\n0 0.1 "));
        assert_eq!(EmbeddingModel::read_text(&text).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(EmbeddingModel::from_rows(1, 2, vec![f64::NAN, 0.0], None).is_err());
        assert!(EmbeddingModel::read_text("2 2\n0 1 2\n").is_err());
        assert!(EmbeddingModel::read_text("1 2\n0 1\n").is_err());
    }
}
