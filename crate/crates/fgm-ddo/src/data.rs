//! Offline datasets: design rows, scalar values, and the space descriptor.

use crate::error::{Error, Result};
use crate::numkit::DenseMatrix;

/// Design space descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    /// Per-variable category counts; designs are tuples of category indices.
    Discrete { domains: Vec<usize> },
    /// Real vectors of the given dimension.
    Continuous { dim: usize },
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Discrete { domains } => domains.len(),
            Space::Continuous { dim } => *dim,
        }
    }

    pub fn binary(d: usize) -> Space {
        Space::Discrete {
            domains: vec![2; d],
        }
    }

    /// Total number of configurations of a discrete space, or `None` for
    /// continuous spaces or on overflow.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            Space::Discrete { domains } => {
                let mut total: u128 = 1;
                for &k in domains {
                    total = total.checked_mul(k as u128)?;
                }
                Some(total)
            }
            Space::Continuous { .. } => None,
        }
    }
}

/// N design rows of dimension d plus N scalar values.
///
/// Discrete designs are stored as exact small integers in the `f64` matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub space: Space,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<f64>, space: Space) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dim(format!(
                "{} design rows but {} values",
                x.rows(),
                y.len()
            )));
        }
        if x.cols() != space.dim() {
            return Err(Error::dim(format!(
                "design dimension {} does not match space dimension {}",
                x.cols(),
                space.dim()
            )));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset values".to_string()));
        }
        x.check_finite()?;
        Ok(Dataset { x, y, space })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    /// Row `i` as category indices, validated against the discrete domains.
    pub fn categories(&self, i: usize) -> Result<Vec<usize>> {
        let Space::Discrete { domains } = &self.space else {
            return Err(Error::arg("categories() on a continuous dataset"));
        };
        self.row(i)
            .iter()
            .zip(domains)
            .enumerate()
            .map(|(j, (&v, &k))| {
                let c = v as usize;
                if v.fract() != 0.0 || v < 0.0 || c >= k {
                    Err(Error::arg(format!(
                        "row {i} column {j}: value {v} outside domain 0..{k}"
                    )))
                } else {
                    Ok(c)
                }
            })
            .collect()
    }

    pub fn mean_y(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.len() as f64
    }

    pub fn var_y(&self) -> f64 {
        let m = self.mean_y();
        self.y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// Writes `x_0,...,x_{d-1},y` rows.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 0..d {
            out.push_str(&format!("x_{j},"));
        }
        out.push_str("y\n");
        for i in 0..self.len() {
            for v in self.row(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.y[i]));
        }
        out
    }

    pub fn from_csv(text: &str, space: Space) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
        let d = header.split(',').count() - 1;
        if d != space.dim() {
            return Err(Error::dim("csv column count does not match space".to_string()));
        }
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad number {t:?}", lineno + 2)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != d + 1 {
                return Err(Error::Parse(format!("line {}: wrong field count", lineno + 2)));
            }
            y.push(vals[d]);
            rows.push(vals[..d].to_vec());
        }
        Dataset::new(DenseMatrix::from_rows(&rows)?, y, space)
    }
}
