//! The lower-triangular result matrix and its summaries.
//!
//! Cell `(s, i)` (both 1-based) holds the mean validation metrics on the
//! domain learned at position `i`, measured with the parameters held
//! after finishing position `s`; defined for `i <= s`. The paper-style
//! summaries — the final-row average, and stability / plasticity — are
//! derived views of this triangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::episode::{DomainMeans, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    /// Position `s`: measured after finishing this many domains (1-based).
    pub after: usize,
    /// Position `i`: the domain evaluated, by curriculum order (1-based).
    pub domain_pos: usize,
    pub means: DomainMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    /// Strategy key (row label comes from the strategy table).
    pub strategy: String,
    pub curriculum_seed: u64,
    pub flavor: String,
    pub domain_count: usize,
    /// Curriculum order: domain ids by position.
    pub domain_order: Vec<u32>,
    pub cells: Vec<MatrixCell>,
}

impl ResultMatrix {
    pub fn new(
        strategy: impl Into<String>,
        curriculum_seed: u64,
        flavor: impl Into<String>,
        domain_order: Vec<u32>,
    ) -> Self {
        ResultMatrix {
            strategy: strategy.into(),
            curriculum_seed,
            flavor: flavor.into(),
            domain_count: domain_order.len(),
            domain_order,
            cells: Vec::new(),
        }
    }

    pub fn set(&mut self, after: usize, domain_pos: usize, means: DomainMeans) {
        debug_assert!(domain_pos <= after && domain_pos >= 1);
        self.cells
            .retain(|c| !(c.after == after && c.domain_pos == domain_pos));
        self.cells.push(MatrixCell {
            after,
            domain_pos,
            means,
        });
    }

    pub fn get(&self, after: usize, domain_pos: usize) -> Option<&DomainMeans> {
        self.cells
            .iter()
            .find(|c| c.after == after && c.domain_pos == domain_pos)
            .map(|c| &c.means)
    }

    /// Mean of the final row: performance over all learned domains with
    /// the final parameters. Errors if any final-row cell is missing.
    pub fn average_metric(&self, metric: Metric) -> Result<f64> {
        let s = self.domain_count;
        let mut total = 0.0;
        for i in 1..=s {
            let cell = self.get(s, i).ok_or_else(|| {
                Error::IncompleteMatrix(format!("final row missing cell ({s}, {i})"))
            })?;
            total += cell.get(metric);
        }
        Ok(total / s as f64)
    }

    /// Stability (mean performance on past domains after learning `k`),
    /// plasticity (mean first-exposure performance over the first `k`
    /// domains) and their harmonic mean.
    pub fn stability_plasticity(&self, k: usize, metric: Metric) -> Result<(f64, f64, f64)> {
        if k < 2 {
            return Err(Error::IncompleteMatrix(
                "stability/plasticity requires k >= 2".into(),
            ));
        }
        let mut stability = 0.0;
        for i in 1..k {
            let cell = self.get(k, i).ok_or_else(|| {
                Error::IncompleteMatrix(format!("missing cell ({k}, {i})"))
            })?;
            stability += cell.get(metric);
        }
        stability /= (k - 1) as f64;

        let mut plasticity = 0.0;
        for i in 1..=k {
            let cell = self.get(i, i).ok_or_else(|| {
                Error::IncompleteMatrix(format!("missing diagonal cell ({i}, {i})"))
            })?;
            plasticity += cell.get(metric);
        }
        plasticity /= k as f64;

        let harmonic = if stability + plasticity == 0.0 {
            0.0
        } else {
            2.0 * stability * plasticity / (stability + plasticity)
        };
        Ok((stability, plasticity, harmonic))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn means(x: f64) -> DomainMeans {
        DomainMeans {
            sr: x,
            spl: x,
            ne: x,
            gp: x,
        }
    }

    fn matrix_with_row(values: &[f64]) -> ResultMatrix {
        let s = values.len();
        let mut m = ResultMatrix::new("vanilla", 1, "I", (0..s as u32).collect());
        for (i, &v) in values.iter().enumerate() {
            m.set(s, i + 1, means(v));
        }
        m
    }

    #[test]
    fn average_metric_arithmetic() {
        assert_eq!(
            matrix_with_row(&[50.0, 50.0, 50.0])
                .average_metric(Metric::Sr)
                .unwrap(),
            50.0
        );
        assert_eq!(
            matrix_with_row(&[40.0, 20.0, 30.0])
                .average_metric(Metric::Sr)
                .unwrap(),
            30.0
        );
        assert_eq!(
            matrix_with_row(&[17.5]).average_metric(Metric::Sr).unwrap(),
            17.5
        );
    }

    #[test]
    fn average_metric_is_permutation_invariant() {
        let a = matrix_with_row(&[10.0, 20.0, 30.0, 40.0])
            .average_metric(Metric::Sr)
            .unwrap();
        let b = matrix_with_row(&[40.0, 10.0, 30.0, 20.0])
            .average_metric(Metric::Sr)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn incomplete_final_row_is_an_error() {
        let mut m = ResultMatrix::new("vanilla", 1, "I", vec![0, 1]);
        m.set(2, 1, means(10.0));
        assert!(m.average_metric(Metric::Sr).is_err());
    }

    #[test]
    fn stability_plasticity_hand_example() {
        // R[2][1]=20, R[1][1]=40, R[2][2]=60:
        // stability 20, plasticity 50, harmonic 2*20*50/70.
        let mut m = ResultMatrix::new("vanilla", 1, "I", vec![0, 1]);
        m.set(2, 1, means(20.0));
        m.set(1, 1, means(40.0));
        m.set(2, 2, means(60.0));
        let (s, p, h) = m.stability_plasticity(2, Metric::Sr).unwrap();
        assert_eq!(s, 20.0);
        assert_eq!(p, 50.0);
        assert!((h - 2000.0 / 70.0).abs() < 1e-9);
        assert!((h - 28.571428571).abs() < 1e-3);
    }

    #[test]
    fn constant_matrix_gives_equal_summary() {
        let mut m = ResultMatrix::new("vanilla", 1, "I", vec![0, 1, 2]);
        for s in 1..=3 {
            for i in 1..=s {
                m.set(s, i, means(7.0));
            }
        }
        let (s, p, h) = m.stability_plasticity(3, Metric::Sr).unwrap();
        assert_eq!((s, p, h), (7.0, 7.0, 7.0));
    }

    #[test]
    fn zero_stability_gives_zero_harmonic() {
        let mut m = ResultMatrix::new("vanilla", 1, "I", vec![0, 1]);
        m.set(2, 1, means(0.0));
        m.set(1, 1, means(0.0));
        m.set(2, 2, means(0.0));
        let (_, _, h) = m.stability_plasticity(2, Metric::Sr).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn k_below_two_rejected() {
        let m = matrix_with_row(&[10.0]);
        assert!(m.stability_plasticity(1, Metric::Sr).is_err());
    }
}
