//! Cost accounting in normalized function evaluations (nfe).
//!
//! One nfe is one pass over all N components. Evaluating f over a sample
//! of size M costs M/N; each CG iteration against a Hessian subsample of
//! size D costs D/N. A gradient at a point and sample where f was just
//! charged reuses its per-component inner products and adds nothing, so
//! it appends no entry; a gradient at a fresh (point, sample) pair is
//! charged like an f evaluation. Nothing else is charged.

use serde::Serialize;

use crate::error::{Error, Result};

/// What kind of work a ledger entry records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalKind {
    FEval,
    CgIter,
}

/// One charged unit of work.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LedgerEntry {
    pub kind: EvalKind,
    pub sample_size: usize,
    /// sample_size/N at the time of the charge.
    pub cost: f64,
}

/// Append-only cost ledger for a single run.
#[derive(Debug, Clone, Serialize)]
pub struct NfeLedger {
    n_total: usize,
    entries: Vec<LedgerEntry>,
    total: f64,
}

impl NfeLedger {
    pub fn new(n_total: usize) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::invalid("ledger needs a positive component count"));
        }
        Ok(NfeLedger {
            n_total,
            entries: Vec::new(),
            total: 0.0,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Appends a charge of sample_size/N and returns its cost.
    pub fn charge(&mut self, kind: EvalKind, sample_size: usize) -> Result<f64> {
        if sample_size == 0 || sample_size > self.n_total {
            return Err(Error::invalid(format!(
                "charge of sample size {sample_size} outside [1, {}]",
                self.n_total
            )));
        }
        let cost = sample_size as f64 / self.n_total as f64;
        self.entries.push(LedgerEntry {
            kind,
            sample_size,
            cost,
        });
        self.total += cost;
        Ok(cost)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Running total in nfe.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Recomputes the total from the entries and checks it against the
    /// running total and every entry against its sample size.
    pub fn audit(&self, tol: f64) -> Result<()> {
        let mut sum = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.sample_size == 0 || e.sample_size > self.n_total {
                return Err(Error::InternalInvariant(format!(
                    "entry {i} has sample size {} outside [1, {}]",
                    e.sample_size, self.n_total
                )));
            }
            let want = e.sample_size as f64 / self.n_total as f64;
            if e.cost != want {
                return Err(Error::InternalInvariant(format!(
                    "entry {i} cost {} != {}/{}",
                    e.cost, e.sample_size, self.n_total
                )));
            }
            sum += e.cost;
        }
        if (sum - self.total).abs() > tol {
            return Err(Error::InternalInvariant(format!(
                "ledger total {} differs from recomputed {} by more than {tol}",
                self.total, sum
            )));
        }
        Ok(())
    }
}
