use std::sync::atomic::{AtomicUsize, Ordering};

use crate::{Error, Result};

/// Observed labels `y_0, …, y_N` (0-based) over an alphabet of `Y` symbols.
///
/// Estimators read the labels through [`ObservationSequence::pass`], which
/// counts full traversals of the data.
#[derive(Debug)]
pub struct ObservationSequence {
    labels: Vec<usize>,
    num_outputs: usize,
    passes: AtomicUsize,
}

impl Clone for ObservationSequence {
    fn clone(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            num_outputs: self.num_outputs,
            passes: AtomicUsize::new(0),
        }
    }
}

impl PartialEq for ObservationSequence {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.num_outputs == other.num_outputs
    }
}

impl ObservationSequence {
    pub fn new(labels: Vec<usize>, num_outputs: usize) -> Result<Self> {
        if num_outputs == 0 {
            return Err(Error::InvalidArgument("observation alphabet is empty".into()));
        }
        if let Some(k) = labels.iter().position(|&y| y >= num_outputs) {
            return Err(Error::InvalidArgument(format!(
                "label {} at position {k} outside alphabet of size {num_outputs}",
                labels[k] + 1
            )));
        }
        Ok(Self {
            labels,
            num_outputs,
            passes: AtomicUsize::new(0),
        })
    }

    /// Number of consecutive pairs, `N`.
    pub fn num_pairs(&self) -> usize {
        self.labels.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    /// Labels without registering a data pass (I/O, tests).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Labels for one full traversal; increments the pass counter.
    pub fn pass(&self) -> &[usize] {
        self.passes.fetch_add(1, Ordering::Relaxed);
        &self.labels
    }

    /// Number of data passes registered so far.
    pub fn passes(&self) -> usize {
        self.passes.load(Ordering::Relaxed)
    }

    /// The first `n_pairs + 1` observations.
    pub fn prefix(&self, n_pairs: usize) -> Result<Self> {
        if n_pairs + 1 > self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix of {n_pairs} pairs requested from {} observations",
                self.labels.len()
            )));
        }
        Self::new(self.labels[..=n_pairs].to_vec(), self.num_outputs)
    }

    pub(crate) fn require_pairs(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 observations, got {}",
                self.labels.len()
            )));
        }
        Ok(())
    }
}
