//! Set partitions over labelled elements, where an element may itself be a
//! cluster of particle labels, and the signed cumulant coefficient
//! `(-1)^{|P|-1} (|P|-1)!`.
//!
//! Partitions are enumerated as restricted-growth strings in canonical order
//! and streamed, so sums over all `Bell(n)` partitions never materialize the
//! whole list.

use crate::error::{Error, Result};

/// Hard cap on the number of elements; `Bell(12) ≈ 4.2e6` is the practical
/// ceiling for partition sums.
pub const MAX_ELEMENTS: usize = 12;

/// One element of the partitioned ground set: either a single particle label
/// or a cluster of labels that moves as one unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionElement {
    Single(usize),
    Cluster(Vec<usize>),
}

impl PartitionElement {
    pub fn labels(&self) -> &[usize] {
        match self {
            PartitionElement::Single(l) => std::slice::from_ref(l),
            PartitionElement::Cluster(ls) => ls,
        }
    }

    pub fn label_count(&self) -> usize {
        self.labels().len()
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self.labels();
        for (i, a) in labels.iter().enumerate() {
            if labels[i + 1..].contains(a) {
                return Err(Error::DuplicateLabel(*a));
            }
        }
        Ok(())
    }
}

/// A partition of the ground set into disjoint nonempty blocks of elements.
#[derive(Clone, Debug)]
pub struct SetPartition {
    blocks: Vec<Vec<PartitionElement>>,
}

impl SetPartition {
    pub fn blocks(&self) -> &[Vec<PartitionElement>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Particle labels carried by block `b`, in element order.
    pub fn block_labels(&self, b: usize) -> Vec<usize> {
        self.blocks[b]
            .iter()
            .flat_map(|e| e.labels().iter().copied())
            .collect()
    }
}

/// `(-1)^{|P|-1} (|P|-1)!`.
pub fn cumulant_coefficient(block_count: usize) -> i64 {
    assert!(block_count >= 1, "partitions have at least one block");
    let fact: i64 = (1..block_count as i64).product();
    if block_count % 2 == 1 {
        fact
    } else {
        -fact
    }
}

/// Streaming enumeration of all partitions of `elements`.
pub fn enumerate_partitions(elements: &[PartitionElement]) -> Result<Partitions<'_>> {
    let n = elements.len();
    if n == 0 || n > MAX_ELEMENTS {
        return Err(Error::EnumerationCap { n, cap: MAX_ELEMENTS });
    }
    for e in elements {
        e.validate()?;
    }
    Ok(Partitions {
        elements,
        rgs: vec![0; n],
        max: vec![0; n],
        done: false,
        fresh: true,
    })
}

/// Iterator over set partitions via restricted-growth strings: `a[0] = 0`
/// and `a[i] <= 1 + max(a[0..i])`.
pub struct Partitions<'a> {
    elements: &'a [PartitionElement],
    rgs: Vec<usize>,
    /// `max[i]` = max of `rgs[0..i]` (prefix maxima, `max[0] = 0`).
    max: Vec<usize>,
    done: bool,
    fresh: bool,
}

impl Partitions<'_> {
    fn emit(&self) -> SetPartition {
        let block_count = self.rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut blocks: Vec<Vec<PartitionElement>> = vec![Vec::new(); block_count];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(self.elements[i].clone());
        }
        SetPartition { blocks }
    }

    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        // Find the rightmost position (excluding 0) that can still grow.
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.rgs[i] <= self.max[i] {
                self.rgs[i] += 1;
                let new_max = self.max[i].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.max[j] = new_max;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions<'_> {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.emit());
        }
        if self.advance() {
            Some(self.emit())
        } else {
            self.done = true;
            None
        }
    }
}

/// Elements `1..=n` as singles.
pub fn single_elements(n: usize) -> Vec<PartitionElement> {
    (1..=n).map(PartitionElement::Single).collect()
}

/// Bell number (used by tests to pin enumeration counts).
pub fn bell_number(n: usize) -> u64 {
    // Bell triangle.
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_match_bell_numbers() {
        assert_eq!(bell_number(0), 1);
        assert_eq!(bell_number(3), 5);
        assert_eq!(bell_number(4), 15);
        for n in 1..=8 {
            let elems = single_elements(n);
            let count = enumerate_partitions(&elems).unwrap().count() as u64;
            assert_eq!(count, bell_number(n), "n={n}");
        }
    }

    #[test]
    fn partitions_are_distinct_and_well_formed() {
        let elems = single_elements(5);
        let mut seen = HashSet::new();
        for p in enumerate_partitions(&elems).unwrap() {
            let mut labels: Vec<usize> = (0..p.block_count()).flat_map(|b| p.block_labels(b)).collect();
            labels.sort_unstable();
            assert_eq!(labels, vec![1, 2, 3, 4, 5]);
            assert!(p.blocks().iter().all(|b| !b.is_empty()));
            let mut key: Vec<Vec<usize>> = (0..p.block_count())
                .map(|b| {
                    let mut l = p.block_labels(b);
                    l.sort_unstable();
                    l
                })
                .collect();
            key.sort();
            assert!(seen.insert(key), "duplicate partition");
        }
        assert_eq!(seen.len() as u64, bell_number(5));
    }

    #[test]
    fn single_element_has_one_partition() {
        let elems = single_elements(1);
        assert_eq!(enumerate_partitions(&elems).unwrap().count(), 1);
    }

    #[test]
    fn coefficients() {
        assert_eq!(cumulant_coefficient(1), 1);
        assert_eq!(cumulant_coefficient(2), -1);
        assert_eq!(cumulant_coefficient(3), 2);
        assert_eq!(cumulant_coefficient(4), -6);
    }

    #[test]
    fn mobius_identity() {
        // Σ_P (-1)^{|P|-1}(|P|-1)! = δ_{n,1}
        for n in 1..=8usize {
            let elems = single_elements(n);
            let total: i64 = enumerate_partitions(&elems)
                .unwrap()
                .map(|p| cumulant_coefficient(p.block_count()))
                .sum();
            assert_eq!(total, if n == 1 { 1 } else { 0 }, "n={n}");
        }
    }

    #[test]
    fn cap_and_validation() {
        let elems = single_elements(13);
        assert!(matches!(
            enumerate_partitions(&elems),
            Err(Error::EnumerationCap { .. })
        ));
        let bad = vec![PartitionElement::Cluster(vec![1, 1])];
        assert!(matches!(enumerate_partitions(&bad), Err(Error::DuplicateLabel(1))));
    }

    #[test]
    fn cluster_elements_flow_through() {
        let elems = vec![
            PartitionElement::Cluster(vec![1, 2]),
            PartitionElement::Single(3),
        ];
        let parts: Vec<SetPartition> = enumerate_partitions(&elems).unwrap().collect();
        assert_eq!(parts.len(), 2);
        // {cluster+3} and {cluster}{3}
        let sizes: HashSet<usize> = parts.iter().map(|p| p.block_count()).collect();
        assert_eq!(sizes, HashSet::from([1, 2]));
    }
}
