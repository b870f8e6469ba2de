//! Block-partitioned real vectors and variable-type partitions.
//!
//! Every iterate and every projection output is a [`PointVector`]: a flat
//! `Vec<f64>` together with a shared [`Layout`] naming contiguous blocks of
//! coordinates. Arithmetic between two points is only defined when they share
//! the same layout.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A named contiguous run of coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: String,
    pub offset: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Ordered list of blocks covering `0..total_dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    blocks: Vec<Block>,
    total_dim: usize,
}

impl Layout {
    pub fn new<S: Into<String>>(blocks: impl IntoIterator<Item = (S, usize)>) -> Arc<Layout> {
        let mut offset = 0;
        let blocks = blocks
            .into_iter()
            .map(|(id, len)| {
                let b = Block {
                    id: id.into(),
                    offset,
                    len,
                };
                offset += len;
                b
            })
            .collect();
        Arc::new(Layout {
            blocks,
            total_dim: offset,
        })
    }

    /// A layout with a single block.
    pub fn flat(id: impl Into<String>, len: usize) -> Arc<Layout> {
        Layout::new([(id.into(), len)])
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }
}

/// A real vector laid out according to a [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointVector {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl PointVector {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.total_dim()];
        PointVector { layout, values }
    }

    pub fn from_values(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch {
                expected: layout.total_dim(),
                found: values.len(),
            });
        }
        Ok(PointVector { layout, values })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn block(&self, id: &str) -> Option<&[f64]> {
        self.layout.block(id).map(|b| &self.values[b.range()])
    }

    pub fn same_layout(&self, other: &PointVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout
    }

    fn check(&self, other: &PointVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }

    pub fn add(&self, other: &PointVector) -> Result<PointVector> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &PointVector) -> Result<PointVector> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, factor: f64) -> PointVector {
        PointVector {
            layout: self.layout.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &PointVector, b: f64) -> Result<PointVector> {
        self.check(other)?;
        Ok(self.zip_with(other, |x, y| a * x + b * y))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn distance(&self, other: &PointVector) -> Result<f64> {
        self.check(other)?;
        Ok(distance(&self.values, &other.values))
    }

    fn zip_with(&self, other: &PointVector, f: impl Fn(f64, f64) -> f64) -> PointVector {
        PointVector {
            layout: self.layout.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Assignment of every coordinate to exactly one metric group.
///
/// At the coarsest level a group is a variable type (the `k` types with
/// counts `l_i`); finer granularities split a type by location and data item.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<String>,
    group_of: Vec<u32>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from a per-coordinate group index. Every group must
    /// receive at least one coordinate.
    pub fn from_assignment(labels: Vec<String>, group_of: Vec<u32>) -> Result<Self> {
        let mut sizes = vec![0usize; labels.len()];
        for &g in &group_of {
            let slot = sizes.get_mut(g as usize).ok_or_else(|| {
                Error::config("partition", format!("group index {g} out of range"))
            })?;
            *slot += 1;
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyGroup(labels[i].clone()));
        }
        Ok(Partition {
            labels,
            group_of,
            sizes,
        })
    }

    /// Builds a type-level partition from named blocks: each entry lists the
    /// blocks covered by one type. Every block must be covered exactly once.
    pub fn from_blocks(layout: &Layout, types: &[(&str, &[&str])]) -> Result<Self> {
        let mut group_of = vec![u32::MAX; layout.total_dim()];
        for (g, (_, blocks)) in types.iter().enumerate() {
            for id in blocks.iter() {
                let block = layout
                    .block(id)
                    .ok_or_else(|| Error::config("partition", format!("unknown block `{id}`")))?;
                for slot in &mut group_of[block.range()] {
                    if *slot != u32::MAX {
                        return Err(Error::config(
                            "partition",
                            format!("block `{id}` assigned to two types"),
                        ));
                    }
                    *slot = g as u32;
                }
            }
        }
        if group_of.iter().any(|&g| g == u32::MAX) {
            return Err(Error::config("partition", "some blocks belong to no type"));
        }
        let labels = types.iter().map(|(name, _)| name.to_string()).collect();
        Partition::from_assignment(labels, group_of)
    }

    /// A single group covering every coordinate.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Partition::from_assignment(vec![label.to_string()], vec![0; dim])
    }

    pub fn num_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.group_of.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn group_of(&self, coord: usize) -> usize {
        self.group_of[coord] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.group_of
    }

    /// Number of coordinates per group (`l_i`).
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}
