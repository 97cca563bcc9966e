//! Stream queue, dequeue orderings and ancestor closure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};
use crate::format::NoiseTable;
use crate::page::PageId;
use crate::runtime::PageTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncestorStrategy {
    #[default]
    None,
    Intern,
    Extern,
}

impl std::str::FromStr for AncestorStrategy {
    type Err = VtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "intern" => Ok(Self::Intern),
            "extern" => Ok(Self::Extern),
            _ => Err(VtError::Config(format!("unknown ancestor strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueOrder {
    /// Highest priority first.
    Priority,
    /// Lowest mip first, priority within a mip.
    ExternMipMapOrder,
}

/// Priority queue of pages to stream, rebuilt every frame. Ties are broken
/// by ascending absolute index.
#[derive(Debug, Clone)]
pub struct StreamQueue {
    entries: BTreeMap<usize, (PageId, f64)>,
    order: QueueOrder,
    intern: bool,
}

impl StreamQueue {
    pub fn new(order: QueueOrder, intern: bool) -> Self {
        Self { entries: BTreeMap::new(), order, intern }
    }

    pub fn for_strategy(strategy: AncestorStrategy) -> Self {
        match strategy {
            AncestorStrategy::None => Self::new(QueueOrder::Priority, false),
            AncestorStrategy::Intern => Self::new(QueueOrder::Priority, true),
            AncestorStrategy::Extern => Self::new(QueueOrder::ExternMipMapOrder, false),
        }
    }

    pub fn push(&mut self, page: PageId, priority: f64) {
        self.entries.insert(page.abs_index(), (page, priority));
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = (PageId, f64)>) {
        for (p, w) in entries {
            self.push(p, w);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, page: PageId) -> bool {
        self.entries.contains_key(&page.abs_index())
    }

    pub fn priority_of(&self, page: PageId) -> Option<f64> {
        self.entries.get(&page.abs_index()).map(|e| e.1)
    }

    /// True if `a` should leave the queue before `b`.
    fn before(&self, a: (usize, PageId, f64), b: (usize, PageId, f64)) -> bool {
        if self.order == QueueOrder::ExternMipMapOrder && a.1.mip != b.1.mip {
            return a.1.mip < b.1.mip;
        }
        if a.2 != b.2 {
            return a.2 > b.2;
        }
        a.0 < b.0
    }

    fn peek_best(&self) -> Option<(PageId, f64)> {
        let mut best: Option<(usize, PageId, f64)> = None;
        for (&abs, &(page, w)) in &self.entries {
            let cand = (abs, page, w);
            if best.is_none_or(|b| self.before(cand, b)) {
                best = Some(cand);
            }
        }
        best.map(|(_, p, w)| (p, w))
    }

    /// Removes and returns the next page, or `None` when the queue is empty.
    /// With the intern constraint, a queued ancestor of the best page goes
    /// first, the one closest to the root.
    pub fn dequeue_next(&mut self) -> Option<(PageId, f64)> {
        let (mut page, _) = self.peek_best()?;
        if self.intern {
            if let Some(anc) = page.ancestors().filter(|a| self.contains(*a)).last() {
                page = anc;
            }
        }
        self.entries.remove(&page.abs_index())
    }
}

/// Threshold rule for skipping ancestors whose child adds little detail.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSkip<'a> {
    pub noise: &'a NoiseTable,
    pub threshold: f64,
}

impl<'a> NoiseSkip<'a> {
    /// Mean NoiseValue of the whole texture as the threshold.
    pub fn mean(noise: &'a NoiseTable) -> Self {
        Self { noise, threshold: noise.mean() }
    }
}

/// Adds the non-resident ancestors of every needed page, each with the summed
/// priorities of the needed pages below it. The walk stops at the resident
/// page the need currently falls back to. With `skip`, the contribution to
/// an ancestor is dropped when the NoiseValue of its child on the path is
/// below the threshold.
pub fn ancestor_closure(
    needed: &BTreeMap<usize, (PageId, f64)>,
    table: &PageTable,
    skip: Option<NoiseSkip<'_>>,
) -> BTreeMap<usize, (PageId, f64)> {
    let mut out = needed.clone();
    for &(page, w) in needed.values() {
        let fallback = table.fallback_mip(page);
        let mut child = page;
        for anc in page.ancestors().take_while(|a| a.mip > fallback) {
            let skipped = skip.is_some_and(|s| (s.noise.get(child) as f64) < s.threshold);
            if !skipped {
                out.entry(anc.abs_index()).or_insert((anc, 0.0)).1 += w;
            }
            child = anc;
        }
    }
    out
}
