//! Full ↔ truncated correlation functions over the partition lattice.
//!
//! The full l-point function is the partition sum `W(1..l) = Σ_part Π_B
//! W^T(B)` with blocks inheriting the ambient index order; `truncate` inverts
//! it inductively. Quasifree hierarchies are generated from a 2-point
//! function by unsigned ordered pairings, so every truncated function of
//! order ≥ 3 vanishes — which `verify_quasifree` measures.
//!
//! One-point functions are normalized to zero throughout (observables carry
//! no mean), so singleton blocks never contribute to partition sums.

use crate::{Error, Result};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub type C64 = Complex64;

/// A labeled evaluation point: position, time and an observable tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub position: Vec<f64>,
    pub time: f64,
    pub label: String,
}

impl LabeledPoint {
    pub fn new(position: Vec<f64>, time: f64, label: impl Into<String>) -> Self {
        LabeledPoint {
            position,
            time,
            label: label.into(),
        }
    }

    pub fn spatial(position: Vec<f64>) -> Self {
        Self::new(position, 0.0, "A")
    }
}

pub type TwoPointFn = Arc<dyn Fn(&LabeledPoint, &LabeledPoint) -> C64 + Send + Sync>;

const MAX_ORDER_CAP: usize = 10;

/// All set partitions of an index range, one entry per partition.
pub type PartitionSet = Vec<Vec<Vec<usize>>>;

static PARTITION_CACHE: Lazy<Mutex<HashMap<usize, Arc<PartitionSet>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// All set partitions of {0, .., l−1}; within each block the original index
/// order is preserved. Count equals the Bell number B_l. Valid for 1 ≤ l ≤ 10.
pub fn enumerate_partitions(l: usize) -> Result<PartitionSet> {
    Ok(partitions_cached(l)?.as_ref().clone())
}

fn partitions_cached(l: usize) -> Result<Arc<PartitionSet>> {
    if l == 0 || l > MAX_ORDER_CAP {
        return Err(Error::OutOfRange(format!(
            "enumerate_partitions: l must be in 1..=10, got {l}"
        )));
    }
    let mut cache = PARTITION_CACHE.lock().unwrap();
    if let Some(p) = cache.get(&l) {
        return Ok(Arc::clone(p));
    }
    let mut parts: Vec<Vec<Vec<usize>>> = vec![vec![vec![0]]];
    for elem in 1..l {
        let mut next = Vec::with_capacity(parts.len() * (elem + 1));
        for p in &parts {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(elem);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![elem]);
            next.push(q);
        }
        parts = next;
    }
    let arc = Arc::new(parts);
    cache.insert(l, Arc::clone(&arc));
    Ok(arc)
}

/// Bell numbers B_0..B_10.
pub fn bell_number(l: usize) -> u64 {
    const BELL: [u64; 11] = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
    BELL[l]
}

/// All perfect matchings of {0, .., l−1} as ordered pairs (i, j) with i < j.
fn pairings(l: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(unused: &[usize], current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if unused.is_empty() {
            out.push(current.clone());
            return;
        }
        let first = unused[0];
        for idx in 1..unused.len() {
            let partner = unused[idx];
            let rest: Vec<usize> = unused
                .iter()
                .copied()
                .filter(|&u| u != first && u != partner)
                .collect();
            current.push((first, partner));
            go(&rest, current, out);
            current.pop();
        }
    }
    if !l.is_multiple_of(2) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let all: Vec<usize> = (0..l).collect();
    go(&all, &mut Vec::new(), &mut out);
    out
}

/// Quasifree l-point value: sum over ordered pairings of products of the
/// 2-point function, arguments taken in ambient order within each pair.
/// Odd l yields 0.
pub fn quasifree_extend(
    two_point: &dyn Fn(&LabeledPoint, &LabeledPoint) -> C64,
    points: &[LabeledPoint],
) -> C64 {
    let l = points.len();
    if l == 0 || !l.is_multiple_of(2) {
        return C64::new(0.0, 0.0);
    }
    let mut sum = C64::new(0.0, 0.0);
    for pairing in pairings(l) {
        let mut prod = C64::new(1.0, 0.0);
        for (i, j) in pairing {
            prod *= two_point(&points[i], &points[j]);
        }
        sum += prod;
    }
    sum
}

/// Value tables of full and truncated l-point functions over a fixed roster
/// of labeled points, keyed by ordered index tuples.
pub struct CorrelationHierarchy {
    max_order: usize,
    points: Vec<LabeledPoint>,
    two_point: Option<TwoPointFn>,
    full: HashMap<Vec<usize>, C64>,
    truncated: HashMap<Vec<usize>, C64>,
}

impl CorrelationHierarchy {
    pub fn new(points: Vec<LabeledPoint>, max_order: usize) -> Result<Self> {
        if max_order == 0 || max_order > MAX_ORDER_CAP {
            return Err(Error::OutOfRange(format!(
                "max_order must be in 1..=10, got {max_order}"
            )));
        }
        if let Some(first) = points.first() {
            let dim = first.position.len();
            for p in &points {
                if p.position.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.position.len(),
                    });
                }
            }
        }
        Ok(CorrelationHierarchy {
            max_order,
            points,
            two_point: None,
            full: HashMap::new(),
            truncated: HashMap::new(),
        })
    }

    /// Builds a quasifree hierarchy: populates the full values of every
    /// subsequence of each requested tuple by the pairing sum.
    pub fn quasifree(
        points: Vec<LabeledPoint>,
        two_point: TwoPointFn,
        max_order: usize,
        tuples: &[Vec<usize>],
    ) -> Result<Self> {
        let mut h = Self::new(points, max_order)?;
        for t in tuples {
            h.check_tuple(t)?;
            for sub in subsequences(t) {
                if h.full.contains_key(&sub) {
                    continue;
                }
                let pts: Vec<LabeledPoint> = sub.iter().map(|&i| h.points[i].clone()).collect();
                let v = quasifree_extend(&*two_point, &pts);
                h.full.insert(sub, v);
            }
        }
        h.two_point = Some(two_point);
        Ok(h)
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn two_point(&self) -> Option<&TwoPointFn> {
        self.two_point.as_ref()
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        if tuple.is_empty() || tuple.len() > self.max_order {
            return Err(Error::OutOfRange(format!(
                "tuple length {} outside 1..={}",
                tuple.len(),
                self.max_order
            )));
        }
        for &i in tuple {
            if i >= self.points.len() {
                return Err(Error::OutOfRange(format!(
                    "point index {i} out of roster (len {})",
                    self.points.len()
                )));
            }
        }
        Ok(())
    }

    pub fn set_full(&mut self, tuple: Vec<usize>, value: C64) -> Result<()> {
        self.check_tuple(&tuple)?;
        self.full.insert(tuple, value);
        Ok(())
    }

    pub fn set_truncated(&mut self, tuple: Vec<usize>, value: C64) -> Result<()> {
        self.check_tuple(&tuple)?;
        self.truncated.insert(tuple, value);
        Ok(())
    }

    /// Stored full value; 1-point values are identically 0 by normalization.
    pub fn full_value(&self, tuple: &[usize]) -> Option<C64> {
        if tuple.len() == 1 {
            return Some(C64::new(0.0, 0.0));
        }
        self.full.get(tuple).copied()
    }

    pub fn truncated_value(&self, tuple: &[usize]) -> Option<C64> {
        if tuple.len() == 1 {
            return Some(C64::new(0.0, 0.0));
        }
        self.truncated.get(tuple).copied()
    }

    /// Tuples with populated full values, filtered by length, sorted.
    pub fn populated_full_tuples(&self, min_len: usize, max_len: usize) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = self
            .full
            .keys()
            .filter(|t| t.len() >= min_len && t.len() <= max_len)
            .cloned()
            .collect();
        v.sort();
        v
    }

    /// Full l-point value as the partition sum over stored truncated values.
    pub fn compose_from_truncated(&self, tuple: &[usize]) -> Result<C64> {
        self.check_tuple(tuple)?;
        let l = tuple.len();
        if l == 1 {
            return Ok(C64::new(0.0, 0.0));
        }
        let parts = partitions_cached(l)?;
        let mut sum = C64::new(0.0, 0.0);
        for part in parts.iter() {
            // Singleton blocks vanish by the 1-point normalization.
            if part.iter().any(|b| b.len() == 1) {
                continue;
            }
            let mut prod = C64::new(1.0, 0.0);
            for block in part {
                let sub: Vec<usize> = block.iter().map(|&i| tuple[i]).collect();
                let v = self
                    .truncated
                    .get(&sub)
                    .copied()
                    .ok_or_else(|| Error::MissingValue(sub.clone()))?;
                prod *= v;
            }
            sum += prod;
        }
        Ok(sum)
    }

    /// Truncated l-point value by inductive inversion of the partition sum.
    pub fn truncate(&self, tuple: &[usize]) -> Result<C64> {
        self.check_tuple(tuple)?;
        let mut memo: HashMap<Vec<usize>, C64> = HashMap::new();
        self.truncate_memo(tuple, &mut memo)
    }

    fn truncate_memo(&self, tuple: &[usize], memo: &mut HashMap<Vec<usize>, C64>) -> Result<C64> {
        let l = tuple.len();
        if l == 1 {
            return Ok(C64::new(0.0, 0.0));
        }
        if let Some(v) = memo.get(tuple) {
            return Ok(*v);
        }
        let w = self
            .full_value(tuple)
            .ok_or_else(|| Error::MissingValue(tuple.to_vec()))?;
        let parts = partitions_cached(l)?;
        let mut correction = C64::new(0.0, 0.0);
        for part in parts.iter() {
            // Skip the trivial partition (it carries W^T(tuple) itself) and
            // anything with a singleton block.
            if part.len() == 1 || part.iter().any(|b| b.len() == 1) {
                continue;
            }
            let mut prod = C64::new(1.0, 0.0);
            for block in part {
                let sub: Vec<usize> = block.iter().map(|&i| tuple[i]).collect();
                prod *= self.truncate_memo(&sub, memo)?;
            }
            correction += prod;
        }
        let res = w - correction;
        memo.insert(tuple.to_vec(), res);
        Ok(res)
    }

    /// Max |W^T| over all populated tuples of length 3..=l_max: the quasifree
    /// defect. A hierarchy generated by pairings stays below ~1e−10.
    pub fn verify_quasifree(&self, l_max: usize) -> Result<f64> {
        let mut memo: HashMap<Vec<usize>, C64> = HashMap::new();
        let mut worst: f64 = 0.0;
        for tuple in self.populated_full_tuples(3, l_max.min(self.max_order)) {
            let v = self.truncate_memo(&tuple, &mut memo)?;
            worst = worst.max(v.norm());
        }
        Ok(worst)
    }
}

/// All nonempty subsequences of an index tuple, in order.
fn subsequences(tuple: &[usize]) -> Vec<Vec<usize>> {
    let l = tuple.len();
    let mut out = Vec::with_capacity((1usize << l) - 1);
    for mask in 1u32..(1u32 << l) {
        let sub: Vec<usize> = (0..l)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| tuple[i])
            .collect();
        out.push(sub);
    }
    out
}
