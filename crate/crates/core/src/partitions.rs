//! Set partitions of a row-structured index set.
//!
//! The index set `[n]` is split into consecutive rows `J_1, ..., J_l` of
//! sizes `n_1, ..., n_l`. A *subpartition* is a family of disjoint non-empty
//! blocks in `[n]`; a *partition* additionally covers `[n]`. The classes used
//! by the moment and cumulant formulas are the non-flat partitions (no block
//! takes two elements from the same row), optionally restricted to blocks of
//! size at least two, blocks of size exactly two, or to connected partitions
//! (the induced partition of the rows has a single block).
//!
//! Enumeration walks restricted-growth strings and prunes a block as soon as
//! it would take a second element from one row, so streams are produced in a
//! canonical deterministic order: blocks labelled by first occurrence, which
//! coincides with least-element order.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

/// Default bound on the ground-set size for enumeration (Bell(12) ~ 4.2e6).
pub const DEFAULT_LIMIT: usize = 12;

/// Row structure `(n_1, ..., n_l)` over the ground set `[n]`, `n = sum n_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowLayout {
    sizes: Vec<usize>,
    row_of: Vec<usize>,
}

impl RowLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Input("row sizes must be positive".into()));
        }
        let mut row_of = Vec::with_capacity(sizes.iter().sum());
        for (i, &s) in sizes.iter().enumerate() {
            row_of.extend(std::iter::repeat(i).take(s));
        }
        Ok(Self { sizes, row_of })
    }

    /// Layout with `ell` rows of size one (the ground set is the row set).
    pub fn units(ell: usize) -> Self {
        Self::new(vec![1; ell]).expect("positive sizes")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Ground-set size `n`.
    pub fn n(&self) -> usize {
        self.row_of.len()
    }

    /// Number of rows `l`.
    pub fn ell(&self) -> usize {
        self.sizes.len()
    }

    /// Row index of a 0-based position.
    pub fn row_of(&self, pos: usize) -> usize {
        self.row_of[pos]
    }

    /// Half-open position range of row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.sizes[..i].iter().sum();
        start..start + self.sizes[i]
    }
}

/// A family of disjoint non-empty blocks over `[n]`, kept in canonical form:
/// elements ascending within each block, blocks ordered by least element.
/// Positions are 0-based internally; `Display` renders them 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subpartition {
    blocks: Vec<Vec<usize>>,
}

impl Subpartition {
    /// Builds a subpartition from arbitrary blocks, canonicalizing the order.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::Constraint("empty block".into()));
            }
            b.sort_unstable();
            for &e in b.iter() {
                if !seen.insert(e) {
                    return Err(Error::Constraint(format!("element {} repeated", e + 1)));
                }
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    pub fn empty() -> Self {
        Self { blocks: Vec::new() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks `|sigma|`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of covered elements `||sigma||`.
    pub fn covered(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// True when the blocks cover all of `[n]`.
    pub fn is_partition(&self, n: usize) -> bool {
        self.covered() == n && self.blocks.iter().flatten().all(|&e| e < n)
    }

    /// True when no block meets a row of `layout` more than once.
    pub fn is_nonflat(&self, layout: &RowLayout) -> bool {
        self.blocks.iter().all(|b| {
            let mut rows = 0u64;
            b.iter().all(|&e| {
                if e >= layout.n() {
                    return false;
                }
                let bit = 1u64 << layout.row_of(e);
                let fresh = rows & bit == 0;
                rows |= bit;
                fresh
            })
        })
    }
}

impl fmt::Display for Subpartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "{{}}");
        }
        for b in &self.blocks {
            write!(f, "{{")?;
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", e + 1)?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl FromStr for Subpartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "{}" || s.is_empty() {
            return Ok(Self::empty());
        }
        let mut blocks = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let Some(stripped) = rest.strip_prefix('{') else {
                return Err(Error::Input(format!("expected '{{' in partition string {s:?}")));
            };
            let Some(close) = stripped.find('}') else {
                return Err(Error::Input(format!("unbalanced braces in {s:?}")));
            };
            let body = &stripped[..close];
            let mut block = Vec::new();
            for tok in body.split(',') {
                let v: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Input(format!("bad element {tok:?} in {s:?}")))?;
                if v == 0 {
                    return Err(Error::Input("elements are 1-based".into()));
                }
                block.push(v - 1);
            }
            blocks.push(block);
            rest = &stripped[close + 1..];
        }
        Self::new(blocks)
    }
}

/// Partition classes over a row layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionClass {
    /// All non-flat partitions of `[n]`.
    NonFlat,
    /// Non-flat partitions with every block of size at least two.
    Ge2,
    /// Non-flat partitions with every block of size exactly two.
    Eq2,
    /// `Ge2` partitions whose induced row partition has a single block.
    Connected,
}

impl PartitionClass {
    fn min_block(self) -> usize {
        match self {
            PartitionClass::NonFlat => 1,
            _ => 2,
        }
    }

    fn exact_two(self) -> bool {
        matches!(self, PartitionClass::Eq2)
    }

    fn connected(self) -> bool {
        matches!(self, PartitionClass::Connected)
    }
}

/// Streams every subpartition of `[n]` (the empty one included) in canonical
/// order, under the default size limit.
pub fn enumerate_subpartitions(n: usize) -> Result<SubpartitionIter> {
    enumerate_subpartitions_with_limit(n, DEFAULT_LIMIT)
}

pub fn enumerate_subpartitions_with_limit(n: usize, limit: usize) -> Result<SubpartitionIter> {
    if n == 0 || n > limit {
        return Err(Error::SizeLimit { n, limit });
    }
    Ok(SubpartitionIter::new(n))
}

/// Streams the partitions of the given class over `layout` in canonical
/// order, under the default size limit.
pub fn enumerate_partitions(layout: &RowLayout, class: PartitionClass) -> Result<ClassIter> {
    enumerate_partitions_with_limit(layout, class, DEFAULT_LIMIT)
}

pub fn enumerate_partitions_with_limit(
    layout: &RowLayout,
    class: PartitionClass,
    limit: usize,
) -> Result<ClassIter> {
    if layout.n() > limit {
        return Err(Error::SizeLimit { n: layout.n(), limit });
    }
    Ok(ClassIter::new(layout.clone(), class))
}

/// Number of partitions in the class; equals the enumerated stream length.
/// Counts are memoized per `(layout, class)`.
pub fn count_partitions(layout: &RowLayout, class: PartitionClass) -> Result<u64> {
    static CACHE: OnceLock<Mutex<HashMap<(Vec<usize>, PartitionClass), u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (layout.sizes().to_vec(), class);
    if let Some(&c) = cache.lock().unwrap().get(&key) {
        return Ok(c);
    }
    let count = enumerate_partitions(layout, class)?.count() as u64;
    cache.lock().unwrap().insert(key, count);
    Ok(count)
}

/// Induced partition of the row set: rows `i` and `j` land in the same block
/// when some block of `sigma` meets both `J_i` and `J_j` (transitively).
/// Returned in canonical form over `0..ell`.
pub fn induced_partition(sigma: &Subpartition, layout: &RowLayout) -> Result<Vec<Vec<usize>>> {
    if !sigma.is_nonflat(layout) {
        return Err(Error::Constraint(format!(
            "{sigma} is not non-flat for layout {:?}",
            layout.sizes()
        )));
    }
    let ell = layout.ell();
    let mut parent: Vec<usize> = (0..ell).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for b in sigma.blocks() {
        let first = layout.row_of(b[0]);
        for &e in &b[1..] {
            let (a, c) = (find(&mut parent, first), find(&mut parent, layout.row_of(e)));
            if a != c {
                parent[a.max(c)] = a.min(c);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..ell {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    Ok(out)
}

/// Argument-identification map for `f_sigma`: positions in the same block of
/// `sigma` share a target; targets are assigned by first occurrence while
/// scanning positions in order, and uncovered positions get fresh targets.
/// The result maps `[n]` onto `[q]` with `q = |sigma| + n - ||sigma||`
/// (0-based on both sides).
pub fn substitution_map(sigma: &Subpartition, n: usize) -> Result<Vec<usize>> {
    let mut block_of = vec![usize::MAX; n];
    for (bi, b) in sigma.blocks().iter().enumerate() {
        for &e in b {
            if e >= n {
                return Err(Error::Constraint(format!(
                    "block element {} outside ground set of size {n}",
                    e + 1
                )));
            }
            block_of[e] = bi;
        }
    }
    let mut target_of_block = vec![usize::MAX; sigma.block_count()];
    let mut map = Vec::with_capacity(n);
    let mut next = 0;
    for pos in 0..n {
        let b = block_of[pos];
        if b == usize::MAX {
            map.push(next);
            next += 1;
        } else if target_of_block[b] == usize::MAX {
            target_of_block[b] = next;
            map.push(next);
            next += 1;
        } else {
            map.push(target_of_block[b]);
        }
    }
    debug_assert_eq!(next, sigma.block_count() + n - sigma.covered());
    Ok(map)
}

/// Backtracking enumerator for non-flat partition classes.
pub struct ClassIter {
    layout: RowLayout,
    min_block: usize,
    exact_two: bool,
    connected: bool,
    n: usize,
    assign: Vec<usize>,
    candidate: Vec<usize>,
    block_sizes: Vec<usize>,
    block_rows: Vec<u64>,
    singles: usize,
    depth: usize,
    done: bool,
}

impl ClassIter {
    fn new(layout: RowLayout, class: PartitionClass) -> Self {
        let n = layout.n();
        Self {
            layout,
            min_block: class.min_block(),
            exact_two: class.exact_two(),
            connected: class.connected(),
            n,
            assign: vec![usize::MAX; n],
            candidate: vec![0; n + 1],
            block_sizes: Vec::new(),
            block_rows: Vec::new(),
            singles: 0,
            depth: 0,
            done: false,
        }
    }

    fn try_place(&mut self, pos: usize, b: usize) -> bool {
        let row_bit = 1u64 << self.layout.row_of(pos);
        let new_block = b == self.block_sizes.len();
        if !new_block {
            if self.block_rows[b] & row_bit != 0 {
                return false; // second element from the same row
            }
            if self.exact_two && self.block_sizes[b] >= 2 {
                return false;
            }
        }
        // Every singleton block still needs a partner among later positions.
        let singles_after = if new_block {
            self.singles + 1
        } else if self.block_sizes[b] == 1 {
            self.singles - 1
        } else {
            self.singles
        };
        let remaining = self.n - pos - 1;
        if self.min_block >= 2 {
            if singles_after > remaining {
                return false;
            }
            if self.exact_two && (remaining - singles_after) % 2 != 0 {
                return false;
            }
        }
        if new_block {
            self.block_sizes.push(1);
            self.block_rows.push(row_bit);
        } else {
            self.block_sizes[b] += 1;
            self.block_rows[b] |= row_bit;
        }
        self.singles = singles_after;
        self.assign[pos] = b;
        true
    }

    fn unplace(&mut self, pos: usize) {
        let b = self.assign[pos];
        let row_bit = 1u64 << self.layout.row_of(pos);
        if self.block_sizes[b] == 1 {
            self.block_sizes.pop();
            self.block_rows.pop();
            self.singles -= 1;
        } else {
            self.block_sizes[b] -= 1;
            self.block_rows[b] &= !row_bit;
            if self.block_sizes[b] == 1 {
                self.singles += 1;
            }
        }
        self.assign[pos] = usize::MAX;
    }

    fn leaf_ok(&self) -> bool {
        if self.block_sizes.iter().any(|&s| s < self.min_block) {
            return false;
        }
        if self.exact_two && self.block_sizes.iter().any(|&s| s != 2) {
            return false;
        }
        if self.connected {
            // Union rows through blocks; connected means one component.
            let ell = self.layout.ell();
            let mut parent: Vec<usize> = (0..ell).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            for b in 0..self.block_sizes.len() {
                let mut rows = self.block_rows[b];
                let first = rows.trailing_zeros() as usize;
                rows &= rows - 1;
                while rows != 0 {
                    let r = rows.trailing_zeros() as usize;
                    rows &= rows - 1;
                    let (a, c) = (find(&mut parent, first), find(&mut parent, r));
                    if a != c {
                        parent[a.max(c)] = a.min(c);
                    }
                }
            }
            let root = find(&mut parent, 0);
            if (0..ell).any(|i| find(&mut parent, i) != root) {
                return false;
            }
        }
        true
    }

    fn build(&self) -> Subpartition {
        let mut blocks = vec![Vec::new(); self.block_sizes.len()];
        for pos in 0..self.n {
            blocks[self.assign[pos]].push(pos);
        }
        Subpartition { blocks }
    }
}

impl Iterator for ClassIter {
    type Item = Subpartition;

    fn next(&mut self) -> Option<Subpartition> {
        if self.done {
            return None;
        }
        loop {
            if self.depth == self.n {
                let item = if self.leaf_ok() { Some(self.build()) } else { None };
                // step back to continue the walk
                self.depth -= 1;
                self.unplace(self.depth);
                if let Some(item) = item {
                    return Some(item);
                }
                continue;
            }
            let pos = self.depth;
            let mut b = self.candidate[pos];
            let mut placed = false;
            while b <= self.block_sizes.len() {
                if self.try_place(pos, b) {
                    self.candidate[pos] = b + 1;
                    self.depth += 1;
                    if self.depth < self.n {
                        self.candidate[self.depth] = 0;
                    }
                    placed = true;
                    break;
                }
                b += 1;
            }
            if !placed {
                if self.depth == 0 {
                    self.done = true;
                    return None;
                }
                self.depth -= 1;
                self.unplace(self.depth);
            }
        }
    }
}

/// Backtracking enumerator for all subpartitions of `[n]`.
///
/// Candidate 0 leaves a position uncovered; candidate `b + 1` puts it in
/// block `b` (or opens a new block). The first item is the empty subpartition.
pub struct SubpartitionIter {
    n: usize,
    assign: Vec<usize>, // 0 = uncovered, b + 1 = block b
    candidate: Vec<usize>,
    block_sizes: Vec<usize>,
    depth: usize,
    done: bool,
}

impl SubpartitionIter {
    fn new(n: usize) -> Self {
        Self {
            n,
            assign: vec![0; n],
            candidate: vec![0; n + 1],
            block_sizes: Vec::new(),
            depth: 0,
            done: false,
        }
    }

    fn build(&self) -> Subpartition {
        let mut blocks = vec![Vec::new(); self.block_sizes.len()];
        for pos in 0..self.n {
            if self.assign[pos] > 0 {
                blocks[self.assign[pos] - 1].push(pos);
            }
        }
        Subpartition { blocks }
    }

    // LIFO unwinding keeps first-use block order, so a block emptied here is
    // always the last one.
    fn unplace(&mut self, pos: usize) {
        let prev = self.assign[pos];
        if prev > 0 {
            let b = prev - 1;
            if self.block_sizes[b] == 1 {
                self.block_sizes.pop();
            } else {
                self.block_sizes[b] -= 1;
            }
        }
        self.assign[pos] = 0;
    }
}

impl Iterator for SubpartitionIter {
    type Item = Subpartition;

    fn next(&mut self) -> Option<Subpartition> {
        if self.done {
            return None;
        }
        loop {
            if self.depth == self.n {
                let item = self.build();
                if self.n == 0 {
                    self.done = true;
                } else {
                    self.depth -= 1;
                    self.unplace(self.depth);
                }
                return Some(item);
            }
            let pos = self.depth;
            let c = self.candidate[pos];
            if c <= self.block_sizes.len() + 1 {
                // c == 0: leave uncovered; otherwise join / open block c - 1.
                if c > 0 {
                    let b = c - 1;
                    if b == self.block_sizes.len() {
                        self.block_sizes.push(1);
                    } else {
                        self.block_sizes[b] += 1;
                    }
                }
                self.assign[pos] = c;
                self.candidate[pos] = c + 1;
                self.depth += 1;
                if self.depth < self.n {
                    self.candidate[self.depth] = 0;
                }
            } else {
                if self.depth == 0 {
                    self.done = true;
                    return None;
                }
                self.depth -= 1;
                self.unplace(self.depth);
            }
        }
    }
}
