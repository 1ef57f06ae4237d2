use std::sync::OnceLock;

use rand::Rng;

use super::coding::{CodedWord, CodingMode, CodingSpec, Symbol};
use super::stacking::{Spacers, StackingData};
use crate::error::{Error, Result};
use crate::random::spacer::SpacerProcess;
use crate::rng::{counter_rng, streams};

/// Spacers regenerated per chunk for seeded stages.
const CHUNK: u64 = 256;

/// A compiled construction: heights plus per-stage positional indexes.
///
/// Levels are 64-bit; construction fails with [`Error::HeightOverflow`] when the
/// top tower does not fit. Immutable once built and safe to share across threads.
#[derive(Debug)]
pub struct Tower {
    data: StackingData,
    heights: Vec<u64>,
    stages: Vec<CompiledStage>,
}

#[derive(Debug)]
struct CompiledStage {
    q: u64,
    /// Height of the tower being cut.
    lower: u64,
    upper: u64,
    layout: Layout,
}

#[derive(Debug)]
enum Layout {
    Explicit { spacers: Vec<u32>, starts: OnceLock<Vec<u64>> },
    Constant { spacer: u64 },
    /// `sums[c]` = spacer levels before slice `c·CHUNK`.
    Chunked { process: SpacerProcess, sums: Vec<u64> },
}

/// Position of a level of `S_{m+1}` relative to the copies of `S_m` (0-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Piece {
    Slice { index: u64, offset: u64 },
    Spacer { block: u64, position: u64, len: u64 },
}

impl CompiledStage {
    fn new(data: &StackingData, stage: usize, lower: u64, upper: u64) -> Self {
        let s = &data.stages[stage - 1];
        let layout = match &s.spacers {
            Spacers::Explicit { spacers } => Layout::Explicit { spacers: spacers.clone(), starts: OnceLock::new() },
            Spacers::Constant { spacers } => Layout::Constant { spacer: u64::from(spacers.constant) },
            Spacers::Seeded { .. } => {
                let process = data.process(stage).expect("seeded stage");
                let chunks = s.q.div_ceil(CHUNK);
                let mut sums = Vec::with_capacity(chunks as usize);
                let mut acc = 0u64;
                for c in 0..chunks {
                    sums.push(acc);
                    let end = ((c + 1) * CHUNK).min(s.q - 1);
                    if c * CHUNK < end {
                        acc += process.chunk(c * CHUNK..end).iter().map(|&a| u64::from(a)).sum::<u64>();
                    }
                }
                Layout::Chunked { process, sums }
            }
        };
        CompiledStage { q: s.q, lower, upper, layout }
    }

    fn starts(&self) -> &[u64] {
        match &self.layout {
            Layout::Explicit { spacers, starts } => starts.get_or_init(|| {
                let mut out = Vec::with_capacity(self.q as usize);
                let mut pos = 0u64;
                for i in 0..self.q as usize {
                    out.push(pos);
                    pos += self.lower + spacers.get(i).map_or(0, |&a| u64::from(a));
                }
                out
            }),
            _ => unreachable!("only explicit stages keep a start table"),
        }
    }

    /// Spacer count after slice `i` (0-based, `i < q − 1`).
    fn spacer(&self, i: u64) -> u64 {
        match &self.layout {
            Layout::Explicit { spacers, .. } => u64::from(spacers[i as usize]),
            Layout::Constant { spacer } => *spacer,
            Layout::Chunked { process, .. } => u64::from(process.symbol(i)),
        }
    }

    fn slice_start(&self, i: u64) -> u64 {
        match &self.layout {
            Layout::Explicit { .. } => self.starts()[i as usize],
            Layout::Constant { spacer } => i * (self.lower + spacer),
            Layout::Chunked { process, sums } => {
                let c = i / CHUNK;
                let partial: u64 = process.chunk(c * CHUNK..i).iter().map(|&a| u64::from(a)).sum();
                i * self.lower + sums[c as usize] + partial
            }
        }
    }

    fn split(&self, k: u64) -> Piece {
        debug_assert!(k < self.upper);
        let h = self.lower;
        let (index, start) = match &self.layout {
            Layout::Explicit { .. } => {
                let starts = self.starts();
                let i = starts.partition_point(|&s| s <= k) - 1;
                (i as u64, starts[i])
            }
            Layout::Constant { spacer } => {
                let i = (k / (h + spacer)).min(self.q - 1);
                (i, i * (h + spacer))
            }
            Layout::Chunked { process, sums } => {
                let (mut c, mut hi) = (0usize, sums.len());
                while hi - c > 1 {
                    let mid = (c + hi) / 2;
                    if mid as u64 * CHUNK * h + sums[mid] <= k {
                        c = mid;
                    } else {
                        hi = mid;
                    }
                }
                let first = c as u64 * CHUNK;
                let end = ((c as u64 + 1) * CHUNK).min(self.q);
                let spacers = process.chunk(first..end.min(self.q - 1));
                let mut pos = first * h + sums[c];
                let mut found = None;
                for i in first..end {
                    let a = spacers.get((i - first) as usize).map_or(0, |&a| u64::from(a));
                    if k < pos + h + a || i == end - 1 {
                        found = Some((i, pos));
                        break;
                    }
                    pos += h + a;
                }
                found.expect("chunk covers k")
            }
        };
        let inner = k - start;
        if inner < h {
            Piece::Slice { index, offset: inner }
        } else {
            Piece::Spacer { block: index, position: inner - h, len: self.spacer(index) }
        }
    }

    /// Spacer levels of this stage strictly below level `k` of the upper tower.
    fn spacers_below(&self, k: u64) -> u64 {
        if k >= self.upper {
            return self.upper - self.q * self.lower;
        }
        match self.split(k) {
            Piece::Slice { index, offset } => k - offset - index * self.lower,
            Piece::Spacer { block, position, .. } => k - position - self.lower - block * self.lower + position,
        }
    }
}

/// Descent of a level through the stacking recursion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelLocator {
    pub stage: usize,
    pub level: u64,
    /// One step per descent `S_m → S_{m−1}`, from `S_stage` downwards.
    pub chain: Vec<LocatorStep>,
}

/// Slice and block indices are 1-based, matching `a_{n,i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocatorStep {
    /// Level lies in copy `slice` of `S_{stage−1}` inside `S_stage`, at `offset`.
    Slice { stage: usize, slice: u64, offset: u64 },
    /// Level lies in spacer block `block` (after copy `block`) at `position`.
    Spacer { stage: usize, block: u64, position: u64 },
}

impl LevelLocator {
    /// Rebuilds the level from the bottom of the chain upwards.
    pub fn recompose(&self, tower: &Tower) -> u64 {
        let mut acc: Option<u64> = None;
        for step in self.chain.iter().rev() {
            acc = Some(match *step {
                LocatorStep::Slice { stage, slice, offset } => {
                    tower.stage(stage).slice_start(slice - 1) + acc.unwrap_or(offset)
                }
                LocatorStep::Spacer { stage, block, position } => {
                    let st = tower.stage(stage);
                    st.slice_start(block - 1) + st.lower + position
                }
            });
        }
        acc.unwrap_or(self.level)
    }
}

impl Tower {
    pub fn new(data: StackingData) -> Result<Self> {
        let heights = data.heights()?;
        let stages = (1..data.num_towers())
            .map(|m| CompiledStage::new(&data, m, heights[m - 1], heights[m]))
            .collect();
        Ok(Tower { data, heights, stages })
    }

    pub fn data(&self) -> &StackingData {
        &self.data
    }

    /// `h_1, …, h_M`.
    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn num_towers(&self) -> usize {
        self.heights.len()
    }

    pub fn height(&self, n: usize) -> Result<u64> {
        self.check_stage(n)?;
        Ok(self.heights[n - 1])
    }

    /// The stage that builds `S_n` from `S_{n−1}`.
    fn stage(&self, n: usize) -> &CompiledStage {
        &self.stages[n - 2]
    }

    fn check_stage(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.num_towers() {
            return Err(Error::StageOutOfRange { stage: n, max: self.num_towers() });
        }
        Ok(())
    }

    fn check_level(&self, n: usize, k: u64) -> Result<()> {
        self.check_stage(n)?;
        let height = self.heights[n - 1];
        if k >= height {
            return Err(Error::LevelOutOfRange { stage: n, level: k, height });
        }
        Ok(())
    }

    fn check_spec(&self, spec: CodingSpec, n: usize) -> Result<()> {
        self.check_stage(n)?;
        if spec.reference == 0 || spec.reference > n {
            return Err(Error::ReferenceAboveStage { reference: spec.reference, stage: n });
        }
        if spec.mode == CodingMode::Refined && self.data.spacer_cap.is_none() {
            return Err(Error::UnboundedSpacerCap);
        }
        Ok(())
    }

    /// Number of copies of `S_m` stacked into `S_n`.
    pub fn copies(&self, m: usize, n: usize) -> u64 {
        (m + 1..=n).map(|j| self.stage(j).q).product()
    }

    pub fn locate_level(&self, n: usize, k: u64) -> Result<LevelLocator> {
        self.check_level(n, k)?;
        let mut chain = Vec::with_capacity(n.saturating_sub(1));
        let mut level = k;
        for m in (2..=n).rev() {
            match self.stage(m).split(level) {
                Piece::Slice { index, offset } => {
                    chain.push(LocatorStep::Slice { stage: m, slice: index + 1, offset });
                    level = offset;
                }
                Piece::Spacer { block, position, .. } => {
                    chain.push(LocatorStep::Spacer { stage: m, block: block + 1, position });
                    break;
                }
            }
        }
        Ok(LevelLocator { stage: n, level: k, chain })
    }

    /// Symbol `k` of `Φ_r(S_n)` (base) or `Φ'_r(S_n)` (refined), 0-based.
    pub fn decode_symbol(&self, spec: CodingSpec, n: usize, k: u64) -> Result<Symbol> {
        self.check_spec(spec, n)?;
        self.check_level(n, k)?;
        Ok(self.decode_unchecked(spec, n, k))
    }

    #[inline]
    fn decode_unchecked(&self, spec: CodingSpec, n: usize, k: u64) -> Symbol {
        let r = spec.reference;
        let mut level = k;
        for m in (r + 1..=n).rev() {
            match self.stage(m).split(level) {
                Piece::Slice { offset, .. } => level = offset,
                Piece::Spacer { position, .. } => {
                    return match spec.mode {
                        CodingMode::Base => 0,
                        CodingMode::Refined => (self.heights[r - 1] + position + 1) as Symbol,
                    };
                }
            }
        }
        (level + 1) as Symbol
    }

    /// Levels `k ≤ h_n − t_N − 1` whose orbit stays in `S_n` and that avoid the
    /// newest spacer blocks (those added when `S_n` was stacked from `S_{n−1}`).
    /// For `n = 1` no level is a spacer.
    pub fn valid_levels(&self, n: usize, t_n: u64) -> Result<ValidLevels<'_>> {
        self.check_stage(n)?;
        let height = self.heights[n - 1];
        if t_n >= height {
            return Err(Error::EmptyValidLevels { stage: n, t_n, height });
        }
        let bound = height - t_n;
        let count = if n == 1 { bound } else { bound - self.stage(n).spacers_below(bound) };
        Ok(ValidLevels { tower: self, stage: n, bound, count })
    }

    /// Codes the `A`-orbit `k + t_1, …, k + t_N` of level `k` in `S_n`.
    pub fn code_orbit(&self, spec: CodingSpec, n: usize, k: u64, terms: &[u64]) -> Result<CodedWord> {
        self.check_spec(spec, n)?;
        self.check_level(n, k)?;
        self.code_orbit_unchecked(spec, n, k, terms).map(CodedWord)
    }

    pub(crate) fn code_orbit_unchecked(&self, spec: CodingSpec, n: usize, k: u64, terms: &[u64]) -> Result<Vec<Symbol>> {
        let height = self.heights[n - 1];
        terms
            .iter()
            .enumerate()
            .map(|(i, &t)| match k.checked_add(t) {
                Some(pos) if pos < height => Ok(self.decode_unchecked(spec, n, pos)),
                _ => Err(Error::Escape { index: i + 1 }),
            })
            .collect()
    }

    pub(crate) fn validate_spec(&self, spec: CodingSpec, n: usize) -> Result<()> {
        self.check_spec(spec, n)
    }
}

/// The valid-level set `K` of a stage for a given orbit length.
#[derive(Clone, Copy, Debug)]
pub struct ValidLevels<'a> {
    tower: &'a Tower,
    stage: usize,
    bound: u64,
    count: u64,
}

impl<'a> ValidLevels<'a> {
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Exclusive upper end of the level range, `h_n − t_N`.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// `|K| / h_n`.
    pub fn coverage(&self) -> f64 {
        self.count as f64 / self.tower.heights[self.stage - 1] as f64
    }

    pub fn contains(&self, k: u64) -> bool {
        k < self.bound && (self.stage == 1 || matches!(self.tower.stage(self.stage).split(k), Piece::Slice { .. }))
    }

    pub fn iter(&self) -> ValidLevelIter<'a> {
        self.iter_range(0, self.bound)
    }

    /// In-order valid levels within `[lo, hi)`.
    pub fn iter_range(&self, lo: u64, hi: u64) -> ValidLevelIter<'a> {
        ValidLevelIter { levels: *self, next: lo, slice_end: lo, hi: hi.min(self.bound) }
    }

    /// Uniform draw from `K` addressed by `(seed, index)`, by rejection on `[0, bound)`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<u64> {
        let mut rng = counter_rng(seed, streams::LEVEL_SAMPLING, index);
        for _ in 0..1 << 16 {
            let k = rng.random_range(0..self.bound);
            if self.contains(k) {
                return Ok(k);
            }
        }
        Err(Error::Precondition("valid levels too sparse for rejection sampling".into()))
    }
}

pub struct ValidLevelIter<'a> {
    levels: ValidLevels<'a>,
    next: u64,
    slice_end: u64,
    hi: u64,
}

impl Iterator for ValidLevelIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.next >= self.hi {
                return None;
            }
            if self.next < self.slice_end {
                let k = self.next;
                self.next += 1;
                return Some(k);
            }
            if self.levels.stage == 1 {
                self.slice_end = self.hi;
                continue;
            }
            let stage = self.levels.tower.stage(self.levels.stage);
            match stage.split(self.next) {
                Piece::Slice { offset, .. } => self.slice_end = self.next + (stage.lower - offset),
                Piece::Spacer { position, len, .. } => self.next += len - position,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{SpacerDistribution, Stage};

    /// h_1 = 2, one stage (q = 2, spacers (1)): Φ_1(S_2) = 1 2 0 1 2.
    fn tiny() -> Tower {
        Tower::new(StackingData::new(2, Some(2), vec![Stage::explicit(2, vec![1])]).unwrap()).unwrap()
    }

    #[test]
    fn locate_examples() {
        let t = tiny();
        assert_eq!(t.locate_level(2, 3).unwrap().chain, vec![LocatorStep::Slice { stage: 2, slice: 2, offset: 0 }]);
        assert_eq!(t.locate_level(2, 2).unwrap().chain, vec![LocatorStep::Spacer { stage: 2, block: 1, position: 0 }]);
        assert_eq!(t.locate_level(2, 4).unwrap().chain, vec![LocatorStep::Slice { stage: 2, slice: 2, offset: 1 }]);
        assert!(matches!(t.locate_level(2, 5), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn decode_examples() {
        let t = tiny();
        assert_eq!(t.decode_symbol(CodingSpec::base(1), 2, 2).unwrap(), 0);
        assert_eq!(t.decode_symbol(CodingSpec::base(1), 2, 4).unwrap(), 2);
        assert_eq!(t.decode_symbol(CodingSpec::refined(1), 2, 2).unwrap(), 3);
        let word: Vec<Symbol> = (0..5).map(|k| t.decode_symbol(CodingSpec::base(1), 2, k).unwrap()).collect();
        assert_eq!(word, vec![1, 2, 0, 1, 2]);
        assert!(matches!(t.decode_symbol(CodingSpec::base(3), 2, 0), Err(Error::ReferenceAboveStage { .. })));
    }

    #[test]
    fn refined_needs_a_cap() {
        let t = Tower::new(StackingData::new(2, None, vec![Stage::explicit(2, vec![1])]).unwrap()).unwrap();
        assert!(matches!(t.decode_symbol(CodingSpec::refined(1), 2, 0), Err(Error::UnboundedSpacerCap)));
    }

    #[test]
    fn valid_level_examples() {
        let t = tiny();
        let k = t.valid_levels(2, 2).unwrap();
        assert_eq!((k.len(), k.iter().collect::<Vec<_>>()), (2, vec![0, 1]));
        let k = t.valid_levels(2, 0).unwrap();
        assert_eq!((k.len(), k.iter().collect::<Vec<_>>()), (4, vec![0, 1, 3, 4]));
        assert!(matches!(t.valid_levels(2, 5), Err(Error::EmptyValidLevels { .. })));
    }

    #[test]
    fn orbit_examples() {
        let t = tiny();
        let a = [1, 2];
        assert_eq!(t.code_orbit(CodingSpec::base(1), 2, 0, &a).unwrap().to_string(), "2,0");
        assert_eq!(t.code_orbit(CodingSpec::base(1), 2, 1, &a).unwrap().to_string(), "0,1");
        assert!(matches!(t.code_orbit(CodingSpec::base(1), 2, 3, &a), Err(Error::Escape { index: 2 })));
    }

    #[test]
    fn chunked_stage_agrees_with_explicit_copy() {
        let seeded = StackingData::new(3, Some(3), vec![Stage::seeded(700, 21, SpacerDistribution::Uniform)]).unwrap();
        let spacers = seeded.process(1).unwrap().chunk(0..699);
        let explicit = StackingData::new(3, Some(3), vec![Stage::explicit(700, spacers)]).unwrap();
        let (a, b) = (Tower::new(seeded).unwrap(), Tower::new(explicit).unwrap());
        assert_eq!(a.heights(), b.heights());
        for k in 0..a.heights()[1] {
            assert_eq!(a.locate_level(2, k).unwrap(), b.locate_level(2, k).unwrap());
            assert_eq!(
                a.decode_symbol(CodingSpec::refined(1), 2, k).unwrap(),
                b.decode_symbol(CodingSpec::refined(1), 2, k).unwrap()
            );
        }
        let (ka, kb) = (a.valid_levels(2, 17).unwrap(), b.valid_levels(2, 17).unwrap());
        assert_eq!(ka.len(), kb.len());
        assert!(ka.iter().eq(kb.iter()));
    }

    #[test]
    fn sampling_stays_inside_k() {
        let t = tiny();
        let k = t.valid_levels(2, 0).unwrap();
        for i in 0..200 {
            let level = k.sample(3, i).unwrap();
            assert!(k.contains(level));
        }
        assert_eq!(k.sample(3, 9).unwrap(), k.sample(3, 9).unwrap());
    }
}
