//! Random-field blocks, window sums, the truncation split and running maxima.
//!
//! Cell `(i, j)` of the field under master seed `s` is the first draw of
//! stream [`CounterRng::for_cell`]`(s, i, j)`. Windows that overlap see the
//! same values on shared cells; disjoint windows are independent.

use crate::dist::{DistributionSpec, Sampler};
use crate::normalizers::{axis_length, check_eps_delta, rate_bundle, rate_bundle_ln, NormalizerBundle, WindowLaw};
use crate::rng::CounterRng;
use crate::{Error, Result};
use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

/// Hard cap on cells in a directly simulated window.
pub const DIRECT_CELL_CAP: u64 = 10_000_000;

/// Memory budget for materialized blocks, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub bytes: u64,
}

impl Budget {
    pub const DEFAULT: Budget = Budget { bytes: 512 << 20 };

    pub fn from_megabytes(mb: u64) -> Self {
        Budget {
            bytes: mb.saturating_mul(1 << 20),
        }
    }

    pub fn cells(&self) -> u64 {
        self.bytes / core::mem::size_of::<f64>() as u64
    }

    pub fn check(&self, cells: u64) -> Result<()> {
        let cap = self.cells().min(DIRECT_CELL_CAP);
        if cells > cap {
            Err(Error::BudgetExceeded {
                cells,
                budget_cells: cap,
                budget_bytes: self.bytes,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

/// Inclusive window `[m, m+a1] × [n, n+a2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRect {
    pub m: u64,
    pub n: u64,
    pub a1: u64,
    pub a2: u64,
}

impl WindowRect {
    pub fn new(m: u64, n: u64, a1: u64, a2: u64) -> Result<Self> {
        if m < 3 || n < 3 {
            return Err(Error::BelowDomain {
                what: "window anchor",
                value: m.min(n) as f64,
                min: 3.0,
            });
        }
        Ok(WindowRect { m, n, a1, a2 })
    }

    /// Window of `law` anchored at `(m, n)` with floored axis lengths.
    pub fn for_law(law: &WindowLaw, m: u64, n: u64) -> Result<Self> {
        let a1 = libm::floor(axis_length(&law.axis1, m)?) as u64;
        let a2 = libm::floor(axis_length(&law.axis2, n)?) as u64;
        WindowRect::new(m, n, a1, a2)
    }

    pub fn rows(&self) -> u64 {
        self.a1 + 1
    }

    pub fn cols(&self) -> u64 {
        self.a2 + 1
    }

    /// `(a1 + 1)(a2 + 1)`, saturating.
    pub fn cells(&self) -> u64 {
        self.rows().saturating_mul(self.cols())
    }
}

/// Row-major materialized window; row `r` is index `m + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rect: WindowRect,
    pub data: Vec<f64>,
}

impl Block {
    pub fn rows(&self) -> usize {
        self.rect.rows() as usize
    }

    pub fn cols(&self) -> usize {
        self.rect.cols() as usize
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }
}

#[inline]
fn cell_value(sampler: &Sampler, seed: u64, i: u64, j: u64) -> f64 {
    let mut rng = CounterRng::for_cell(seed, i, j);
    sampler.sample(&mut rng)
}

pub fn sample_block(dist: &DistributionSpec, seed: u64, rect: &WindowRect, budget: &Budget) -> Result<Block> {
    budget.check(rect.cells())?;
    let sampler = dist.sampler()?;
    let mut data = Vec::with_capacity(rect.cells() as usize);
    for r in 0..rect.rows() {
        for c in 0..rect.cols() {
            data.push(cell_value(&sampler, seed, rect.m + r, rect.n + c));
        }
    }
    Ok(Block { rect: *rect, data })
}

pub fn window_sum_naive(block: &Block) -> f64 {
    let mut s = 0.0;
    for r in 0..block.rows() {
        for c in 0..block.cols() {
            s += block.get(r, c);
        }
    }
    s
}

/// Summed-area table with a zero guard row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct SummedAreaTable {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl SummedAreaTable {
    pub fn new(block: &Block) -> Self {
        let (rows, cols) = (block.rows(), block.cols());
        let w = cols + 1;
        let mut table = alloc::vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            let mut run = 0.0;
            for c in 0..cols {
                run += block.get(r, c);
                table[(r + 1) * w + c + 1] = table[r * w + c + 1] + run;
            }
        }
        SummedAreaTable { rows, cols, table }
    }

    /// Sum over rows `r0..=r1` and columns `c0..=c1` of the block.
    pub fn rect_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
        let w = self.cols + 1;
        let at = |r: usize, c: usize| self.table[r * w + c];
        at(r1 + 1, c1 + 1) - at(r0, c1 + 1) - at(r1 + 1, c0) + at(r0, c0)
    }

    pub fn total(&self) -> f64 {
        self.table[self.rows * (self.cols + 1) + self.cols]
    }
}

pub fn window_sum_prefix(block: &Block) -> f64 {
    SummedAreaTable::new(block).total()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationTriple {
    pub xp: f64,
    pub xpp: f64,
    pub xppp: f64,
}

/// `|x| ≤ b` → X′, `b < |x| < top` → X″, `|x| ≥ top` → X‴.
pub fn truncate_split(x: f64, b: f64, top: f64) -> Result<TruncationTriple> {
    if !(b > 0.0) {
        return Err(Error::param("b", b, "must be > 0"));
    }
    if !(top > b) {
        return Err(Error::param("top", top, "must exceed the truncation level b"));
    }
    Ok(split_unchecked(x, b, top))
}

#[inline]
fn split_unchecked(x: f64, b: f64, top: f64) -> TruncationTriple {
    let a = x.abs();
    if a <= b {
        TruncationTriple {
            xp: x,
            xpp: 0.0,
            xppp: 0.0,
        }
    } else if a < top {
        TruncationTriple {
            xp: 0.0,
            xpp: x,
            xppp: 0.0,
        }
    } else {
        TruncationTriple {
            xp: 0.0,
            xpp: 0.0,
            xppp: x,
        }
    }
}

/// Geometry and truncation levels of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub rect: WindowRect,
    pub bundle: NormalizerBundle,
    pub b: f64,
    pub top: f64,
}

/// `b = (σδ/ε) sqrt(area/rate)` and `top = δ sqrt(f)`; requires `b < top`.
pub fn window_spec(law: &WindowLaw, m: u64, n: u64, eps: f64, delta: f64) -> Result<WindowSpec> {
    check_eps_delta(eps, delta)?;
    let bundle = rate_bundle(law, m, n)?;
    let rect = WindowRect::for_law(law, m, n)?;
    let b = law.sigma * delta / eps * libm::sqrt(bundle.area / bundle.rate);
    let top = delta * libm::sqrt(bundle.f);
    if !(top > b) {
        return Err(Error::param(
            "top",
            top,
            "must exceed b; the rate is below sigma/eps here",
        ));
    }
    Ok(WindowSpec { rect, bundle, b, top })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStatistic {
    pub t: f64,
    pub tp: f64,
    pub tpp: f64,
    pub tppp: f64,
    /// `T / sqrt(2f)`.
    pub normalized: f64,
}

/// Streams the window's cells without materializing them.
pub fn evaluate_window(spec: &WindowSpec, sampler: &Sampler, seed: u64, budget: &Budget) -> Result<WindowStatistic> {
    budget.check(spec.rect.cells())?;
    let (mut t, mut tp, mut tpp, mut tppp) = (0.0, 0.0, 0.0, 0.0);
    let r = &spec.rect;
    for i in r.m..=r.m + r.a1 {
        for j in r.n..=r.n + r.a2 {
            let x = cell_value(sampler, seed, i, j);
            let s = split_unchecked(x, spec.b, spec.top);
            t += x;
            tp += s.xp;
            tpp += s.xpp;
            tppp += s.xppp;
        }
    }
    Ok(WindowStatistic {
        t,
        tp,
        tpp,
        tppp,
        normalized: t / libm::sqrt(2.0 * spec.bundle.f),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn windowed_statistic(
    law: &WindowLaw,
    m: u64,
    n: u64,
    dist: &DistributionSpec,
    seed: u64,
    eps: f64,
    delta: f64,
    budget: &Budget,
) -> Result<WindowStatistic> {
    let spec = window_spec(law, m, n, eps, delta)?;
    evaluate_window(&spec, &dist.sampler()?, seed, budget)
}

/// `(ε/(σδ))`-scaled bound on `|E T′| / sqrt(f)`: `cells · E[X² 1{|X|>b}] / (b sqrt f)`.
pub fn mean_drift_bound(spec: &WindowSpec, dist: &DistributionSpec) -> Result<f64> {
    let tail = dist.second_moment_above(spec.b)?;
    Ok(spec.rect.cells() as f64 * tail / (spec.b * libm::sqrt(spec.bundle.f)))
}

/// `σZ / sqrt(2 rate)` with `Z` standard normal.
pub fn surrogate_statistic(law: &WindowLaw, m: u64, n: u64, rng: &mut CounterRng) -> Result<f64> {
    let b = rate_bundle(law, m, n)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(law.sigma * z / libm::sqrt(2.0 * b.rate))
}

/// [`surrogate_statistic`] at real anchors `e^ln_m`, `e^ln_n`.
pub fn surrogate_statistic_ln(law: &WindowLaw, ln_m: f64, ln_n: f64, rng: &mut CounterRng) -> Result<f64> {
    let b = rate_bundle_ln(law, ln_m, ln_n)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(law.sigma * z / libm::sqrt(2.0 * b.rate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    Direct,
    Surrogate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub i: u64,
    pub j: u64,
    pub ln_m: f64,
    pub ln_n: f64,
    pub statistic: f64,
    pub running_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupTrace {
    pub mode: TraceMode,
    pub entries: Vec<TraceEntry>,
}

impl LimsupTrace {
    /// Final running maximum and the `(i, j)` achieving it.
    pub fn final_max(&self) -> Option<(f64, u64, u64)> {
        let last = self.entries.last()?;
        let at = self.entries.iter().find(|e| e.statistic == last.running_max)?;
        Some((last.running_max, at.i, at.j))
    }
}

/// Streaming maximum that remembers where it was attained (first wins ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningMax {
    pub value: f64,
    pub i: u64,
    pub j: u64,
    pub count: u64,
}

impl Default for RunningMax {
    fn default() -> Self {
        RunningMax {
            value: f64::NEG_INFINITY,
            i: 0,
            j: 0,
            count: 0,
        }
    }
}

impl RunningMax {
    /// Returns true when `x` raised the maximum.
    #[inline]
    pub fn push(&mut self, i: u64, j: u64, x: f64) -> bool {
        self.count += 1;
        if x > self.value {
            self.value = x;
            self.i = i;
            self.j = j;
            true
        } else {
            false
        }
    }
}

/// Entries `(i, j, ln m_i, ln n_j, statistic)` in the order given.
pub fn track_running_max<I>(mode: TraceMode, stream: I) -> LimsupTrace
where
    I: IntoIterator<Item = (u64, u64, f64, f64, f64)>,
{
    let mut rm = RunningMax::default();
    let entries = stream
        .into_iter()
        .map(|(i, j, ln_m, ln_n, statistic)| {
            rm.push(i, j, statistic);
            TraceEntry {
                i,
                j,
                ln_m,
                ln_n,
                statistic,
                running_max: rm.value,
            }
        })
        .collect();
    LimsupTrace { mode, entries }
}

/// Enumeration order of a square index region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridOrder {
    RowMajor,
    /// By anti-diagonal `i + j`, then by `i`.
    Diagonal,
    /// By shell `max(i, j)`, then row before column.
    Shell,
}

impl GridOrder {
    /// All `(i, j)` in `[lo, hi]²` in this order.
    pub fn enumerate(&self, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        if hi < lo {
            return out;
        }
        match self {
            GridOrder::RowMajor => {
                for i in lo..=hi {
                    for j in lo..=hi {
                        out.push((i, j));
                    }
                }
            }
            GridOrder::Diagonal => {
                for s in 2 * lo..=2 * hi {
                    let i0 = lo.max(s.saturating_sub(hi));
                    let i1 = hi.min(s - lo);
                    for i in i0..=i1 {
                        out.push((i, s - i));
                    }
                }
            }
            GridOrder::Shell => {
                for k in lo..=hi {
                    for j in lo..=k {
                        out.push((k, j));
                    }
                    for i in lo..k {
                        out.push((i, k));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LogPerturbedPareto;

    fn ones(a1: u64, a2: u64, v: f64) -> Block {
        let rect = WindowRect::new(3, 3, a1, a2).unwrap();
        Block {
            rect,
            data: alloc::vec![v; rect.cells() as usize],
        }
    }

    #[test]
    fn window_sum_examples() {
        let b = ones(3, 2, 1.0);
        assert_eq!(window_sum_naive(&b), 12.0);
        assert_eq!(window_sum_prefix(&b), 12.0);
        let z = ones(5, 7, 0.0);
        assert_eq!(window_sum_prefix(&z), 0.0);
    }

    #[test]
    fn sat_sub_rectangles_match_naive() {
        let rect = WindowRect::new(10, 20, 12, 9).unwrap();
        let blk = sample_block(&DistributionSpec::Rademacher, 5, &rect, &Budget::DEFAULT).unwrap();
        let sat = SummedAreaTable::new(&blk);
        for (r0, c0, r1, c1) in [(0, 0, 12, 9), (2, 3, 7, 8), (5, 5, 5, 5), (0, 9, 12, 9)] {
            let mut naive = 0.0;
            for r in r0..=r1 {
                for c in c0..=c1 {
                    naive += blk.get(r, c);
                }
            }
            assert_eq!(sat.rect_sum(r0, c0, r1, c1), naive);
        }
    }

    #[test]
    fn blocks_are_deterministic_and_consistent_on_overlap() {
        let d = DistributionSpec::Gaussian { sigma: 1.0 };
        let r1 = WindowRect::new(10, 10, 4, 4).unwrap();
        let r2 = WindowRect::new(12, 12, 4, 4).unwrap();
        let a = sample_block(&d, 77, &r1, &Budget::DEFAULT).unwrap();
        assert_eq!(a, sample_block(&d, 77, &r1, &Budget::DEFAULT).unwrap());
        let b = sample_block(&d, 77, &r2, &Budget::DEFAULT).unwrap();
        assert_eq!(a.get(2, 2), b.get(0, 0));
        assert_ne!(a.get(0, 0), b.get(0, 0));
        let c = sample_block(&DistributionSpec::Rademacher, 1, &r1, &Budget::DEFAULT).unwrap();
        assert!(c.data.iter().all(|x| x.abs() == 1.0));
    }

    #[test]
    fn budget_refusal_names_the_budget() {
        let rect = WindowRect::new(3, 3, 999, 999).unwrap();
        let err = sample_block(&DistributionSpec::Rademacher, 1, &rect, &Budget { bytes: 8_000 }).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("8000 bytes"), "{msg}");
        assert!(Budget::DEFAULT.check(DIRECT_CELL_CAP + 1).is_err());
    }

    #[test]
    fn truncation_bands() {
        let s = truncate_split(5.0, 2.0, 10.0).unwrap();
        assert_eq!((s.xp, s.xpp, s.xppp), (0.0, 5.0, 0.0));
        let s = truncate_split(1.5, 2.0, 10.0).unwrap();
        assert_eq!((s.xp, s.xpp, s.xppp), (1.5, 0.0, 0.0));
        let s = truncate_split(10.0, 2.0, 10.0).unwrap();
        assert_eq!((s.xp, s.xpp, s.xppp), (0.0, 0.0, 10.0));
        let s = truncate_split(-2.0, 2.0, 10.0).unwrap();
        assert_eq!(s.xp, -2.0);
        assert!(truncate_split(1.0, 3.0, 3.0).is_err());
        assert!(truncate_split(1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn degenerate_field_is_zero() {
        let law = WindowLaw::case_i(1.0);
        let w = windowed_statistic(
            &law,
            200,
            200,
            &DistributionSpec::Gaussian { sigma: 0.0 },
            3,
            1.0,
            0.1,
            &Budget::DEFAULT,
        )
        .unwrap();
        assert_eq!((w.t, w.tp, w.tpp, w.tppp, w.normalized), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn rademacher_in_the_middle_band() {
        let law = WindowLaw::case_i(1.0);
        let mut spec = window_spec(&law, 100, 100, 1.0, 0.1).unwrap();
        spec.b = 0.5;
        spec.top = 2.0;
        let w = evaluate_window(
            &spec,
            &DistributionSpec::Rademacher.sampler().unwrap(),
            9,
            &Budget::DEFAULT,
        )
        .unwrap();
        assert_eq!(w.tp, 0.0);
        assert_eq!(w.tppp, 0.0);
        assert_eq!(w.tpp, w.t);
    }

    #[test]
    fn wide_truncation_keeps_gaussian_in_the_inner_band() {
        // Cells ≤ 1e4 and b ≥ 6σ: P(any |X| > b) ≤ 1e4 · 2Φ̄(6) ≈ 2e-5 per window.
        let law = WindowLaw::case_i(1.0);
        let mut spec = window_spec(&law, 300, 300, 1.0, 0.5).unwrap();
        assert!(spec.rect.cells() <= 10_000);
        spec.b = spec.b.max(6.0);
        spec.top = spec.top.max(spec.b * 2.0);
        let s = DistributionSpec::Gaussian { sigma: 1.0 }.sampler().unwrap();
        for seed in 0..100 {
            let w = evaluate_window(&spec, &s, seed, &Budget::DEFAULT).unwrap();
            assert_eq!(w.tpp, 0.0);
            assert_eq!(w.tppp, 0.0);
        }
    }

    #[test]
    fn additivity_is_exact_for_integer_members() {
        let law = WindowLaw::case_ii(1.0);
        let mut spec = window_spec(&law, 50, 60, 1.0, 0.3).unwrap();
        spec.b = 0.5;
        let s = DistributionSpec::Rademacher.sampler().unwrap();
        for seed in 0..20 {
            let w = evaluate_window(&spec, &s, seed, &Budget::DEFAULT).unwrap();
            assert_eq!(w.t, w.tp + w.tpp + w.tppp);
        }
        let p = DistributionSpec::LogPerturbedPareto(LogPerturbedPareto::new(2.0, 0.0, 0.0).unwrap());
        let spec = window_spec(&WindowLaw::case_i(1.0), 400, 400, 1.0, 0.1).unwrap();
        let w = evaluate_window(&spec, &p.sampler().unwrap(), 4, &Budget::DEFAULT).unwrap();
        let sum = w.tp + w.tpp + w.tppp;
        assert!((w.t - sum).abs() <= 1e-9 * w.t.abs().max(1.0));
    }

    #[test]
    fn surrogate_variance_and_scaling() {
        let law = WindowLaw::case_i(1.0);
        let rate = rate_bundle(&law, 1000, 2000).unwrap().rate;
        let n = 100_000;
        let mut sq = 0.0;
        for k in 0..n {
            let mut rng = CounterRng::for_index(5, k);
            let s = surrogate_statistic(&law, 1000, 2000, &mut rng).unwrap();
            sq += s * s;
        }
        let v = sq / n as f64;
        assert!((v * 2.0 * rate - 1.0).abs() < 0.03, "{v}");
        let zero = WindowLaw { sigma: 0.0, ..law };
        assert_eq!(
            surrogate_statistic(&zero, 10, 10, &mut CounterRng::from_key(1)).unwrap(),
            0.0
        );
        // Same normal draw, larger rate: smaller magnitude.
        let a = surrogate_statistic_ln(&law, 5.0, 5.0, &mut CounterRng::from_key(2)).unwrap();
        let b = surrogate_statistic_ln(&law, 500.0, 500.0, &mut CounterRng::from_key(2)).unwrap();
        assert!(b.abs() < a.abs());
    }

    #[test]
    fn running_max_examples() {
        let t = track_running_max(
            TraceMode::Direct,
            [(1, 1, 0.0, 0.0, 1.0), (1, 2, 0.0, 0.0, 3.0), (2, 1, 0.0, 0.0, 2.0)],
        );
        let maxima: Vec<f64> = t.entries.iter().map(|e| e.running_max).collect();
        assert_eq!(maxima, [1.0, 3.0, 3.0]);
        assert_eq!(t.final_max(), Some((3.0, 1, 2)));
        let c = track_running_max(TraceMode::Surrogate, (0..5).map(|k| (k, k, 0.0, 0.0, 0.7)));
        assert!(c.entries.iter().all(|e| e.running_max == 0.7));
        let one = track_running_max(TraceMode::Direct, [(4, 5, 0.0, 0.0, -2.0)]);
        assert_eq!(one.final_max(), Some((-2.0, 4, 5)));
    }

    #[test]
    fn grid_orders_cover_the_square_once() {
        for order in [GridOrder::RowMajor, GridOrder::Diagonal, GridOrder::Shell] {
            let mut v = order.enumerate(3, 9);
            assert_eq!(v.len(), 49);
            v.sort();
            v.dedup();
            assert_eq!(v.len(), 49);
        }
        let d = GridOrder::Diagonal.enumerate(1, 3);
        assert_eq!(&d[..4], &[(1, 1), (1, 2), (2, 1), (1, 3)]);
    }

    #[test]
    fn mean_drift_bound_decreases_along_the_diagonal() {
        let law = WindowLaw::case_i(1.0);
        let dists = [
            DistributionSpec::Gaussian { sigma: 1.0 },
            DistributionSpec::Uniform { sigma: 1.0 },
            DistributionSpec::StudentT { nu: 5.0 },
            DistributionSpec::LogPerturbedPareto(LogPerturbedPareto::new(2.0, 4.5, 0.0).unwrap()),
        ];
        for d in dists {
            let mut prev = f64::INFINITY;
            for m in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
                let spec = window_spec(&law, m, m, 1.0, 0.1).unwrap();
                let v = mean_drift_bound(&spec, &d).unwrap();
                assert!(v <= prev, "{d:?} at {m}: {v} vs {prev}");
                prev = v;
            }
        }
    }
}
