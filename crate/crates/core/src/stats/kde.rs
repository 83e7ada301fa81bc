//! Gaussian-kernel density estimate with a tabulated two-sided p-value.
//!
//! The density `f`, its slope `f'` and the cumulative distribution `F` are
//! evaluated exactly (windowed kernel sums) on an evenly spaced grid. Between
//! grid points `f` and `F` are cubic Hermite interpolants. A query splits the
//! interpolated density into monotone runs and adds up the mass of the part of
//! each run lying at or below the query's density level.

use serde::{Deserialize, Serialize};

use super::moments;
use crate::error::StatsError;
use crate::scalar::Scalar;

pub const DEFAULT_KDE_CAP: usize = 10_000;
pub const DEFAULT_GRID_SIZE: usize = 2_048;

/// Kernel contributions beyond this many bandwidths are dropped (< 1e-13 relative).
const KERNEL_CUTOFF: f64 = 8.0;
/// Grid padding beyond the sample extremes, in bandwidths.
const GRID_PAD: f64 = 4.0;
/// Minimum grid resolution, in points per bandwidth.
const STEPS_PER_BANDWIDTH: f64 = 8.0;
const MAX_GRID: usize = 1 << 16;
const MAX_DESERIALIZED_GRID: usize = 1 << 24;
/// Upper bound on `max density × grid step`.
const PEAK_CELL_MASS: f64 = 9e-4;
const MIN_BANDWIDTH: f64 = 1e-6;
const SILVERMAN: f64 = 1.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KdeConfig {
    /// Maximum number of support points kept from the training gaps.
    pub cap: usize,
    /// Minimum number of grid points; raised when the bandwidth is small
    /// relative to the grid span.
    pub grid_size: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig { cap: DEFAULT_KDE_CAP, grid_size: DEFAULT_GRID_SIZE }
    }
}

/// Monotone piece of the interpolated density inside one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment<T> {
    cell: usize,
    s0: T,
    s1: T,
    v0: T,
    v1: T,
}

/// Maximal sequence of segments along which the density moves one way.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Run<T> {
    first: usize,
    last: usize,
    rising: bool,
    lo: T,
    hi: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel<T> {
    support: Vec<T>,
    bandwidth: T,
    start: T,
    step: T,
    density: Vec<T>,
    slope: Vec<T>,
    cdf: Vec<T>,
    segments: Vec<Segment<T>>,
    runs: Vec<Run<T>>,
}

/// Persisted form: the tables are a deterministic function of these fields
/// and are rebuilt on load, which keeps wide-domain profiles small.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct KdeRepr<T> {
    support: Vec<T>,
    bandwidth: T,
    start: T,
    step: T,
    grid_len: usize,
}

impl<T: Scalar> Serialize for KdeModel<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        KdeRepr {
            support: self.support.clone(),
            bandwidth: self.bandwidth,
            start: self.start,
            step: self.step,
            grid_len: self.density.len(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for KdeModel<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = KdeRepr::<T>::deserialize(d)?;
        if r.grid_len < 2 || r.grid_len > MAX_DESERIALIZED_GRID {
            return Err(serde::de::Error::custom("kde grid length out of range"));
        }
        if !(r.step > T::zero() && r.bandwidth > T::zero() && r.start.is_finite()) {
            return Err(serde::de::Error::custom("kde step and bandwidth must be positive"));
        }
        if r.support.len() < 2 || r.support.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(serde::de::Error::custom("kde support must be sorted with at least 2 points"));
        }
        Ok(KdeModel::build(r.support, r.bandwidth, r.start, r.step, r.grid_len))
    }
}

/// Quantile-preserving deterministic subsample of already sorted data.
fn subsample<T: Copy>(sorted: &[T], cap: usize) -> Vec<T> {
    let n = sorted.len();
    if n <= cap {
        return sorted.to_vec();
    }
    (0..cap)
        .map(|i| {
            let pos = (i as f64 * (n - 1) as f64 / (cap - 1) as f64).round() as usize;
            sorted[pos.min(n - 1)]
        })
        .collect()
}

/// Fits the KDE. Bandwidth is Silverman's `1.06·σ̂·m^(-1/5)`, floored at 1 µs.
pub fn fit_kde<T: Scalar>(gaps: &[T], config: KdeConfig) -> Result<KdeModel<T>, StatsError> {
    let cap = config.cap.max(2);
    let mut sorted = gaps.to_vec();
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let support = subsample(&sorted, cap);
    let m = moments(&support)?;
    if m.sd <= T::zero() {
        return Err(StatsError::DegenerateSigma);
    }
    let count = support.len() as f64;
    let bandwidth = T::of((SILVERMAN * m.sd.f64() * count.powf(-0.2)).max(MIN_BANDWIDTH));

    let h = bandwidth.f64();
    let start = m.min.f64() - GRID_PAD * h;
    let end = m.max.f64() + GRID_PAD * h;
    let span = end - start;
    let grid_cap = MAX_GRID.max(config.grid_size);
    let needed = (span / (h / STEPS_PER_BANDWIDTH)).ceil() as usize + 1;
    let mut g = config.grid_size.max(needed).clamp(2, grid_cap);
    loop {
        let step = span / (g - 1) as f64;
        let model = KdeModel::build(support.clone(), bandwidth, T::of(start), T::of(step), g);
        // a cell at the peak must hold little mass, or the p-value of the
        // highest node falls visibly short of 1
        let peak = model.density.iter().fold(T::zero(), |a, &b| a.max(b)).f64();
        let finer = (span * peak / PEAK_CELL_MASS).ceil() as usize + 1;
        if peak * step <= PEAK_CELL_MASS || g >= grid_cap {
            return Ok(model);
        }
        g = finer.min(grid_cap);
    }
}

/// Two-sided p-value of `x`; 0 outside the grid.
pub fn kde_pvalue<T: Scalar>(model: &KdeModel<T>, x: T) -> T {
    model.pvalue(x)
}

impl<T: Scalar> KdeModel<T> {
    fn build(support: Vec<T>, bandwidth: T, start: T, step: T, g: usize) -> Self {
        let mut model = KdeModel {
            support,
            bandwidth,
            start,
            step,
            density: Vec::with_capacity(g),
            slope: Vec::with_capacity(g),
            cdf: Vec::with_capacity(g),
            segments: Vec::new(),
            runs: Vec::new(),
        };
        model.tabulate(g);
        model.build_runs();
        model
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn support_points(&self) -> &[T] {
        &self.support
    }

    pub fn grid_len(&self) -> usize {
        self.density.len()
    }

    pub fn grid_step(&self) -> T {
        self.step
    }

    pub fn grid_point(&self, i: usize) -> T {
        self.start + self.step * T::of(i as f64)
    }

    pub fn grid_end(&self) -> T {
        self.grid_point(self.density.len() - 1)
    }

    /// Density values at the grid points.
    pub fn grid_density(&self) -> &[T] {
        &self.density
    }

    /// p-value of each grid point (mass of all density at or below it).
    /// Computed on demand; queries do not need it.
    pub fn pv_table(&self) -> Vec<T> {
        self.density.iter().map(|&y| self.mass_at_or_below(y)).collect()
    }

    /// Interpolated density; exact kernel sum outside the grid.
    pub fn density(&self, x: T) -> T {
        match self.locate(x) {
            Some((cell, s)) => self.f_cubic(cell, s).max(T::zero()),
            None => self.kernel_sum(x),
        }
    }

    pub fn pvalue(&self, x: T) -> T {
        match self.locate(x) {
            None => T::zero(),
            Some((cell, s)) => {
                let y = self.f_cubic(cell, s);
                if !(y > T::zero()) {
                    return T::zero();
                }
                self.mass_at_or_below(y)
            }
        }
    }

    /// Exact kernel sum at `x` over all support points.
    fn kernel_sum(&self, x: T) -> T {
        let h = self.bandwidth;
        let norm = T::one() / (T::of(self.support.len() as f64) * h);
        self.support.iter().map(|&xi| ((x - xi) / h).std_normal_pdf()).sum::<T>() * norm
    }

    fn locate(&self, x: T) -> Option<(usize, T)> {
        let g = self.density.len();
        let pos = (x - self.start) / self.step;
        if !(pos >= T::zero()) || pos > T::of((g - 1) as f64) {
            return None;
        }
        let cell = pos.floor().to_usize().unwrap_or(0).min(g - 2);
        Some((cell, (pos - T::of(cell as f64)).min(T::one())))
    }

    fn tabulate(&mut self, g: usize) {
        let h = self.bandwidth;
        let m = T::of(self.support.len() as f64);
        let cut = h * T::of(KERNEL_CUTOFF);
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..g {
            let t = self.grid_point(i);
            while lo < self.support.len() && self.support[lo] < t - cut {
                lo += 1;
            }
            while hi < self.support.len() && self.support[hi] <= t + cut {
                hi += 1;
            }
            let (mut f, mut df) = (T::zero(), T::zero());
            for &xi in &self.support[lo..hi.max(lo)] {
                let u = (t - xi) / h;
                let phi = u.std_normal_pdf();
                f = f + phi;
                df = df - u * phi;
            }
            self.density.push(f / (m * h));
            self.slope.push(df / (m * h * h));
        }
        // exact mass left of the grid, then the integral of each cell's
        // Hermite cubic: step·(f0+f1)/2 + step²·(f0'−f1')/12
        let left = self.support.iter().map(|&xi| ((self.start - xi) / h).std_normal_cdf()).sum::<T>() / m;
        let step = self.step;
        let twelfth = step * step / T::of(12.0);
        let mut c = left.min(T::one());
        self.cdf.push(c);
        for i in 0..g - 1 {
            let cell = step * (self.density[i] + self.density[i + 1]) * T::of(0.5)
                + twelfth * (self.slope[i] - self.slope[i + 1]);
            c = (c + cell).min(T::one());
            self.cdf.push(c);
        }
    }

    /// Coefficients of the density cubic on `cell` in the local coordinate `s ∈ [0, 1]`.
    fn coeffs(&self, cell: usize) -> [T; 4] {
        let (f0, f1) = (self.density[cell], self.density[cell + 1]);
        let (m0, m1) = (self.slope[cell] * self.step, self.slope[cell + 1] * self.step);
        let two = T::of(2.0);
        let three = T::of(3.0);
        [two * f0 + m0 - two * f1 + m1, three * (f1 - f0) - two * m0 - m1, m0, f0]
    }

    fn f_cubic(&self, cell: usize, s: T) -> T {
        let [a, b, c, d] = self.coeffs(cell);
        ((a * s + b) * s + c) * s + d
    }

    /// Hermite-interpolated CDF, using the exact density as its slope.
    fn cdf_cubic(&self, cell: usize, s: T) -> T {
        let (c0, c1) = (self.cdf[cell], self.cdf[cell + 1]);
        let (d0, d1) = (self.density[cell] * self.step, self.density[cell + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::of(2.0);
        let three = T::of(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        c0 * h00 + d0 * h10 + c1 * h01 + d1 * h11
    }

    fn build_runs(&mut self) {
        let g = self.density.len();
        self.segments.clear();
        self.runs.clear();
        for cell in 0..g - 1 {
            let [a, b, c, _] = self.coeffs(cell);
            let mut cuts = critical_points(T::of(3.0) * a, T::of(2.0) * b, c);
            cuts.retain(|&s| s > T::zero() && s < T::one());
            cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            let mut s0 = T::zero();
            for s1 in cuts.into_iter().chain(std::iter::once(T::one())) {
                if s1 > s0 {
                    self.segments.push(Segment {
                        cell,
                        s0,
                        s1,
                        v0: self.f_cubic(cell, s0),
                        v1: self.f_cubic(cell, s1),
                    });
                }
                s0 = s1;
            }
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let rising = seg.v1 >= seg.v0;
            let lo = seg.v0.min(seg.v1);
            let hi = seg.v0.max(seg.v1);
            match self.runs.last_mut() {
                Some(run) if run.rising == rising => {
                    run.last = i;
                    run.lo = run.lo.min(lo);
                    run.hi = run.hi.max(hi);
                }
                _ => self.runs.push(Run { first: i, last: i, rising, lo, hi }),
            }
        }
    }

    fn cdf_at(&self, cell: usize, s: T) -> T {
        self.cdf_cubic(cell, s)
    }

    /// Mass of `{t : f(t) ≤ y}` including the tails beyond the grid.
    fn mass_at_or_below(&self, y: T) -> T {
        let g = self.density.len();
        let mut total = T::zero();
        if y >= self.density[0] {
            total = total + self.cdf[0];
        }
        if y >= self.density[g - 1] {
            total = total + (T::one() - self.cdf[g - 1]);
        }
        for run in &self.runs {
            let first = self.segments[run.first];
            let last = self.segments[run.last];
            let run_start = self.cdf_at(first.cell, first.s0);
            let run_end = self.cdf_at(last.cell, last.s1);
            if y >= run.hi {
                total = total + (run_end - run_start);
            } else if y >= run.lo {
                let (cell, s) = self.crossing(run, y);
                let at = self.cdf_at(cell, s);
                total = total + if run.rising { at - run_start } else { run_end - at };
            }
        }
        total.max(T::zero()).min(T::one())
    }

    /// Point inside a monotone run where the density equals `y`.
    fn crossing(&self, run: &Run<T>, y: T) -> (usize, T) {
        let segs = &self.segments[run.first..=run.last];
        // first segment whose far end has reached the level (rising) or dropped below it (falling)
        let idx = segs.partition_point(|seg| if run.rising { seg.v1 < y } else { seg.v1 > y });
        let seg = segs[idx.min(segs.len() - 1)];
        let (mut lo, mut hi) = (seg.s0, seg.s1);
        for _ in 0..60 {
            let mid = (lo + hi) * T::of(0.5);
            let v = self.f_cubic(seg.cell, mid);
            let below = if run.rising { v < y } else { v > y };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() {
                break;
            }
        }
        (seg.cell, (lo + hi) * T::of(0.5))
    }
}

/// Real roots of `a·s² + b·s + c`.
fn critical_points<T: Scalar>(a: T, b: T, c: T) -> Vec<T> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == T::zero() {
        return Vec::new();
    }
    if a.abs() <= T::epsilon() * scale {
        if b.abs() <= T::epsilon() * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - T::of(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = if b >= T::zero() { -(b + sq) } else { -(b - sq) } * T::of(0.5);
    let mut roots = vec![q / a];
    if q != T::zero() {
        roots.push(c / q);
    }
    roots
}
