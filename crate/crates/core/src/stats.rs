//! Expected pairwise overlaps of independently timed calls, a Monte Carlo
//! check of those expectations, and the paired t statistic used to compare
//! expected with observed counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::count_span_overlaps;
use crate::rng::Rng;

/// Calls in one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapModelInput {
    n: usize,
    density: f64,
    window: f64,
    sources: usize,
    durations: Option<Vec<f64>>,
}

impl OverlapModelInput {
    /// From the density `d = sum(l_i) / L` directly.
    pub fn from_density(n: usize, density: f64, window: f64, sources: usize) -> Result<Self> {
        Self::check(n, window, sources)?;
        if !(density.is_finite() && density >= 0.0) {
            return Err(Error::Domain(format!("density {density} must be non-negative")));
        }
        Ok(Self {
            n,
            density,
            window,
            sources,
            durations: None,
        })
    }

    pub fn from_durations(durations: Vec<f64>, window: f64, sources: usize) -> Result<Self> {
        Self::check(durations.len(), window, sources)?;
        if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Domain(format!("duration {d} must be positive")));
        }
        Ok(Self {
            n: durations.len(),
            density: durations.iter().sum::<f64>() / window,
            window,
            sources,
            durations: Some(durations),
        })
    }

    fn check(n: usize, window: f64, sources: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("need at least one call".into()));
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::Domain(format!("window {window} must be positive")));
        }
        if sources < 2 {
            return Err(Error::Domain(format!("{sources} sources: overlaps need at least two")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    /// Per-call durations; equal shares of `d * L` when only `d` was given.
    pub fn durations(&self) -> Vec<f64> {
        self.durations
            .clone()
            .unwrap_or_else(|| vec![self.density * self.window / self.n as f64; self.n])
    }
}

/// Probability that two calls of lengths `l1`, `l2` with independent uniform
/// onsets overlap: `(l1 + l2) / L`.
pub fn pairwise_overlap_probability(l1: f64, l2: f64, window: f64) -> Result<f64> {
    let sum = l1 + l2;
    if !(l1 >= 0.0 && l2 >= 0.0 && sum > 0.0 && window > 0.0) {
        return Err(Error::Domain("durations and window must be positive".into()));
    }
    if sum > window {
        return Err(Error::Domain(format!(
            "l1 + l2 = {sum} exceeds window {window}; probability would exceed 1"
        )));
    }
    Ok(sum / window)
}

/// `d (n - 1)`: expected overlaps ignoring who produced each call.
pub fn expected_overlaps_uniform(input: &OverlapModelInput) -> f64 {
    input.density * (input.n - 1) as f64
}

/// `max(0, 1 - 1/B - 1/n)`, the chance two calls come from different
/// sources when each source's count is Poisson with mean `n / B`.
pub fn prob_different_sources(n: usize, sources: usize) -> Result<f64> {
    if sources < 2 {
        return Err(Error::Domain(format!("{sources} sources: overlaps need at least two")));
    }
    if n == 0 {
        return Err(Error::Domain("need at least one call".into()));
    }
    Ok((1.0 - 1.0 / sources as f64 - 1.0 / n as f64).max(0.0))
}

/// `d (n - 1) (1 - 1/B - 1/n)`, clamped at zero.
pub fn expected_overlaps(input: &OverlapModelInput) -> Result<f64> {
    Ok(expected_overlaps_uniform(input) * prob_different_sources(input.n, input.sources)?)
}

/// How onsets are drawn in a simulated window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnsetModel {
    /// Uniform on a circle of length `L`: every pair overlaps with
    /// probability exactly `(l_i + l_j) / L`.
    #[default]
    Circular,
    /// Uniform in `[0, L - l_i]`, calls fully inside the window.
    Bounded,
}

/// How source identity enters a simulated window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceModel {
    /// Each window draws Poisson per-source counts `Z_j` with mean `n / B`
    /// and weights its overlap count by `1 - sum(Z_j^2) / n^2`.
    #[default]
    PoissonWeight,
    /// Each call gets a uniform source; same-source pairs are not counted.
    Multinomial,
    /// Count every overlapping pair.
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McOptions {
    pub onsets: OnsetModel,
    pub sources: SourceModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

const TRIALS_PER_CHUNK: usize = 1000;

/// Running mean and squared deviations; merges are order-sensitive only
/// through floating point, and chunks are always merged in the same order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0.0 {
            return b;
        }
        if b.count == 0.0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        Moments {
            count,
            mean: a.mean + delta * b.count / count,
            m2: a.m2 + b.m2 + delta * delta * a.count * b.count / count,
        }
    }
}

fn merge_pairwise(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => Moments::merge(merge_pairwise(&parts[..n / 2]), merge_pairwise(&parts[n / 2..])),
    }
}

/// Overlapping pairs among calls placed on a circle of length `window`.
/// Requires every pair of durations to sum to at most `window`.
fn circular_overlaps(mut spans: Vec<(f64, f64)>, window: f64) -> usize {
    let n = spans.len();
    if n < 2 {
        return 0;
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ext: Vec<f64> = spans
        .iter()
        .map(|s| s.0)
        .chain(spans.iter().map(|s| s.0 + window))
        .collect();
    spans
        .iter()
        .enumerate()
        .map(|(i, &(on, len))| {
            let end = ext.partition_point(|&x| x < on + len);
            end.saturating_sub(i + 1).min(n - 1)
        })
        .sum()
}

fn count_window(spans: Vec<(f64, f64)>, window: f64, onsets: OnsetModel) -> usize {
    match onsets {
        OnsetModel::Circular => circular_overlaps(spans, window),
        OnsetModel::Bounded => count_span_overlaps(spans.into_iter().map(|(o, l)| (o, o + l)).collect()),
    }
}

fn one_trial(input: &OverlapModelInput, durations: &[f64], opts: McOptions, exp_neg_rate: f64, rng: &mut Rng) -> f64 {
    let window = input.window;
    let spans: Vec<(f64, f64)> = durations
        .iter()
        .map(|&l| {
            let onset = match opts.onsets {
                OnsetModel::Circular => rng.uniform() * window,
                OnsetModel::Bounded => rng.uniform_range(0.0, window - l),
            };
            (onset, l)
        })
        .collect();
    match opts.sources {
        SourceModel::Ignore => count_window(spans, window, opts.onsets) as f64,
        SourceModel::PoissonWeight => {
            let all = count_window(spans, window, opts.onsets) as f64;
            let sq: f64 = (0..input.sources)
                .map(|_| {
                    let z = rng.poisson_with(exp_neg_rate) as f64;
                    z * z
                })
                .sum();
            let n = input.n as f64;
            all * (1.0 - sq / (n * n))
        }
        SourceModel::Multinomial => {
            let mut groups = vec![Vec::new(); input.sources];
            for &s in &spans {
                groups[rng.below(input.sources as u64) as usize].push(s);
            }
            let all = count_window(spans, window, opts.onsets);
            let same: usize = groups.into_iter().map(|g| count_window(g, window, opts.onsets)).sum();
            (all - same) as f64
        }
    }
}

/// Mean and standard error of the simulated overlap count over `trials`
/// windows. Trials run in fixed chunks on forked substreams, so the result
/// does not depend on the number of worker threads.
pub fn monte_carlo_overlaps(input: &OverlapModelInput, trials: usize, rng: &Rng, opts: McOptions) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let durations = input.durations();
    let mut sorted = durations.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let longest_pair = sorted[0] + sorted.get(1).copied().unwrap_or(0.0);
    if sorted[0] > input.window || longest_pair > input.window {
        return Err(Error::Domain(format!(
            "durations up to {:.6} s do not fit twice in the {:.6} s window",
            sorted[0], input.window
        )));
    }
    let exp_neg_rate = (-(input.n as f64 / input.sources as f64)).exp();
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sub = rng.fork(c as u64);
            let todo = TRIALS_PER_CHUNK.min(trials - c * TRIALS_PER_CHUNK);
            let mut m = Moments::default();
            for _ in 0..todo {
                m.push(one_trial(input, &durations, opts, exp_neg_rate, &mut sub));
            }
            m
        })
        .collect();
    let total = merge_pairwise(&parts);
    let stderr = if total.count > 1.0 {
        (total.m2 / (total.count - 1.0) / total.count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean: total.mean,
        stderr,
        trials,
    })
}

/// Which standard deviation accompanies the paired t statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TDenominator {
    /// Population SD (divide by `N`) and standard error `sd / sqrt(N - 1)`.
    #[default]
    Paper,
    /// Sample SD (divide by `N - 1`) and standard error `sd / sqrt(N)`.
    Standard,
}

impl std::str::FromStr for TDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "standard" => Ok(Self::Standard),
            other => Err(Error::Config(format!("unknown t denominator {other:?}"))),
        }
    }
}

impl TDenominator {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Standard => "standard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedT {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: f64,
    /// Zero spread: `t` is 0 for a zero mean and infinite otherwise.
    pub degenerate: bool,
}

/// Paired comparison of `expected - observed`.
pub fn paired_t_statistic(expected: &[f64], observed: &[f64], convention: TDenominator) -> Result<PairedT> {
    if expected.len() != observed.len() {
        return Err(Error::Shape(format!(
            "{} expected values but {} observed",
            expected.len(),
            observed.len()
        )));
    }
    let n = expected.len();
    if n < 2 {
        return Err(Error::Domain("need at least two pairs".into()));
    }
    let diffs: Vec<f64> = expected.iter().zip(observed).map(|(e, o)| e - o).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let (sd, se) = match convention {
        TDenominator::Paper => {
            let sd = (ss / nf).sqrt();
            (sd, sd / (nf - 1.0).sqrt())
        }
        TDenominator::Standard => {
            let sd = (ss / (nf - 1.0)).sqrt();
            (sd, sd / nf.sqrt())
        }
    };
    let degenerate = se == 0.0;
    let t = if !degenerate {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(mean)
    };
    Ok(PairedT {
        mean_diff: mean,
        sd_diff: sd,
        t,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn pairwise_probability() {
        assert!((pairwise_overlap_probability(0.05, 0.05, 60.0).unwrap() - 1.0 / 600.0).abs() < 1e-15);
        assert_eq!(pairwise_overlap_probability(30.0, 30.0, 60.0).unwrap(), 1.0);
        assert_eq!(
            pairwise_overlap_probability(0.1, 0.3, 60.0).unwrap(),
            pairwise_overlap_probability(0.3, 0.1, 60.0).unwrap()
        );
        assert!(pairwise_overlap_probability(31.0, 30.0, 60.0).is_err());
    }

    #[test]
    fn closed_forms() {
        let one = OverlapModelInput::from_density(1, 0.3, 60.0, 8).unwrap();
        assert_eq!(expected_overlaps_uniform(&one), 0.0);
        assert_eq!(expected_overlaps(&one).unwrap(), 0.0);

        let x = OverlapModelInput::from_density(120, 0.1, 60.0, 8).unwrap();
        assert!((expected_overlaps_uniform(&x) - 11.9).abs() < 1e-12);
        assert!((expected_overlaps(&x).unwrap() - 10.313_333_333).abs() < 1e-8);

        let tiny = OverlapModelInput::from_durations(vec![1e-12; 10], 60.0, 4).unwrap();
        assert!(expected_overlaps_uniform(&tiny) < 1e-10);

        let row0 = OverlapModelInput::from_density(106, 0.19, 60.0, 8).unwrap();
        assert!((expected_overlaps(&row0).unwrap() - 16.94).abs() <= 105.0 * 0.005);
    }

    #[test]
    fn different_source_probability() {
        assert!((prob_different_sources(120, 8).unwrap() - 0.866_667).abs() < 1e-6);
        assert_eq!(prob_different_sources(2, 2).unwrap(), 0.0);
        assert_eq!(prob_different_sources(1, 2).unwrap(), 0.0);
        assert!((prob_different_sources(1_000_000, 8).unwrap() - 0.875).abs() < 1e-5);
        assert!(prob_different_sources(10, 1).is_err());
    }

    #[test]
    fn circular_count_matches_pairs() {
        // Brute force with wrap-around distance.
        let mut rng = Rng::new(4, 0);
        for _ in 0..200 {
            let n = 1 + rng.below(30) as usize;
            let window = 10.0;
            let spans: Vec<(f64, f64)> = (0..n).map(|_| (rng.uniform() * window, 0.1 + rng.uniform() * 2.0)).collect();
            let mut brute = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (spans[i], spans[j]);
                    let ab = (b.0 - a.0).rem_euclid(window);
                    let ba = (a.0 - b.0).rem_euclid(window);
                    if ab < a.1 || ba < b.1 {
                        brute += 1;
                    }
                }
            }
            assert_eq!(circular_overlaps(spans, window), brute);
        }
    }

    #[test]
    fn mc_degenerate_and_deterministic() {
        let one = OverlapModelInput::from_density(1, 0.1, 60.0, 8).unwrap();
        let e = monte_carlo_overlaps(&one, 100, &Rng::new(0, 0), McOptions::default()).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));

        let x = OverlapModelInput::from_density(40, 0.2, 60.0, 4).unwrap();
        let a = monte_carlo_overlaps(&x, 5_000, &Rng::new(1, 2), McOptions::default()).unwrap();
        let b = monte_carlo_overlaps(&x, 5_000, &Rng::new(1, 2), McOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_overlaps(&x, 0, &Rng::new(1, 2), McOptions::default()).is_err());
        let wide = OverlapModelInput::from_durations(vec![40.0, 30.0], 60.0, 2).unwrap();
        assert!(monte_carlo_overlaps(&wide, 10, &Rng::new(0, 0), McOptions::default()).is_err());
    }

    #[test]
    fn mc_uniform_agrees_with_closed_form() {
        let x = OverlapModelInput::from_density(120, 0.1, 60.0, 8).unwrap();
        let opts = McOptions {
            sources: SourceModel::Ignore,
            ..Default::default()
        };
        let e = monte_carlo_overlaps(&x, 20_000, &Rng::new(11, 0), opts).unwrap();
        assert!((e.mean - 11.9).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn t_statistic_examples() {
        let v = [1.0, 2.0, 3.0];
        let same = paired_t_statistic(&v, &v, TDenominator::Paper).unwrap();
        assert_eq!(same.t, 0.0);
        let flat = paired_t_statistic(&[2.0; 4], &[1.0; 4], TDenominator::Paper).unwrap();
        assert!(flat.degenerate && flat.t.is_infinite());
        assert!(paired_t_statistic(&[1.0], &[1.0], TDenominator::Paper).is_err());
        assert!(paired_t_statistic(&[1.0, 2.0], &[1.0], TDenominator::Paper).is_err());

        let e = [3.0, 5.0, 4.0, 9.0];
        let o = [1.0, 2.0, 2.0, 3.0];
        let p = paired_t_statistic(&e, &o, TDenominator::Paper).unwrap();
        let s = paired_t_statistic(&e, &o, TDenominator::Standard).unwrap();
        // diffs 2,3,2,6: mean 3.25, ss 10.75
        assert!((p.mean_diff - 3.25).abs() < 1e-15);
        assert!((p.sd_diff - (10.75f64 / 4.0).sqrt()).abs() < 1e-15);
        assert!((s.sd_diff - (10.75f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((p.t - s.t).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn expected_never_exceeds_uniform(n in 1usize..500, d in 0.0f64..1.0, b in 2usize..20) {
            let x = OverlapModelInput::from_density(n, d, 60.0, b).unwrap();
            prop_assert!(expected_overlaps(&x).unwrap() <= expected_overlaps_uniform(&x));
        }

        #[test]
        fn t_invariant_to_common_shift(
            pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
            shift in -100.0f64..100.0,
        ) {
            let e: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let o: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let es: Vec<f64> = e.iter().map(|x| x + shift).collect();
            let os: Vec<f64> = o.iter().map(|x| x + shift).collect();
            let a = paired_t_statistic(&e, &o, TDenominator::Paper).unwrap();
            let b = paired_t_statistic(&es, &os, TDenominator::Paper).unwrap();
            prop_assert!((a.mean_diff - b.mean_diff).abs() < 1e-9);
            prop_assert!((a.sd_diff - b.sd_diff).abs() < 1e-9);
            prop_assert!((a.t - b.t).abs() <= 1e-6 * a.t.abs().max(1.0));
        }
    }
}
