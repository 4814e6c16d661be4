//! Hypothesis tests and questionnaire scoring used by the study reports.

mod anova;
pub mod dist;

pub use anova::{rm_anova_one, rm_anova_two, AnovaEffect};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1`).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pearson correlation; NaN when either side has no spread.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Per-subject pairs `(a_i, b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                got: b.len(),
            });
        }
        if a.len() < 2 {
            return Err(Error::InsufficientData("paired sample needs at least 2 subjects".into()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite value in paired sample".into()));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `b_i - a_i`.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b - a).collect()
    }
}

/// Alternative hypothesis about `b - a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `b` tends to exceed `a`.
    Greater,
    Less,
    Two,
}

/// Largest `n` (after dropping zero differences) handled by exact enumeration.
pub const WILCOXON_EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Nonzero differences ranked.
    pub n: usize,
    pub p: f64,
    pub exact: bool,
}

/// Ranks of `|d|` (1-based midranks), times two so they stay integral.
fn doubled_ranks(d: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut r = vec![0; d.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        for &k in &order[i..=j] {
            r[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    r
}

/// Null distribution of doubled `W+` over all `2^n` sign patterns, as
/// probabilities indexed by doubled rank sum.
pub fn signed_rank_null(doubled: &[u64]) -> Vec<f64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let scale = 0.5f64.powi(doubled.len() as i32);
    counts.iter().map(|c| c * scale).collect()
}

fn wilcoxon_prepare(sample: &PairedSample) -> Result<(Vec<u64>, Vec<bool>)> {
    let d: Vec<f64> = sample.differences().into_iter().filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(Error::InsufficientData("all paired differences are zero".into()));
    }
    Ok((doubled_ranks(&d), d.iter().map(|v| *v > 0.0).collect()))
}

/// Exact one-sided tails `(P(W >= w), P(W <= w))`.
fn exact_tails(doubled: &[u64], positive: &[bool]) -> (f64, f64) {
    let w2: u64 = doubled.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let null = signed_rank_null(doubled);
    let upper = null[w2 as usize..].iter().sum::<f64>();
    let lower = null[..=w2 as usize].iter().sum::<f64>();
    (upper.min(1.0), lower.min(1.0))
}

fn normal_tails(doubled: &[u64], positive: &[bool]) -> (f64, f64) {
    let n = doubled.len() as f64;
    let w: f64 = doubled.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| *r as f64 / 2.0).sum();
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut ties = 0.0;
    for g in sorted.chunk_by(|a, b| a == b) {
        let t = g.len() as f64;
        ties += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let sd = var.sqrt();
    let upper = 1.0 - dist::normal_cdf((w - mean - 0.5) / sd);
    let lower = dist::normal_cdf((w - mean + 0.5) / sd);
    (upper, lower)
}

fn combine(tail: Tail, (upper, lower): (f64, f64)) -> f64 {
    match tail {
        Tail::Greater => upper,
        Tail::Less => lower,
        Tail::Two => (2.0 * upper.min(lower)).min(1.0),
    }
}

/// Wilcoxon signed-rank test on `b - a`, zero differences dropped.
/// Exact for up to [`WILCOXON_EXACT_MAX_N`] nonzero pairs, normal
/// approximation with continuity and tie correction above.
pub fn wilcoxon_signed_rank(sample: &PairedSample, tail: Tail) -> Result<WilcoxonResult> {
    let (doubled, positive) = wilcoxon_prepare(sample)?;
    let n = doubled.len();
    let exact = n <= WILCOXON_EXACT_MAX_N;
    let tails = if exact {
        exact_tails(&doubled, &positive)
    } else {
        normal_tails(&doubled, &positive)
    };
    let w_plus = doubled.iter().zip(&positive).filter(|(_, &p)| p).map(|(r, _)| *r as f64 / 2.0).sum();
    Ok(WilcoxonResult {
        w_plus,
        n,
        p: combine(tail, tails),
        exact,
    })
}

/// Signed-rank p-value by enumeration regardless of `n`.
pub fn wilcoxon_exact_p(sample: &PairedSample, tail: Tail) -> Result<f64> {
    let (doubled, positive) = wilcoxon_prepare(sample)?;
    Ok(combine(tail, exact_tails(&doubled, &positive)))
}

/// Signed-rank p-value by the normal approximation regardless of `n`.
pub fn wilcoxon_normal_p(sample: &PairedSample, tail: Tail) -> Result<f64> {
    let (doubled, positive) = wilcoxon_prepare(sample)?;
    Ok(combine(tail, normal_tails(&doubled, &positive)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Paired t-test on `a - b`.
pub fn paired_t(sample: &PairedSample) -> Result<TTest> {
    let d: Vec<f64> = sample.a.iter().zip(&sample.b).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let df = n - 1.0;
    if d.iter().all(|v| *v == 0.0) {
        return Ok(TTest { t: 0.0, df, p: 1.0 });
    }
    let sd = sample_sd(&d);
    let m = mean(&d);
    if sd <= 1e-14 * m.abs() {
        return Err(Error::Numerical("paired differences have zero variance".into()));
    }
    let t = m / (sd / n.sqrt());
    Ok(TTest {
        t,
        df,
        p: (2.0 * dist::t_sf(t.abs(), df)).min(1.0),
    })
}

/// Critical Grubbs statistic for a two-sided test at level `alpha`.
pub fn grubbs_critical(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let t = dist::t_upper_quantile(alpha / (2.0 * nf), nf - 2.0);
    (nf - 1.0) / nf.sqrt() * (t * t / (nf - 2.0 + t * t)).sqrt()
}

/// One two-sided Grubbs step: the index of the most extreme value if it
/// is an outlier at level `alpha`.
pub fn grubbs_step(xs: &[f64], alpha: f64) -> Result<Option<usize>> {
    if xs.len() < 3 {
        return Err(Error::InsufficientData("grubbs test needs at least 3 values".into()));
    }
    if let Some(i) = xs.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value at {i}")));
    }
    let m = mean(xs);
    let sd = sample_sd(xs);
    if sd <= 1e-12 * m.abs().max(f64::MIN_POSITIVE) || sd == 0.0 {
        return Ok(None);
    }
    let (idx, dev) = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (i, (x - m).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok((dev / sd > grubbs_critical(xs.len(), alpha)).then_some(idx))
}

/// Repeated Grubbs steps until none fires or fewer than 3 values remain.
/// Returns the surviving indices into `xs`, in order.
pub fn grubbs_filter(xs: &[f64], alpha: f64) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = (0..xs.len()).collect();
    while keep.len() >= 3 {
        let vals: Vec<f64> = keep.iter().map(|&i| xs[i]).collect();
        match grubbs_step(&vals, alpha)? {
            Some(j) => {
                keep.remove(j);
            }
            None => break,
        }
    }
    Ok(keep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdrResult {
    pub rejected: Vec<bool>,
    pub adjusted: Vec<f64>,
}

/// Benjamini-Hochberg step-up at level `q`.
pub fn fdr_bh(p: &[f64], q: f64) -> FdrResult {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let cutoff = (0..m).rev().find(|&k| p[order[k]] <= (k + 1) as f64 * q / m as f64);
    let mut rejected = vec![false; m];
    if let Some(k) = cutoff {
        for &i in &order[..=k] {
            rejected[i] = true;
        }
    }
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for k in (0..m).rev() {
        running = running.min(p[order[k]] * m as f64 / (k + 1) as f64);
        adjusted[order[k]] = running.min(1.0);
    }
    FdrResult { rejected, adjusted }
}

/// Six NASA-TLX items on a 1..=9 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TlxResponse {
    pub mental: u8,
    pub physical: u8,
    pub temporal: u8,
    pub performance: u8,
    pub effort: u8,
    pub frustration: u8,
}

impl TlxResponse {
    /// Items in order mental, physical, temporal, performance, effort, frustration.
    pub fn new(items: [u8; 6]) -> Result<Self> {
        if let Some(v) = items.iter().find(|v| !(1..=9).contains(*v)) {
            return Err(Error::invalid("tlx", format!("item {v} outside 1..=9")));
        }
        let [mental, physical, temporal, performance, effort, frustration] = items;
        Ok(Self {
            mental,
            physical,
            temporal,
            performance,
            effort,
            frustration,
        })
    }
}

/// Mean of the six items mapped to `[0, 1]`, performance reversed.
pub fn nasa_tlx_score(r: &TlxResponse) -> f64 {
    let up = |v: u8| (v as f64 - 1.0) / 8.0;
    let sum = up(r.mental) + up(r.physical) + up(r.temporal) + up(r.effort) + up(r.frustration)
        + (9.0 - r.performance as f64) / 8.0;
    sum / 6.0
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn paired(a: &[f64], b: &[f64]) -> PairedSample {
        PairedSample::new(a.to_vec(), b.to_vec()).unwrap()
    }

    /// Brute-force sign enumeration with float ranks.
    fn enumerate_p_greater(d: &[f64]) -> f64 {
        let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
        let ranks: Vec<f64> = doubled_ranks(&d).iter().map(|r| *r as f64 / 2.0).collect();
        let w: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
        let n = d.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s >= w - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn grubbs_examples() {
        assert_eq!(grubbs_step(&[8.0, 9.0, 10.0, 11.0, 50.0], 0.05).unwrap(), Some(4));
        assert_eq!(grubbs_step(&[3.0; 6], 0.05).unwrap(), None);
        assert_eq!(grubbs_step(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.05).unwrap(), None);
        assert!(grubbs_step(&[1.0, 2.0], 0.05).is_err());
        // n = 10, alpha 0.05 tabulated critical value
        assert!((grubbs_critical(10, 0.05) - 2.2900).abs() < 1e-3);
    }

    #[test]
    fn grubbs_filter_removes_iteratively() {
        let xs = [10.0, 10.2, 9.9, 10.1, 9.8, 10.0, 10.3, 9.7, 30.0, -20.0];
        let keep = grubbs_filter(&xs, 0.05).unwrap();
        assert!(!keep.contains(&8) && !keep.contains(&9));
        assert_eq!(keep.len(), 8);
    }

    #[test]
    fn wilcoxon_examples() {
        let s = paired(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]);
        let r = wilcoxon_signed_rank(&s, Tail::Greater).unwrap();
        assert!(r.exact);
        assert!((r.p - 1.0 / 32.0).abs() < 1e-15);
        let s = paired(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]);
        assert_eq!(wilcoxon_signed_rank(&s, Tail::Two).unwrap().p, 1.0);
        assert!(wilcoxon_signed_rank(&paired(&[1.0, 2.0], &[1.0, 2.0]), Tail::Two).is_err());
    }

    #[test]
    fn wilcoxon_exact_and_normal_agree_at_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-0.6..1.0)).collect();
            let s = PairedSample::new(a, b).unwrap();
            for tail in [Tail::Greater, Tail::Two] {
                let e = wilcoxon_exact_p(&s, tail).unwrap();
                let n = wilcoxon_normal_p(&s, tail).unwrap();
                assert!((e - n).abs() <= 0.02, "{e} vs {n}");
            }
        }
    }

    #[test]
    fn wilcoxon_large_n_uses_approximation() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 1.0 + (v * 0.37).sin()).collect();
        let r = wilcoxon_signed_rank(&paired(&a, &b), Tail::Greater).unwrap();
        assert!(!r.exact);
        assert!(r.p < 1e-5);
    }

    proptest! {
        #[test]
        fn wilcoxon_exact_properties(d in proptest::collection::vec(-6i32..7, 2..11)) {
            prop_assume!(d.iter().any(|v| *v != 0));
            let a = vec![0.0; d.len()];
            let b: Vec<f64> = d.iter().map(|v| *v as f64).collect();
            let s = PairedSample::new(a, b).unwrap();
            let (doubled, positive) = wilcoxon_prepare(&s).unwrap();
            let null = signed_rank_null(&doubled);
            prop_assert!((null.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let w2: u64 = doubled.iter().zip(&positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
            let g = wilcoxon_exact_p(&s, Tail::Greater).unwrap();
            let l = wilcoxon_exact_p(&s, Tail::Less).unwrap();
            prop_assert!((g + l - 1.0 - null[w2 as usize]).abs() < 1e-12);
            prop_assert!((g - enumerate_p_greater(&s.differences())).abs() < 1e-12);
        }

        #[test]
        fn grubbs_affine_invariant(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..25),
            extra in 0.0f64..500.0,
            scale in 0.01f64..100.0,
            shift in -1e3f64..1e3,
        ) {
            let mut xs = xs;
            xs.push(extra);
            let ys: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
            let g = |v: &[f64]| {
                let m = mean(v);
                v.iter().map(|x| (x - m).abs()).fold(0.0, f64::max) / sample_sd(v)
            };
            let crit = grubbs_critical(xs.len(), 0.05);
            prop_assume!((g(&xs) - crit).abs() > 1e-9);
            prop_assert_eq!(grubbs_step(&xs, 0.05).unwrap(), grubbs_step(&ys, 0.05).unwrap());
        }

        #[test]
        fn fdr_step_up_monotone(p in proptest::collection::vec(0.0f64..1.0, 1..40), q in 0.01f64..0.3) {
            let r = fdr_bh(&p, q);
            let max_rejected = p.iter().zip(&r.rejected).filter(|(_, &rj)| rj).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            for (v, rj) in p.iter().zip(&r.rejected) {
                if *v <= max_rejected {
                    prop_assert!(*rj);
                }
            }
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            for w in order.windows(2) {
                prop_assert!(r.adjusted[w[0]] <= r.adjusted[w[1]] + 1e-15);
            }
            for (adj, rj) in r.adjusted.iter().zip(&r.rejected) {
                prop_assert_eq!(*adj <= q, *rj);
            }
        }
    }

    #[test]
    fn paired_t_examples() {
        let s = paired(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        assert!(paired_t(&s).is_err());
        let r = paired_t(&paired(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let a = [5.1, 4.8, 6.0, 5.5, 5.9];
        let b = [4.0, 4.9, 5.1, 4.2, 5.0];
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let m = d.iter().sum::<f64>() / 5.0;
        let sd = (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        let t = m / (sd / 5f64.sqrt());
        let r = paired_t(&paired(&a, &b)).unwrap();
        assert!((r.t - t).abs() < 1e-12);
        assert_eq!(r.df, 4.0);
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let oracle = 2.0 * StudentsT::new(0.0, 1.0, 4.0).unwrap().sf(t.abs());
        assert!((r.p - oracle).abs() < 1e-9);
    }

    #[test]
    fn fdr_examples() {
        let r = fdr_bh(&[0.01, 0.02, 0.03, 0.04], 0.05);
        assert!(r.rejected.iter().all(|&x| x));
        assert_eq!(fdr_bh(&[0.04], 0.05).rejected, vec![true]);
        assert_eq!(fdr_bh(&[0.06], 0.05).rejected, vec![false]);
        let r = fdr_bh(&[1.0; 3], 0.05);
        assert!(r.rejected.iter().all(|&x| !x));
        assert!(r.adjusted.iter().all(|&x| x == 1.0));
        // step-up rescues the smaller p
        let r = fdr_bh(&[0.02, 0.03, 0.2], 0.05);
        assert_eq!(r.rejected, vec![true, true, false]);
    }

    #[test]
    fn tlx_examples() {
        let s = |v| nasa_tlx_score(&TlxResponse::new([v; 6]).unwrap());
        assert!((s(9) - 5.0 / 6.0).abs() < 1e-15);
        assert!((s(1) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(s(5), 0.5);
        assert!(TlxResponse::new([1, 2, 3, 10, 4, 5]).is_err());
        assert!(TlxResponse::new([0, 2, 3, 4, 4, 5]).is_err());
    }

    #[test]
    fn summary_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.9986).abs() < 1e-3);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
    }
}
