//! Within-subject ANOVA without sphericity correction.

use super::dist::f_sf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaEffect {
    pub name: String,
    pub ss: f64,
    pub df_effect: f64,
    pub ss_error: f64,
    pub df_error: f64,
    pub f: f64,
    pub p: f64,
}

fn effect(name: &str, ss: f64, df_effect: f64, ss_error: f64, df_error: f64) -> AnovaEffect {
    let scale = ss.abs() + ss_error.abs();
    let (f, p) = if ss <= 1e-12 * scale || ss == 0.0 {
        (0.0, 1.0)
    } else if ss_error <= 1e-12 * scale {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss / df_effect) / (ss_error / df_error);
        (f, f_sf(f, df_effect, df_error))
    };
    AnovaEffect {
        name: name.to_string(),
        ss,
        df_effect,
        ss_error: ss_error.max(0.0),
        df_error,
        f,
        p,
    }
}

fn check_cells<'a>(cells: impl Iterator<Item = (String, &'a f64)>) -> Result<()> {
    let missing: Vec<String> = cells.filter(|(_, v)| !v.is_finite()).map(|(at, _)| at).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid("anova", format!("missing cells at {}", missing.join(", "))))
    }
}

/// One within-subject factor; `table[subject][condition]`.
pub fn rm_anova_one(table: &[Vec<f64>]) -> Result<AnovaEffect> {
    let n = table.len();
    let k = table.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InsufficientData("need at least 2 subjects and 2 conditions".into()));
    }
    if let Some(i) = table.iter().position(|r| r.len() != k) {
        return Err(Error::invalid("anova", format!("subject {i} has {} cells, expected {k}", table[i].len())));
    }
    check_cells(
        table
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, v)| (format!("({i},{j})"), v))),
    )?;
    let grand = table.iter().flatten().sum::<f64>() / (n * k) as f64;
    let subj: Vec<f64> = table.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let cond: Vec<f64> = (0..k).map(|j| table.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let ss_total: f64 = table.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_cond = n as f64 * cond.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_subj = k as f64 * subj.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_err = ss_total - ss_cond - ss_subj;
    Ok(effect(
        "condition",
        ss_cond,
        (k - 1) as f64,
        ss_err,
        ((k - 1) * (n - 1)) as f64,
    ))
}

/// Two within-subject factors; `table[subject][a][b]`. Returns the
/// effects of A, B and their interaction, each tested against its
/// subject interaction term.
pub fn rm_anova_two(table: &[Vec<Vec<f64>>]) -> Result<[AnovaEffect; 3]> {
    let n = table.len();
    let la = table.first().map_or(0, Vec::len);
    let lb = table.first().and_then(|s| s.first()).map_or(0, Vec::len);
    if n < 2 || la < 2 || lb < 2 {
        return Err(Error::InsufficientData("need at least 2 subjects and 2 levels per factor".into()));
    }
    for (i, s) in table.iter().enumerate() {
        if s.len() != la || s.iter().any(|r| r.len() != lb) {
            return Err(Error::invalid("anova", format!("subject {i} table is not {la}x{lb}")));
        }
    }
    check_cells(table.iter().enumerate().flat_map(|(i, s)| {
        s.iter()
            .enumerate()
            .flat_map(move |(j, r)| r.iter().enumerate().map(move |(k, v)| (format!("({i},{j},{k})"), v)))
    }))?;
    let (nf, af, bf) = (n as f64, la as f64, lb as f64);
    let x = |i: usize, j: usize, k: usize| table[i][j][k];
    let grand = table.iter().flatten().flatten().sum::<f64>() / (nf * af * bf);
    let m_s: Vec<f64> = (0..n).map(|i| table[i].iter().flatten().sum::<f64>() / (af * bf)).collect();
    let m_a: Vec<f64> = (0..la)
        .map(|j| (0..n).map(|i| table[i][j].iter().sum::<f64>()).sum::<f64>() / (nf * bf))
        .collect();
    let m_b: Vec<f64> = (0..lb)
        .map(|k| (0..n).flat_map(|i| (0..la).map(move |j| (i, j))).map(|(i, j)| x(i, j, k)).sum::<f64>() / (nf * af))
        .collect();
    let m_ab = |j: usize, k: usize| (0..n).map(|i| x(i, j, k)).sum::<f64>() / nf;
    let m_sa = |i: usize, j: usize| table[i][j].iter().sum::<f64>() / bf;
    let m_sb = |i: usize, k: usize| (0..la).map(|j| x(i, j, k)).sum::<f64>() / af;

    let sq = |v: f64| v * v;
    let ss_a = nf * bf * m_a.iter().map(|m| sq(m - grand)).sum::<f64>();
    let ss_b = nf * af * m_b.iter().map(|m| sq(m - grand)).sum::<f64>();
    let mut ss_ab = 0.0;
    for j in 0..la {
        for k in 0..lb {
            ss_ab += sq(m_ab(j, k) - m_a[j] - m_b[k] + grand);
        }
    }
    ss_ab *= nf;
    let mut ss_as = 0.0;
    for i in 0..n {
        for j in 0..la {
            ss_as += sq(m_sa(i, j) - m_s[i] - m_a[j] + grand);
        }
    }
    ss_as *= bf;
    let mut ss_bs = 0.0;
    for i in 0..n {
        for k in 0..lb {
            ss_bs += sq(m_sb(i, k) - m_s[i] - m_b[k] + grand);
        }
    }
    ss_bs *= af;
    let mut ss_abs = 0.0;
    for i in 0..n {
        for j in 0..la {
            for k in 0..lb {
                ss_abs += sq(x(i, j, k) - m_sa(i, j) - m_sb(i, k) - m_ab(j, k) + m_s[i] + m_a[j] + m_b[k] - grand);
            }
        }
    }
    let dfs = nf - 1.0;
    Ok([
        effect("a", ss_a, af - 1.0, ss_as, (af - 1.0) * dfs),
        effect("b", ss_b, bf - 1.0, ss_bs, (bf - 1.0) * dfs),
        effect("a:b", ss_ab, (af - 1.0) * (bf - 1.0), ss_abs, (af - 1.0) * (bf - 1.0) * dfs),
    ])
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    #[test]
    fn worked_example() {
        let t = vec![vec![45.0, 50.0, 55.0], vec![42.0, 42.0, 45.0], vec![36.0, 41.0, 43.0], vec![39.0, 35.0, 40.0]];
        let e = rm_anova_one(&t).unwrap();
        assert!((e.ss - 58.5).abs() < 1e-10);
        assert!((e.ss_error - 37.5).abs() < 1e-10);
        assert_eq!((e.df_effect, e.df_error), (2.0, 6.0));
        assert!((e.f - 4.68).abs() < 1e-10);
        assert!((e.p - 0.059_604_644_775_390_625).abs() < 1e-9);
    }

    #[test]
    fn constant_and_missing() {
        let e = rm_anova_one(&vec![vec![2.0; 3]; 4]).unwrap();
        assert_eq!((e.f, e.p), (0.0, 1.0));
        let r = rm_anova_two(&vec![vec![vec![1.5; 3]; 2]; 5]).unwrap();
        assert!(r.iter().all(|e| e.f == 0.0 && e.p == 1.0));
        let mut t = vec![vec![1.0, 2.0, 3.0]; 3];
        t[1][2] = f64::NAN;
        let err = rm_anova_one(&t).unwrap_err().to_string();
        assert!(err.contains("(1,2)"), "{err}");
        assert!(rm_anova_one(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    /// Residual form of the two-factor decomposition via the one-factor
    /// routine on the flattened cells.
    #[test]
    fn two_factor_partitions_one_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t: Vec<Vec<Vec<f64>>> = (0..6)
            .map(|_| (0..2).map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect()).collect())
            .collect();
        let flat: Vec<Vec<f64>> = t.iter().map(|s| s.concat()).collect();
        let one = rm_anova_one(&flat).unwrap();
        let [a, b, ab] = rm_anova_two(&t).unwrap();
        assert!((a.ss + b.ss + ab.ss - one.ss).abs() < 1e-10);
        assert!((a.ss_error + b.ss_error + ab.ss_error - one.ss_error).abs() < 1e-10);
        assert_eq!(ab.df_effect, 3.0);
        assert_eq!(ab.df_error, 15.0);
    }

    #[test]
    fn additive_interaction_p_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 400;
        let mut ps = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t: Vec<Vec<Vec<f64>>> = (0..12)
                .map(|i| {
                    (0..2)
                        .map(|j| {
                            (0..4)
                                .map(|k| {
                                    let z: f64 = StandardNormal.sample(&mut rng);
                                    i as f64 * 0.3 + j as f64 + 0.5 * k as f64 + z
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            ps.push(rm_anova_two(&t).unwrap()[2].p);
        }
        ps.sort_by(f64::total_cmp);
        let n = ps.len() as f64;
        let d = ps
            .iter()
            .enumerate()
            .map(|(i, p)| ((i as f64 + 1.0) / n - p).max(p - i as f64 / n))
            .fold(0.0, f64::max);
        // Kolmogorov-Smirnov critical value at 0.01
        assert!(d < 1.628 / n.sqrt(), "D = {d}");
    }

    proptest! {
        #[test]
        fn subject_offsets_do_not_change_f(
            cells in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 3..8),
            offsets in proptest::collection::vec(-100.0f64..100.0, 8),
        ) {
            let shifted: Vec<Vec<f64>> = cells.iter().zip(&offsets).map(|(r, o)| r.iter().map(|v| v + o).collect()).collect();
            let a = rm_anova_one(&cells).unwrap();
            let b = rm_anova_one(&shifted).unwrap();
            prop_assume!(a.ss_error > 1e-6);
            prop_assert!((a.f - b.f).abs() <= 1e-6 * a.f.max(1.0));
        }
    }
}
