//! One-way ANOVA, Tukey HSD and Pearson correlation over benchmark metrics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("no within-group degrees of freedom")]
    NoResidualDf,
    #[error("non-finite observation in group {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub groups: Vec<GroupSummary>,
    pub ss_between: f64,
    pub ss_within: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub f_value: f64,
    pub p_value: f64,
}

impl Anova {
    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sums of squares below this fraction of the total are rounding noise.
const REL_EPS: f64 = 1e-12;

pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<Anova, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(StatsError::EmptyGroup(i));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    if n <= k {
        return Err(StatsError::NoResidualDf);
    }
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let summaries: Vec<GroupSummary> = groups.iter().map(|g| GroupSummary { n: g.len(), mean: mean(g) }).collect();
    let mut ssb: f64 = summaries.iter().map(|s| s.n as f64 * (s.mean - grand).powi(2)).sum();
    let mut ssw: f64 = groups.iter().zip(&summaries).map(|(g, s)| g.iter().map(|x| (x - s.mean).powi(2)).sum::<f64>()).sum();
    let sst: f64 = groups.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    let scale = sst.max(grand.abs() * grand.abs() * n as f64) * REL_EPS;
    if ssb <= scale {
        ssb = 0.0;
    }
    if ssw <= scale {
        ssw = 0.0;
    }
    let (df_b, df_w) = (k - 1, n - k);
    let (f_value, p_value) = if ssb == 0.0 {
        (0.0, 1.0)
    } else if ssw == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ssb / df_b as f64) / (ssw / df_w as f64);
        let dist = FisherSnedecor::new(df_b as f64, df_w as f64).expect("positive degrees of freedom");
        (f, dist.sf(f))
    };
    Ok(Anova { groups: summaries, ss_between: ssb, ss_within: ssw, df_between: df_b, df_within: df_w, f_value, p_value })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub i: usize,
    pub j: usize,
    /// mean_j − mean_i
    pub diff: f64,
    pub q: f64,
    pub p_adj: f64,
    pub lower: f64,
    pub upper: f64,
    pub reject: bool,
}

/// Tukey–Kramer pairwise comparisons after a one-way ANOVA.
pub fn tukey_hsd(groups: &[Vec<f64>], alpha: f64) -> Result<Vec<TukeyPair>, StatsError> {
    let a = anova_oneway(groups)?;
    let k = groups.len() as f64;
    let df = a.df_within as f64;
    let msw = a.ms_within();
    let q_crit = qtukey(1.0 - alpha, k, df);
    let mut out = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (gi, gj) = (&a.groups[i], &a.groups[j]);
            let diff = gj.mean - gi.mean;
            let se = (msw / 2.0 * (1.0 / gi.n as f64 + 1.0 / gj.n as f64)).sqrt();
            let (q, p) = if se == 0.0 {
                if diff == 0.0 {
                    (0.0, 1.0)
                } else {
                    (f64::INFINITY, 0.0)
                }
            } else {
                let q = diff.abs() / se;
                (q, (1.0 - ptukey(q, k, df)).clamp(0.0, 1.0))
            };
            out.push(TukeyPair {
                i,
                j,
                diff,
                q,
                p_adj: p,
                lower: diff - q_crit * se,
                upper: diff + q_crit * se,
                reject: p < alpha,
            });
        }
    }
    Ok(out)
}

fn pnorm(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// P(range of `cc` standard normals < w), Gauss–Legendre integration.
fn wprob(w: f64, cc: f64) -> f64 {
    const NLEG: usize = 12;
    const IHALF: usize = 6;
    const C1: f64 = -30.0;
    const C3: f64 = 60.0;
    const BB: f64 = 8.0;
    const WLAR: f64 = 3.0;
    const XLEG: [f64; IHALF] = [
        0.981560634246719250690549090149,
        0.904117256370474856678465866119,
        0.769902674194304687036893833213,
        0.587317954286617447296702418941,
        0.367831498998180193752691536644,
        0.125233408511468915472441369464,
    ];
    const ALEG: [f64; IHALF] = [
        0.047175336386511827194615961485,
        0.106939325995318430960254718194,
        0.160078328543346226334652529543,
        0.203167426723065921749064455810,
        0.233492536538354808760849898925,
        0.249147045813402785000562436043,
    ];
    let qsqz = w * 0.5;
    if qsqz >= BB {
        return 1.0;
    }
    let mut pr_w = 2.0 * pnorm(qsqz) - 1.0;
    pr_w = if pr_w >= 1.0 { 1.0 } else { pr_w.powf(cc) };
    let wincr = if w > WLAR { 2 } else { 3 };
    let mut blb = qsqz;
    let binc = (BB - qsqz) / wincr as f64;
    let mut bub = blb + binc;
    let mut einsum = 0.0;
    let cc1 = cc - 1.0;
    for _ in 0..wincr {
        let mut elsum = 0.0;
        let a = 0.5 * (bub + blb);
        let b = 0.5 * (bub - blb);
        for jj in 1..=NLEG {
            let (j, xx) = if IHALF < jj {
                let j = NLEG - jj + 1;
                (j, XLEG[j - 1])
            } else {
                (jj, -XLEG[jj - 1])
            };
            let ac = a + b * xx;
            let qexpo = ac * ac;
            if qexpo > C3 {
                break;
            }
            let rinsum = pnorm(ac) - pnorm(ac - w);
            if rinsum >= (C1 / cc1).exp() {
                elsum += ALEG[j - 1] * (-0.5 * qexpo).exp() * rinsum.powf(cc1);
            }
        }
        elsum *= 2.0 * b * cc / (2.0 * std::f64::consts::PI).sqrt();
        einsum += elsum;
        blb = bub;
        bub += binc;
    }
    pr_w += einsum;
    if pr_w <= (C1).exp() {
        return 0.0;
    }
    pr_w.min(1.0)
}

/// CDF of the studentized range for `k` means and `df` error degrees of freedom.
pub fn ptukey(q: f64, k: f64, df: f64) -> f64 {
    const NLEGQ: usize = 16;
    const IHALFQ: usize = 8;
    const EPS1: f64 = -30.0;
    const EPS2: f64 = 1.0e-14;
    const XLEGQ: [f64; IHALFQ] = [
        0.989400934991649932596154173450,
        0.944575023073232576077988415535,
        0.865631202387831743880467897712,
        0.755404408355003033895101194847,
        0.617876244402643748446671764049,
        0.458016777657227386342419442984,
        0.281603550779258913230460501460,
        0.950125098376374401853193354250e-1,
    ];
    const ALEGQ: [f64; IHALFQ] = [
        0.271524594117540948517805724560e-1,
        0.622535239386478928628438369944e-1,
        0.951585116824927848099251076022e-1,
        0.124628971255533872052476282192,
        0.149595988816576732081501730547,
        0.169156519395002538189312079030,
        0.182603415044923588866763667969,
        0.189450610455068496285396723208,
    ];
    if q.is_nan() || k < 2.0 || df < 2.0 {
        return f64::NAN;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df > 25000.0 {
        return wprob(q, k);
    }
    let f2 = df * 0.5;
    let mut f2lf = f2 * df.ln() - df * std::f64::consts::LN_2 - ln_gamma(f2);
    let f21 = f2 - 1.0;
    let ff4 = df * 0.25;
    let ulen: f64 = if df <= 100.0 {
        1.0
    } else if df <= 800.0 {
        0.5
    } else if df <= 5000.0 {
        0.25
    } else {
        0.125
    };
    f2lf += ulen.ln();
    let mut ans = 0.0;
    for i in 1..=50 {
        let mut otsum = 0.0;
        let twa1 = (2 * i - 1) as f64 * ulen;
        for jj in 1..=NLEGQ {
            let (j, t1, arg) = if IHALFQ < jj {
                let j = jj - IHALFQ - 1;
                let x = XLEGQ[j] * ulen;
                (j, f2lf + f21 * (twa1 + x).ln() - (x + twa1) * ff4, x + twa1)
            } else {
                let j = jj - 1;
                let x = XLEGQ[j] * ulen;
                (j, f2lf + f21 * (twa1 - x).ln() + (x - twa1) * ff4, twa1 - x)
            };
            if t1 >= EPS1 {
                let qsqz = q * (arg * 0.5).sqrt();
                otsum += wprob(qsqz, k) * ALEGQ[j] * t1.exp();
            }
        }
        if i as f64 * ulen >= 1.0 && otsum <= EPS2 {
            break;
        }
        ans += otsum;
    }
    ans.min(1.0)
}

/// Quantile of the studentized range, by bisection on [`ptukey`].
pub fn qtukey(p: f64, k: f64, df: f64) -> f64 {
    if !(0.0..1.0).contains(&p) {
        return f64::NAN;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while ptukey(hi, k, df) < p {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ptukey(mid, k, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Pearson r; `None` when either side has zero variance or fewer than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (mx, my) = (mean(&x[..n]), mean(&y[..n]));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson matrix over equally long columns. Zero-variance cells are `None`, the diagonal is 1.
pub fn correlation_matrix(columns: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let m = columns.len();
    let mut out = vec![vec![None; m]; m];
    for i in 0..m {
        out[i][i] = Some(1.0);
        for j in i + 1..m {
            let r = pearson(&columns[i], &columns[j]);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}
