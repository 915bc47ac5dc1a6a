//! Fibering maps `t -> psi(t)` and their critical points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::LogGrid;
use crate::par::Execution;

/// `psi`, `psi'` and `psi''` at one `t`, together with the magnitudes of the
/// terms that were summed into `psi'` and `psi''`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FiberingValues {
    pub psi: f64,
    pub dpsi: f64,
    pub d2psi: f64,
    pub psi_scale: f64,
    pub dpsi_scale: f64,
    pub d2psi_scale: f64,
}

pub trait FiberingMap: Sync {
    fn eval(&self, t: f64) -> FiberingValues;
}

impl<T: FiberingMap + ?Sized> FiberingMap for &T {
    fn eval(&self, t: f64) -> FiberingValues {
        (**self).eval(t)
    }
}

/// Closed-form fibering map
/// `psi(t) = a t^p/p - lambda b t^(1-gamma)/(1-gamma) - c t^r/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub gamma: f64,
    pub r: f64,
    pub lambda: f64,
}

impl FiberingMap for ScalarModel {
    fn eval(&self, t: f64) -> FiberingValues {
        let ScalarModel {
            a,
            b,
            c,
            p,
            gamma,
            r,
            lambda,
        } = *self;
        let e = 1.0 - gamma;
        let (tp, te, tr) = (t.powf(p), t.powf(e), t.powf(r));
        let (t1, t2, t3) = (a * tp / t, lambda * b * te / t, c * tr / t);
        let (s1, s2, s3) = ((p - 1.0) * t1 / t, gamma * t2 / t, (r - 1.0) * t3 / t);
        FiberingValues {
            psi: a * tp / p - lambda * b * te / e - c * tr / r,
            dpsi: t1 - t2 - t3,
            d2psi: s1 + s2 - s3,
            psi_scale: (a * tp / p).abs() + (lambda * b * te / e).abs() + (c * tr / r).abs(),
            dpsi_scale: t1.abs() + t2.abs() + t3.abs(),
            d2psi_scale: s1.abs() + s2.abs() + s3.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Zero,
    Minus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Zero => "zero",
            Branch::Minus => "minus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub n_scan: usize,
    /// `|psi'| <= root_tol * max(1, scale of the psi' terms)` at an accepted root
    pub root_tol: f64,
    /// dead band for classifying `psi''`, relative to `1 + scale of the psi'' terms`
    pub class_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e6,
            n_scan: 400,
            root_tol: 1e-10,
            class_tol: 1e-8,
        }
    }
}

impl RootOptions {
    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::Argument(format!(
                "invalid scan interval [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.n_scan < 2 {
            return Err(Error::Argument("scan needs at least 2 points".into()));
        }
        if !(self.root_tol > 0.0 && self.class_tol >= 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberingRoot {
    pub t: f64,
    pub dpsi: f64,
    pub d2psi: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberingProfile {
    pub t: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    /// sorted by `t`
    pub roots: Vec<FiberingRoot>,
}

impl FiberingProfile {
    pub fn roots_on(&self, branch: Branch) -> Vec<FiberingRoot> {
        self.roots.iter().copied().filter(|r| r.branch == branch).collect()
    }

    pub fn count(&self, branch: Branch) -> usize {
        self.roots.iter().filter(|r| r.branch == branch).count()
    }

    /// `(t+, t-)` when the profile has exactly one local minimum followed by
    /// exactly one local maximum and nothing else.
    pub fn two_root_structure(&self) -> Option<(f64, f64)> {
        match self.roots.as_slice() {
            [a, b] if a.branch == Branch::Plus && b.branch == Branch::Minus && a.t < b.t => Some((a.t, b.t)),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,psi,dpsi,d2psi\n");
        for i in 0..self.t.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.t[i], self.psi[i], self.dpsi[i], self.d2psi[i]
            ));
        }
        s
    }
}

pub(crate) fn classify(v: &FiberingValues, opts: &RootOptions) -> Branch {
    let band = opts.class_tol * (1.0 + v.d2psi_scale);
    if v.d2psi > band {
        Branch::Plus
    } else if v.d2psi < -band {
        Branch::Minus
    } else {
        Branch::Zero
    }
}

/// Geometric bisection to machine resolution, then safeguarded Newton.
fn refine<M: FiberingMap>(map: &M, mut lo: f64, mut hi: f64, f_lo: f64) -> (f64, FiberingValues) {
    let neg_lo = f_lo < 0.0;
    let mut best: Option<(f64, FiberingValues)> = None;
    let keep = |t: f64, v: FiberingValues, best: &mut Option<(f64, FiberingValues)>| {
        if best.is_none_or(|(_, b)| v.dpsi.abs() < b.dpsi.abs()) {
            *best = Some((t, v));
        }
    };
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let v = map.eval(mid);
        keep(mid, v, &mut best);
        if v.dpsi == 0.0 {
            return (mid, v);
        }
        if (v.dpsi < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut t, mut v) = best.unwrap_or_else(|| (lo, map.eval(lo)));
    for _ in 0..20 {
        if v.d2psi == 0.0 || v.dpsi == 0.0 {
            break;
        }
        let cand = t - v.dpsi / v.d2psi;
        if !(cand >= lo && cand <= hi) {
            break;
        }
        let w = map.eval(cand);
        if w.dpsi.abs() >= v.dpsi.abs() {
            break;
        }
        t = cand;
        v = w;
    }
    (t, v)
}

fn scan_roots<M: FiberingMap>(map: &M, ts: &[f64], vals: &[FiberingValues], opts: &RootOptions) -> Result<Vec<FiberingRoot>> {
    let mut roots = Vec::new();
    let mut i = 0;
    while i + 1 < ts.len() {
        let (a, b) = (vals[i].dpsi, vals[i + 1].dpsi);
        let found = if a == 0.0 {
            Some((ts[i], vals[i]))
        } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
            Some(refine(map, ts[i], ts[i + 1], a))
        } else {
            None
        };
        if let Some((t, v)) = found {
            if !v.dpsi.is_finite() {
                return Err(Error::Numeric(format!("psi' is not finite at t={t}")));
            }
            if v.dpsi.abs() > opts.root_tol * v.dpsi_scale.max(1.0) {
                return Err(Error::Numeric(format!(
                    "root near t={t} not resolved: |psi'| = {:e}",
                    v.dpsi.abs()
                )));
            }
            roots.push(FiberingRoot {
                t,
                dpsi: v.dpsi,
                d2psi: v.d2psi,
                branch: classify(&v, opts),
            });
        }
        i += 1;
    }
    if let (Some(last_t), Some(last_v)) = (ts.last(), vals.last()) {
        if last_v.dpsi == 0.0 {
            roots.push(FiberingRoot {
                t: *last_t,
                dpsi: 0.0,
                d2psi: last_v.d2psi,
                branch: classify(last_v, opts),
            });
        }
    }
    Ok(roots)
}

/// Widens `[t_min, t_max]` by factors of 1000 (up to `[1e-30, 1e30]`) until
/// `psi'` is negative at both ends, keeping the density of scan points per
/// decade.
fn bracketing_range<M: FiberingMap>(map: &M, opts: &RootOptions) -> (f64, f64, usize) {
    let (mut lo, mut hi) = (opts.t_min, opts.t_max);
    while lo > 1e-30 && !(map.eval(lo).dpsi < 0.0) {
        lo *= 1e-3;
    }
    while hi < 1e30 && !(map.eval(hi).dpsi < 0.0) {
        hi *= 1e3;
    }
    let density = (opts.n_scan - 1) as f64 / (opts.t_max / opts.t_min).ln();
    let n = ((hi / lo).ln() * density).round() as usize + 1;
    (lo, hi, n.max(opts.n_scan))
}

/// Samples `psi'` on a log grid, brackets every sign change and refines each
/// to a classified root.
///
/// The grid starts at `[t_min, t_max]`, widened when `psi'` is not negative
/// at an end (see [`bracketing_range`]).
pub fn find_fibering_roots<M: FiberingMap>(map: &M, opts: &RootOptions, exec: Execution) -> Result<FiberingProfile> {
    opts.validate()?;
    let (lo, hi, n) = bracketing_range(map, opts);
    let ts = LogGrid::new(lo, hi, n)?.points();
    let vals = exec.map_slice(&ts, |&t| map.eval(t));
    if let Some((t, _)) = ts.iter().zip(&vals).find(|(_, v)| !v.dpsi.is_finite()) {
        return Err(Error::Numeric(format!("psi' is not finite at t={t}")));
    }
    let roots = scan_roots(map, &ts, &vals, opts)?;
    Ok(FiberingProfile {
        psi: vals.iter().map(|v| v.psi).collect(),
        dpsi: vals.iter().map(|v| v.dpsi).collect(),
        d2psi: vals.iter().map(|v| v.d2psi).collect(),
        t: ts,
        roots,
    })
}

/// Roots of a sequential scan on a small window, for warm-started projections.
pub fn local_roots<M: FiberingMap>(map: &M, t_lo: f64, t_hi: f64, n: usize, opts: &RootOptions) -> Result<Vec<FiberingRoot>> {
    let local = RootOptions {
        t_min: t_lo,
        t_max: t_hi,
        n_scan: n,
        ..*opts
    };
    local.validate()?;
    let ts = LogGrid::new(t_lo, t_hi, n)?.points();
    let vals: Vec<FiberingValues> = ts.iter().map(|&t| map.eval(t)).collect();
    scan_roots(map, &ts, &vals, &local)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(lambda: f64) -> ScalarModel {
        ScalarModel {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            p: 2.0,
            gamma: 0.5,
            r: 4.0,
            lambda,
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = model(0.3);
        for t in [0.01, 0.5, 2.0, 30.0] {
            let h = 1e-6 * t;
            let v = m.eval(t);
            let fd1 = (m.eval(t + h).psi - m.eval(t - h).psi) / (2.0 * h);
            let fd2 = (m.eval(t + h).dpsi - m.eval(t - h).dpsi) / (2.0 * h);
            assert!((fd1 - v.dpsi).abs() <= 1e-6 * v.dpsi_scale);
            assert!((fd2 - v.d2psi).abs() <= 1e-6 * v.d2psi_scale);
        }
    }

    #[test]
    fn small_lambda_has_two_roots() {
        let prof = find_fibering_roots(&model(0.01), &RootOptions::default(), Execution::Sequential).unwrap();
        let (tp, tm) = prof.two_root_structure().expect("two roots");
        assert!(tp < tm);
        for t in [tp, tm] {
            assert!(model(0.01).eval(t).dpsi.abs() < 1e-12);
        }
        assert_eq!(prof.count(Branch::Plus), 1);
        assert_eq!(prof.count(Branch::Minus), 1);
    }

    #[test]
    fn large_lambda_has_no_roots() {
        let prof = find_fibering_roots(&model(10.0), &RootOptions::default(), Execution::Sequential).unwrap();
        assert!(prof.roots.is_empty());
        assert!(prof.two_root_structure().is_none());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let a = find_fibering_roots(&model(0.05), &RootOptions::default(), Execution::Sequential).unwrap();
        let b = find_fibering_roots(&model(0.05), &RootOptions::default(), Execution::Parallel).unwrap();
        assert_eq!(a.roots, b.roots);
        assert_eq!(a.dpsi, b.dpsi);
    }

    #[test]
    fn csv_header() {
        let prof = find_fibering_roots(&model(0.05), &RootOptions { n_scan: 5, ..Default::default() }, Execution::Sequential).unwrap();
        let csv = prof.to_csv();
        assert!(csv.starts_with("t,psi,dpsi,d2psi\n"));
        assert_eq!(csv.lines().count(), prof.t.len() + 1);
    }

    #[test]
    fn range_widens_to_catch_tiny_roots() {
        let m = ScalarModel { lambda: 1e-12, ..model(0.0) };
        let prof = find_fibering_roots(&m, &RootOptions::default(), Execution::Sequential).unwrap();
        let (tp, _) = prof.two_root_structure().expect("two roots");
        assert!(tp < 1e-6);
        assert!(prof.t[0] < tp);
    }

    #[test]
    fn invalid_options() {
        let bad = RootOptions { t_min: 0.0, ..Default::default() };
        assert!(find_fibering_roots(&model(0.1), &bad, Execution::Sequential).is_err());
    }
}
