use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Every constant the relaxed greedy algorithm needs for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    /// Target stretch.
    pub t: f64,
    /// Intermediate stretch used by the redundancy test, `1 < t1 < t`.
    pub t1: f64,
    /// Cluster radius factor: clusters in phase `i` have radius `delta * W_{i-1}`.
    pub delta: f64,
    /// `t1 * (1 - 2 delta) / (1 + 6 delta)`.
    pub t_delta: f64,
    /// Covering angle for the covered-edge test.
    pub theta: f64,
    /// Growth factor between consecutive bin boundaries.
    pub r: f64,
    /// Weight-band factor; only used when checking the leapfrog property.
    pub beta: f64,
    pub alpha: f64,
    pub n: usize,
    /// Index of the last bin.
    pub m: usize,
}

/// Largest angle `theta` with `cos(theta) - sin(theta) >= 1 / t`.
pub fn max_covering_angle(t: f64) -> f64 {
    (1.0 / (std::f64::consts::SQRT_2 * t)).acos() - FRAC_PI_4
}

/// Fixes the free constants for stretch `t` on an `n`-node instance.
///
/// `t1` sits halfway between 1 and `t`; `delta` is half of the tighter of
/// the two cluster-radius bounds computed at `t1`; `r` is the midpoint of
/// `(1, (t_delta + 1) / 2)`; `theta` is 95% of the largest angle the covering
/// argument allows; `beta` is the midpoint of its admissible interval.
pub fn derive_params(t: f64, alpha: f64, n: usize) -> Result<PhaseParams> {
    if !(t.is_finite() && t > 1.0) {
        return usage(format!("stretch must exceed 1, got {t}"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return usage(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if n == 0 {
        return usage("n must be at least 1");
    }
    let t1 = (1.0 + t) / 2.0;
    let delta = 0.5 * f64::min((t1 - 1.0) / (6.0 + 2.0 * t1), (t - t1) / 4.0);
    let t_delta = t1 * (1.0 - 2.0 * delta) / (1.0 + 6.0 * delta);
    let r = (1.0 + (t_delta + 1.0) / 2.0) / 2.0;
    let theta = (0.95 * max_covering_angle(t)).clamp(f64::MIN_POSITIVE, FRAC_PI_4 * 0.999);
    let beta_cap = if t * alpha < 1.0 {
        f64::min(2.0, 1.0 / (1.0 - t * alpha))
    } else {
        2.0
    };
    let beta = (1.0 + beta_cap) / 2.0;
    let m = ((n as f64 / alpha).ln() / r.ln()).ceil().max(0.0) as usize;
    let params = PhaseParams {
        t,
        t1,
        delta,
        t_delta,
        theta,
        r,
        beta,
        alpha,
        n,
        m,
    };
    params
        .check()
        .map_err(|errs| Error::Invariant(format!("derived parameters infeasible: {}", errs.join("; "))))?;
    Ok(params)
}

impl PhaseParams {
    /// Bin boundary `W_i = r^i * alpha / n`.
    pub fn w(&self, i: usize) -> f64 {
        self.r.powi(i as i32) * self.alpha / self.n as f64
    }

    /// Bin holding an edge of length `len`: bin 0 is `(0, W_0]`, bin `i` is
    /// `(W_{i-1}, W_i]`.
    pub fn bin_index(&self, len: f64) -> usize {
        if len <= self.w(0) {
            return 0;
        }
        let guess = ((self.n as f64 * len / self.alpha).ln() / self.r.ln()).ceil();
        let mut i = (guess.max(1.0) as usize).min(self.m);
        while i < self.m && len > self.w(i) {
            i += 1;
        }
        while i > 1 && len <= self.w(i - 1) {
            i -= 1;
        }
        i
    }

    /// Upper bound on the hops of a qualifying cluster-graph path.
    pub fn h_hop_bound(&self) -> usize {
        2 + (self.t * self.r / self.delta).ceil() as usize
    }

    /// Hop bound on the corresponding path in the network.
    pub fn g_hop_bound(&self) -> usize {
        (2.0 * (2.0 * self.delta + 1.0) / self.alpha).ceil() as usize
    }

    /// Constant appearing in the inter-cluster degree bound, `(5 + 1/delta)^d`.
    pub fn inter_degree_bound(&self, d: usize) -> f64 {
        (5.0 + 1.0 / self.delta).powi(d as i32)
    }

    /// Constant appearing in the per-cluster query bound, `t^d ((4 delta + r)/delta)^d`.
    pub fn query_bound(&self, d: usize) -> f64 {
        (self.t * (4.0 * self.delta + self.r) / self.delta).powi(d as i32)
    }

    /// Multiplicative slack of cluster-graph distances over spanner distances.
    pub fn cluster_graph_distortion(&self) -> f64 {
        (1.0 + 6.0 * self.delta) / (1.0 - 2.0 * self.delta)
    }

    /// Lists every parameter constraint that fails; empty means usable.
    pub fn check(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let PhaseParams {
            t,
            t1,
            delta,
            t_delta,
            theta,
            r,
            beta,
            alpha,
            ..
        } = *self;
        if !(t > 1.0) {
            errs.push(format!("t = {t} must exceed 1"));
        }
        if !(1.0 < t1 && t1 < t) {
            errs.push(format!("t1 = {t1} must lie in (1, t)"));
        }
        if !(0.0 < theta && theta < FRAC_PI_4) {
            errs.push(format!("theta = {theta} must lie in (0, pi/4)"));
        }
        if t < 1.0 / (theta.cos() - theta.sin()) {
            errs.push(format!("t = {t} < 1/(cos theta - sin theta)"));
        }
        if !(delta > 0.0 && delta <= (t - t1) / 4.0) {
            errs.push(format!("delta = {delta} must lie in (0, (t - t1)/4]"));
        }
        if !(delta < (t - 1.0) / (6.0 + 2.0 * t)) {
            errs.push(format!("delta = {delta} must be below (t-1)/(6+2t)"));
        }
        if !(delta < (t1 - 1.0) / (6.0 + 2.0 * t1)) {
            errs.push(format!("delta = {delta} must be below (t1-1)/(6+2 t1)"));
        }
        let expected_t_delta = t1 * (1.0 - 2.0 * delta) / (1.0 + 6.0 * delta);
        if (t_delta - expected_t_delta).abs() > 1e-12 || !(t_delta > 1.0) {
            errs.push(format!("t_delta = {t_delta} inconsistent or not above 1"));
        }
        if !(1.0 < r && r < (t_delta + 1.0) / 2.0) {
            errs.push(format!("r = {r} must lie in (1, (t_delta+1)/2)"));
        }
        if !(1.0 < beta && beta < 2.0) {
            errs.push(format!("beta = {beta} must lie in (1, 2)"));
        }
        if t * alpha < 1.0 && !(beta < 1.0 / (1.0 - t * alpha)) {
            errs.push(format!("beta = {beta} must be below 1/(1 - t alpha)"));
        }
        if self.n > 0 && self.w(self.m) < 1.0 - 1e-12 {
            errs.push(format!("W_m = {} does not reach 1", self.w(self.m)));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Upper end of the open window for the leapfrog constant `t2`
    /// (the window is `[1, upper)`).
    pub fn leapfrog_t2_upper(&self) -> f64 {
        [
            (self.t_delta + 1.0) / self.r - 1.0,
            2.0 / self.r,
            self.t / self.r,
            2.0 / self.beta,
            self.t * self.alpha + 1.0 / self.beta,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}
