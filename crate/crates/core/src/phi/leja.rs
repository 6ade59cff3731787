use std::sync::Mutex;

use crate::linalg::{dense_phi_vec, phi_scalar, DenseMatrix};
use crate::phi::{compose, PhiError, PhiResult, SubstepKernel};
use crate::scalar::{norm_inf, Real};

/// Leja points on the reference interval `[−2, 2]`, starting at `2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LejaSequence<T> {
    pub points: Vec<T>,
}

impl<T: Real> LejaSequence<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

static LEJA_CACHE: Mutex<Vec<f64>> = Mutex::new(Vec::new());

fn log_product(x: f64, pts: &[f64]) -> f64 {
    pts.iter().map(|&p| (x - p).abs().ln()).sum()
}

fn extend_leja(pts: &mut Vec<f64>, count: usize) {
    if pts.is_empty() {
        pts.extend_from_slice(&[2.0, -2.0, 0.0]);
    }
    // candidates are midpoints of neighbouring accepted points
    let mut sorted = pts.clone();
    sorted.sort_by(f64::total_cmp);
    let mut cands: Vec<(f64, f64)> = sorted
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (m, log_product(m, pts))
        })
        .collect();
    while pts.len() < count {
        let (best, _) = cands
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, c)| {
                if c.1 > acc.1 {
                    (i, c.1)
                } else {
                    acc
                }
            });
        let x = cands[best].0;
        pts.push(x);
        for c in cands.iter_mut() {
            c.1 += (c.0 - x).abs().ln();
        }
        let pos = sorted.partition_point(|&p| p < x);
        let (lo, hi) = (sorted[pos - 1], sorted[pos]);
        sorted.insert(pos, x);
        let left = 0.5 * (lo + x);
        let right = 0.5 * (x + hi);
        cands[best] = (left, log_product(left, pts));
        cands.insert(best + 1, (right, log_product(right, pts)));
    }
}

/// First `count + 1` fast Leja points `ξ₀, …, ξ_count` on `[−2, 2]`.
pub fn fast_leja_points<T: Real>(count: usize) -> LejaSequence<T> {
    let need = count + 1;
    let mut cache = LEJA_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if cache.len() < need {
        extend_leja(&mut cache, need);
    }
    LejaSequence {
        points: cache[..need].iter().map(|&x| T::lit(x)).collect(),
    }
}

/// Newton coefficients of `φᵢ(τz)` at the nodes `z_k = c + γξ_k`, scaled by `(τγ)^k`.
#[derive(Clone, Debug)]
pub struct DividedDifferences<T> {
    pub d: Vec<T>,
    pub interval: (T, T),
    pub tau: T,
    pub phi_order: usize,
}

impl<T: Real> DividedDifferences<T> {
    pub fn center(&self) -> T {
        T::lit(0.5) * (self.interval.0 + self.interval.1)
    }

    pub fn half_width(&self) -> T {
        T::lit(0.25) * (self.interval.1 - self.interval.0)
    }

    /// Newton polynomial at scalar `z`; used to check the interpolation.
    pub fn eval(&self, xi: &LejaSequence<T>, z: T) -> T {
        let (c, g) = (self.center(), self.half_width());
        if g == T::zero() {
            return self.d[0];
        }
        let u = (z - c) / g;
        let mut q = T::one();
        let mut p = T::zero();
        for (j, &dj) in self.d.iter().enumerate() {
            if j > 0 {
                q *= u - xi.points[j - 1];
            }
            p += dj * q;
        }
        p
    }
}

const DEGENERATE_WIDTH: f64 = 1e-300;

/// Divided differences as the first column of `φᵢ(L_m)`, where
/// `L_m = τ(cI + γL̂_m)` is lower bidiagonal with diagonal `ξ₀..ξ_m` in `L̂_m`.
pub fn divided_differences<T: Real>(
    order: usize,
    tau: T,
    interval: (T, T),
    xi: &LejaSequence<T>,
    m: usize,
) -> Result<DividedDifferences<T>, PhiError> {
    let (alpha, beta) = interval;
    if !(beta >= alpha) {
        return Err(PhiError::InvalidArgument("interval needs beta >= alpha".into()));
    }
    if xi.len() < m + 1 {
        return Err(PhiError::InvalidArgument(format!(
            "need {} Leja points, have {}",
            m + 1,
            xi.len()
        )));
    }
    let c = T::lit(0.5) * (alpha + beta);
    let g = T::lit(0.25) * (beta - alpha);
    let mut d = vec![T::zero(); m + 1];
    if (beta - alpha).to_f64().unwrap_or(0.0) < DEGENERATE_WIDTH {
        d[0] = phi_scalar(order, tau * c);
        return Ok(DividedDifferences {
            d,
            interval,
            tau,
            phi_order: order,
        });
    }
    let mut l = DenseMatrix::zeros(m + 1);
    for k in 0..=m {
        l[(k, k)] = tau * (c + g * xi.points[k]);
        if k > 0 {
            l[(k, k - 1)] = tau * g;
        }
    }
    let mut e1 = vec![T::zero(); m + 1];
    e1[0] = T::one();
    d = dense_phi_vec(order, &l, &e1)?;
    Ok(DividedDifferences {
        d,
        interval,
        tau,
        phi_order: order,
    })
}

/// Stopping parameters for the Leja interpolation.
#[derive(Clone, Copy, Debug)]
pub struct LejaControl<T> {
    pub tol_a: T,
    pub tol_r: T,
    /// Exponent in the test `10^p · mean < 1`.
    pub p: i32,
    pub max_degree: usize,
}

impl<T: Real> Default for LejaControl<T> {
    fn default() -> Self {
        Self {
            tol_a: T::lit(1e-6),
            tol_r: T::lit(1e-6),
            p: 2,
            max_degree: 120,
        }
    }
}

impl<T: Real> LejaControl<T> {
    fn validate(&self) -> Result<(), PhiError> {
        if !(self.tol_a > T::zero() && self.tol_r > T::zero()) {
            return Err(PhiError::InvalidArgument("tol_a and tol_r must be positive".into()));
        }
        if self.max_degree == 0 {
            return Err(PhiError::InvalidArgument("max_degree must be >= 1".into()));
        }
        Ok(())
    }
}

/// Ring buffer holding the last five error norms.
#[derive(Clone, Debug, Default)]
pub struct ErrorWindow<T> {
    buf: [T; 5],
    len: usize,
    head: usize,
}

impl<T: Real> ErrorWindow<T> {
    pub const LEN: usize = 5;

    pub fn new() -> Self {
        Self {
            buf: [T::zero(); 5],
            len: 0,
            head: 0,
        }
    }

    pub fn push(&mut self, e: T) {
        self.buf[self.head] = e;
        self.head = (self.head + 1) % Self::LEN;
        self.len = (self.len + 1).min(Self::LEN);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mean(&self) -> T {
        if self.len == 0 {
            return T::infinity();
        }
        let idx = (0..self.len).map(|k| (self.head + Self::LEN - 1 - k) % Self::LEN);
        idx.map(|i| self.buf[i]).sum::<T>() / T::from_usize_lossy(self.len)
    }
}

/// Reference-interval half-width (in units of `τγ`) above which the step is split up front.
const MAX_SCALED_HALF_WIDTH: f64 = 15.0;
const INFLATE: f64 = 0.01;

struct LejaKernel<T> {
    tau: T,
    c: T,
    g: T,
    interval: (T, T),
    ctrl: LejaControl<T>,
    scal: T,
    xi: LejaSequence<T>,
    cache: Vec<(usize, T, DividedDifferences<T>)>,
    matvecs: usize,
    last_estimate: T,
}

impl<T: Real> LejaKernel<T> {
    fn coefficients(&mut self, order: usize, delta: T) -> Result<&DividedDifferences<T>, PhiError> {
        let pos = self
            .cache
            .iter()
            .position(|(o, dl, _)| *o == order && *dl == delta);
        let pos = match pos {
            Some(p) => p,
            None => {
                let dd = divided_differences(
                    order,
                    self.tau * delta,
                    self.interval,
                    &self.xi,
                    self.ctrl.max_degree,
                )?;
                self.cache.push((order, delta, dd));
                self.cache.len() - 1
            }
        };
        Ok(&self.cache[pos].2)
    }

    fn weighted_norm(&self, e: &[T], weight: T) -> T {
        let n = T::from_usize_lossy(e.len().max(1));
        let s: T = e.iter().map(|&x| (weight * x / self.scal).powi(2)).sum();
        (s / n).sqrt()
    }
}

impl<T: Real> SubstepKernel<T> for LejaKernel<T> {
    fn attempt<F: FnMut(&[T], &mut [T])>(
        &mut self,
        apply_j: &mut F,
        order: usize,
        delta: T,
        r: &[T],
        weight: T,
    ) -> Result<Option<(Vec<T>, T)>, PhiError> {
        let d = self.coefficients(order, delta)?.d.clone();
        let n = r.len();
        let mut p: Vec<T> = r.iter().map(|&x| d[0] * x).collect();
        if d[1..].iter().all(|&x| x == T::zero()) {
            return Ok(Some((p, T::zero())));
        }
        let (c, g) = (self.c, self.g);
        let threshold = T::lit(10f64.powi(-self.ctrl.p));
        let mut q = r.to_vec();
        let mut jq = vec![T::zero(); n];
        let mut window = ErrorWindow::new();
        let mut e = vec![T::zero(); n];
        for m in 1..=self.ctrl.max_degree {
            apply_j(&q, &mut jq);
            self.matvecs += 1;
            let shift = self.xi.points[m - 1];
            for k in 0..n {
                q[k] = (jq[k] - c * q[k]) / g - shift * q[k];
                e[k] = d[m] * q[k];
                p[k] += e[k];
            }
            let err = self.weighted_norm(&e, weight);
            if !err.is_finite() {
                return Ok(None);
            }
            window.push(err);
            let mean = window.mean();
            if mean < threshold {
                self.last_estimate = self.last_estimate.max(mean);
                return Ok(Some((p, mean)));
            }
        }
        Ok(None)
    }

    fn accept(&self, _err: T, _w_new: &[T]) -> bool {
        true
    }

    fn matvecs(&self) -> usize {
        self.matvecs
    }
}

/// `φᵢ(τJ) v` by Newton interpolation at fast Leja points mapped onto
/// `interval`, an estimate of the real spectrum of `J` (not `τJ`).
/// Errors are measured in the norm `sqrt(mean((e/scal)²))` with
/// `scal = tol_a + tol_r · y_norm_inf`.
pub fn phi_leja<T: Real, F: FnMut(&[T], &mut [T])>(
    mut apply_j: F,
    tau: T,
    v: &[T],
    order: usize,
    interval: (T, T),
    ctrl: LejaControl<T>,
    y_norm_inf: T,
) -> Result<PhiResult<T>, PhiError> {
    if !(tau > T::zero()) {
        return Err(PhiError::InvalidArgument("tau must be positive".into()));
    }
    ctrl.validate()?;
    let (a0, b0) = interval;
    if !(a0.is_finite() && b0.is_finite() && b0 >= a0) {
        return Err(PhiError::InvalidArgument("interval needs finite beta >= alpha".into()));
    }
    if norm_inf(v) == T::zero() {
        return Ok(PhiResult {
            value: vec![T::zero(); v.len()],
            err_estimate: T::zero(),
            matvec_count: 0,
            substeps: 0,
        });
    }
    let pad = T::lit(INFLATE) * (b0 - a0);
    let interval = (a0 - pad, b0 + pad);
    let c = T::lit(0.5) * (interval.0 + interval.1);
    let g = T::lit(0.25) * (interval.1 - interval.0);

    let scaled = (tau * g).to_f64().unwrap_or(f64::INFINITY);
    let mut delta0 = T::one();
    if scaled > MAX_SCALED_HALF_WIDTH {
        let k = (scaled / MAX_SCALED_HALF_WIDTH).log2().ceil() as i32;
        delta0 = T::lit(2f64.powi(-k));
    }

    let mut kernel = LejaKernel {
        tau,
        c,
        g,
        interval,
        ctrl,
        scal: ctrl.tol_a + ctrl.tol_r * y_norm_inf.abs(),
        xi: fast_leja_points(ctrl.max_degree),
        cache: Vec::new(),
        matvecs: 0,
        last_estimate: T::zero(),
    };
    let mut res = compose(&mut kernel, &mut apply_j, tau, v, order, delta0)?;
    res.err_estimate = kernel.last_estimate;
    Ok(res)
}
