//! Signal processing on V0 in the eigenbasis of a subgraph operator, plus signal generators.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Spectrum};
use crate::operators::{OrderedEigenbasis, SubgraphOperator};

/// Task parameters shared by the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub theta_c: f64,
    pub theta_a: f64,
    pub theta_d: f64,
    pub s_d: f64,
    pub tau: f64,
    pub p: f64,
    pub snr_db: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { theta_c: 0.4, theta_a: 0.35, theta_d: 0.2, s_d: 0.3, tau: 1.1, p: 1.0, snr_db: 8.0 }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64, hi_inclusive: bool| {
            let ok = v > 0.0 && (v < 1.0 || (hi_inclusive && v == 1.0));
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} out of range")))
            }
        };
        frac("theta_c", self.theta_c, true)?;
        frac("theta_a", self.theta_a, false)?;
        frac("theta_d", self.theta_d, true)?;
        if !(0.0..1.0).contains(&self.s_d) && self.s_d != 1.0 {
            return Err(Error::Config(format!("s_d = {} out of range", self.s_d)));
        }
        if !(self.tau > 1.0) {
            return Err(Error::Config(format!("tau = {} must exceed 1", self.tau)));
        }
        if !(self.p >= 0.0) || !self.snr_db.is_finite() {
            return Err(Error::Config("p must be ≥ 0 and snr_db finite".into()));
        }
        Ok(())
    }
}

/// Number of leading indices in the "first θ fraction": ⌊θ m⌋.
pub fn leading_count(theta: f64, m: usize) -> usize {
    ((theta * m as f64 + 1e-9).floor() as usize).min(m)
}

/// First index of the anomaly band: ⌈θ m⌉.
pub fn band_start(theta: f64, m: usize) -> usize {
    ((theta * m as f64 - 1e-9).ceil().max(0.0) as usize).min(m)
}

/// Magnitude-ordered orthonormal eigenbasis of an operator, used as a Fourier basis on V0.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierBasis {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GftCoefficients {
    pub values: DVector<f64>,
}

impl FourierBasis {
    pub fn new(op: &SubgraphOperator) -> Result<Self> {
        let OrderedEigenbasis { values, vectors } = op.eigenbasis_magnitude_ordered()?;
        Ok(Self { values, vectors })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gft(&self, x: &DVector<f64>) -> Result<GftCoefficients> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: x.len() });
        }
        Ok(GftCoefficients { values: self.vectors.transpose() * x })
    }

    pub fn igft(&self, c: &GftCoefficients) -> Result<DVector<f64>> {
        if c.values.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: c.values.len() });
        }
        Ok(&self.vectors * &c.values)
    }

    /// Keeps the first ⌊θ_c m⌋ coefficients; returns the compressed signal and the relative error.
    pub fn compress(&self, c: &GftCoefficients, theta_c: f64) -> Result<(DVector<f64>, f64)> {
        if !(theta_c > 0.0 && theta_c <= 1.0) {
            return Err(Error::InvalidParams(format!("theta_c = {theta_c} outside (0, 1]")));
        }
        let x = self.igft(c)?;
        let nx = x.norm();
        if nx == 0.0 {
            return Err(Error::ZeroSignal);
        }
        let keep = leading_count(theta_c, self.len());
        let mut kept = c.values.clone();
        kept.rows_mut(keep, self.len() - keep).fill(0.0);
        let xc = &self.vectors * kept;
        let err = (&x - &xc).norm() / nx;
        Ok((xc, err))
    }

    /// Scales coefficients i ≥ ⌊θ_d m⌋ by s_d.
    pub fn denoise(&self, noisy: &DVector<f64>, theta_d: f64, s_d: f64) -> Result<DVector<f64>> {
        let mut c = self.gft(noisy)?;
        let start = leading_count(theta_d, self.len());
        for i in start..self.len() {
            c.values[i] *= s_d;
        }
        self.igft(&c)
    }
}

/// m(x) = max_{i ≥ ⌈θ_a m⌉} |x̂(i)|.
pub fn anomaly_score(c: &GftCoefficients, theta_a: f64) -> Result<f64> {
    if !(theta_a > 0.0 && theta_a < 1.0) {
        return Err(Error::InvalidParams(format!("theta_a = {theta_a} outside (0, 1)")));
    }
    let m = c.values.len();
    Ok((band_start(theta_a, m)..m).map(|i| c.values[i].abs()).fold(0.0, f64::max))
}

/// Declares an anomaly when m_test / m_ref > τ.
pub fn detect(m_ref: f64, m_test: f64, tau: f64) -> Result<bool> {
    if m_ref < 1e-12 {
        return Err(Error::DegenerateReference(m_ref));
    }
    Ok(m_test / m_ref > tau)
}

/// r_e = ‖x − x̃‖ / ‖x − x_α‖.
pub fn error_ratio(x: &DVector<f64>, noisy: &DVector<f64>, denoised: &DVector<f64>) -> Result<f64> {
    let base = (x - noisy).norm();
    if base == 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok((x - denoised).norm() / base)
}

/// Σ_{i < bandwidth} c_i y_i with c_i ~ U[0, 1].
pub fn bandlimited<R: Rng + ?Sized>(s: &Spectrum, bandwidth: usize, rng: &mut R) -> Result<DVector<f64>> {
    let n = s.values.len();
    if bandwidth == 0 || bandwidth > n {
        return Err(Error::InvalidBandwidth { bandwidth, n });
    }
    let mut y = DVector::zeros(n);
    for i in 0..bandwidth {
        let c: f64 = rng.gen();
        y += s.vectors.column(i) * c;
    }
    Ok(y)
}

/// Infection times of a discrete-time SI process from a uniformly random source.
pub fn si_timestamps<R: Rng + ?Sized>(g: &Graph, rate: f64, rng: &mut R) -> Result<DVector<f64>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParams(format!("SI rate {rate} outside (0, 1]")));
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let n = g.n();
    let source = rng.gen_range(0..n);
    let mut time = vec![usize::MAX; n];
    time[source] = 0;
    let mut infected = vec![source];
    let mut t = 0;
    while infected.len() < n {
        t += 1;
        let mut fresh = Vec::new();
        for &u in &infected {
            for &(v, _) in g.neighbors(u) {
                if time[v] == usize::MAX && (rate >= 1.0 || rng.gen::<f64>() < rate) {
                    time[v] = t;
                    fresh.push(v);
                }
            }
        }
        infected.extend(fresh);
    }
    Ok(DVector::from_iterator(n, time.into_iter().map(|t| t as f64)))
}

/// Adds white Gaussian noise scaled to the exact target SNR (dB).
pub fn add_noise_snr<R: Rng + ?Sized>(x: &DVector<f64>, snr_db: f64, rng: &mut R) -> Result<DVector<f64>> {
    let power = x.norm_squared();
    if power == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let noise: DVector<f64> = DVector::from_fn(x.len(), |_, _| StandardNormal.sample(rng));
    let target = power / 10f64.powf(snr_db / 10.0);
    let nn = noise.norm_squared();
    if nn == 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok(x + noise * (target / nn).sqrt())
}

/// Adds ±p (random sign) at one uniformly chosen vertex; returns the vertex.
pub fn perturb_one<R: Rng + ?Sized>(x: &DVector<f64>, p: f64, rng: &mut R) -> (DVector<f64>, usize) {
    let v = rng.gen_range(0..x.len());
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let mut y = x.clone();
    y[v] += sign * p;
    (y, v)
}
