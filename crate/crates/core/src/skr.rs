//! Finite-size secret key rate versus distance for reverse reconciliation
//! with homodyne detection and a trusted noisy detector.
//!
//! `SKR = 0.5 (1 - FER) (beta I(A;B) - S(B;E) - Delta(n)) * rate`, floored at 0.
//! Alice's modulation is chosen so that the SNR stays at `kappa(beta)` at
//! every distance. `S(B;E)` comes from an [`EveBound`] and `Delta` from a
//! [`FiniteSizeOffset`]; the defaults are the entangling-cloner Holevo bound
//! (optionally at worst-case estimated parameters) and the usual
//! `7 sqrt(log2(2/eps)/n) + (2/n) log2(1/eps_pa)` penalty.

use crate::channel::{beta_to_snr, capacity};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrModel {
    pub alpha_db_per_km: f64,
    pub eta: f64,
    pub v_el: f64,
    pub repetition_hz: f64,
    /// Raw symbols; `n_total - n_key` go to parameter estimation.
    pub n_total: u64,
    pub n_key: u64,
    pub eps_smooth: f64,
    pub eps_pa: f64,
    /// Confidence multiplier for worst-case parameter estimation.
    pub pe_z: f64,
    /// Evaluate the Holevo bound at worst-case estimated `T` and `xi`.
    pub worst_case_pe: bool,
    /// Include `Delta(n_key)`.
    pub finite_size: bool,
    pub xi_base: f64,
    pub xi_slope_per_km: f64,
    pub xi_knee_km: f64,
    pub r_code: f64,
    pub beta: f64,
}

impl Default for SkrModel {
    fn default() -> Self {
        SkrModel {
            alpha_db_per_km: 0.2,
            eta: 0.606,
            v_el: 0.41,
            repetition_hz: 5e6,
            n_total: 2_000_000,
            n_key: 1_000_000,
            eps_smooth: 1e-10,
            eps_pa: 1e-10,
            pe_z: 6.5,
            worst_case_pe: false,
            finite_size: true,
            xi_base: 0.01,
            xi_slope_per_km: 0.001,
            xi_knee_km: 100.0,
            r_code: 0.01995,
            beta: 1.0,
        }
    }
}

impl SkrModel {
    /// Infinite-key variant: no parameter-estimation margin, no `Delta`.
    pub fn asymptotic(mut self) -> Self {
        self.worst_case_pe = false;
        self.finite_size = false;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(self.v_el >= 0.0 && self.v_el.is_finite()) {
            return bad("v_el must be non-negative");
        }
        if self.n_key == 0 || self.n_key > self.n_total {
            return bad("need 0 < n_key <= n_total");
        }
        if self.worst_case_pe && self.n_total == self.n_key {
            return bad("worst-case estimation needs n_total > n_key");
        }
        if !(self.alpha_db_per_km >= 0.0 && self.repetition_hz > 0.0) {
            return bad("loss must be non-negative and repetition rate positive");
        }
        for e in [self.eps_smooth, self.eps_pa] {
            if !(e > 0.0 && e < 1.0) {
                return bad("epsilons must lie in (0, 1)");
            }
        }
        if !(self.pe_z >= 0.0 && self.xi_base >= 0.0 && self.xi_slope_per_km >= 0.0) {
            return bad("pe_z and excess-noise parameters must be non-negative");
        }
        beta_to_snr(self.r_code, self.beta).map(|_| ())
    }

    pub fn kappa(&self) -> Result<f64> {
        beta_to_snr(self.r_code, self.beta)
    }

    pub fn chi_hom(&self) -> f64 {
        (1.0 + self.v_el) / self.eta - 1.0
    }

    pub fn excess_noise(&self, d_km: f64) -> f64 {
        if d_km <= self.xi_knee_km {
            self.xi_base
        } else {
            self.xi_base + self.xi_slope_per_km * (d_km - self.xi_knee_km)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelState {
    pub transmittance: f64,
    pub xi: f64,
    pub chi_line: f64,
    pub chi_hom: f64,
    pub chi_tot: f64,
    pub v_a: f64,
}

impl ChannelState {
    fn new(model: &SkrModel, transmittance: f64, xi: f64, v_a: f64) -> Self {
        let chi_line = 1.0 / transmittance + xi - 1.0;
        let chi_hom = model.chi_hom();
        ChannelState {
            transmittance,
            xi,
            chi_line,
            chi_hom,
            chi_tot: chi_line + chi_hom / transmittance,
            v_a,
        }
    }
}

pub fn channel_at_distance(model: &SkrModel, d_km: f64) -> Result<ChannelState> {
    if !(d_km >= 0.0 && d_km.is_finite()) {
        return Err(Error::InvalidParameter(format!("distance must be non-negative, got {d_km}")));
    }
    let t = 10f64.powf(-model.alpha_db_per_km * d_km / 10.0);
    let mut s = ChannelState::new(model, t, model.excess_noise(d_km), 0.0);
    s.v_a = model.kappa()? * (1.0 + s.chi_tot);
    Ok(s)
}

/// `G(x) = (x+1) log2(x+1) - x log2 x`, with `G(0) = 0`.
pub fn g_entropy(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((x + 1.0) * (x + 1.0).ln() - x * x.ln()) / std::f64::consts::LN_2
}

/// Symplectic eigenvalues `(l1, l2, l3, l4)` of Eve's purification before
/// and after Bob's homodyne measurement.
pub fn symplectic_eigenvalues(s: &ChannelState) -> Result<[f64; 4]> {
    let v = s.v_a + 1.0;
    let t = s.transmittance;
    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + s.chi_line).powi(2);
    let b = t * t * (v * s.chi_line + 1.0).powi(2);
    let root_b = b.sqrt();
    let c = (a * s.chi_hom + v * root_b + t * (v + s.chi_line)) / (t * (v + s.chi_tot));
    let d = root_b * (v + root_b * s.chi_hom) / (t * (v + s.chi_tot));
    let pair = |p: f64, q: f64| -> Result<(f64, f64)> {
        let disc = p * p - 4.0 * q;
        if !(disc >= -1e-12 * p * p) || !(p.is_finite()) {
            return Err(Error::InvalidParameter("non-physical covariance matrix".into()));
        }
        let big = ((p + disc.max(0.0).sqrt()) / 2.0).sqrt();
        // the product of the squares is q; p - r cancels for large variances
        let small = if big > 0.0 { q.max(0.0).sqrt() / big } else { 0.0 };
        Ok((big, small))
    };
    let (l1, l2) = pair(a, b)?;
    let (l3, l4) = pair(c, d)?;
    Ok([l1, l2, l3, l4])
}

/// Upper bound on Eve's information about Bob's data.
pub trait EveBound {
    /// Bits per symbol; `f64::INFINITY` when no key can be certified.
    fn holevo(&self, model: &SkrModel, channel: &ChannelState) -> Result<f64>;
}

/// Finite-block penalty subtracted from the key fraction.
pub trait FiniteSizeOffset {
    fn delta(&self, model: &SkrModel) -> f64;
}

/// Collective attack by an entangling cloner, Gaussian optimal.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntanglingCloner;

impl EntanglingCloner {
    /// `chi_BE` for a given channel.
    pub fn chi_be(channel: &ChannelState) -> Result<f64> {
        let l = symplectic_eigenvalues(channel)?;
        let g = |x: f64| g_entropy((x - 1.0) / 2.0);
        Ok(g(l[0]) + g(l[1]) - g(l[2]) - g(l[3]))
    }

    /// Worst-case `(T, xi)` compatible with `m` estimation samples at
    /// `pe_z` standard deviations.
    pub fn worst_case(model: &SkrModel, channel: &ChannelState) -> Option<(f64, f64)> {
        let m = (model.n_total - model.n_key) as f64;
        let (eta, t) = (model.eta, channel.transmittance);
        let gain = (eta * t).sqrt();
        let sigma2 = 1.0 + eta * t * channel.xi + model.v_el;
        let t_min = gain - model.pe_z * (sigma2 / (m * channel.v_a)).sqrt();
        if t_min <= 0.0 {
            return None;
        }
        let sigma2_max = sigma2 + model.pe_z * sigma2 * (2.0 / m).sqrt();
        let tr = t_min * t_min / eta;
        Some((tr, (sigma2_max - 1.0 - model.v_el) / (eta * tr)))
    }
}

impl EveBound for EntanglingCloner {
    fn holevo(&self, model: &SkrModel, channel: &ChannelState) -> Result<f64> {
        if !model.worst_case_pe {
            return Self::chi_be(channel);
        }
        match Self::worst_case(model, channel) {
            Some((t, xi)) => Self::chi_be(&ChannelState::new(model, t, xi, channel.v_a)),
            None => Ok(f64::INFINITY),
        }
    }
}

/// `7 sqrt(log2(2/eps_smooth)/n) + (2/n) log2(1/eps_pa)` with `n = n_key`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardOffset;

impl FiniteSizeOffset for StandardOffset {
    fn delta(&self, model: &SkrModel) -> f64 {
        if !model.finite_size {
            return 0.0;
        }
        let n = model.n_key as f64;
        7.0 * ((2.0 / model.eps_smooth).log2() / n).sqrt() + 2.0 / n * (1.0 / model.eps_pa).log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkrPoint {
    pub distance_km: f64,
    pub beta: f64,
    pub fer: f64,
    /// `beta I - S - Delta` before the floor, bits per symbol.
    pub raw_fraction: f64,
    pub skr_bits_per_s: f64,
}

pub fn skr_with(model: &SkrModel, bound: &dyn EveBound, offset: &dyn FiniteSizeOffset, d_km: f64, fer: f64) -> Result<SkrPoint> {
    model.validate()?;
    if !(0.0..=1.0).contains(&fer) {
        return Err(Error::InvalidParameter(format!("FER must lie in [0, 1], got {fer}")));
    }
    let ch = channel_at_distance(model, d_km)?;
    let info = capacity(model.kappa()?);
    let raw = model.beta * info - bound.holevo(model, &ch)? - offset.delta(model);
    let skr = if raw > 0.0 {
        0.5 * (1.0 - fer) * raw * model.repetition_hz
    } else {
        0.0
    };
    Ok(SkrPoint {
        distance_km: d_km,
        beta: model.beta,
        fer,
        raw_fraction: raw,
        skr_bits_per_s: skr,
    })
}

/// Bits per second with the default bounds.
pub fn skr(model: &SkrModel, d_km: f64, fer: f64) -> Result<f64> {
    Ok(skr_with(model, &EntanglingCloner, &StandardOffset, d_km, fer)?.skr_bits_per_s)
}

/// Largest distance with positive key, searched on `[0, limit_km]`: a scan
/// at `step_km` then bisection to 1e-6 km past the last positive grid point.
/// `None` if no grid point has key.
pub fn max_distance(model: &SkrModel, fer: f64, limit_km: f64, step_km: f64) -> Result<Option<f64>> {
    if !(step_km > 0.0 && limit_km >= 0.0) {
        return Err(Error::InvalidParameter("need a positive step and non-negative limit".into()));
    }
    let positive = |d: f64| skr(model, d, fer).map(|s| s > 0.0);
    let steps = (limit_km / step_km + 1e-9).floor() as usize;
    let mut last = None;
    for i in 0..=steps {
        let d = i as f64 * step_km;
        if positive(d)? {
            last = Some(i);
        }
    }
    let Some(i) = last else {
        return Ok(None);
    };
    let mut lo = i as f64 * step_km;
    if i == steps {
        return Ok(Some(lo));
    }
    let mut hi = lo + step_km;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
