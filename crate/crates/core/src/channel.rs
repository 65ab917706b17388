//! Scalar link budget: distance path loss, Shannon rate and payload latency.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("distances must be positive (d0 = {d0_m}, d = {d_m})")]
    NonPositiveDistance { d0_m: f64, d_m: f64 },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("transmission rate must be positive, got {0}")]
    ZeroRate(f64),
    #[error("quantisation must use at least one bit per element")]
    ZeroQuantization,
}

/// Link parameters. Defaults: −30 dB reference loss at 10 m, 500 m link,
/// exponent 3, 1 MHz, −174 dBm/Hz noise, 10 dBm transmit power, 32-bit elements.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    pub beta0_db: f64,
    pub d0_m: f64,
    pub d_m: f64,
    pub zeta: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub power_dbm: f64,
    /// Bits per transmitted element.
    pub q_bits: u32,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            beta0_db: -30.0,
            d0_m: 10.0,
            d_m: 500.0,
            zeta: 3.0,
            bandwidth_hz: 1e6,
            noise_dbm_per_hz: -174.0,
            power_dbm: 10.0,
            q_bits: 32,
        }
    }
}

fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0) / 1000.0
}

/// Linear power gain `10^(β₀/10) · (d/d₀)^(−ζ)`.
pub fn path_loss(params: &ChannelParams) -> Result<f64, ChannelError> {
    if !(params.d0_m > 0.0 && params.d_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance {
            d0_m: params.d0_m,
            d_m: params.d_m,
        });
    }
    Ok(libm::pow(10.0, params.beta0_db / 10.0) * libm::pow(params.d_m / params.d0_m, -params.zeta))
}

/// `B · log₂(1 + p·g / (B·N₀))` in bits per second.
pub fn achievable_rate(params: &ChannelParams) -> Result<f64, ChannelError> {
    if !(params.bandwidth_hz > 0.0) {
        return Err(ChannelError::NonPositiveBandwidth(params.bandwidth_hz));
    }
    let g = path_loss(params)?;
    let snr = dbm_to_watts(params.power_dbm) * g
        / (params.bandwidth_hz * dbm_to_watts(params.noise_dbm_per_hz));
    Ok(params.bandwidth_hz * libm::log2(1.0 + snr))
}

/// Seconds to send `elements` values of `q_bits` bits each at `rate` bits/s.
pub fn latency(elements: usize, params: &ChannelParams, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0) {
        return Err(ChannelError::ZeroRate(rate));
    }
    if params.q_bits == 0 {
        return Err(ChannelError::ZeroQuantization);
    }
    Ok(elements as f64 * f64::from(params.q_bits) / rate)
}
