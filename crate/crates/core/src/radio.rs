//! Downlink link budget: WINNER II indoor path loss, wall penetration,
//! log-normal shadowing, thermal noise, SINR and Shannon spectral efficiency.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
/// Propagation distances are clamped to this before path-loss evaluation.
pub const MIN_PROPAGATION_DISTANCE_M: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub carrier_freq_ghz: f64,
    pub internal_wall_loss_db: f64,
    pub external_wall_loss_per_wall_db: f64,
    pub n_external_walls_interference: u32,
    pub shadowing_sigma_db: f64,
    pub ms_noise_figure_db: f64,
    pub channel_width_hz: f64,
    /// Macro BS power. Kept for completeness; macro and femto tiers use
    /// disjoint channels so it never enters a femto SINR.
    pub macro_tx_dbm: f64,
    /// Optional ceiling on spectral efficiency, bps/Hz.
    pub se_cap: Option<f64>,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 2.0,
            internal_wall_loss_db: 5.0,
            external_wall_loss_per_wall_db: 10.0,
            n_external_walls_interference: 2,
            shadowing_sigma_db: 6.0,
            ms_noise_figure_db: 8.0,
            channel_width_hz: 180_000.0,
            macro_tx_dbm: 46.0,
            se_cap: None,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let losses = [
            self.internal_wall_loss_db,
            self.external_wall_loss_per_wall_db,
            self.shadowing_sigma_db,
            self.ms_noise_figure_db,
        ];
        if losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(invalid(
                "losses, noise figure and shadowing sigma must be >= 0",
            ));
        }
        if !(self.carrier_freq_ghz > 0.0 && self.carrier_freq_ghz.is_finite()) {
            return Err(invalid("carrier frequency must be > 0"));
        }
        if !(self.channel_width_hz > 0.0 && self.channel_width_hz.is_finite()) {
            return Err(invalid("channel width must be > 0"));
        }
        if let Some(cap) = self.se_cap {
            if !(cap > 0.0) {
                return Err(invalid("se_cap must be > 0"));
            }
        }
        Ok(())
    }

    /// Total wall loss on an interfering FAP-to-MS path.
    pub fn interference_wall_loss_db(&self) -> f64 {
        self.external_wall_loss_per_wall_db * f64::from(self.n_external_walls_interference)
    }

    /// Serving FAP to its own MS: NLOS through internal walls.
    pub fn signal_path_loss(&self, d: f64) -> f64 {
        nlos_unchecked(
            clamp_distance(d),
            self.carrier_freq_ghz,
            self.internal_wall_loss_db,
        )
    }

    /// Neighbouring FAP to a foreign MS: NLOS through external walls.
    pub fn interference_path_loss(&self, d: f64) -> f64 {
        nlos_unchecked(
            clamp_distance(d),
            self.carrier_freq_ghz,
            self.interference_wall_loss_db(),
        )
    }

    pub fn shadowing(&self) -> Shadowing {
        Shadowing::new(self.shadowing_sigma_db)
    }
}

pub fn clamp_distance(d: f64) -> f64 {
    d.max(MIN_PROPAGATION_DISTANCE_M)
}

fn check_distance(d: f64, f_c: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("distance must be > 0, got {d}")));
    }
    if !(f_c > 0.0 && f_c.is_finite()) {
        return Err(invalid(format!("carrier frequency must be > 0, got {f_c}")));
    }
    Ok(())
}

fn nlos_unchecked(d: f64, f_c: f64, wall_loss: f64) -> f64 {
    20.0 * d.log10() + 46.4 + 20.0 * (f_c / 5.0).log10() + wall_loss
}

/// WINNER II indoor LOS path loss in dB (`d` in metres, `f_c` in GHz).
pub fn path_loss_los(d: f64, f_c: f64) -> Result<f64> {
    check_distance(d, f_c)?;
    Ok(18.7 * d.log10() + 46.8 + 20.0 * (f_c / 5.0).log10())
}

/// WINNER II indoor NLOS path loss in dB including `total_wall_loss`.
pub fn path_loss_nlos(d: f64, f_c: f64, total_wall_loss: f64) -> Result<f64> {
    check_distance(d, f_c)?;
    if !(total_wall_loss >= 0.0) {
        return Err(invalid(format!(
            "wall loss must be >= 0, got {total_wall_loss}"
        )));
    }
    Ok(nlos_unchecked(d, f_c, total_wall_loss))
}

/// Receiver noise floor over one channel, dBm.
pub fn noise_power(params: &RadioParams) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * params.channel_width_hz.log10() + params.ms_noise_figure_db
}

/// `tx - pl + shadowing_db`; the shadowing draw is the caller's.
pub fn received_power(tx_dbm: f64, pl_db: f64, shadowing_db: f64) -> f64 {
    tx_dbm - pl_db + shadowing_db
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Zero-mean Gaussian shadowing in dB.
#[derive(Debug, Clone, Copy)]
pub struct Shadowing {
    normal: Option<Normal<f64>>,
}

impl Shadowing {
    pub fn new(sigma_db: f64) -> Self {
        let normal = (sigma_db > 0.0).then(|| Normal::new(0.0, sigma_db).expect("finite sigma"));
        Self { normal }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normal.map_or(0.0, |n| n.sample(rng))
    }
}

/// Powers entering one SINR evaluation, all in dBm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkSample {
    pub carrier_power: f64,
    pub interference_powers: Vec<f64>,
    pub noise_power: f64,
}

/// Carrier over interference-plus-noise, summed in milliwatts, returned in dB.
pub fn sinr(link: &LinkSample) -> f64 {
    let interference: f64 = link.interference_powers.iter().map(|&p| dbm_to_mw(p)).sum();
    let denom = interference + dbm_to_mw(link.noise_power);
    mw_to_dbm(dbm_to_mw(link.carrier_power) / denom)
}

/// Shannon bound `log2(1 + SINR)`, optionally capped.
pub fn spectral_efficiency(sinr_db: f64, cap: Option<f64>) -> f64 {
    let se = (1.0 + 10f64.powf(sinr_db / 10.0)).log2();
    match cap {
        Some(c) => se.min(c),
        None => se,
    }
}

/// Smallest distance at which an interferer transmitting `interferer_tx_dbm`
/// is received at or below `threshold_dbm`, using the interference NLOS model
/// without shadowing.
pub fn safety_distance_from_threshold(
    threshold_dbm: f64,
    interferer_tx_dbm: f64,
    params: &RadioParams,
) -> Result<f64> {
    let wall = params.interference_wall_loss_db();
    let max_dbm = received_power(
        interferer_tx_dbm,
        path_loss_nlos(MIN_PROPAGATION_DISTANCE_M, params.carrier_freq_ghz, wall)?,
        0.0,
    );
    if !threshold_dbm.is_finite() || threshold_dbm > max_dbm {
        return Err(Error::ThresholdNotInvertible {
            threshold_dbm,
            max_dbm,
        });
    }
    let required_pl = interferer_tx_dbm - threshold_dbm;
    let log_term = required_pl - 46.4 - 20.0 * (params.carrier_freq_ghz / 5.0).log10() - wall;
    Ok(10f64.powf(log_term / 20.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn los_examples() {
        assert!(close(path_loss_los(1.0, 5.0).unwrap(), 46.8, 1e-12));
        assert!(close(path_loss_los(10.0, 2.0).unwrap(), 57.54, 0.005));
        let decade = path_loss_los(100.0, 2.0).unwrap() - path_loss_los(10.0, 2.0).unwrap();
        assert!(close(decade, 18.7, 1e-9));
        assert!(path_loss_los(0.0, 2.0).is_err());
        assert!(path_loss_los(-1.0, 2.0).is_err());
    }

    #[test]
    fn nlos_examples() {
        assert!(close(path_loss_nlos(1.0, 5.0, 0.0).unwrap(), 46.4, 1e-12));
        assert!(close(
            path_loss_nlos(20.0, 2.0, 20.0).unwrap(),
            84.46,
            0.005
        ));
        assert!(close(path_loss_nlos(20.0, 2.0, 5.0).unwrap(), 69.46, 0.005));
        assert!(path_loss_nlos(0.0, 2.0, 5.0).is_err());
        assert!(path_loss_nlos(1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn noise_examples() {
        let p = RadioParams::default();
        assert!(close(noise_power(&p), -113.45, 0.005));
        let one_hz = RadioParams {
            channel_width_hz: 1.0,
            ms_noise_figure_db: 0.0,
            ..p.clone()
        };
        assert_eq!(noise_power(&one_hz), -174.0);
        let nf0 = RadioParams {
            ms_noise_figure_db: 0.0,
            ..p
        };
        assert!(close(noise_power(&nf0), -121.45, 0.005));
    }

    #[test]
    fn received_power_examples() {
        let pl = path_loss_nlos(20.0, 2.0, 20.0).unwrap();
        assert!(close(received_power(10.0, pl, 0.0), -74.46, 0.005));
        assert_eq!(received_power(10.0, 0.0, 0.0), 10.0);
    }

    #[test]
    fn shadowing_sigma_matches() {
        let sh = Shadowing::new(6.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sh.sample(&mut rng);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        assert!(close(sd, 6.0, 0.05), "{sd}");
        assert_eq!(Shadowing::new(0.0).sample(&mut rng), 0.0);
    }

    #[test]
    fn sinr_examples() {
        let snr = LinkSample {
            carrier_power: -74.0,
            interference_powers: vec![],
            noise_power: -74.0,
        };
        assert!(close(sinr(&snr), 0.0, 1e-12));

        // -60 - 10log10(1e-7 + 10^-11.345)
        let one = LinkSample {
            carrier_power: -60.0,
            interference_powers: vec![-70.0],
            noise_power: -113.45,
        };
        assert!(close(sinr(&one), 9.9998, 1e-4));

        let two = LinkSample {
            carrier_power: -60.0,
            interference_powers: vec![-70.0, -70.0],
            noise_power: -200.0,
        };
        assert!(close(sinr(&two), 6.99, 0.005));
    }

    #[test]
    fn se_examples() {
        assert_eq!(spectral_efficiency(0.0, None), 1.0);
        assert!(close(spectral_efficiency(10.0, None), 11f64.log2(), 1e-12));
        assert!(close(spectral_efficiency(10.0, None), 3.459, 0.0005));
        assert!(spectral_efficiency(-300.0, None) < 1e-20);
        assert_eq!(spectral_efficiency(30.0, Some(6.0)), 6.0);
    }

    #[test]
    fn safety_distance_round_trip() {
        let p = RadioParams::default();
        let thr = received_power(10.0, path_loss_nlos(20.0, 2.0, 20.0).unwrap(), 0.0);
        assert!(close(
            safety_distance_from_threshold(thr, 10.0, &p).unwrap(),
            20.0,
            1e-9
        ));
        let d = safety_distance_from_threshold(thr - 20.0 * 2f64.log10(), 10.0, &p).unwrap();
        assert!(close(d, 40.0, 1e-9));
    }

    #[test]
    fn safety_distance_rejects_unreachable_threshold() {
        let p = RadioParams::default();
        assert!(matches!(
            safety_distance_from_threshold(0.0, 10.0, &p),
            Err(Error::ThresholdNotInvertible { .. })
        ));
    }
}
