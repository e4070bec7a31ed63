use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::seed;
use crate::types::DriverId;

const MIN_PHYSICAL: f64 = 0.01;

/// Krauss driver parameters plus a population share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverStyle {
    /// Max acceleration, m/s².
    pub acc: f64,
    /// Comfortable deceleration, m/s².
    pub dec: f64,
    /// Driver imperfection in [0, 1].
    pub sigma: f64,
    /// Desired max speed, m/s.
    pub s_max: f64,
    /// Minimum gap, m.
    pub g_min: f64,
    /// Reaction time, s.
    pub tau: f64,
    /// Population proportion.
    pub pr: f64,
}

impl DriverStyle {
    pub const fn new(acc: f64, dec: f64, sigma: f64, s_max: f64, g_min: f64, tau: f64, pr: f64) -> Self {
        Self {
            acc,
            dec,
            sigma,
            s_max,
            g_min,
            tau,
            pr,
        }
    }

    fn check(&self, index: usize) -> Result<(), SimError> {
        let fail = |reason: &str| {
            Err(SimError::StyleInvalid {
                index,
                reason: reason.to_string(),
            })
        };
        if !(self.tau >= 1.0) {
            return fail("reaction time must be at least 1 s");
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return fail("sigma must lie in [0, 1]");
        }
        if !(self.acc > 0.0 && self.dec > 0.0 && self.s_max > 0.0 && self.g_min > 0.0) {
            return fail("physical parameters must be positive");
        }
        if !(self.pr > 0.0 && self.pr <= 1.0) {
            return fail("proportion must lie in (0, 1]");
        }
        Ok(())
    }
}

/// The twelve designed driver styles.
pub fn designed_styles() -> Vec<DriverStyle> {
    vec![
        DriverStyle::new(2.5, 2.0, 0.5, 23.0, 2.6, 1.2, 0.08),
        DriverStyle::new(2.4, 2.5, 0.5, 23.0, 2.7, 1.3, 0.10),
        DriverStyle::new(3.1, 3.5, 0.6, 33.0, 1.2, 1.0, 0.12),
        DriverStyle::new(3.0, 3.4, 0.6, 33.0, 1.3, 1.0, 0.10),
        DriverStyle::new(2.8, 2.6, 0.55, 21.0, 2.8, 1.5, 0.12),
        DriverStyle::new(2.6, 2.5, 0.55, 21.0, 2.9, 1.7, 0.14),
        DriverStyle::new(2.9, 3.6, 0.64, 28.0, 1.5, 1.2, 0.08),
        DriverStyle::new(2.7, 3.4, 0.62, 28.0, 1.6, 1.3, 0.06),
        DriverStyle::new(2.3, 2.8, 0.53, 19.0, 2.6, 1.9, 0.08),
        DriverStyle::new(2.2, 2.9, 0.52, 19.0, 2.8, 2.0, 0.09),
        DriverStyle::new(2.6, 3.3, 0.59, 25.0, 1.8, 1.3, 0.02),
        DriverStyle::new(2.4, 3.1, 0.58, 25.0, 2.0, 1.4, 0.01),
    ]
}

/// Stock Krauss parameters (acc 2.6, dec 4.5, s_max 70, g_min 2.5, tau 1)
/// with the stock imperfection 0.5.
pub fn standard_style() -> DriverStyle {
    DriverStyle::new(2.6, 4.5, 0.5, 70.0, 2.5, 1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauss {
    pub mean: f64,
    pub sd: f64,
}

impl Gauss {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    const ZERO: Gauss = Gauss::new(0.0, 0.0);

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.sd * z
    }
}

/// Additive Gaussian perturbation per driver parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub acc: Gauss,
    pub dec: Gauss,
    pub sigma: Gauss,
    pub s_max: Gauss,
    pub g_min: Gauss,
    pub tau: Gauss,
}

impl NoiseSpec {
    pub fn standard() -> Self {
        Self {
            acc: Gauss::new(0.0, 0.15),
            dec: Gauss::new(0.0, 0.15),
            sigma: Gauss::new(0.0, 0.01),
            s_max: Gauss::new(2.0, 1.0),
            g_min: Gauss::new(0.0, 0.1),
            tau: Gauss::new(0.2, 0.05),
        }
    }

    pub fn zero() -> Self {
        Self {
            acc: Gauss::ZERO,
            dec: Gauss::ZERO,
            sigma: Gauss::ZERO,
            s_max: Gauss::ZERO,
            g_min: Gauss::ZERO,
            tau: Gauss::ZERO,
        }
    }

    fn check(&self) -> Result<(), SimError> {
        let all = [self.acc, self.dec, self.sigma, self.s_max, self.g_min, self.tau];
        if all.iter().any(|g| !(g.sd >= 0.0)) {
            return Err(SimError::ConfigInvalid(
                "noise standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Home and work nodes plus the leg order of the Manhattan route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEndpoints {
    pub home: usize,
    pub work: usize,
    pub x_first: bool,
}

/// One simulated driver with effective (noised, clamped) parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub id: DriverId,
    /// 1-based index into the style list.
    pub style_index: usize,
    pub acc: f64,
    pub dec: f64,
    pub sigma: f64,
    pub s_max: f64,
    pub g_min: f64,
    pub tau: f64,
    pub route: Option<RouteEndpoints>,
}

impl DriverProfile {
    pub fn from_style(id: DriverId, style_index: usize, s: &DriverStyle) -> Self {
        Self {
            id,
            style_index,
            acc: s.acc,
            dec: s.dec,
            sigma: s.sigma,
            s_max: s.s_max,
            g_min: s.g_min,
            tau: s.tau,
            route: None,
        }
    }
}

pub fn sample_driver_population(
    styles: &[DriverStyle],
    noise: &NoiseSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<DriverProfile>, SimError> {
    if styles.is_empty() {
        return Err(SimError::ConfigInvalid("no driver styles".into()));
    }
    for (i, s) in styles.iter().enumerate() {
        s.check(i + 1)?;
    }
    noise.check()?;
    let sum: f64 = styles.iter().map(|s| s.pr).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SimError::ProportionsDontSum { sum });
    }

    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let u: f64 = rng.random::<f64>() * sum;
        let mut acc = 0.0;
        let mut pick = styles.len() - 1;
        for (i, s) in styles.iter().enumerate() {
            acc += s.pr;
            if u < acc {
                pick = i;
                break;
            }
        }
        let s = &styles[pick];
        let mut p = DriverProfile::from_style(DriverId(id as u32), pick + 1, s);
        p.acc = (p.acc + noise.acc.draw(&mut rng)).max(MIN_PHYSICAL);
        p.dec = (p.dec + noise.dec.draw(&mut rng)).max(MIN_PHYSICAL);
        p.sigma = (p.sigma + noise.sigma.draw(&mut rng)).clamp(0.0, 1.0);
        p.s_max = (p.s_max + noise.s_max.draw(&mut rng)).max(MIN_PHYSICAL);
        p.g_min = (p.g_min + noise.g_min.draw(&mut rng)).max(MIN_PHYSICAL);
        p.tau = (p.tau + noise.tau.draw(&mut rng)).max(1.0);
        out.push(p);
    }
    Ok(out)
}
