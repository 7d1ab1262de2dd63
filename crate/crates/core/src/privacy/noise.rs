// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Noise distributions. Laplace families are parameterized by the scale `b`
//! of `exp(-|x - mu| / b)`, Gaussian families by the variance `sigma^2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Geometric, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseFamily {
    Laplace,
    DiscreteLaplace,
    Gaussian,
    DiscreteGaussian,
}

impl NoiseFamily {
    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            NoiseFamily::DiscreteLaplace | NoiseFamily::DiscreteGaussian
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    family: NoiseFamily,
    scale: f64,
    center: f64,
}

impl NoiseSpec {
    /// `scale` is `b` for Laplace families and `sigma^2` for Gaussian ones.
    pub fn new(family: NoiseFamily, scale: f64, center: f64) -> Result<NoiseSpec> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Unsupported(format!(
                "noise scale must be positive, got {scale}"
            )));
        }
        if !center.is_finite() || (family.is_discrete() && center.fract() != 0.0) {
            return Err(Error::Unsupported(format!(
                "{family:?} noise needs an integer center, got {center}"
            )));
        }
        Ok(NoiseSpec {
            family,
            scale,
            center,
        })
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Exact variance of the distribution.
    pub fn variance(&self) -> f64 {
        match self.family {
            NoiseFamily::Laplace => 2.0 * self.scale * self.scale,
            NoiseFamily::DiscreteLaplace => discrete_laplace_variance(self.scale),
            NoiseFamily::Gaussian => self.scale,
            NoiseFamily::DiscreteGaussian => {
                self.scale - discrete_gaussian_variance_deficit(self.scale)
            }
        }
    }
}

/// `2q / (1 - q)^2` with `q = exp(-1/b)`.
pub fn discrete_laplace_variance(b: f64) -> f64 {
    let q = (-1.0 / b).exp();
    let one_minus_q = -(-1.0 / b).exp_m1();
    2.0 * q / (one_minus_q * one_minus_q)
}

/// `sigma^2` minus the variance of the discrete Gaussian with parameter
/// `sigma^2`.
///
/// For `sigma^2 >= 1` this uses the dual (Poisson summation) form
/// `4 pi^2 sigma^4 sum_k k^2 e^(-2 pi^2 sigma^2 k^2) / sum_k e^(-2 pi^2 sigma^2 k^2)`,
/// whose terms are all positive, so tiny deficits keep full relative
/// precision. Smaller parameters sum the mass function directly.
pub fn discrete_gaussian_variance_deficit(sigma2: f64) -> f64 {
    if sigma2 >= 1.0 {
        let a = 2.0 * PI * PI * sigma2;
        let (mut num, mut den) = (0.0, 1.0);
        let mut k = 1.0_f64;
        loop {
            let w = (-a * k * k).exp();
            if w == 0.0 {
                break;
            }
            num += 2.0 * k * k * w;
            den += 2.0 * w;
            k += 1.0;
        }
        4.0 * PI * PI * sigma2 * sigma2 * num / den
    } else {
        let (mut num, mut den) = (0.0, 1.0);
        let mut x = 1.0_f64;
        loop {
            let w = (-x * x / (2.0 * sigma2)).exp();
            if w == 0.0 {
                break;
            }
            num += 2.0 * x * x * w;
            den += 2.0 * w;
            x += 1.0;
        }
        sigma2 - num / den
    }
}

fn laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    b * (e1 - e2)
}

fn discrete_laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let p = -(-1.0 / b).exp_m1();
    let geo = Geometric::new(p).expect("success probability in (0, 1]");
    let g1 = geo.sample(rng);
    let g2 = geo.sample(rng);
    g1 as f64 - g2 as f64
}

/// Rejection sampler with a discrete Laplace proposal of scale
/// `floor(sigma) + 1`.
fn discrete_gaussian<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> f64 {
    let sigma = sigma2.sqrt();
    let t = sigma.floor() + 1.0;
    loop {
        let y = discrete_laplace(t, rng);
        let d = y.abs() - sigma2 / t;
        let accept = (-d * d / (2.0 * sigma2)).exp();
        if rng.random::<f64>() < accept {
            return y;
        }
    }
}

pub fn sample_one<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> f64 {
    let noise = match spec.family {
        NoiseFamily::Laplace => laplace(spec.scale, rng),
        NoiseFamily::DiscreteLaplace => discrete_laplace(spec.scale, rng),
        NoiseFamily::Gaussian => Normal::new(0.0, spec.scale.sqrt())
            .expect("finite positive deviation")
            .sample(rng),
        NoiseFamily::DiscreteGaussian => discrete_gaussian(spec.scale, rng),
    };
    spec.center + noise
}

/// `count` independent draws.
pub fn sample<R: Rng + ?Sized>(spec: &NoiseSpec, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| sample_one(spec, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn discrete_families_return_integers() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for family in [NoiseFamily::DiscreteLaplace, NoiseFamily::DiscreteGaussian] {
            let spec = NoiseSpec::new(family, 2.5, 3.0).unwrap();
            assert!(sample(&spec, 2000, &mut rng)
                .iter()
                .all(|x| x.fract() == 0.0));
        }
    }

    #[test]
    fn laplace_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let spec = NoiseSpec::new(NoiseFamily::Laplace, 2.0, 0.0).unwrap();
        let xs = sample(&spec, 200_000, &mut rng);
        let (_, var) = moments(&xs);
        // fourth moment of Laplace(b) is 24 b^4
        let se = ((24.0 * 16.0 - 64.0) / xs.len() as f64).sqrt();
        assert!((var - 8.0).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn shifted_means() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for family in [
            NoiseFamily::Laplace,
            NoiseFamily::DiscreteLaplace,
            NoiseFamily::Gaussian,
            NoiseFamily::DiscreteGaussian,
        ] {
            let spec = NoiseSpec::new(family, 1.5, 7.0).unwrap();
            let xs = sample(&spec, 100_000, &mut rng);
            let (mean, _) = moments(&xs);
            let se = (spec.variance() / xs.len() as f64).sqrt();
            assert!((mean - 7.0).abs() < 4.0 * se, "{family:?} mean {mean}");
        }
    }

    #[test]
    fn discrete_variances() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for (family, scale) in [
            (NoiseFamily::DiscreteLaplace, 1.3),
            (NoiseFamily::DiscreteGaussian, 0.7),
        ] {
            let spec = NoiseSpec::new(family, scale, 0.0).unwrap();
            let xs = sample(&spec, 200_000, &mut rng);
            let (_, var) = moments(&xs);
            assert!(
                (var - spec.variance()).abs() < 0.03 * spec.variance(),
                "{family:?} {var}"
            );
        }
    }

    #[test]
    fn deficit_forms_agree() {
        // both branches near the switch point
        let direct = |s2: f64| {
            let (mut num, mut den) = (0.0, 0.0);
            for x in -60..=60 {
                let x = x as f64;
                let w = (-x * x / (2.0 * s2)).exp();
                num += x * x * w;
                den += w;
            }
            s2 - num / den
        };
        for s2 in [0.3, 0.8, 1.0, 1.2] {
            let d = discrete_gaussian_variance_deficit(s2);
            assert!(
                (d - direct(s2)).abs() < 1e-12,
                "{s2}: {d} vs {}",
                direct(s2)
            );
        }
    }

    #[test]
    fn integer_center_required() {
        assert!(NoiseSpec::new(NoiseFamily::DiscreteGaussian, 1.0, 0.5).is_err());
        assert!(NoiseSpec::new(NoiseFamily::Gaussian, 0.0, 0.0).is_err());
        assert!(NoiseSpec::new(NoiseFamily::Gaussian, 1.0, 0.5).is_ok());
    }
}
