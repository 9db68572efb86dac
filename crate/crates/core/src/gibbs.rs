//! Systematic-scan Gibbs sampler for the tilted digit law.
//!
//! Changing `D_t` shifts every phase `j b^{s-1} U` with `s > t` by a whole
//! number of turns, so the full conditional of `D_t` only involves scales
//! `s <= t`. A candidate digit `d` gives the tail `v_t = (d + v_{t+1})/b`,
//! and the lower tails follow by Horner's rule; `v_{t+1}` does not depend on
//! `D_t` and is shared by all `b` candidates.

use serde::{Deserialize, Serialize};

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::rng::{DigitRng, RngSpec};
use crate::tilt::TiltSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub n_draws: usize,
    pub burn_in: usize,
    /// Sweeps between retained draws.
    pub thin: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { n_draws: 2000, burn_in: 1000, thin: 1 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// One Markov chain over digit strings of a fixed tilt.
pub struct GibbsSampler<'a> {
    tilt: &'a TiltSpec,
    digits: Vec<u8>,
    rng: DigitRng,
    orders: u32,
    /// `m^{-1/2}`.
    weight: f64,
    tails: Vec<f64>,
    logw: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// Starts the chain from i.i.d. uniform digits drawn from `rng`.
    pub fn new(tilt: &'a TiltSpec, rng: RngSpec) -> Self {
        let mut rng = DigitRng::new(rng);
        let m = tilt.precision();
        let b = tilt.base();
        let digits = (0..m).map(|_| rng.below(b) as u8).collect();
        GibbsSampler {
            tilt,
            digits,
            rng,
            orders: tilt.highest_order(),
            weight: 1.0 / (m as f64).sqrt(),
            tails: vec![0.0; m + 1],
            logw: vec![0.0; b as usize],
        }
    }

    pub fn state(&self) -> DigitStream {
        DigitStream::new(self.tilt.base(), self.digits.clone()).expect("valid state")
    }

    /// Replaces the current state (for tests and restarts).
    pub fn set_state(&mut self, ds: &DigitStream) -> Result<()> {
        if ds.base() != self.tilt.base() || ds.len() != self.tilt.precision() {
            return Err(Error::ShapeMismatch("state does not match the tilt".into()));
        }
        self.digits = ds.digits().to_vec();
        Ok(())
    }

    fn refresh_tails(&mut self) {
        let bf = f64::from(self.tilt.base());
        let m = self.digits.len();
        self.tails[m] = 0.0;
        for i in (0..m).rev() {
            self.tails[i] = (f64::from(self.digits[i]) + self.tails[i + 1]) / bf;
        }
    }

    /// Unnormalised log-weights of the candidates for position `i` (0-based),
    /// assuming `tails[i + 1]` is current. Result left in `self.logw`.
    fn candidate_logw(&mut self, i: usize) {
        let b = self.tilt.base();
        let bf = f64::from(b);
        let upper = self.tails[i + 1];
        for d in 0..b {
            let mut v = (f64::from(d) + upper) / bf;
            let mut h = self.tilt.scale_term(i + 1, v, self.orders);
            for s in (0..i).rev() {
                v = (f64::from(self.digits[s]) + v) / bf;
                h += self.tilt.scale_term(s + 1, v, self.orders);
            }
            self.logw[d as usize] = self.weight * h;
        }
    }

    /// Full conditional law of `D_t` (1-based) given the other digits.
    pub fn full_conditional(&mut self, t: usize) -> Result<Vec<f64>> {
        if t == 0 || t > self.digits.len() {
            return Err(Error::IndexOutOfRange { name: "t", value: t, max: self.digits.len() });
        }
        self.refresh_tails();
        self.candidate_logw(t - 1);
        Ok(softmax(&self.logw))
    }

    /// One systematic sweep `t = 1..m`.
    pub fn sweep(&mut self) {
        if self.orders == 0 {
            // null tilt: conditionals are exactly uniform
            let b = self.tilt.base();
            for i in 0..self.digits.len() {
                self.digits[i] = self.rng.below(b) as u8;
            }
            return;
        }
        // tails above the current position are untouched while sweeping upwards
        self.refresh_tails();
        for i in 0..self.digits.len() {
            self.candidate_logw(i);
            let max = self.logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in self.logw.iter_mut() {
                *w = (*w - max).exp();
                total += *w;
            }
            let mut u = self.rng.uniform() * total;
            let mut choice = self.logw.len() - 1;
            for (d, &w) in self.logw.iter().enumerate() {
                if u < w {
                    choice = d;
                    break;
                }
                u -= w;
            }
            self.digits[i] = choice as u8;
        }
    }

    /// Burn-in, then `n_draws` states each `thin` sweeps apart.
    pub fn run(&mut self, cfg: &GibbsConfig) -> Result<Vec<DigitStream>> {
        cfg.validate()?;
        for _ in 0..cfg.burn_in {
            self.sweep();
        }
        let mut draws = Vec::with_capacity(cfg.n_draws);
        for _ in 0..cfg.n_draws {
            for _ in 0..cfg.thin {
                self.sweep();
            }
            draws.push(self.state());
        }
        Ok(draws)
    }
}

fn softmax(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Draws from the tilted law on a single chain.
pub fn gibbs_sample(tilt: &TiltSpec, n_draws: usize, burn_in: usize, thin: usize, rng: RngSpec) -> Result<Vec<DigitStream>> {
    GibbsSampler::new(tilt, rng).run(&GibbsConfig { n_draws, burn_in, thin })
}
