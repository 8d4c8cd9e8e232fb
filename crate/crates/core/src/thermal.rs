//! Glauber dynamics of X errors against the Z checks, simulated with the
//! rejection-free n-fold way and a geometric decoding schedule.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::cluster::ClusterDecoder;
use crate::concat::ConcatDecoder;
use crate::f2::BitVector;
use crate::layer::{LayerCode, LogicalBasis};

#[derive(Debug, Error, PartialEq)]
pub enum ThermalError {
    #[error("no spin can flip")]
    Frozen,
    #[error("decoder: {0}")]
    Decoder(String),
    #[error("decoder output does not reproduce the syndrome")]
    InvalidCorrection,
    #[error("system too large for exact enumeration ({0} spins)")]
    TooLarge(usize),
}

/// Syndrome-to-correction map used to probe the memory.
pub trait SyndromeDecoder: Sync {
    fn correct(&self, syndrome: &BitVector) -> Result<BitVector, String>;
}

impl SyndromeDecoder for ClusterDecoder {
    fn correct(&self, syndrome: &BitVector) -> Result<BitVector, String> {
        self.decode(syndrome).map_err(|e| e.to_string())
    }
}

impl SyndromeDecoder for ConcatDecoder<'_> {
    fn correct(&self, syndrome: &BitVector) -> Result<BitVector, String> {
        self.decode(syndrome).map_err(|e| e.to_string())
    }
}

/// Flip rate 1 / (1 + e^{βΔE}).
pub fn glauber_rate<F: Float>(beta: F, delta_e: i32) -> F {
    let x = beta * F::from(delta_e).unwrap();
    F::one() / (F::one() + x.exp())
}

/// Spins against a set of checks with H(σ) = -½ Σ_s Π_{i∈s} σ_i.
#[derive(Clone, Debug)]
pub struct SpinSystem<F> {
    checks: Vec<Vec<usize>>,
    spin_checks: Vec<Vec<usize>>,
    down: BitVector,
    check_sign: Vec<i8>,
    delta: Vec<i32>,
    /// Sum of check products; H = -sum/2.
    product_sum: i64,
    offset: i32,
    members: Vec<Vec<usize>>,
    position: Vec<usize>,
    rates: Vec<F>,
    beta: F,
}

impl<F: Float> SpinSystem<F> {
    /// All spins up.
    pub fn new(num_spins: usize, checks: Vec<Vec<usize>>, beta: F) -> Self {
        let mut spin_checks = vec![Vec::new(); num_spins];
        for (c, s) in checks.iter().enumerate() {
            for &i in s {
                spin_checks[i].push(c);
            }
        }
        let offset = spin_checks.iter().map(Vec::len).max().unwrap_or(0) as i32;
        let classes = (2 * offset + 1) as usize;
        let rates = (0..classes).map(|k| glauber_rate(beta, k as i32 - offset)).collect();
        let mut sys = SpinSystem {
            down: BitVector::zeros(num_spins),
            check_sign: vec![1; checks.len()],
            delta: vec![0; num_spins],
            product_sum: checks.len() as i64,
            offset,
            members: vec![Vec::new(); classes],
            position: vec![0; num_spins],
            rates,
            beta,
            checks,
            spin_checks,
        };
        for i in 0..num_spins {
            let d = sys.spin_checks[i].len() as i32;
            sys.delta[i] = d;
            let class = &mut sys.members[(d + offset) as usize];
            sys.position[i] = class.len();
            class.push(i);
        }
        sys
    }

    pub fn from_layer(layer: &LayerCode, beta: F) -> Self {
        Self::new(layer.num_qubits(), layer.z_checks().to_vec(), beta)
    }

    pub fn num_spins(&self) -> usize {
        self.delta.len()
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    /// Flipped spins, as an X error.
    pub fn error(&self) -> &BitVector {
        &self.down
    }

    pub fn delta_e(&self, i: usize) -> i32 {
        self.delta[i]
    }

    /// Twice the energy, which is always an integer.
    pub fn energy_twice(&self) -> i64 {
        -self.product_sum
    }

    pub fn class_size(&self, delta_e: i32) -> usize {
        self.members[(delta_e + self.offset) as usize].len()
    }

    pub fn rate(&self, delta_e: i32) -> F {
        self.rates[(delta_e + self.offset) as usize]
    }

    /// Σ_j P_j |M_j|.
    pub fn total_rate(&self) -> F {
        self.rates
            .iter()
            .zip(&self.members)
            .fold(F::zero(), |acc, (&p, m)| acc + p * F::from(m.len()).unwrap())
    }

    fn move_class(&mut self, i: usize, from: i32, to: i32) {
        let (a, b) = ((from + self.offset) as usize, (to + self.offset) as usize);
        let p = self.position[i];
        self.members[a].swap_remove(p);
        if let Some(&moved) = self.members[a].get(p) {
            self.position[moved] = p;
        }
        self.position[i] = self.members[b].len();
        self.members[b].push(i);
    }

    pub fn flip(&mut self, i: usize) {
        self.down.flip(i);
        for k in 0..self.spin_checks[i].len() {
            let c = self.spin_checks[i][k];
            let old = self.check_sign[c];
            self.check_sign[c] = -old;
            self.product_sum -= 2 * old as i64;
            // Every spin in the check sees this product change sign.
            for m in 0..self.checks[c].len() {
                let j = self.checks[c][m];
                let before = self.delta[j];
                let after = before - 2 * old as i32;
                self.delta[j] = after;
                self.move_class(j, before, after);
            }
        }
    }

    /// Recomputes every ΔE and the energy from scratch and compares them
    /// with the incremental values.
    pub fn consistent(&self) -> bool {
        let sign = |c: &Vec<usize>| -> i64 {
            if c.iter().filter(|&&i| self.down.get(i)).count() % 2 == 0 {
                1
            } else {
                -1
            }
        };
        let signs: Vec<i64> = self.checks.iter().map(sign).collect();
        if signs.iter().sum::<i64>() != self.product_sum {
            return false;
        }
        (0..self.num_spins()).all(|i| {
            let d: i64 = self.spin_checks[i].iter().map(|&c| signs[c]).sum();
            d == self.delta[i] as i64 && self.members[(self.delta[i] + self.offset) as usize][self.position[i]] == i
        })
    }

    /// One n-fold-way event: picks a class with probability P_j|M_j|/Σ, a
    /// uniform spin within it, flips it, and returns the spin and the
    /// holding time Exp(1)/Σ of the state before the flip.
    pub fn nfold_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(usize, F), ThermalError> {
        let total = self.total_rate();
        if total <= F::zero() {
            return Err(ThermalError::Frozen);
        }
        let r = F::from(rng.gen::<f64>()).unwrap() * total;
        let mut acc = F::zero();
        let mut chosen = None;
        let mut last = None;
        for (k, m) in self.members.iter().enumerate() {
            if m.is_empty() || self.rates[k] <= F::zero() {
                continue;
            }
            last = Some(k);
            acc = acc + self.rates[k] * F::from(m.len()).unwrap();
            if r < acc {
                chosen = Some(k);
                break;
            }
        }
        // Rounding can leave r at the very top of the range.
        let k = chosen.or(last).ok_or(ThermalError::Frozen)?;
        let i = self.members[k][rng.gen_range(0..self.members[k].len())];
        self.flip(i);
        let wait: f64 = rng.sample(Exp1);
        Ok((i, F::from(wait).unwrap() / total))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig<F> {
    pub beta: F,
    pub seed: u64,
    pub trial: u64,
    pub t_max: F,
    /// Next decode after this fraction of the elapsed time.
    pub decode_growth: F,
}

impl<F: Float> TrialConfig<F> {
    pub fn new(beta: F, seed: u64, trial: u64, t_max: F) -> Self {
        TrialConfig {
            beta,
            seed,
            trial,
            t_max,
            decode_growth: F::from(0.1).unwrap(),
        }
    }

    /// Independent stream per (seed, trial).
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trial);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult<F> {
    /// Failure time, or `None` when censored at `t_max`.
    pub t_fail: Option<F>,
    /// Clock when the trial stopped.
    pub t_end: F,
    pub flips: u64,
    pub decodes: u64,
}

/// Runs one memory trial from the all-up state. `decode` maps (error,
/// syndrome) to a correction.
pub fn run_trial_with<F, D>(
    mut sys: SpinSystem<F>,
    config: &TrialConfig<F>,
    basis: &LogicalBasis,
    syndrome_of: impl Fn(&BitVector) -> BitVector,
    mut decode: D,
) -> Result<TrialResult<F>, ThermalError>
where
    F: Float,
    D: FnMut(&BitVector, &BitVector) -> Result<BitVector, String>,
{
    let mut rng = config.rng();
    let mut t = F::zero();
    let mut t_dec = F::zero();
    let mut flips = 0;
    let mut decodes = 0;
    loop {
        let (_, dt) = sys.nfold_step(&mut rng)?;
        flips += 1;
        t = t + dt;
        t_dec = t_dec - dt;
        if t > config.t_max {
            return Ok(TrialResult {
                t_fail: None,
                t_end: config.t_max,
                flips,
                decodes,
            });
        }
        if t_dec <= F::zero() {
            decodes += 1;
            let error = sys.error();
            let syndrome = syndrome_of(error);
            let correction = decode(error, &syndrome).map_err(ThermalError::Decoder)?;
            let residual = error ^ &correction;
            if !syndrome_of(&residual).is_zero() {
                return Err(ThermalError::InvalidCorrection);
            }
            if basis.x_is_logical(&residual) {
                return Ok(TrialResult {
                    t_fail: Some(t),
                    t_end: t,
                    flips,
                    decodes,
                });
            }
            t_dec = config.decode_growth * t;
        }
    }
}

/// Memory trial on a layer code with a syndrome decoder.
pub fn run_trial<F: Float>(
    layer: &LayerCode,
    basis: &LogicalBasis,
    config: &TrialConfig<F>,
    decoder: &dyn SyndromeDecoder,
) -> Result<TrialResult<F>, ThermalError> {
    run_trial_with(
        SpinSystem::from_layer(layer, config.beta),
        config,
        basis,
        |e| layer.z_syndrome(e),
        |_, s| decoder.correct(s),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheck {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: usize,
}

/// Compares the energy distribution sampled along an n-fold-way trajectory
/// with the exact Gibbs distribution. The state is sampled every
/// `interval` time units, so samples are close to independent; energy
/// levels are pooled until each bin expects at least five samples.
pub fn gibbs_check<R: Rng + ?Sized>(
    sys: &mut SpinSystem<f64>,
    steps: u64,
    interval: f64,
    rng: &mut R,
) -> Result<GibbsCheck, ThermalError> {
    let n = sys.num_spins();
    if n > 20 {
        return Err(ThermalError::TooLarge(n));
    }
    let m = sys.checks.len() as i64;
    let level = |e2: i64| ((e2 + m) / 2) as usize;
    // Exact weights of each energy level.
    let mut exact = vec![0.0f64; m as usize + 1];
    let mut probe: SpinSystem<f64> = SpinSystem::new(n, sys.checks.clone(), sys.beta);
    let mut gray_prev = 0u64;
    for s in 0u64..1 << n {
        let gray = s ^ (s >> 1);
        if s > 0 {
            probe.flip((gray ^ gray_prev).trailing_zeros() as usize);
        }
        gray_prev = gray;
        let e2 = probe.energy_twice();
        exact[level(e2)] += (-sys.beta * e2 as f64 / 2.0).exp();
    }
    let z: f64 = exact.iter().sum();
    let mut observed = vec![0u64; exact.len()];
    let mut t = 0.0;
    let mut next = interval;
    for _ in 0..steps {
        let before = sys.energy_twice();
        let (_, dt) = sys.nfold_step(rng)?;
        t += dt;
        while next <= t {
            observed[level(before)] += 1;
            next += interval;
        }
    }
    let samples: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, w) in observed.iter().zip(&exact) {
        acc = (acc.0 + *o as f64, acc.1 + samples as f64 * w / z);
        if acc.1 >= 5.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += acc.0;
            last.1 += acc.1;
        }
        None => bins.push(acc),
    }
    let chi2: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(chi2);
    Ok(GibbsCheck {
        chi2,
        dof,
        p_value,
        samples: samples as usize,
    })
}
