//! Euler–Maruyama particle system closed through the empirical coupling
//! `m̂ = (1/N) Σ g(Xⁱ)`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::TimeSeries;
use crate::model::ScalarMeanFieldModel;
use crate::rng::{step_key, CounterRng};
use crate::scalar::{pairwise_sum, Scalar};
use crate::stationary::auto_half_width;

/// Particle positions at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub positions: Vec<T>,
    /// Noise stream of each particle; `0..N` unless permuted.
    pub ids: Vec<u64>,
    pub time: T,
    pub step: u64,
    pub seed: u64,
    pub m_hat: T,
}

/// Fixed block length: partial sums never depend on the thread count.
const BLOCK: usize = 4096;

fn block_mean<T: Scalar>(xs: &[T], f: &(dyn Fn(T) -> T + Sync)) -> T {
    let partial: Vec<T> = xs
        .par_chunks(BLOCK)
        .map(|c| {
            let v: Vec<T> = c.iter().map(|&x| f(x)).collect();
            pairwise_sum(&v)
        })
        .collect();
    pairwise_sum(&partial) / T::from_usize_lossy(xs.len())
}

fn empirical_coupling<T: Scalar>(model: &ScalarMeanFieldModel<T>, xs: &[T]) -> T {
    block_mean(xs, &|x| model.g(x))
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(model: &ScalarMeanFieldModel<T>, positions: Vec<T>, seed: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Argument("ensemble needs at least one particle".into()));
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::Argument(format!("initial position {i} is not finite")));
        }
        let ids = (0..positions.len() as u64).collect();
        let m_hat = empirical_coupling(model, &positions);
        Ok(Self {
            positions,
            ids,
            time: T::zero(),
            step: 0,
            seed,
            m_hat,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `(1/N) Σ f(Xⁱ)`.
    pub fn mean_of(&self, f: &(dyn Fn(T) -> T + Sync)) -> T {
        block_mean(&self.positions, f)
    }

    /// Raw float64 little-endian positions plus a JSON sidecar
    /// `{n, t, seed}` next to `path` (extension replaced by `.json`).
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.len());
        for x in &self.positions {
            bytes.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        let sidecar = serde_json::json!({ "n": self.len(), "t": self.time.as_f64(), "seed": self.seed });
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// One column `x` with a header.
    pub fn write_positions_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x")?;
        for x in &self.positions {
            writeln!(w, "{}", x.as_f64())?;
        }
        Ok(())
    }
}

/// Reads positions written by [`Ensemble::write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Argument(format!("{} is not a float64 array", path.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")))
        .collect())
}

/// Largest admissible step: `0.01 / max|∂ₓ b|` over the stationary bulk.
pub fn dt_bound<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T) -> Result<T> {
    let bulk = auto_half_width(model, m)?;
    Ok(T::lit(0.01) * model.relaxation_time(m, bulk))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_end: T,
    /// Record every `stride`-th step (and the last one).
    pub stride: usize,
    /// `false` drops the Brownian term.
    pub noise: bool,
}

impl<T: Scalar> SimConfig<T> {
    /// Checks `dt > 0` and `dt ≤ dt_bound(model, m_ref)`.
    pub fn validate(&self, model: &ScalarMeanFieldModel<T>, m_ref: T) -> Result<()> {
        if !(self.dt > T::zero()) || !(self.t_end >= T::zero()) || self.stride == 0 {
            return Err(Error::Argument("simulation needs dt > 0, t_end >= 0 and stride >= 1".into()));
        }
        let bound = dt_bound(model, m_ref)?;
        if self.dt > bound {
            return Err(Error::Precondition(format!(
                "dt = {} exceeds the relaxation bound {}",
                self.dt, bound
            )));
        }
        Ok(())
    }
}

/// Named function whose ensemble mean is recorded.
#[derive(Clone)]
pub struct Observer<T> {
    pub name: String,
    pub f: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T> Observer<T> {
    pub fn new(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl<T> std::fmt::Debug for Observer<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observer").field("name", &self.name).finish()
    }
}

/// `Xⁱ ← Xⁱ + b(Xⁱ, m̂) dt + σ √dt ξⁱ`, then `m̂` is recomputed.
pub fn step<T: Scalar>(ens: &mut Ensemble<T>, model: &ScalarMeanFieldModel<T>, dt: T, noise: bool) -> Result<()> {
    let m = ens.m_hat;
    let scale = model.sigma() * dt.sqrt();
    let key = step_key(ens.seed, ens.step);
    // Per block: updated positions, pairwise sum of g, first non-finite index.
    let blocks: Vec<(T, Option<usize>)> = ens
        .positions
        .par_chunks_mut(BLOCK)
        .zip(ens.ids.par_chunks(BLOCK))
        .map(|(xs, ids)| {
            let mut g = Vec::with_capacity(xs.len());
            let mut bad = None;
            for (k, (x, &id)) in xs.iter_mut().zip(ids).enumerate() {
                let mut next = *x + model.drift(*x, m) * dt;
                if noise {
                    let z: f64 = CounterRng::from_step_key(key, id).sample(StandardNormal);
                    next = next + scale * T::lit(z);
                }
                if bad.is_none() && !next.is_finite() {
                    bad = Some(k);
                }
                *x = next;
                g.push(model.g(next));
            }
            (pairwise_sum(&g), bad)
        })
        .collect();
    ens.step += 1;
    ens.time = ens.time + dt;
    if let Some((b, k)) = blocks.iter().enumerate().find_map(|(b, (_, bad))| bad.map(|k| (b, k))) {
        return Err(Error::BlowUp {
            time: ens.time.as_f64(),
            index: b * BLOCK + k,
        });
    }
    let partial: Vec<T> = blocks.iter().map(|b| b.0).collect();
    ens.m_hat = pairwise_sum(&partial) / T::from_usize_lossy(ens.len());
    Ok(())
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct SimOutcome<T> {
    /// Channels `m_hat` then the observers.
    pub series: TimeSeries<T>,
    pub last: Ensemble<T>,
    /// The stop predicate fired before `t_end`.
    pub stopped: bool,
}

/// Runs to `t_end` (stepping from the ensemble's current time), recording
/// `m̂` and observer means. `stop` is checked after every step;
/// `on_record` sees the ensemble whenever a row is written.
pub fn evolve<T: Scalar>(
    ens: &Ensemble<T>,
    model: &ScalarMeanFieldModel<T>,
    config: &SimConfig<T>,
    observers: &[Observer<T>],
    stop: Option<&dyn Fn(&Ensemble<T>) -> bool>,
    mut on_record: Option<&mut dyn FnMut(&Ensemble<T>)>,
) -> Result<SimOutcome<T>> {
    if !(config.dt > T::zero()) || !(config.t_end >= T::zero()) || config.stride == 0 {
        return Err(Error::Argument("simulation needs dt > 0, t_end >= 0 and stride >= 1".into()));
    }
    let mut names = vec!["m_hat".to_string()];
    names.extend(observers.iter().map(|o| o.name.clone()));
    let mut series = TimeSeries::new(names);
    let mut record = |e: &Ensemble<T>, series: &mut TimeSeries<T>| -> Result<()> {
        let mut row = vec![e.m_hat];
        row.extend(observers.iter().map(|o| e.mean_of(&*o.f)));
        series.push(e.time, &row)?;
        if let Some(cb) = on_record.as_deref_mut() {
            cb(e);
        }
        Ok(())
    };
    let mut cur = ens.clone();
    let t0 = cur.time;
    record(&cur, &mut series)?;
    if stop.is_some_and(|s| s(&cur)) {
        return Ok(SimOutcome {
            series,
            last: cur,
            stopped: true,
        });
    }
    let steps = (config.t_end / config.dt).round().to_usize().unwrap_or(0);
    let mut stopped = false;
    for k in 1..=steps {
        step(&mut cur, model, config.dt, config.noise)?;
        // Times from the step count, not by accumulation.
        cur.time = t0 + config.dt * T::from_usize_lossy(k);
        let halt = stop.is_some_and(|s| s(&cur));
        if halt || k % config.stride == 0 || k == steps {
            record(&cur, &mut series)?;
        }
        if halt {
            stopped = true;
            break;
        }
    }
    Ok(SimOutcome {
        series,
        last: cur,
        stopped,
    })
}
