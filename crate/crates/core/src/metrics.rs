//! Distances between laws on the line and time-series bookkeeping.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stationary::GridLaw;

/// Named channels sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    times: Vec<T>,
    names: Vec<String>,
    channels: Vec<Vec<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let channels = vec![Vec::new(); names.len()];
        Self {
            times: Vec::new(),
            names,
            channels,
        }
    }

    pub fn push(&mut self, t: T, values: &[T]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::Argument(format!(
                "expected {} channel values, got {}",
                self.names.len(),
                values.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Argument(format!("time {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        for (c, &v) in self.channels.iter_mut().zip(values) {
            c.push(v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[T]> {
        self.names.iter().position(|n| n == name).map(|i| self.channels[i].as_slice())
    }

    /// `(t, value)` pairs of one channel.
    pub fn pairs(&self, name: &str) -> Option<Vec<(T, T)>> {
        self.channel(name)
            .map(|c| self.times.iter().copied().zip(c.iter().copied()).collect())
    }

    /// Appends a channel computed from the existing rows.
    pub fn add_channel(&mut self, name: impl Into<String>, values: Vec<T>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::Argument("channel length differs from series length".into()));
        }
        self.names.push(name.into());
        self.channels.push(values);
        Ok(())
    }

    /// Header `t,<names>` then one row per time.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{}", t.as_f64())?;
            for c in &self.channels {
                write!(w, ",{}", c[i].as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    v
}

/// Exact `W₁` between two empirical measures.
pub fn w1_empirical<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Argument("w1_empirical needs two non-empty samples".into()));
    }
    let a = sorted(xs);
    let b = sorted(ys);
    if a.len() == b.len() {
        let diffs: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| (x - y).abs()).collect();
        return Ok(crate::scalar::pairwise_sum(&diffs) / T::from_usize_lossy(a.len()));
    }
    // Quantile functions are step functions with jumps at i/n and j/m.
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut u = T::zero();
    let mut acc = T::zero();
    while i < n && j < m {
        let next_a = T::from_usize_lossy(i + 1) / T::from_usize_lossy(n);
        let next_b = T::from_usize_lossy(j + 1) / T::from_usize_lossy(m);
        let next = next_a.min(next_b);
        acc = acc + (next - u) * (a[i] - b[j]).abs();
        u = next;
        // Integer comparison decides which step ends first.
        let ca = (i + 1) * m;
        let cb = (j + 1) * n;
        if ca <= cb {
            i += 1;
        }
        if cb <= ca {
            j += 1;
        }
    }
    Ok(acc)
}

/// `∫|F − G|` with both cdfs tabulated at the same points (midpoint rule).
pub fn w1_density<T: Scalar>(xs: &[T], f: &[T], g: &[T]) -> Result<T> {
    if xs.len() != f.len() || xs.len() != g.len() {
        return Err(Error::Argument(format!(
            "cdfs must share the grid: {} points, {} and {} values",
            xs.len(),
            f.len(),
            g.len()
        )));
    }
    let half = T::lit(0.5);
    let terms: Vec<T> = (1..xs.len())
        .map(|i| {
            let fm = (f[i - 1] + f[i]) * half;
            let gm = (g[i - 1] + g[i]) * half;
            (xs[i] - xs[i - 1]) * (fm - gm).abs()
        })
        .collect();
    Ok(crate::scalar::pairwise_sum(&terms))
}

/// Exact `W₁` between two discrete measures on the same sorted atoms.
pub fn w1_discrete<T: Scalar>(atoms: &[T], a: &[T], b: &[T]) -> Result<T> {
    if atoms.len() != a.len() || atoms.len() != b.len() {
        return Err(Error::Argument("weights must match the atoms".into()));
    }
    let mut fa = T::zero();
    let mut fb = T::zero();
    let mut terms = Vec::with_capacity(atoms.len());
    for i in 0..atoms.len().saturating_sub(1) {
        fa = fa + a[i];
        fb = fb + b[i];
        terms.push((atoms[i + 1] - atoms[i]) * (fa - fb).abs());
    }
    Ok(crate::scalar::pairwise_sum(&terms))
}

/// `W₁` between two laws tabulated on the same quadrature rule, treating
/// each as atoms at the nodes.
pub fn w1_laws<T: Scalar, A: GridLaw<T>, B: GridLaw<T>>(a: &A, b: &B) -> Result<T> {
    if a.nodes() != b.nodes() {
        return Err(Error::Argument("laws live on different grids".into()));
    }
    w1_discrete(a.nodes(), a.masses(), b.masses())
}

/// `∫|F_n − F|` between an empirical measure and a tabulated law.
pub fn w1_samples_to_law<T: Scalar, L: GridLaw<T>>(samples: &[T], law: &L) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    let cdf = law.cdf_interpolant();
    let xs = sorted(samples);
    let n = T::from_usize_lossy(xs.len());
    let rule = law.rule();
    let mut points: Vec<T> = rule.nodes().to_vec();
    points.push(rule.lower());
    points.push(rule.upper());
    points.extend_from_slice(&xs);
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let half = T::lit(0.5);
    let mut k = 0usize;
    let mut terms = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        while k < xs.len() && xs[k] <= lo {
            k += 1;
        }
        let fe = T::from_usize_lossy(k) / n;
        // Simpson on the smooth part; the empirical cdf is flat here.
        let f0 = (fe - cdf.eval(lo)).abs();
        let f1 = (fe - cdf.eval((lo + hi) * half)).abs();
        let f2 = (fe - cdf.eval(hi)).abs();
        terms.push((hi - lo) * (f0 + T::lit(4.0) * f1 + f2) / T::lit(6.0));
    }
    Ok(crate::scalar::pairwise_sum(&terms))
}

/// Gauge `φ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// `r ↦ min(r, 1)`
    MinOne,
    /// `r ↦ r`
    Identity,
}

impl Gauge {
    pub fn apply<T: Scalar>(self, r: T) -> T {
        match self {
            Gauge::MinOne => r.min(T::one()),
            Gauge::Identity => r,
        }
    }
}

/// Test functions tabulated at the nodes of a common grid.
#[derive(Debug, Clone)]
pub struct WeightedNormConfig<T> {
    pub p0: T,
    pub phi0: Gauge,
    pub dictionary: Vec<(String, Vec<T>)>,
}

impl<T: Scalar> WeightedNormConfig<T> {
    pub fn new(p0: T, phi0: Gauge) -> Result<Self> {
        if !(p0 >= T::zero()) {
            return Err(Error::Argument(format!("p0 must be non-negative, got {p0}")));
        }
        Ok(Self {
            p0,
            phi0,
            dictionary: Vec::new(),
        })
    }

    pub fn weight(&self, x: T) -> T {
        (T::one() + x * x).powf(self.p0 * T::lit(0.5))
    }

    pub fn with_function(mut self, name: impl Into<String>, values: Vec<T>) -> Self {
        self.dictionary.push((name.into(), values));
        self
    }

    /// Unit ramps `max(x − k, 0)` at `knots` equispaced interior knots,
    /// plus the supplied functions.
    pub fn with_default_dictionary(mut self, nodes: &[T], knots: usize, extra: Vec<(String, Vec<T>)>) -> Self {
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        for k in 0..knots {
            let knot = lo + (hi - lo) * T::from_usize_lossy(k + 1) / T::from_usize_lossy(knots + 1);
            let values = nodes.iter().map(|&x| (x - knot).max(T::zero())).collect();
            self.dictionary.push((format!("ramp{k}"), values));
        }
        self.dictionary.extend(extra);
        self
    }

    /// Largest pair ratio `|g(x) − g(y)| / (φ₀(|x−y|) · (V₀(x)+V₀(y))/2)`
    /// over node pairs.
    ///
    /// The half-sum normalisation makes `p0 = 0, φ₀ = r` the Lipschitz
    /// constant, so the estimator below then bounds `W₁` from below.
    pub fn function_norm(&self, nodes: &[T], g: &[T]) -> T {
        let v: Vec<T> = nodes.iter().map(|&x| self.weight(x)).collect();
        let half = T::lit(0.5);
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut best = T::zero();
                for j in i + 1..nodes.len() {
                    let r = (nodes[j] - nodes[i]).abs();
                    if !(r > T::zero()) {
                        continue;
                    }
                    let q = (g[j] - g[i]).abs() / (self.phi0.apply(r) * (v[i] + v[j]) * half);
                    best = best.max(q);
                }
                best
            })
            .reduce(T::zero, T::max)
    }
}

/// Dictionary lower bound of `‖μ − ν‖_{V₀,φ₀}` (half-sum normalisation).
pub fn weighted_dual_norm_lb<T: Scalar, A: GridLaw<T>, B: GridLaw<T>>(
    mu: &A,
    nu: &B,
    config: &WeightedNormConfig<T>,
) -> Result<T> {
    if mu.nodes() != nu.nodes() {
        return Err(Error::Argument("laws live on different grids".into()));
    }
    let ma = crate::scalar::pairwise_sum(mu.masses());
    let mb = crate::scalar::pairwise_sum(nu.masses());
    if (ma - mb).abs() > T::lit(1e-10) {
        return Err(Error::Argument(format!("mass mismatch {}", (ma - mb).abs())));
    }
    let nodes = mu.nodes();
    let mut best = T::zero();
    for (name, g) in &config.dictionary {
        if g.len() != nodes.len() {
            return Err(Error::Argument(format!("dictionary function {name} has the wrong length")));
        }
        let norm = config.function_norm(nodes, g);
        if !(norm > T::zero()) {
            continue;
        }
        let diff = (mu.expect_values(g) - nu.expect_values(g)).abs();
        best = best.max(diff / norm);
    }
    Ok(best)
}
