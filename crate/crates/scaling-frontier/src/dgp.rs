//! Ground-truth data-generating process.
//!
//! The generating function is a single-hidden-layer ReLU network whose hidden
//! units carry a Dirichlet-process weight distribution over the unit sphere:
//! stick-breaking produces atom masses, atoms are uniform on S^{d-1}, and each
//! atom carries an independent fair-coin sign. Inputs are standard normal and
//! binary labels follow a Bernoulli-sigmoid of the network output.
//!
//! The infinite atom set is truncated once the undistributed stick mass drops
//! below a tolerance `tau`; retained masses are renormalized so they sum to
//! one exactly.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{dot, norm, sigmoid};

/// Default truncation tolerance for the undistributed stick mass.
pub const DEFAULT_TAU: f64 = 1e-6;

/// Hard cap on the number of stick-breaking atoms.
pub const DEFAULT_ATOM_CAP: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum DgpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "stick-breaking failed to truncate: residual mass still >= {tau:e} \
         after the cap of {cap} atoms"
    )]
    TruncationFailure { tau: f64, cap: usize },
    #[error("input has dimension {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed network document: {0}")]
    Malformed(String),
}

/// Truncated realization of the infinite-width generating network.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthNetwork {
    d: usize,
    k: u64,
    /// Atom unit vectors, row-major, `atom_count * d` entries.
    atoms: Vec<f64>,
    /// Renormalized stick-breaking masses; strictly positive, sum to 1.
    masses: Vec<f64>,
    /// Per-atom output sign, +1 or -1.
    signs: Vec<i8>,
    /// Total stick mass discarded before renormalization.
    truncation_residual: f64,
}

impl GroundTruthNetwork {
    /// Build from explicit parts, checking every structural invariant.
    pub fn from_parts(
        d: usize,
        k: u64,
        atoms: Vec<f64>,
        masses: Vec<f64>,
        signs: Vec<i8>,
        truncation_residual: f64,
    ) -> Result<Self, DgpError> {
        let net = GroundTruthNetwork { d, k, atoms, masses, signs, truncation_residual };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), DgpError> {
        if self.d == 0 || self.k == 0 {
            return Err(DgpError::InvalidArgument("d and K must be >= 1".into()));
        }
        let m = self.masses.len();
        if m == 0 {
            return Err(DgpError::Malformed("network has no atoms".into()));
        }
        if self.signs.len() != m || self.atoms.len() != m * self.d {
            return Err(DgpError::Malformed(
                "atoms, masses and signs must have equal length".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.truncation_residual) {
            return Err(DgpError::Malformed("truncation residual outside [0, 1)".into()));
        }
        let mut sum = 0.0;
        for (i, &mass) in self.masses.iter().enumerate() {
            if mass.is_nan() || mass <= 0.0 {
                return Err(DgpError::Malformed(format!("mass {i} is not strictly positive")));
            }
            sum += mass;
            if (norm(self.atom(i)) - 1.0).abs() > 1e-12 {
                return Err(DgpError::Malformed(format!("atom {i} is not unit norm")));
            }
            if self.signs[i] != 1 && self.signs[i] != -1 {
                return Err(DgpError::Malformed(format!("sign {i} is not +1/-1")));
            }
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DgpError::Malformed(format!("masses sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn atom_count(&self) -> usize {
        self.masses.len()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.d..(i + 1) * self.d]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn truncation_residual(&self) -> f64 {
        self.truncation_residual
    }

    /// Output scale `sqrt(K + 1)`.
    pub fn scale(&self) -> f64 {
        (self.k as f64 + 1.0).sqrt()
    }

    /// Serialize to the reproducibility document, recording the seed that
    /// produced the network.
    pub fn to_json(&self, seed: u64) -> serde_json::Value {
        let doc = NetworkDoc {
            seed,
            d: self.d,
            k: self.k,
            atoms: (0..self.atom_count()).map(|i| self.atom(i).to_vec()).collect(),
            masses: self.masses.clone(),
            signs: self.signs.clone(),
            truncation_residual: self.truncation_residual,
        };
        serde_json::to_value(doc).expect("network document serializes")
    }

    /// Parse and validate a document produced by [`GroundTruthNetwork::to_json`].
    pub fn from_json(value: &serde_json::Value) -> Result<(Self, u64), DgpError> {
        let doc: NetworkDoc = serde_json::from_value(value.clone())
            .map_err(|e| DgpError::Malformed(e.to_string()))?;
        let d = doc.d;
        let mut atoms = Vec::with_capacity(doc.atoms.len() * d);
        for row in &doc.atoms {
            if row.len() != d {
                return Err(DgpError::Malformed("atom row with wrong dimension".into()));
            }
            atoms.extend_from_slice(row);
        }
        let net = GroundTruthNetwork::from_parts(
            d,
            doc.k,
            atoms,
            doc.masses,
            doc.signs,
            doc.truncation_residual,
        )?;
        Ok((net, doc.seed))
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    seed: u64,
    d: usize,
    #[serde(rename = "K")]
    k: u64,
    atoms: Vec<Vec<f64>>,
    masses: Vec<f64>,
    signs: Vec<i8>,
    truncation_residual: f64,
}

/// Stick-breaking masses for a Dirichlet process of scale `k`.
///
/// Breaks `Beta(1, K)` sticks until the undistributed mass falls below `tau`,
/// then renormalizes. Returns the masses and the discarded residual. Errors
/// if `cap` sticks are exhausted first.
pub fn stick_breaking_masses(
    k: u64,
    tau: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, f64), DgpError> {
    if k == 0 {
        return Err(DgpError::InvalidArgument("K must be >= 1".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(DgpError::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    let inv_k = 1.0 / k as f64;
    let mut masses = Vec::new();
    let mut residual = 1.0f64;
    while residual >= tau {
        if masses.len() >= cap {
            return Err(DgpError::TruncationFailure { tau, cap });
        }
        // Beta(1, K) via inverse CDF: v = 1 - (1 - u)^{1/K}.
        let u: f64 = rng.random();
        let v = -((-u).ln_1p() * inv_k).exp_m1();
        if v > 0.0 {
            masses.push(v * residual);
            residual *= 1.0 - v;
        }
    }
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    Ok((masses, residual))
}

/// Uniform draw from the unit sphere S^{d-1} (normalized Gaussian vector).
pub(crate) fn sample_unit_sphere(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-9 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Sample a truncated ground-truth network with the default atom cap.
pub fn sample_ground_truth(
    d: usize,
    k: u64,
    tau: f64,
    rng: &mut impl Rng,
) -> Result<GroundTruthNetwork, DgpError> {
    sample_ground_truth_with_cap(d, k, tau, DEFAULT_ATOM_CAP, rng)
}

/// Sample with an explicit atom cap.
///
/// Draw order is fixed: all sticks, then all atoms, then all signs, so a
/// given `(d, K, tau, seed)` always yields a bit-identical network.
pub fn sample_ground_truth_with_cap(
    d: usize,
    k: u64,
    tau: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<GroundTruthNetwork, DgpError> {
    if d == 0 {
        return Err(DgpError::InvalidArgument("d must be >= 1".into()));
    }
    let (masses, residual) = stick_breaking_masses(k, tau, cap, rng)?;
    let count = masses.len();
    let mut atoms = Vec::with_capacity(count * d);
    for _ in 0..count {
        atoms.extend_from_slice(&sample_unit_sphere(d, rng));
    }
    let signs: Vec<i8> = (0..count).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    Ok(GroundTruthNetwork { d, k, atoms, masses, signs, truncation_residual: residual })
}

/// Evaluate the network output `sqrt(K+1) * sum_w sign_w mass_w ReLU(w . x)`.
pub fn eval_ground_truth(net: &GroundTruthNetwork, x: &[f64]) -> Result<f64, DgpError> {
    if x.len() != net.d {
        return Err(DgpError::DimensionMismatch { expected: net.d, got: x.len() });
    }
    let mut acc = 0.0;
    for i in 0..net.atom_count() {
        let pre = dot(net.atom(i), x);
        if pre > 0.0 {
            acc += f64::from(net.signs[i]) * net.masses[i] * pre;
        }
    }
    Ok(net.scale() * acc)
}

/// A batch of (input, label) pairs with the generating logits cached.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBatch {
    d: usize,
    inputs: Vec<f64>,
    logits: Vec<f64>,
    labels: Vec<u8>,
}

impl DataBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn input(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.d..(t + 1) * self.d]
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// CSV export with columns `x_1,...,x_d,logit,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.d {
            out.push_str(&format!("x_{j},"));
        }
        out.push_str("logit,label\n");
        for t in 0..self.len() {
            for v in self.input(t) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", self.logits[t], self.labels[t]));
        }
        out
    }
}

/// Draw `count` iid pairs: `X ~ N(0, I_d)`, `Y ~ Bernoulli(sigmoid(F(X)))`.
pub fn sample_batch(net: &GroundTruthNetwork, count: usize, rng: &mut impl Rng) -> DataBatch {
    let d = net.d;
    let mut inputs = Vec::with_capacity(count * d);
    let mut logits = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let start = inputs.len();
        for _ in 0..d {
            inputs.push(StandardNormal.sample(rng));
        }
        let logit = eval_ground_truth(net, &inputs[start..start + d])
            .expect("input dimension matches by construction");
        let y = u8::from(rng.random::<f64>() < sigmoid(logit));
        logits.push(logit);
        labels.push(y);
    }
    DataBatch { d, inputs, logits, labels }
}
