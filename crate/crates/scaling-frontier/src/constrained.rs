//! Width-n quantized approximation of a ground-truth network.
//!
//! Hidden rows are resampled from the ground truth's atom masses, optionally
//! snapped to an implicit epsilon-cover of the sphere; output weights are the
//! resampled atoms' signs scaled by 1/n at evaluation time.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::GroundTruthNetwork;
use crate::numeric::{dot, norm};

#[derive(Debug, Error)]
pub enum ConstrainedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quantization requires epsilon > 0; bypass it for the exact (epsilon = 0) case")]
    ZeroEpsilonQuantization,
    #[error("expected a unit vector, got norm {norm}")]
    NotUnit { norm: f64 },
    #[error("input has dimension {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed constrained-network document: {0}")]
    Malformed(String),
}

/// Width-n constrained network with quantization radius epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedNetwork {
    d: usize,
    n: usize,
    k: u64,
    epsilon: f64,
    /// Hidden rows, row-major, `n * d` entries.
    rows: Vec<f64>,
    out_signs: Vec<i8>,
    /// Ground-truth atom index each row was resampled from.
    source_atom_indices: Vec<usize>,
}

impl ConstrainedNetwork {
    pub fn from_parts(
        d: usize,
        k: u64,
        epsilon: f64,
        rows: Vec<f64>,
        out_signs: Vec<i8>,
        source_atom_indices: Vec<usize>,
    ) -> Result<Self, ConstrainedError> {
        let n = out_signs.len();
        let net = ConstrainedNetwork { d, n, k, epsilon, rows, out_signs, source_atom_indices };
        net.validate(None)?;
        Ok(net)
    }

    /// Check structural invariants; pass the source network to also validate
    /// the recorded atom indices.
    pub fn validate(&self, source: Option<&GroundTruthNetwork>) -> Result<(), ConstrainedError> {
        if self.d == 0 || self.n == 0 || self.k == 0 {
            return Err(ConstrainedError::InvalidArgument("d, n and K must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ConstrainedError::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.rows.len() != self.n * self.d
            || self.out_signs.len() != self.n
            || self.source_atom_indices.len() != self.n
        {
            return Err(ConstrainedError::Malformed("per-unit lists must have length n".into()));
        }
        let tol = self.epsilon.max(1e-9);
        for i in 0..self.n {
            if (norm(self.row(i)) - 1.0).abs() > tol {
                return Err(ConstrainedError::Malformed(format!(
                    "row {i} is farther than epsilon from the unit sphere"
                )));
            }
            if self.out_signs[i] != 1 && self.out_signs[i] != -1 {
                return Err(ConstrainedError::Malformed(format!("sign {i} is not +1/-1")));
            }
        }
        if let Some(src) = source {
            if let Some(&bad) =
                self.source_atom_indices.iter().find(|&&idx| idx >= src.atom_count())
            {
                return Err(ConstrainedError::Malformed(format!(
                    "source atom index {bad} out of range for {} atoms",
                    src.atom_count()
                )));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn out_signs(&self) -> &[i8] {
        &self.out_signs
    }

    pub fn source_atom_indices(&self) -> &[usize] {
        &self.source_atom_indices
    }

    /// Rebuild this network from the same resampled atom indices at a
    /// different quantization radius. Shares every draw with `self`, which
    /// is what coupled comparisons across epsilon values need.
    pub fn requantized(
        &self,
        source: &GroundTruthNetwork,
        epsilon: f64,
    ) -> Result<ConstrainedNetwork, ConstrainedError> {
        self.validate(Some(source))?;
        let mut rows = Vec::with_capacity(self.n * self.d);
        for &idx in &self.source_atom_indices {
            let atom = source.atom(idx);
            if epsilon > 0.0 {
                rows.extend_from_slice(&quantize_to_cover(atom, epsilon)?);
            } else {
                rows.extend_from_slice(atom);
            }
        }
        Ok(ConstrainedNetwork {
            d: self.d,
            n: self.n,
            k: self.k,
            epsilon,
            rows,
            out_signs: self.out_signs.clone(),
            source_atom_indices: self.source_atom_indices.clone(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = ConstrainedDoc {
            d: self.d,
            n: self.n,
            k: self.k,
            epsilon: self.epsilon,
            rows: (0..self.n).map(|i| self.row(i).to_vec()).collect(),
            out_signs: self.out_signs.clone(),
            source_atom_indices: self.source_atom_indices.clone(),
        };
        serde_json::to_value(doc).expect("constrained document serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, ConstrainedError> {
        let doc: ConstrainedDoc = serde_json::from_value(value.clone())
            .map_err(|e| ConstrainedError::Malformed(e.to_string()))?;
        if doc.rows.len() != doc.n {
            return Err(ConstrainedError::Malformed("row count does not match n".into()));
        }
        let mut rows = Vec::with_capacity(doc.n * doc.d);
        for row in &doc.rows {
            if row.len() != doc.d {
                return Err(ConstrainedError::Malformed("row with wrong dimension".into()));
            }
            rows.extend_from_slice(row);
        }
        ConstrainedNetwork::from_parts(
            doc.d,
            doc.k,
            doc.epsilon,
            rows,
            doc.out_signs,
            doc.source_atom_indices,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ConstrainedDoc {
    d: usize,
    n: usize,
    #[serde(rename = "K")]
    k: u64,
    epsilon: f64,
    rows: Vec<Vec<f64>>,
    out_signs: Vec<i8>,
    source_atom_indices: Vec<usize>,
}

/// Snap a unit vector to an implicit epsilon-cover of the sphere.
///
/// Each coordinate is rounded to a grid of step `epsilon / sqrt(d)` (ties
/// break via floor of the shifted value), then the grid point is projected
/// back onto the sphere. Pre-projection error is at most `epsilon / 2` and
/// projection at most doubles it, so `||w - q(w)|| <= epsilon`. Vectors in
/// the same grid cell map to the same codeword.
pub fn quantize_to_cover(w: &[f64], epsilon: f64) -> Result<Vec<f64>, ConstrainedError> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(ConstrainedError::ZeroEpsilonQuantization);
    }
    let d = w.len();
    if d == 0 {
        return Err(ConstrainedError::InvalidArgument("empty vector".into()));
    }
    let w_norm = norm(w);
    if (w_norm - 1.0).abs() > 1e-9 {
        return Err(ConstrainedError::NotUnit { norm: w_norm });
    }
    let step = epsilon / (d as f64).sqrt();
    let snapped: Vec<f64> = w.iter().map(|&x| (x / step + 0.5).floor() * step).collect();
    let n = norm(&snapped);
    if n <= 1e-300 {
        // Only reachable for epsilon >= 2, where the whole sphere collapses
        // into the cell around the origin; any unit codeword is within the
        // sphere's diameter.
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        return Ok(e1);
    }
    Ok(snapped.iter().map(|x| x / n).collect())
}

/// Resample a width-n constrained network from the ground truth.
///
/// Atom indices are iid from the mass distribution; each row keeps its
/// source sign and is quantized when `epsilon > 0`.
pub fn sample_constrained(
    net: &GroundTruthNetwork,
    n: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<ConstrainedNetwork, ConstrainedError> {
    if n == 0 {
        return Err(ConstrainedError::InvalidArgument("n must be >= 1".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ConstrainedError::InvalidArgument(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    let categorical = WeightedIndex::new(net.masses())
        .map_err(|e| ConstrainedError::InvalidArgument(format!("bad mass vector: {e}")))?;
    let d = net.d();
    let mut rows = Vec::with_capacity(n * d);
    let mut out_signs = Vec::with_capacity(n);
    let mut source_atom_indices = Vec::with_capacity(n);
    for _ in 0..n {
        let idx = categorical.sample(rng);
        let atom = net.atom(idx);
        if epsilon > 0.0 {
            rows.extend_from_slice(&quantize_to_cover(atom, epsilon)?);
        } else {
            rows.extend_from_slice(atom);
        }
        out_signs.push(net.signs()[idx]);
        source_atom_indices.push(idx);
    }
    Ok(ConstrainedNetwork {
        d,
        n,
        k: net.k(),
        epsilon,
        rows,
        out_signs,
        source_atom_indices,
    })
}

/// Evaluate `sqrt(K+1)/n * sum_i sign_i ReLU(row_i . x)`.
pub fn eval_constrained(cnet: &ConstrainedNetwork, x: &[f64]) -> Result<f64, ConstrainedError> {
    if x.len() != cnet.d {
        return Err(ConstrainedError::DimensionMismatch { expected: cnet.d, got: x.len() });
    }
    let mut acc = 0.0;
    for i in 0..cnet.n {
        let pre = dot(cnet.row(i), x);
        if pre > 0.0 {
            acc += f64::from(cnet.out_signs[i]) * pre;
        }
    }
    Ok((cnet.k as f64 + 1.0).sqrt() / cnet.n as f64 * acc)
}
