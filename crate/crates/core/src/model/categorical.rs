use crate::error::{Error, Result};
use crate::model::context::ContextLayout;
use crate::squid::BranchDistribution;

/// Conditional probability table over a finite domain.
///
/// Only contexts seen in training store parameters (`size - 1` single
/// precision probabilities, the last one implied); other contexts are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalTable {
    pub(crate) target: usize,
    pub(crate) layout: ContextLayout,
    size: usize,
    params: Vec<(u32, Vec<f32>)>,
    dists: Vec<Option<BranchDistribution>>,
    uniform: BranchDistribution,
    pub(crate) data_bits: f64,
    pub(crate) rows: u64,
}

/// Rebuilds a distribution from its stored leading probabilities.
fn dequantize(q: &[f32]) -> Result<BranchDistribution> {
    let mut w: Vec<f64> = q.iter().map(|&x| x as f64).collect();
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::malformed(format!("invalid stored probabilities {q:?}")));
    }
    let last = (1.0 - w.iter().sum::<f64>()).max(0.0);
    w.push(last);
    BranchDistribution::from_weights(w)
}

impl CategoricalTable {
    pub(crate) fn from_params(
        target: usize,
        layout: ContextLayout,
        size: usize,
        params: Vec<(u32, Vec<f32>)>,
        data_bits: f64,
        rows: u64,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::malformed("categorical table with empty domain"));
        }
        let mut dists = vec![None; layout.configs()];
        for (ctx, q) in &params {
            let slot = dists
                .get_mut(*ctx as usize)
                .ok_or_else(|| Error::malformed(format!("context {ctx} outside {} configurations", layout.configs())))?;
            if q.len() + 1 != size {
                return Err(Error::malformed(format!("context {ctx} stores {} of {} probabilities", q.len(), size - 1)));
            }
            *slot = Some(dequantize(q)?);
        }
        Ok(CategoricalTable { target, layout, size, params, dists, uniform: BranchDistribution::uniform(size), data_bits, rows })
    }

    /// Fits smoothed frequencies; `counts` lists the observed contexts.
    pub(crate) fn fit(
        target: usize,
        layout: ContextLayout,
        size: usize,
        alpha: f64,
        counts: Vec<(u32, Vec<u64>)>,
    ) -> Result<Self> {
        let mut params = Vec::with_capacity(counts.len());
        let mut rows = 0;
        for (ctx, c) in &counts {
            let n: u64 = c.iter().sum();
            rows += n;
            let total = n as f64 + alpha * size as f64;
            let q = c[..size - 1].iter().map(|&k| ((k as f64 + alpha) / total) as f32).collect();
            params.push((*ctx, q));
        }
        params.sort_by_key(|p| p.0);
        let mut table = Self::from_params(target, layout, size, params, 0.0, rows)?;
        let mut bits = 0.0;
        for (ctx, c) in &counts {
            let d = table.distribution(*ctx);
            for (&k, &p) in c.iter().zip(d.probabilities()) {
                if k > 0 {
                    bits -= k as f64 * p.log2();
                }
            }
        }
        table.data_bits = bits;
        Ok(table)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn distribution(&self, ctx: u32) -> &BranchDistribution {
        self.dists.get(ctx as usize).and_then(Option::as_ref).unwrap_or(&self.uniform)
    }

    pub fn params(&self) -> &[(u32, Vec<f32>)] {
        &self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len() * (self.size - 1)
    }
}
