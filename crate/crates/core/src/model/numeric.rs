use crate::codec::ApproxConfig;
use crate::error::{Error, Result};
use crate::model::context::ContextLayout;
use crate::squid::{BisectionSpec, BisectionTree, NumericLaw};

/// Parametric family of a numeric model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Uniform,
    Gaussian,
    Laplace,
}

impl LawKind {
    pub const ALL: [LawKind; 3] = [LawKind::Uniform, LawKind::Gaussian, LawKind::Laplace];

    pub fn name(&self) -> &'static str {
        match self {
            LawKind::Uniform => "uniform",
            LawKind::Gaussian => "gaussian",
            LawKind::Laplace => "laplace",
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        *self as u8
    }

    pub(crate) fn from_tag(t: u8) -> Result<Self> {
        LawKind::ALL.get(t as usize).copied().ok_or_else(|| Error::malformed(format!("unknown law tag {t}")))
    }

    fn params_per_context(&self) -> usize {
        match self {
            LawKind::Uniform => 0,
            _ => 2,
        }
    }
}

/// Smallest scale a fitted law may use: a quarter of the leaf half-width, so a
/// constant column costs almost nothing while tails stay representable.
pub fn scale_floor(spec: &BisectionSpec) -> f64 {
    if spec.is_integer() {
        spec.tolerance().max(0.5) / 4.0
    } else {
        spec.tolerance() / 4.0
    }
}

/// The law described by stored single-precision parameters.
pub fn law_from_params(kind: LawKind, a: f32, b: f32, spec: &BisectionSpec) -> NumericLaw {
    let floor = scale_floor(spec);
    match kind {
        LawKind::Uniform => NumericLaw::Uniform { lo: spec.edge(spec.lo()), hi: spec.edge(spec.hi()) },
        LawKind::Gaussian => NumericLaw::Gaussian { mean: a as f64, std_dev: (b as f64).max(floor) },
        LawKind::Laplace => NumericLaw::Laplace { location: a as f64, scale: (b as f64).max(floor) },
    }
}

/// Code length of one leaf under `tree`, in bits.
///
/// Uses the telescoped mass ratio, falling back to the node-by-node product
/// (each factor floored at the coder's minimum width) when the law's mass
/// underflows.
pub(crate) fn leaf_bits(tree: &BisectionTree<NumericLaw>, leaf: (f64, f64)) -> f64 {
    let floor = ApproxConfig::default().epsilon_min();
    let mut p = tree.leaf_probability(leaf.0, leaf.1);
    if !(p >= floor) {
        p = tree.path_probability(leaf.0, leaf.1, floor);
    }
    -p.log2()
}

/// Observations of one context: values and the leaves they fall in.
pub(crate) type Group = (u32, Vec<(f64, (f64, f64))>);

/// Per-context numeric model over a shared bisection tree shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericFamily {
    pub(crate) target: usize,
    pub(crate) layout: ContextLayout,
    spec: BisectionSpec,
    kind: LawKind,
    params: Vec<(u32, [f32; 2])>,
    laws: Vec<Option<NumericLaw>>,
    pub(crate) data_bits: f64,
    pub(crate) rows: u64,
}

fn estimate(kind: LawKind, values: &mut [f64]) -> [f32; 2] {
    let n = values.len() as f64;
    match kind {
        LawKind::Uniform => [0.0, 0.0],
        LawKind::Gaussian => {
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            [mean as f32, var.sqrt() as f32]
        }
        LawKind::Laplace => {
            let mid = (values.len() - 1) / 2;
            let median = *values.select_nth_unstable_by(mid, f64::total_cmp).1;
            let scale = values.iter().map(|v| (v - median).abs()).sum::<f64>() / n;
            [median as f32, scale as f32]
        }
    }
}

impl NumericFamily {
    pub(crate) fn from_params(
        target: usize,
        layout: ContextLayout,
        spec: BisectionSpec,
        kind: LawKind,
        params: Vec<(u32, [f32; 2])>,
        data_bits: f64,
        rows: u64,
    ) -> Result<Self> {
        let mut laws = vec![None; layout.configs()];
        if kind != LawKind::Uniform {
            for (ctx, [a, b]) in &params {
                if !(a.is_finite() && b.is_finite() && *b >= 0.0) {
                    return Err(Error::malformed(format!("invalid law parameters ({a}, {b})")));
                }
                let slot = laws.get_mut(*ctx as usize).ok_or_else(|| {
                    Error::malformed(format!("context {ctx} outside {} configurations", layout.configs()))
                })?;
                *slot = Some(law_from_params(kind, *a, *b, &spec));
            }
        } else if !params.is_empty() {
            return Err(Error::malformed("uniform model carries no parameters"));
        }
        Ok(NumericFamily { target, layout, spec, kind, params, laws, data_bits, rows })
    }

    fn fit_kind(target: usize, layout: &ContextLayout, spec: BisectionSpec, kind: LawKind, groups: &mut [Group]) -> Result<Self> {
        let rows = groups.iter().map(|g| g.1.len() as u64).sum();
        let params = if kind == LawKind::Uniform {
            Vec::new()
        } else {
            groups
                .iter()
                .map(|(ctx, obs)| {
                    let mut values: Vec<f64> = obs.iter().map(|o| o.0).collect();
                    (*ctx, estimate(kind, &mut values))
                })
                .collect()
        };
        let mut model = Self::from_params(target, layout.clone(), spec, kind, params, 0.0, rows)?;
        let mut bits = 0.0;
        for (ctx, obs) in groups.iter() {
            let tree = model.tree(*ctx);
            // Observations are sorted by leaf, so each distinct leaf is priced once.
            for run in obs.chunk_by(|a, b| a.1 == b.1) {
                bits += run.len() as f64 * leaf_bits(&tree, run[0].1);
            }
        }
        model.data_bits = bits;
        Ok(model)
    }

    /// Fits every family and keeps the one with the lowest total cost.
    #[cfg(test)]
    pub(crate) fn fit(target: usize, layout: ContextLayout, spec: BisectionSpec, mut groups: Vec<Group>) -> Result<Self> {
        Self::fit_families(target, layout, spec, &mut groups, &LawKind::ALL)
    }

    pub(crate) fn fit_families(
        target: usize,
        layout: ContextLayout,
        spec: BisectionSpec,
        groups: &mut [Group],
        kinds: &[LawKind],
    ) -> Result<Self> {
        for (_, obs) in groups.iter_mut() {
            if !obs.is_sorted_by(|a, b| a.1 .0 <= b.1 .0) {
                obs.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0));
            }
        }
        let mut best: Option<NumericFamily> = None;
        for &kind in kinds {
            let m = Self::fit_kind(target, &layout, spec, kind, groups)?;
            if best.as_ref().is_none_or(|b| m.total_bits() < b.total_bits()) {
                best = Some(m);
            }
        }
        best.ok_or_else(|| Error::Config("no numeric family to fit".into()))
    }

    fn total_bits(&self) -> f64 {
        32.0 * self.parameter_count() as f64 + self.data_bits
    }

    pub fn spec(&self) -> &BisectionSpec {
        &self.spec
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn params(&self) -> &[(u32, [f32; 2])] {
        &self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len() * self.kind.params_per_context()
    }

    /// Law for a context; unseen contexts get the uniform law over the root.
    pub fn law(&self, ctx: u32) -> NumericLaw {
        self.laws
            .get(ctx as usize)
            .copied()
            .flatten()
            .unwrap_or(law_from_params(LawKind::Uniform, 0.0, 0.0, &self.spec))
    }

    pub fn tree(&self, ctx: u32) -> BisectionTree<NumericLaw> {
        BisectionTree::new(self.spec, self.law(ctx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(values: &[f64], spec: &BisectionSpec) -> Group {
        (0, values.iter().map(|&v| (v, spec.locate(v))).collect())
    }

    #[test]
    fn gaussian_ml_estimate() {
        let mut v = vec![1.0, 2.0, 3.0];
        let [m, s] = estimate(LawKind::Gaussian, &mut v);
        assert_eq!(m, 2.0);
        assert!((s as f64 - (2.0f64 / 3.0).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn laplace_uses_median() {
        let mut v = vec![5.0, 1.0, 2.0, 100.0, 3.0];
        let [m, s] = estimate(LawKind::Laplace, &mut v);
        assert_eq!(m, 3.0);
        assert!((s - 102.0 / 5.0).abs() < 1e-5);
    }

    #[test]
    fn concentrated_data_prefers_peaked_law() {
        let spec = BisectionSpec::new(-100.0, 100.0, 0.01, false).unwrap();
        let values: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
        let m = NumericFamily::fit(0, ContextLayout::default(), spec, vec![group(&values, &spec)]).unwrap();
        assert_ne!(m.kind(), LawKind::Uniform);
        assert_eq!(m.parameter_count(), 2);
    }

    #[test]
    fn spread_data_prefers_uniform() {
        let spec = BisectionSpec::new(0.0, 1.0, 0.01, false).unwrap();
        let values: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        let m = NumericFamily::fit(0, ContextLayout::default(), spec, vec![group(&values, &spec)]).unwrap();
        assert_eq!(m.kind(), LawKind::Uniform);
        // 64 leaves of width 1/64 under the uniform law.
        assert!((m.data_bits - 200.0 * 6.0).abs() < 1e-6);
    }

    #[test]
    fn scale_is_floored() {
        let spec = BisectionSpec::new(0.0, 10.0, 0.0, true).unwrap();
        let law = law_from_params(LawKind::Gaussian, 3.0, 0.0, &spec);
        assert_eq!(law, NumericLaw::Gaussian { mean: 3.0, std_dev: 0.125 });
        // A constant integer column costs next to nothing.
        let tree = BisectionTree::new(spec, law);
        let (l, r) = spec.locate(3.0);
        assert!(tree.leaf_probability(l, r) > 0.9999);
    }
}
