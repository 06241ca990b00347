use super::ssl::gamma_posterior;
use super::{Architecture, GsAeError, Result, SslConfig};
use crate::numeric::{Matrix, RngStream, Vector};

/// Affine layer `z = W x + b` with `W` of shape `out×in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vector,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { w: Matrix::zeros(output, input), b: Vector::zeros(output) }
    }

    fn xavier(input: usize, output: usize, rng: &mut RngStream) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        Self { w: Matrix::from_fn(output, input, |_, _| rng.uniform_range(-bound, bound)), b: Vector::zeros(output) }
    }
}

/// Everything that gradient ascent touches. Also used for gradients and Adam
/// moments, which share the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub encoder: Vec<Dense>,
    pub shared: Vec<Dense>,
    /// `N×D` weights of the per-variable output layers, one row each.
    pub head_w: Matrix,
    pub head_b: Vector,
    /// `C×K` SSL matrix.
    pub b: Matrix,
}

impl ParamSet {
    pub fn zeros_like(other: &ParamSet) -> Self {
        let z = |d: &Dense| Dense { w: Matrix::zeros(d.w.nrows(), d.w.ncols()), b: Vector::zeros(d.b.len()) };
        Self {
            encoder: other.encoder.iter().map(z).collect(),
            shared: other.shared.iter().map(z).collect(),
            head_w: Matrix::zeros(other.head_w.nrows(), other.head_w.ncols()),
            head_b: Vector::zeros(other.head_b.len()),
            b: Matrix::zeros(other.b.nrows(), other.b.ncols()),
        }
    }

    /// Tensor names in the order used by [`ParamSet::slices`].
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (l, _) in self.encoder.iter().enumerate() {
            out.push(format!("encoder.{l}.w"));
            out.push(format!("encoder.{l}.b"));
        }
        for (l, _) in self.shared.iter().enumerate() {
            out.push(format!("shared.{l}.w"));
            out.push(format!("shared.{l}.b"));
        }
        out.extend(["head.w".to_string(), "head.b".to_string(), "ssl.b".to_string()]);
        out
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for d in self.encoder.iter().chain(&self.shared) {
            out.push(d.w.as_slice());
            out.push(d.b.as_slice());
        }
        out.push(self.head_w.as_slice());
        out.push(self.head_b.as_slice());
        out.push(self.b.as_slice());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for d in self.encoder.iter_mut().chain(self.shared.iter_mut()) {
            out.push(d.w.as_mut_slice());
            out.push(d.b.as_mut_slice());
        }
        out.push(self.head_w.as_mut_slice());
        out.push(self.head_b.as_mut_slice());
        out.push(self.b.as_mut_slice());
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.len(), "flat parameter length");
        let mut offset = 0;
        for s in self.slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }
}

/// Trained or initialized autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct GsAeParams {
    pub arch: Architecture,
    pub theta: ParamSet,
    /// `C×K` inclusion probabilities, refreshed after each step.
    pub p: Matrix,
    /// SSL row used by each variable.
    pub var_group: Vec<usize>,
    /// Groups `0..n_anchors` anchor factors `0..n_anchors`.
    pub n_anchors: usize,
    /// Off-anchor cells of anchor rows are pinned at zero.
    pub hard_zero: bool,
    /// `B` is not trained (plain autoencoder).
    pub b_frozen: bool,
}

impl GsAeParams {
    fn check_layout(arch: &Architecture, var_group: &[usize], n_anchors: usize) -> Result<()> {
        arch.validate()?;
        if var_group.len() != arch.n {
            return Err(GsAeError::ShapeMismatch(format!("{} group labels for {} variables", var_group.len(), arch.n)));
        }
        if let Some(g) = var_group.iter().find(|g| **g >= arch.c) {
            return Err(GsAeError::InvalidConfig(format!("group index {g} outside 0..{}", arch.c)));
        }
        if n_anchors > arch.k || n_anchors > arch.c {
            return Err(GsAeError::InvalidConfig(format!("{n_anchors} anchors for K={} and C={}", arch.k, arch.c)));
        }
        for a in 0..n_anchors {
            if !var_group.contains(&a) {
                return Err(GsAeError::InvalidConfig(format!("anchor group {a} has no variables")));
            }
        }
        Ok(())
    }

    fn init_layers(arch: &Architecture, rng: &mut RngStream) -> (Vec<Dense>, Vec<Dense>, Matrix) {
        let mut encoder = Vec::new();
        let mut input = arch.n;
        for &d in &arch.encoder_dims {
            encoder.push(Dense::xavier(input, d, rng));
            input = d;
        }
        let mut shared = Vec::new();
        let mut input = arch.k;
        for &d in &arch.decoder_dims {
            shared.push(Dense::xavier(input, d, rng));
            input = d;
        }
        let bound = (6.0 / (input + 1) as f64).sqrt();
        let head_w = Matrix::from_fn(arch.n, input, |_, _| rng.uniform_range(-bound, bound));
        (encoder, shared, head_w)
    }

    /// Xavier-uniform weights, zero biases, `B = 0.5` on anchor cells and
    /// `0.1` elsewhere (or exactly 0 on masked cells in hard-zero mode).
    pub fn init_grouped(
        arch: Architecture,
        var_group: Vec<usize>,
        n_anchors: usize,
        ssl: &SslConfig,
        rng: &mut RngStream,
    ) -> Result<Self> {
        Self::check_layout(&arch, &var_group, n_anchors)?;
        ssl.validate()?;
        let (encoder, shared, head_w) = Self::init_layers(&arch, rng);
        let mut params = Self {
            theta: ParamSet {
                encoder,
                shared,
                head_w,
                head_b: Vector::zeros(arch.n),
                b: Matrix::zeros(arch.c, arch.k),
            },
            p: Matrix::zeros(arch.c, arch.k),
            var_group,
            n_anchors,
            hard_zero: ssl.hard_zero_anchors,
            b_frozen: false,
            arch,
        };
        for c in 0..params.arch.c {
            for k in 0..params.arch.k {
                params.theta.b[(c, k)] = if params.is_anchor_cell(c, k) {
                    0.5
                } else if params.hard_zero && params.is_masked(c, k) {
                    0.0
                } else {
                    0.1
                };
            }
        }
        params.refresh_p(ssl);
        Ok(params)
    }

    /// Ordinary autoencoder: one group, `B` fixed to ones, no SSL term.
    pub fn init_plain(mut arch: Architecture, rng: &mut RngStream) -> Result<Self> {
        arch.c = 1;
        let var_group = vec![0; arch.n];
        Self::check_layout(&arch, &var_group, 0)?;
        let (encoder, shared, head_w) = Self::init_layers(&arch, rng);
        Ok(Self {
            theta: ParamSet {
                encoder,
                shared,
                head_w,
                head_b: Vector::zeros(arch.n),
                b: Matrix::from_element(1, arch.k, 1.0),
            },
            p: Matrix::from_element(1, arch.k, 1.0),
            var_group,
            n_anchors: 0,
            hard_zero: false,
            b_frozen: true,
            arch,
        })
    }

    pub fn is_anchor_row(&self, c: usize) -> bool {
        c < self.n_anchors
    }

    /// The single active cell of an anchor row.
    pub fn is_anchor_cell(&self, c: usize, k: usize) -> bool {
        self.is_anchor_row(c) && c == k
    }

    /// Off-anchor cell of an anchor row.
    pub fn is_masked(&self, c: usize, k: usize) -> bool {
        self.is_anchor_row(c) && c != k
    }

    /// `C×K` boolean pattern of fixed identity cells.
    pub fn anchor_mask(&self) -> Vec<Vec<bool>> {
        (0..self.arch.c).map(|c| (0..self.arch.k).map(|k| self.is_anchor_cell(c, k)).collect()).collect()
    }

    pub fn group_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.arch.c];
        for (i, g) in self.var_group.iter().enumerate() {
            out[*g].push(i);
        }
        out
    }

    pub fn refresh_p(&mut self, ssl: &SslConfig) {
        if self.b_frozen {
            return;
        }
        self.p = gamma_posterior(&self.theta.b, ssl, self.n_anchors);
    }
}
