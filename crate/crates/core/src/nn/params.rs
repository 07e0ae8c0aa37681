use ndarray::Array2;

/// An ordered list of parameter tensors (or gradients with the same layout).
/// Biases are stored as `1 × width` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Params(pub Vec<Array2<f64>>);

impl Params {
    pub fn zeros_like(other: &Params) -> Self {
        Params(other.0.iter().map(|t| Array2::zeros(t.dim())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.0.iter().map(|t| t.len()).sum()
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &Params) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.scaled_add(alpha, b);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in &mut self.0 {
            t.mapv_inplace(|x| alpha * x);
        }
    }

    pub fn dot(&self, other: &Params) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a * b).sum()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn same_shapes(&self, other: &Params) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.dim() == b.dim())
    }
}
