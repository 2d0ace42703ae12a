//! Dense tensors at a point with index-variance bookkeeping.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for generic comparisons.
pub const ATOL: f64 = 1e-12;
/// Relative tolerance used for generic comparisons.
pub const RTOL: f64 = 1e-9;
/// Frames with `|det|` below this are treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= ATOL + RTOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

/// Row-major multi-index of a flat component offset.
pub fn multi_index(mut flat: usize, dims: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = flat % dims;
        flat /= dims;
    }
    idx
}

/// Flat offset of a row-major multi-index.
pub fn flat_index(index: &[usize], dims: usize) -> usize {
    index.iter().fold(0, |acc, &i| acc * dims + i)
}

/// Components of a tensor at one point, stored row-major in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    dims: usize,
    variances: Vec<Variance>,
    components: Vec<f64>,
}

impl TensorValue {
    pub fn new(dims: usize, variances: Vec<Variance>, components: Vec<f64>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::ShapeMismatch("dimension must be positive".into()));
        }
        let expected = dims.pow(variances.len() as u32);
        if components.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} components for dims {dims} and rank {} (expected {expected})",
                components.len(),
                variances.len()
            )));
        }
        Ok(Self {
            dims,
            variances,
            components,
        })
    }

    pub fn zeros(dims: usize, variances: Vec<Variance>) -> Self {
        let len = dims.pow(variances.len() as u32);
        Self {
            dims,
            variances,
            components: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dims: 1,
            variances: Vec::new(),
            components: vec![value],
        }
    }

    /// Mixed identity `δ^a_b`.
    pub fn kronecker(dims: usize) -> Self {
        let mut t = Self::zeros(dims, vec![Variance::Up, Variance::Down]);
        for i in 0..dims {
            t.components[i * dims + i] = 1.0;
        }
        t
    }

    pub fn from_matrix(m: &DMatrix<f64>, variances: [Variance; 2]) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch("matrix must be square".into()));
        }
        let n = m.nrows();
        let components = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        Self::new(n, variances.to_vec(), components)
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(Error::ShapeMismatch(format!("rank {} is not 2", self.rank())));
        }
        Ok(DMatrix::from_row_slice(self.dims, self.dims, &self.components))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn rank(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[Variance] {
        &self.variances
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.rank());
        flat_index(index, self.dims)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.components[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.components[o] = value;
    }

    fn unravel(&self, flat: usize) -> Vec<usize> {
        multi_index(flat, self.dims, self.rank())
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &TensorValue) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn approx_eq(&self, other: &TensorValue) -> bool {
        self.dims == other.dims
            && self.variances == other.variances
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| approx_eq(*a, *b))
    }

    pub fn scale(&self, factor: f64) -> TensorValue {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn add(&self, other: &TensorValue) -> Result<TensorValue> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.components
            .iter_mut()
            .zip(&other.components)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &TensorValue) -> Result<TensorValue> {
        self.add(&other.scale(-1.0))
    }

    fn check_same_shape(&self, other: &TensorValue) -> Result<()> {
        if self.dims != other.dims || self.variances != other.variances {
            return Err(Error::ShapeMismatch(format!(
                "dims {} {:?} vs {} {:?}",
                self.dims, self.variances, other.dims, other.variances
            )));
        }
        Ok(())
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, other: &TensorValue) -> Result<TensorValue> {
        if self.rank() > 0 && other.rank() > 0 && self.dims != other.dims {
            return Err(Error::ShapeMismatch("outer product of different dims".into()));
        }
        let dims = if self.rank() == 0 { other.dims } else { self.dims };
        let mut variances = self.variances.clone();
        variances.extend_from_slice(&other.variances);
        let components = self
            .components
            .iter()
            .flat_map(|a| other.components.iter().map(move |b| a * b))
            .collect();
        TensorValue::new(dims, variances, components)
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.rank() {
            return Err(Error::SlotOutOfRange {
                slot,
                rank: self.rank(),
            });
        }
        Ok(())
    }

    /// Sums over a paired up/down slot.
    pub fn contract(&self, slot_up: usize, slot_down: usize) -> Result<TensorValue> {
        self.check_slot(slot_up)?;
        self.check_slot(slot_down)?;
        if slot_up == slot_down {
            return Err(Error::VarianceMismatch("cannot contract a slot with itself".into()));
        }
        if self.variances[slot_up] != Variance::Up || self.variances[slot_down] != Variance::Down {
            return Err(Error::VarianceMismatch(format!(
                "slot {slot_up} is {:?} and slot {slot_down} is {:?}",
                self.variances[slot_up], self.variances[slot_down]
            )));
        }
        let variances: Vec<Variance> = self
            .variances
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != slot_up && *i != slot_down)
            .map(|(_, v)| *v)
            .collect();
        let mut out = TensorValue::zeros(self.dims, variances);
        for (flat, &c) in self.components.iter().enumerate() {
            let idx = self.unravel(flat);
            if idx[slot_up] != idx[slot_down] {
                continue;
            }
            let reduced: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != slot_up && *i != slot_down)
                .map(|(_, v)| *v)
                .collect();
            let o = out.offset(&reduced);
            out.components[o] += c;
        }
        Ok(out)
    }

    fn pair_part(&self, a: usize, b: usize, sign: f64) -> Result<TensorValue> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if self.variances[a] != self.variances[b] {
            return Err(Error::VarianceMismatch(format!(
                "slots {a} and {b} have different variance"
            )));
        }
        let mut out = self.clone();
        for flat in 0..self.components.len() {
            let mut idx = self.unravel(flat);
            idx.swap(a, b);
            let swapped = self.components[self.offset(&idx)];
            out.components[flat] = 0.5 * (self.components[flat] + sign * swapped);
        }
        Ok(out)
    }

    /// `t_(ab) = ½(t_ab + t_ba)` over the given slots.
    pub fn symmetrize(&self, a: usize, b: usize) -> Result<TensorValue> {
        self.pair_part(a, b, 1.0)
    }

    /// `t_[ab] = ½(t_ab − t_ba)` over the given slots.
    pub fn antisymmetrize(&self, a: usize, b: usize) -> Result<TensorValue> {
        self.pair_part(a, b, -1.0)
    }

    /// Components in the frame whose basis vectors are the columns of `frame`.
    ///
    /// Covariant slots pull back through the frame, `t'_a = F^c_a t_c`;
    /// contravariant slots use the inverse, `t'^a = (F⁻¹)^a_c t^c`.
    pub fn change_frame(&self, frame: &FrameMatrix) -> Result<TensorValue> {
        if frame.size() != self.dims {
            return Err(Error::ShapeMismatch(format!(
                "frame of size {} for tensor of dims {}",
                frame.size(),
                self.dims
            )));
        }
        let inverse = frame.inverse()?;
        let mut current = self.clone();
        for slot in 0..self.rank() {
            let mut next = TensorValue::zeros(self.dims, self.variances.clone());
            for flat in 0..current.components.len() {
                let idx = current.unravel(flat);
                let mut acc = 0.0;
                let mut src = idx.clone();
                for c in 0..self.dims {
                    src[slot] = c;
                    let w = match self.variances[slot] {
                        Variance::Down => frame.entries()[(c, idx[slot])],
                        Variance::Up => inverse.entries()[(idx[slot], c)],
                    };
                    acc += w * current.components[current.offset(&src)];
                }
                next.components[flat] = acc;
            }
            current = next;
        }
        Ok(current)
    }
}

/// A square matrix used as a frame or coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    entries: DMatrix<f64>,
}

impl FrameMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "frame must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("ragged frame rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().abs() > SINGULAR_DET
    }

    pub fn inverse(&self) -> Result<FrameMatrix> {
        let det = self.determinant();
        if det.abs() <= SINGULAR_DET {
            return Err(Error::SingularFrame(det.abs()));
        }
        self.entries
            .clone()
            .try_inverse()
            .map(|entries| FrameMatrix { entries })
            .ok_or(Error::SingularFrame(det.abs()))
    }

    pub fn mul(&self, other: &FrameMatrix) -> FrameMatrix {
        FrameMatrix {
            entries: &self.entries * &other.entries,
        }
    }

    pub fn transpose(&self) -> FrameMatrix {
        FrameMatrix {
            entries: self.entries.transpose(),
        }
    }

    pub fn max_abs_diff(&self, other: &FrameMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use Variance::{Down, Up};

    #[test]
    fn identity_self_contraction_is_trace() {
        let id = TensorValue::kronecker(3);
        let tr = id.contract(0, 1).unwrap();
        assert_eq!(tr.rank(), 0);
        assert_eq!(tr.components(), &[3.0]);
    }

    #[test]
    fn identity_acts_trivially() {
        let v = TensorValue::new(3, vec![Up], vec![1.0, 2.0, 3.0]).unwrap();
        let t = TensorValue::kronecker(3).outer(&v).unwrap();
        let out = t.contract(2, 1).unwrap();
        assert_eq!(out.components(), &[1.0, 2.0, 3.0]);
        assert_eq!(out.variances(), &[Up]);
    }

    #[test]
    fn contraction_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mt = TensorValue::new(3, vec![Up, Down], m.clone()).unwrap();
        let wt = TensorValue::new(3, vec![Up], w.clone()).unwrap();
        let out = mt.outer(&wt).unwrap().contract(2, 1).unwrap();
        for a in 0..3 {
            let mut oracle = 0.0;
            for b in 0..3 {
                oracle += m[a * 3 + b] * w[b];
            }
            assert!((out.get(&[a]) - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn contraction_errors() {
        let t = TensorValue::zeros(3, vec![Down, Down]);
        assert!(matches!(t.contract(0, 1), Err(Error::VarianceMismatch(_))));
        let t = TensorValue::kronecker(3);
        assert!(matches!(t.contract(0, 2), Err(Error::SlotOutOfRange { .. })));
        assert!(matches!(t.contract(0, 0), Err(Error::VarianceMismatch(_))));
    }

    #[test]
    fn antisymmetrize_known_values() {
        let t = TensorValue::new(2, vec![Down, Down], vec![0.0, 1.0, 3.0, 0.0]).unwrap();
        let a = t.antisymmetrize(0, 1).unwrap();
        assert_eq!(a.components(), &[0.0, -1.0, 1.0, 0.0]);
        let s = t.symmetrize(0, 1).unwrap();
        assert_eq!(s.add(&a).unwrap(), t);
        assert_eq!(s.antisymmetrize(0, 1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn symmetrize_requires_matching_variance() {
        let t = TensorValue::kronecker(2);
        assert!(matches!(t.symmetrize(0, 1), Err(Error::VarianceMismatch(_))));
    }

    #[test]
    fn change_frame_examples() {
        let beta = TensorValue::new(
            3,
            vec![Down, Down],
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let same = beta.change_frame(&FrameMatrix::identity(3)).unwrap();
        assert_eq!(same, beta);

        let frame = FrameMatrix::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let out = beta.change_frame(&frame).unwrap();
        // direct index transformation: t'_ab = F^c_a F^d_b t_cd
        let mut oracle = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        oracle[a * 3 + b] += frame.entries()[(c, a)]
                            * frame.entries()[(d, b)]
                            * beta.get(&[c, d]);
                    }
                }
            }
        }
        assert_eq!(out.components(), &oracle);
        assert_eq!(out.components(), &[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn singular_frame_is_rejected() {
        let t = TensorValue::kronecker(2);
        let frame = FrameMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(t.change_frame(&frame), Err(Error::SingularFrame(_))));
    }

    proptest::proptest! {
        #[test]
        fn change_frame_round_trip(
            entries in proptest::collection::vec(-1.0f64..1.0, 9),
            comps in proptest::collection::vec(-5.0f64..5.0, 27),
        ) {
            let mut m = DMatrix::from_row_slice(3, 3, &entries);
            m += DMatrix::identity(3, 3) * 3.0;
            let frame = FrameMatrix::new(m).unwrap();
            let t = TensorValue::new(3, vec![Up, Down, Down], comps).unwrap();
            let there = t.change_frame(&frame).unwrap();
            let back = there.change_frame(&frame.inverse().unwrap()).unwrap();
            proptest::prop_assert!(back.max_abs_diff(&t) < 1e-12);
        }

        #[test]
        fn contraction_is_linear(
            a in proptest::collection::vec(-5.0f64..5.0, 9),
            b in proptest::collection::vec(-5.0f64..5.0, 9),
            s in -3.0f64..3.0,
        ) {
            let ta = TensorValue::new(3, vec![Up, Down], a).unwrap();
            let tb = TensorValue::new(3, vec![Up, Down], b).unwrap();
            let lhs = ta.add(&tb.scale(s)).unwrap().contract(0, 1).unwrap();
            let rhs = ta.contract(0, 1).unwrap().get(&[]) + s * tb.contract(0, 1).unwrap().get(&[]);
            proptest::prop_assert!((lhs.get(&[]) - rhs).abs() < 1e-12);
        }

        #[test]
        fn antisymmetric_part_of_symmetric_part_vanishes(
            a in proptest::collection::vec(-5.0f64..5.0, 16),
        ) {
            let t = TensorValue::new(4, vec![Down, Down], a).unwrap();
            let z = t.symmetrize(0, 1).unwrap().antisymmetrize(0, 1).unwrap();
            proptest::prop_assert_eq!(z.max_abs(), 0.0);
        }
    }
}
