//! Seeded sampling of group elements and cone points.
//!
//! Sample `i` of a batch draws from its own ChaCha stream, so a batch is
//! identical whether it is evaluated sequentially or in parallel.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nilalgebra::{NilAlgebra, TriangularElement};

/// Diagonal entries of sampled group elements are drawn from this range.
pub const DIAG_RANGE: (f64, f64) = (0.5, 2.0);
/// Off-diagonal coordinates of sampled group elements are drawn from this range.
pub const OFFDIAG_RANGE: (f64, f64) = (-1.0, 1.0);

/// Independent generator for sample `index` of the batch seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize, range: (f64, f64)) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(range.0..range.1))
}

/// `A ∈ G` with diagonal in [`DIAG_RANGE`] and off-diagonal in [`OFFDIAG_RANGE`].
pub fn random_group_element<R: Rng>(alg: &NilAlgebra, rng: &mut R) -> TriangularElement {
    let diag = (0..alg.rank())
        .map(|_| rng.random_range(DIAG_RANGE.0..DIAG_RANGE.1))
        .collect();
    let offdiag = alg
        .spaces()
        .iter()
        .map(|s| random_vector(rng, s.dim(), OFFDIAG_RANGE))
        .collect();
    TriangularElement { diag, offdiag }
}

/// `A ∈ G'`: unit diagonal, off-diagonal in [`OFFDIAG_RANGE`].
pub fn random_unipotent<R: Rng>(alg: &NilAlgebra, rng: &mut R) -> TriangularElement {
    let mut a = random_group_element(alg, rng);
    a.diag.iter_mut().for_each(|d| *d = 1.0);
    a
}

/// The `index`-th group element of the batch `seed`.
pub fn group_element(alg: &NilAlgebra, seed: u64, index: u64) -> TriangularElement {
    random_group_element(alg, &mut stream_rng(seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let alg = NilAlgebra::rank2(MetricSpace::euclidean(3));
        assert_eq!(group_element(&alg, 4, 7), group_element(&alg, 4, 7));
        assert_ne!(group_element(&alg, 4, 7), group_element(&alg, 4, 8));
        let a = group_element(&alg, 1, 0);
        assert!(a.diag.iter().all(|d| (0.5..2.0).contains(d)));
        assert!(a.offdiag[0].iter().all(|x| (-1.0..1.0).contains(x)));
    }
}
