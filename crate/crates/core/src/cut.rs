//! Parity inequalities and the cut-search algorithm.
//!
//! A check row with neighborhood N(j) induces, for every odd-cardinality
//! subset V of N(j), the parity inequality
//!
//! ```text
//!     sum_{i in V} (1 - u_i)  +  sum_{i in N(j)\V} u_i  >= 1 .
//! ```
//!
//! An inequality violated at the current point is a cut. At most one subset
//! of a given check can be violated at any point in the unit hypercube, and
//! `cut_search` locates it (or proves there is none) in a single pass over
//! the neighborhood instead of enumerating all 2^(d-1) subsets.

use crate::lp::{ConstraintOrigin, LinearConstraint};
use serde::{Deserialize, Serialize};

/// Default violation threshold. Comparisons use `lhs < CUT_THRESHOLD` rather
/// than `lhs < 1` so solver rounding noise cannot produce false cuts.
pub const CUT_THRESHOLD: f64 = 1.0 - 1e-6;

/// A point in the unit hypercube with integrality metadata from threshold
/// rounding. `integral_mask[i]` is true exactly when `values[i]` is 0 or 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionVector {
    pub values: Vec<f64>,
    pub integral_mask: Vec<bool>,
}

impl SolutionVector {
    /// Wraps already-rounded values; the mask is derived from exact equality
    /// with 0 and 1.
    pub fn from_values(values: Vec<f64>) -> Self {
        let integral_mask = values.iter().map(|&v| v == 0.0 || v == 1.0).collect();
        SolutionVector { values, integral_mask }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.integral_mask.iter().all(|&m| m)
    }

    pub fn fractional_count(&self) -> usize {
        self.integral_mask.iter().filter(|&&m| !m).count()
    }

    /// Hard bits of an integral vector.
    ///
    /// # Panics
    ///
    /// Panics if any entry is fractional.
    pub fn to_bits(&self) -> Vec<u8> {
        assert!(self.is_integral(), "vector has fractional entries");
        self.values.iter().map(|&v| u8::from(v == 1.0)).collect()
    }
}

/// One violated parity inequality: the generating check support, the odd
/// subset, and the left-hand-side value at the point where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityCut {
    /// Support N(j) of the generating check row, ascending.
    pub support: Vec<usize>,
    /// The violated odd-cardinality subset V, ascending.
    pub subset: Vec<usize>,
    /// Left-hand side of the parity inequality at the searched point.
    pub lhs_value: f64,
}

/// Left-hand side of the parity inequality for subset `subset` of `support`.
///
/// # Panics
///
/// Panics if `subset` is not contained in `support`.
pub fn parity_lhs(u: &SolutionVector, support: &[usize], subset: &[usize]) -> f64 {
    let mut inside = 0;
    let mut lhs = 0.0;
    for &i in support {
        if subset.contains(&i) {
            lhs += 1.0 - u.values[i];
            inside += 1;
        } else {
            lhs += u.values[i];
        }
    }
    assert_eq!(inside, subset.len(), "subset must be contained in the support");
    lhs
}

fn half_gap(v: f64) -> f64 {
    (0.5 - v).abs()
}

/// g(T) where T = {i in support : u_i > 1/2}; T minimizes g over all subsets.
/// Integral positions contribute nothing, so this equals
/// |S|/2 - sum_{i in S} |1/2 - u_i| over the fractional neighbors S.
fn g_of_t(u: &SolutionVector, support: &[usize]) -> f64 {
    support
        .iter()
        .map(|&i| {
            let v = u.values[i];
            if v > 0.5 {
                1.0 - v
            } else {
                v
            }
        })
        .sum()
}

fn fractional_neighbors(u: &SolutionVector, support: &[usize]) -> Vec<usize> {
    support.iter().copied().filter(|&i| !u.integral_mask[i]).collect()
}

/// Parity of the hard assignment on an all-integral neighborhood.
fn integral_parity_violated(u: &SolutionVector, support: &[usize]) -> bool {
    support.iter().filter(|&&i| u.values[i] == 1.0).count() % 2 == 1
}

/// Necessary condition for the check with neighborhood `support` to induce a
/// cut at `u`: g(T) < theta over the minimizing subset T.
///
/// When every neighbor is integral the condition degenerates (g(T) = 0), so
/// the exact parity-violation test is returned instead; this keeps the
/// condition equivalent to cut existence on integral neighborhoods.
pub fn necessary_condition(u: &SolutionVector, support: &[usize], theta: f64) -> bool {
    if fractional_neighbors(u, support).is_empty() {
        return integral_parity_violated(u, support);
    }
    g_of_t(u, support) < theta
}

/// Sufficient condition: g(T) + 2 min_{i in S} |1/2 - u_i| < theta, with S
/// the fractional neighbors. With S empty this is the parity-violation test
/// on the integral assignment.
pub fn sufficient_condition(u: &SolutionVector, support: &[usize], theta: f64) -> bool {
    let fractional = fractional_neighbors(u, support);
    if fractional.is_empty() {
        return integral_parity_violated(u, support);
    }
    let min_gap = fractional.iter().map(|&i| half_gap(u.values[i])).fold(f64::INFINITY, f64::min);
    g_of_t(u, support) + 2.0 * min_gap < theta
}

/// Cut-search: returns the unique violated parity inequality of this check
/// at `u`, if one exists.
///
/// Starts from the minimizing subset T = {i : u_i > 1/2}; if |T| is even,
/// toggles membership of the fractional neighbor closest to 1/2 (smallest
/// index on ties), or of the smallest-index neighbor when none is
/// fractional. The candidate is violated exactly when its left-hand side is
/// below `theta`.
pub fn cut_search(u: &SolutionVector, support: &[usize], theta: f64) -> Option<ParityCut> {
    if support.is_empty() {
        return None;
    }
    let mut subset: Vec<usize> = support.iter().copied().filter(|&i| u.values[i] > 0.5).collect();
    if subset.len() % 2 == 0 {
        let fractional = fractional_neighbors(u, support);
        let toggle = if fractional.is_empty() {
            support[0]
        } else {
            let mut best = fractional[0];
            for &i in &fractional[1..] {
                if half_gap(u.values[i]) < half_gap(u.values[best]) {
                    best = i;
                }
            }
            best
        };
        match subset.binary_search(&toggle) {
            Ok(pos) => {
                subset.remove(pos);
            }
            Err(pos) => subset.insert(pos, toggle),
        }
    }
    let lhs = parity_lhs(u, support, &subset);
    (lhs < theta).then_some(ParityCut {
        support: support.to_vec(),
        subset,
        lhs_value: lhs,
    })
}

/// Exhaustive oracle: every odd subset of `support` whose parity inequality
/// is violated at `u`, in lexicographic order. At most one subset can ever
/// be returned.
///
/// # Panics
///
/// Panics if the check degree exceeds 20.
pub fn brute_force_cut(u: &SolutionVector, support: &[usize], theta: f64) -> Vec<Vec<usize>> {
    let d = support.len();
    assert!(d <= 20, "brute-force enumeration guard: degree {d} > 20");
    let mut violated = Vec::new();
    for mask in 0u32..(1u32 << d) {
        if mask.count_ones() % 2 == 0 {
            continue;
        }
        let mut lhs = 0.0;
        for (bit, &i) in support.iter().enumerate() {
            if (mask >> bit) & 1 == 1 {
                lhs += 1.0 - u.values[i];
            } else {
                lhs += u.values[i];
            }
        }
        if lhs < theta {
            violated.push(
                support
                    .iter()
                    .enumerate()
                    .filter(|&(bit, _)| (mask >> bit) & 1 == 1)
                    .map(|(_, &i)| i)
                    .collect(),
            );
        }
    }
    violated.sort();
    violated
}

/// Normalized >= form of a parity cut: +1 coefficients outside V, -1 inside,
/// bound 1 - |V|.
pub fn cut_to_constraint(cut: &ParityCut, origin: ConstraintOrigin) -> LinearConstraint {
    let coeffs = cut
        .support
        .iter()
        .map(|&i| {
            if cut.subset.binary_search(&i).is_ok() {
                (i, -1.0)
            } else {
                (i, 1.0)
            }
        })
        .collect();
    LinearConstraint {
        coeffs,
        bound: 1.0 - cut.subset.len() as f64,
        origin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn sv(values: &[f64]) -> SolutionVector {
        SolutionVector::from_values(values.to_vec())
    }

    /// Draws an entry from the {0, 1, uniform(0,1)} mixture.
    pub(crate) fn mixed_entry(rng: &mut StdRng) -> f64 {
        match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => {
                // Keep strictly inside (0,1) so the mask is well defined.
                let v: f64 = rng.gen_range(1e-4..1.0 - 1e-4);
                v
            }
        }
    }

    #[test]
    fn parity_lhs_examples() {
        let support = [0, 1, 2];
        assert_eq!(parity_lhs(&sv(&[1.0, 0.0, 0.0]), &support, &[0]), 0.0);
        let lhs = parity_lhs(&sv(&[0.9, 0.1, 0.1]), &support, &[0]);
        assert!((lhs - 0.3).abs() < 1e-12);
        // V = N(j) on an all-ones point of odd degree.
        assert_eq!(parity_lhs(&sv(&[1.0, 1.0, 1.0]), &support, &[0, 1, 2]), 0.0);
        // Even degree uses V of size |N(j)| - 1.
        let support4 = [0, 1, 2, 3];
        assert_eq!(parity_lhs(&sv(&[1.0; 4]), &support4, &[0, 1, 2]), 1.0);
    }

    #[test]
    #[should_panic(expected = "subset must be contained")]
    fn parity_lhs_rejects_foreign_subset() {
        parity_lhs(&sv(&[0.5, 0.5]), &[0], &[1]);
    }

    #[test]
    fn necessary_condition_examples() {
        let support = [0, 1, 2];
        // Maximal-uncertainty symmetry point: g(T) = 1.5.
        assert!(!necessary_condition(&sv(&[0.5, 0.5, 0.5]), &support, CUT_THRESHOLD));
        // g(T) = 0.3.
        assert!(necessary_condition(&sv(&[0.9, 0.1, 0.1]), &support, CUT_THRESHOLD));
        // Satisfied integral check.
        assert!(!necessary_condition(&sv(&[1.0, 1.0, 0.0]), &support, CUT_THRESHOLD));
    }

    #[test]
    fn sufficient_condition_examples() {
        // g(T) = 0.3 and every fractional gap is 0.4, so the bound is
        // 0.3 + 0.8 = 1.1: not sufficient (the cut still exists; |T| is odd).
        assert!(!sufficient_condition(&sv(&[0.9, 0.1, 0.1]), &[0, 1, 2], CUT_THRESHOLD));
        // Degree-2 check: g(T) = 0.85, min gap 0.05, 0.95 < 1.
        assert!(sufficient_condition(&sv(&[0.6, 0.45]), &[0, 1], CUT_THRESHOLD));
        // Symmetry point.
        assert!(!sufficient_condition(&sv(&[0.5, 0.5, 0.5]), &[0, 1, 2], CUT_THRESHOLD));
    }

    #[test]
    fn cut_search_examples() {
        let support = [0, 1, 2];
        let cut = cut_search(&sv(&[1.0, 0.0, 0.0]), &support, CUT_THRESHOLD).unwrap();
        assert_eq!(cut.subset, vec![0]);
        assert_eq!(cut.lhs_value, 0.0);

        assert!(cut_search(&sv(&[0.5, 0.5, 0.5]), &support, CUT_THRESHOLD).is_none());

        let cut = cut_search(&sv(&[0.9, 0.1, 0.1]), &support, CUT_THRESHOLD).unwrap();
        assert_eq!(cut.subset, vec![0]);
        assert!((cut.lhs_value - 0.3).abs() < 1e-12);
        assert_eq!(
            brute_force_cut(&sv(&[0.9, 0.1, 0.1]), &support, CUT_THRESHOLD),
            vec![vec![0]]
        );

        assert!(cut_search(&sv(&[0.5]), &[], CUT_THRESHOLD).is_none());
    }

    #[test]
    fn brute_force_examples() {
        let u = sv(&[0.9, 0.1, 0.1]);
        assert_eq!(brute_force_cut(&u, &[0, 1, 2], CUT_THRESHOLD), vec![vec![0]]);
        // All inequalities satisfied.
        let u = sv(&[1.0, 1.0, 0.0]);
        assert!(brute_force_cut(&u, &[0, 1, 2], CUT_THRESHOLD).is_empty());
    }

    #[test]
    fn csa_matches_brute_force_and_theorems() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..20_000 {
            let degree = rng.gen_range(1..=10);
            let n = degree + rng.gen_range(0..4);
            let values: Vec<f64> = (0..n).map(|_| mixed_entry(&mut rng)).collect();
            let u = SolutionVector::from_values(values);
            let mut support: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                support.swap(i, rng.gen_range(0..=i));
            }
            support.truncate(degree);
            support.sort_unstable();

            let found = cut_search(&u, &support, CUT_THRESHOLD);
            let oracle = brute_force_cut(&u, &support, CUT_THRESHOLD);
            assert!(oracle.len() <= 1, "uniqueness of the violated inequality");
            match (&found, oracle.first()) {
                (Some(cut), Some(subset)) => assert_eq!(&cut.subset, subset),
                (None, None) => {}
                other => panic!("cut search and oracle disagree: {other:?}"),
            }

            let nc = necessary_condition(&u, &support, CUT_THRESHOLD);
            let sc = sufficient_condition(&u, &support, CUT_THRESHOLD);
            if found.is_some() {
                assert!(nc, "a cut implies the necessary condition");
            }
            if sc {
                assert!(found.is_some(), "the sufficient condition implies a cut");
            }
            let t_len = support.iter().filter(|&&i| u.values[i] > 0.5).count();
            if t_len % 2 == 1 {
                assert_eq!(nc, found.is_some(), "|T| odd: necessary condition is exact");
            } else {
                assert_eq!(sc, found.is_some(), "|T| even: sufficient condition is exact");
            }
        }
    }

    #[test]
    fn condition_forms_agree() {
        // Eq-form equivalence: g(T) computed directly equals
        // |S|/2 - sum |1/2 - u_i|, and likewise for the sufficient form.
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..20_000 {
            let degree = rng.gen_range(1..=10);
            let values: Vec<f64> = (0..degree).map(|_| mixed_entry(&mut rng)).collect();
            let u = SolutionVector::from_values(values);
            let support: Vec<usize> = (0..degree).collect();
            let s: Vec<usize> = support.iter().copied().filter(|&i| !u.integral_mask[i]).collect();
            let direct = g_of_t(&u, &support);
            let via_s: f64 =
                s.len() as f64 / 2.0 - s.iter().map(|&i| half_gap(u.values[i])).sum::<f64>();
            assert!((direct - via_s).abs() < 1e-12);
        }
    }

    #[test]
    fn constraint_form_examples() {
        let cut = ParityCut { support: vec![0, 1, 2], subset: vec![0], lhs_value: 0.0 };
        let c = cut_to_constraint(&cut, ConstraintOrigin::Rpc { support: vec![0, 1, 2], subset: vec![0] });
        assert_eq!(c.coeffs, vec![(0, -1.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(c.bound, 0.0);

        let cut = ParityCut { support: vec![0, 1, 2], subset: vec![0, 1, 2], lhs_value: 0.0 };
        let c = cut_to_constraint(&cut, ConstraintOrigin::Rpc { support: vec![0, 1, 2], subset: vec![0, 1, 2] });
        // -u1 - u2 - u3 >= -2, i.e. u1 + u2 + u3 <= 2.
        assert_eq!(c.coeffs, vec![(0, -1.0), (1, -1.0), (2, -1.0)]);
        assert_eq!(c.bound, -2.0);
    }

    #[test]
    fn generated_constraint_violated_at_origin_point() {
        let mut rng = StdRng::seed_from_u64(47);
        for _ in 0..2000 {
            let degree = rng.gen_range(1..=8);
            let values: Vec<f64> = (0..degree).map(|_| mixed_entry(&mut rng)).collect();
            let u = SolutionVector::from_values(values);
            let support: Vec<usize> = (0..degree).collect();
            if let Some(cut) = cut_search(&u, &support, CUT_THRESHOLD) {
                let c = cut_to_constraint(
                    &cut,
                    ConstraintOrigin::Rpc { support: cut.support.clone(), subset: cut.subset.clone() },
                );
                let slack = c.evaluate(&u.values) - c.bound;
                assert!(slack <= -(1.0 - CUT_THRESHOLD) + 1e-12, "violation margin too small: {slack}");
            }
        }
    }

    #[test]
    fn even_weight_local_codewords_satisfy_all_inequalities() {
        // Every even-weight configuration on the support satisfies every odd
        // subset's inequality with slack >= 0.
        for d in 1..=6usize {
            let support: Vec<usize> = (0..d).collect();
            for word in 0u32..(1 << d) {
                if word.count_ones() % 2 == 1 {
                    continue;
                }
                let values: Vec<f64> = (0..d).map(|i| f64::from((word >> i) & 1)).collect();
                let u = SolutionVector::from_values(values);
                for mask in 0u32..(1 << d) {
                    if mask.count_ones() % 2 == 0 {
                        continue;
                    }
                    let subset: Vec<usize> =
                        (0..d).filter(|&i| (mask >> i) & 1 == 1).collect();
                    assert!(parity_lhs(&u, &support, &subset) >= 1.0);
                }
            }
        }
    }
}
