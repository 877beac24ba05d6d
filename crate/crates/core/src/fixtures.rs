//! Seeded random systems with a known geometric normal form: `X = Ψ_*(F₀ · X⁽¹⁾)`
//! with integrals `G ∘ Ψ⁻¹`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::integrability::IntegrableSystem;
use crate::invariants::{canonical_linear_field, hilbert_basis, invariant_generators, ResonanceProblem, DEFAULT_DEGREE_CAP};
use crate::scalar::Scalar;
use crate::series::{jacobian_rank_series, monomials_up_to, PolyMap, TruncatedSeries};
use crate::spectrum::{SpectrumCase, SpectrumClass};

/// Spectrum classes used by the round-trip suites.
pub fn round_trip_classes(n: usize) -> Vec<SpectrumClass> {
    let c = |case, k, m: &[i64]| SpectrumClass { case, k, m: m.to_vec(), lambda: 1.0 };
    match n {
        2 => vec![c(SpectrumCase::StrongHyperbolic, 0, &[1, -1]), c(SpectrumCase::StrongElliptic, 0, &[1, -1])],
        3 => vec![
            c(SpectrumCase::StrongHyperbolic, 0, &[1, 1, -2]),
            c(SpectrumCase::WeakHyperbolic, 1, &[0, 1, -1]),
            c(SpectrumCase::WeakElliptic, 1, &[0, 1, -1]),
        ],
        4 => vec![
            c(SpectrumCase::StrongElliptic, 0, &[1, -1, 2, -2]),
            c(SpectrumCase::StrongHyperbolic, 0, &[1, 1, -1, -1]),
            c(SpectrumCase::WeakHyperbolic, 1, &[0, 2, 1, -1]),
        ],
        _ => vec![],
    }
}

/// A generated system together with the data it was built from.
#[derive(Clone, Debug)]
pub struct RoundTrip {
    pub class: SpectrumClass,
    pub system: IntegrableSystem,
    /// Factor of the hidden normal form.
    pub f0: TruncatedSeries,
    /// Hidden coordinate change (identity linear part, degree ≤ 3).
    pub psi: PolyMap,
}

fn small_rational(rng: &mut ChaCha8Rng) -> Scalar {
    const CHOICES: [(i64, i64); 8] = [(1, 1), (-1, 1), (2, 1), (-2, 1), (1, 2), (-1, 2), (1, 3), (-1, 3)];
    let (p, q) = *CHOICES.choose(rng).unwrap();
    Scalar::ratio(p, q)
}

/// `n − 1` real generators with independent differentials, chosen greedily.
pub fn independent_generators(gens: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
    let mut chosen: Vec<TruncatedSeries> = Vec::new();
    for g in gens {
        let mut trial = chosen.clone();
        trial.push(g.clone());
        let order = trial.iter().map(|t| t.lowest_degree().unwrap_or(1)).sum::<u32>() + 1;
        let lifted: Vec<TruncatedSeries> = trial.iter().map(|t| t.with_order(order)).collect();
        if jacobian_rank_series(&lifted).map(|r| r.rank) == Ok(trial.len()) {
            chosen = trial;
        }
    }
    chosen
}

pub fn random_round_trip(class: &SpectrumClass, seed: u64, order: u32) -> RoundTrip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = class.dim();
    let hb = hilbert_basis(&ResonanceProblem { m: class.m.clone() }, DEFAULT_DEGREE_CAP).expect("fixture class");
    let gens = invariant_generators(class, &hb, order).real_forms;

    let mut f0 = TruncatedSeries::one(n, order);
    for _ in 0..rng.gen_range(1..=3) {
        let mut term = TruncatedSeries::constant(n, order, small_rational(&mut rng));
        for _ in 0..rng.gen_range(1..=2) {
            term = &term * gens.choose(&mut rng).unwrap();
        }
        if term.lowest_degree().is_some_and(|d| d < order) {
            f0 = &f0 + &term;
        }
    }
    let x0 = canonical_linear_field(class, order).scaled_by(&f0).expect("same shape");

    let nonlinear = monomials_up_to(n, 2, 3);
    let comps: Vec<TruncatedSeries> = (0..n)
        .map(|j| {
            let mut c = TruncatedSeries::variable(n, order, j);
            for _ in 0..rng.gen_range(0..=2) {
                c.add_term(nonlinear.choose(&mut rng).unwrap().clone(), small_rational(&mut rng));
            }
            c
        })
        .collect();
    let psi = PolyMap::new(comps).expect("identity linear part");
    let x = x0.pushforward(&psi).expect("invertible map");
    let psi_inv = psi.invert().expect("invertible map");
    let integrals: Vec<TruncatedSeries> = independent_generators(&gens)
        .iter()
        .take(n - 1)
        .map(|g| psi_inv.apply(g).expect("same shape"))
        .collect();
    let system = IntegrableSystem::new(x, integrals).expect("conserved by construction");
    RoundTrip { class: class.clone(), system, f0, psi }
}
