//! Property tests: structural invariants that must hold on whole input
//! families, not just fixtures.

use idinf::{
    char_poly, decompose, generate, generators, is_isomorphic, normalize_invariant, nullspace,
    rank, reciprocal_partner, relation_residuals, same_invariants, FactorKind, GenerationSpec,
    RealMatrix, SummandInvariant, TolerancePolicy,
};
use proptest::prelude::*;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// Roots bounded away from 0 and from overflow; the unit circle is allowed.
fn arb_kind() -> impl Strategy<Value = FactorKind> {
    prop_oneof![
        (0.2_f64..5.0, prop::bool::ANY).prop_map(|(m, neg)| FactorKind::Real {
            r: if neg { -m } else { m },
        }),
        (-3.0_f64..3.0, 0.2_f64..3.0).prop_map(|(e, f)| FactorKind::Complex { e, f }),
    ]
}

fn arb_invariant() -> impl Strategy<Value = SummandInvariant> {
    (arb_kind(), 1_usize..4).prop_map(|(kind, n)| SummandInvariant::new(kind, n))
}

fn arb_spec() -> impl Strategy<Value = GenerationSpec> {
    (prop::collection::vec(arb_invariant(), 1..4), any::<u64>()).prop_map(|(invs, seed)| {
        let mut spec = GenerationSpec::new(invs, seed);
        spec.cond_bound = 50.0;
        spec
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// rank + nullity = #columns, and the nullspace basis is annihilated.
    #[test]
    fn nullspace_complements_rank(rows in 1_usize..6, cols in 1_usize..6, entries in prop::collection::vec(-5.0_f64..5.0, 36)) {
        let m = RealMatrix::from_fn(rows, cols, |i, j| {
            // quantize so near-rank-deficiency is impossible to misjudge
            (entries[i * 6 + j] * 2.0).round() / 2.0
        });
        let t = tol();
        let r = rank(&m, &t).unwrap();
        let (r2, basis) = nullspace(&m, &t).unwrap();
        prop_assert_eq!(r, r2);
        prop_assert_eq!(r + basis.ncols(), cols);
        if basis.ncols() > 0 {
            prop_assert!((&m * &basis).norm() <= 1e-9 * (1.0 + m.norm()));
            let gram = basis.transpose() * &basis;
            prop_assert!((gram - RealMatrix::identity(basis.ncols(), basis.ncols())).norm() <= 1e-10);
        }
    }

    /// Reciprocal pairing is an involution and fixes exactly the unit circle.
    #[test]
    fn reciprocal_is_involution(kind in arb_kind()) {
        let partner = reciprocal_partner(&kind).unwrap();
        let back = reciprocal_partner(&partner).unwrap();
        prop_assert!(back.matches(&kind, 1e-12));
        let on_circle = (kind.root_modulus() - 1.0).abs() <= 1e-12;
        prop_assert_eq!(partner.matches(&kind, 1e-12), on_circle);
    }

    /// Normalization is idempotent and lands on modulus >= 1, upper half plane.
    #[test]
    fn normalize_is_idempotent(inv in arb_invariant()) {
        let once = normalize_invariant(&inv).unwrap();
        let twice = normalize_invariant(&once).unwrap();
        prop_assert!(once.kind.matches(&twice.kind, 1e-15));
        prop_assert_eq!(once.n, twice.n);
        prop_assert!(once.kind.root_modulus() >= 1.0 - 1e-12);
        if let FactorKind::Complex { f, .. } = once.kind {
            prop_assert!(f > 0.0);
        }
    }

    /// Generated pairs satisfy the defining relations, and a = J1 J2 has a
    /// spectrum closed under z -> 1/z with matching multiplicities. The
    /// closure is checked at the coefficient level — the reversed
    /// characteristic polynomial must equal chi(0) * chi, and |chi(0)| = 1 —
    /// because coefficients stay accurate even where defective eigenvalues
    /// scatter.
    #[test]
    fn generated_pairs_satisfy_relations(spec in arb_spec()) {
        let drawn = generate(&spec).unwrap();
        let g = generators(&drawn.pair);
        let res = relation_residuals(&g);
        prop_assert!(res.b_square <= 1e-10, "b^2 residual {}", res.b_square);
        prop_assert!(res.conjugation <= 1e-8, "conjugation residual {}", res.conjugation);

        let chi = char_poly(g.a()).unwrap();
        let c = chi.coeffs();
        let d = chi.degree();
        let chi0 = c[0];
        prop_assert!((chi0.abs() - 1.0).abs() <= 1e-7, "|chi(0)| = {}", chi0.abs());
        let scale = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for k in 0..=d {
            prop_assert!(
                (c[d - k] - chi0 * c[k]).abs() <= 1e-7 * scale,
                "coefficient {k}: {} vs {}",
                c[d - k],
                chi0 * c[k]
            );
        }
    }

    /// decompose() recovers exactly the invariants the generator planted,
    /// regardless of seed, and two draws of the same spec are isomorphic.
    #[test]
    fn decompose_inverts_generate(spec in arb_spec(), seed2 in any::<u64>()) {
        let t = tol();
        let drawn = generate(&spec).unwrap();
        let report = decompose(&drawn.pair, &t).unwrap();
        prop_assert!(
            same_invariants(&report.invariant_list(), &drawn.invariants, 1e-5),
            "got {:?}, planted {:?}",
            report.invariant_list(),
            drawn.invariants
        );

        let mut spec2 = spec.clone();
        spec2.seed = seed2;
        let drawn2 = generate(&spec2).unwrap();
        let report2 = decompose(&drawn2.pair, &t).unwrap();
        prop_assert!(is_isomorphic(&report, &report2, &t));
    }
}
