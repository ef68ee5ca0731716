use idinf::{decompose, generate, FactorKind, GenerationSpec, SummandInvariant, TolerancePolicy};

fn run(name: &str, invs: Vec<SummandInvariant>, seed: u64) {
    let mut spec = GenerationSpec::new(invs, seed);
    spec.cond_bound = 50.0;
    let drawn = generate(&spec).unwrap();
    match decompose(&drawn.pair, &TolerancePolicy::default()) {
        Ok(rep) => println!("{name}: OK {:?} warnings {:?}", rep.invariant_list(), rep.warnings),
        Err(e) => println!("{name}: ERR {e}"),
    }
}

fn main() {
    run(
        "case4",
        vec![SummandInvariant::new(
            FactorKind::Real {
                r: -0.7326071879031393,
            },
            3,
        )],
        2046324920012388148,
    );
    run(
        "case2",
        vec![
            SummandInvariant::new(
                FactorKind::Complex {
                    e: -2.808464407336984,
                    f: 2.817076204271382,
                },
                3,
            ),
            SummandInvariant::new(
                FactorKind::Complex {
                    e: -2.7739596179865624,
                    f: 2.8325855610163546,
                },
                1,
            ),
        ],
        0,
    );
}
