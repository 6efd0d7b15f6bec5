use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbcode_core::algebra::{Field, FieldSpec, Mat};
use pbcode_core::basecode::make_cauchy_base_seeded;
use pbcode_core::designs::{build, CodeParams, DesignId};
use pbcode_core::engine::{plan_execute, plan_validate};
use pbcode_core::framework::{instantiate, theorem1_check, PiggybackSpec, DEFAULT_BOUND};

/// Every buildable parameter set with `n <= max_n`, at the default `m` and at `m = 2`.
fn small_params(max_n: usize) -> Vec<CodeParams> {
    let mut out = Vec::new();
    for n in 3..=max_n {
        for k in 1..n {
            for design in DesignId::ALL {
                let mut ms = vec![design.default_m()];
                if n <= 9 && design != DesignId::Pp {
                    ms.push(design.default_m() + 1);
                }
                for m in ms {
                    let mut p = CodeParams::new(design, n, k);
                    p.m = m;
                    if build(&p).is_ok() {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn every_small_code_is_mds() {
    let params = small_params(14);
    assert!(params.len() > 100);
    for p in &params {
        let b = build(p).unwrap();
        assert!(b.code().verify_mds(DEFAULT_BOUND).unwrap(), "{p:?}");
    }
}

#[test]
fn every_plan_executes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in small_params(14) {
        let b = build(&p).unwrap();
        let code = b.code();
        let plans: Vec<_> = (0..code.n()).map(|j| b.design.repair_plan(j).unwrap()).collect();
        for plan in &plans {
            assert!(plan_validate(code, plan), "{p:?} node {}", plan.failed);
        }
        for _ in 0..20 {
            let msg: Vec<u32> = (0..code.width()).map(|_| rng.gen_range(0..256)).collect();
            let cw = code.encode(&msg).unwrap();
            for plan in &plans {
                assert_eq!(plan_execute(code, &msg, plan).unwrap(), cw[plan.failed], "{p:?}");
            }
        }
    }
}

#[test]
fn random_triangular_piggybacks_keep_decodability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = Field::gf256();
    for trial in 0..100 {
        let k = rng.gen_range(2..=6);
        let r = rng.gen_range(1..=4);
        let alpha = rng.gen_range(2..=4);
        let base = make_cauchy_base_seeded(f, k, r, trial + 1).unwrap();
        let code = instantiate(&base, alpha).unwrap();
        let mut spec = PiggybackSpec::new(alpha);
        for _ in 0..rng.gen_range(1..=6) {
            let node = rng.gen_range(k..k + r);
            let s = rng.gen_range(1..alpha);
            let mut coeffs = vec![0; k * alpha];
            for c in coeffs.iter_mut().take(s * k) {
                if rng.gen_bool(0.4) {
                    *c = rng.gen_range(1..256);
                }
            }
            spec.add(node, s, coeffs);
        }
        let mut code = code.apply_piggyback(&spec).unwrap();
        if rng.gen_bool(0.5) {
            let node = rng.gen_range(k..k + r);
            let t = loop {
                let data = (0..alpha * alpha).map(|_| rng.gen_range(0..256)).collect();
                let t = Mat::from_vec(f, alpha, alpha, data).unwrap();
                if t.rank() == alpha {
                    break t;
                }
            };
            code = code.apply_node_transform(node, &t).unwrap();
        }
        assert!(theorem1_check(&base, &code, DEFAULT_BOUND).unwrap(), "trial {trial}");
    }
}

#[test]
fn designs_over_gf65536() {
    for design in DesignId::ALL {
        let mut p = CodeParams::new(design, 9, 6);
        p.field = FieldSpec::Binary { w: 16 };
        let b = build(&p).unwrap();
        assert!(b.code().verify_mds(DEFAULT_BOUND).unwrap(), "{design}");
        assert!(theorem1_check(b.base.as_ref(), b.code(), DEFAULT_BOUND).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_bases_stay_mds(seed in 1u64..10_000, k in 2usize..7, r in 2usize..4) {
        let p = CodeParams { design: DesignId::D1, field: FieldSpec::GF256, n: k + r, k, m: 1, seed };
        match build(&p) {
            Ok(b) => prop_assert!(b.code().verify_mds(DEFAULT_BOUND).unwrap()),
            Err(e) => prop_assert!(k < r, "{e}"),
        }
    }

    #[test]
    fn systematic_costs_never_exceed_full_download(k in 3usize..12, r in 3usize..5, m in 1usize..3) {
        for design in [DesignId::D1, DesignId::D2, DesignId::D3] {
            let mut p = CodeParams::new(design, k + r, k);
            p.m = if design == DesignId::D3 { m + 1 } else { m };
            if let Ok(b) = build(&p) {
                let full = b.code().width();
                for l in 0..k {
                    prop_assert!(b.design.repair_plan(l).unwrap().cost() <= full);
                }
            }
        }
    }
}
