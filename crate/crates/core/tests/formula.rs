use hybridlab_core::formula::*;
use hybridlab_core::Permutation5;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn truth(f: &FormulaAst) -> bool {
    match f.kind() {
        NodeKind::Const0 => false,
        NodeKind::Const1 => true,
        NodeKind::And => {
            let (l, r) = f.children().unwrap();
            truth(&l) && truth(&r)
        }
        NodeKind::Or => {
            let (l, r) = f.children().unwrap();
            truth(&l) || truth(&r)
        }
    }
}

fn catalan(n: u64) -> u64 {
    (0..n).fold(1, |c, i| c * 2 * (2 * i + 1) / (i + 2))
}

fn check(f: &FormulaAst) {
    let want = truth(f) as u8;
    assert_eq!(eval_ast(f), want, "{f}");
    let p = barrington_compile(f, &CompileOptions::default()).unwrap();
    assert_eq!(p.len() as u128, f.projected_program_len());
    assert!(p.len() as u128 <= 4u128.pow(f.depth()));
    let prod = p.product();
    assert!(prod == Permutation5::SIGMA || prod.is_identity());
    assert_eq!(prod == Permutation5::SIGMA, want == 1);
    assert_eq!(eval_via_gdn(&p).unwrap(), want, "{f}");
}

#[test]
fn exhaustive_up_to_five_leaves() {
    for leaves in 1..=5u64 {
        let all = FormulaAst::enumerate(leaves as usize);
        assert_eq!(all.len() as u64, catalan(leaves - 1) * (1 << (leaves - 1)) * (1 << leaves));
        for f in &all {
            assert_eq!(f.leaf_count() as u64, leaves);
            check(f);
        }
    }
}

#[test]
fn random_deep_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let f = FormulaAst::random(&mut rng, 10, 0.3);
        assert!(f.depth() <= 10);
        check(&f);
    }
}

#[test]
fn depth_limit_reports_projected_length() {
    let mut f = FormulaAst::constant(true);
    for _ in 0..5 {
        f = FormulaAst::and(f.clone(), f);
    }
    assert_eq!(f.projected_program_len(), 4u128.pow(5));
    let err = barrington_compile(&f, &CompileOptions { max_depth: 4 }).unwrap_err();
    assert_eq!(err, FormulaError::TooDeep { depth: 5, max_depth: 4, projected_len: 1024 });
    assert_eq!(barrington_compile(&f, &CompileOptions::default()).unwrap().len(), 1024);
}

#[test]
fn parse_errors_locate_the_problem() {
    assert_eq!(parse_polish("   "), Err(FormulaError::Empty));
    assert!(matches!(parse_polish("AND 1 X"), Err(FormulaError::UnknownToken { index: 2, offset: 6, .. })));
    assert!(matches!(parse_polish("AND 1"), Err(FormulaError::MissingOperand { op: "AND", index: 0, .. })));
    assert!(matches!(parse_polish("1 0"), Err(FormulaError::TrailingInput { .. })));
    assert!(matches!(parse_polish("OR 1 0 1"), Err(FormulaError::TrailingInput { .. })));
}

#[test]
fn very_deep_formulas_do_not_recurse() {
    let mut text = String::new();
    for _ in 0..200_000 {
        text.push_str("AND 1 ");
    }
    text.push('1');
    let f = parse_polish(&text).unwrap();
    assert_eq!(f.depth(), 200_000);
    assert_eq!(eval_ast(&f), 1);
    assert!(matches!(
        barrington_compile(&f, &CompileOptions::default()),
        Err(FormulaError::TooDeep { .. })
    ));
    drop(f);
}

proptest! {
    #[test]
    fn display_parse_round_trip(seed in any::<u64>(), depth in 0u32..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = FormulaAst::random(&mut rng, depth, 0.35);
        let text = f.to_string();
        let g = parse_polish(&text).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(g.depth(), f.depth());
    }

    #[test]
    fn compiled_programs_are_sound(seed in any::<u64>(), depth in 0u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = FormulaAst::random(&mut rng, depth, 0.2);
        let p = barrington_compile(&f, &CompileOptions::default()).unwrap();
        prop_assert!(p.len() as u128 <= 4u128.pow(f.depth()));
        prop_assert_eq!(p.product() == p.accept_cycle, truth(&f));
        prop_assert_eq!(p.inverse().product(), p.product().inverse());
    }
}
