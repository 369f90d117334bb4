//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::time::{Duration, Instant};

use hermite_psido::algebra::{
    beals_test, commutator, commutator_with_h, commutator_with_z, NamedOperator,
};
use hermite_psido::hermite::{eval_hermite_all, QuadratureRule};
use hermite_psido::matrix::{
    classify, counterexample_2d, frobenius_tail, l2_norm, matmul, schur_norm_bound,
    ClassifierConfig, OperatorMatrix,
};
use hermite_psido::quantizer::{dequantize_symbol, quantize, quantize_derivative_check, QuantizationConfig};
use hermite_psido::symbols::{harmonic_symbol, oscillator_conjugation, Symbol};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn basis_exactness() -> Outcome {
    let start = Instant::now();
    let n_max = 40;
    let quad = QuadratureRule::for_products(n_max);
    let mut gram = vec![0.0; (n_max + 1) * (n_max + 1)];
    for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
        let phi = eval_hermite_all(n_max, x);
        for m in 0..=n_max {
            for n in 0..=n_max {
                gram[m * (n_max + 1) + n] += w * phi[m] * phi[n];
            }
        }
    }
    let mut ortho: f64 = 0.0;
    for m in 0..=n_max {
        for n in 0..=n_max {
            let delta = if m == n { 1.0 } else { 0.0 };
            ortho = ortho.max((gram[m * (n_max + 1) + n] - delta).abs());
        }
    }
    let x = NamedOperator::MultiplyX.padded(48, 2).unwrap();
    let d = NamedOperator::DerivativeX.padded(48, 2).unwrap();
    let h = matmul(&x, &x).unwrap().sub(&matmul(&d, &d).unwrap());
    let ladder = h.max_diff(&OperatorMatrix::diagonal(48, |n| 2.0 * n as f64 + 1.0));
    let elapsed = start.elapsed();
    outcome(
        ortho < 1e-10 && ladder < 1e-12 && within(elapsed, Duration::from_secs(10)),
        format!("orthonormality {ortho:.2e} (< 1e-10), ladder {ladder:.2e} (< 1e-12), {elapsed:.2?} (< 10 s)"),
    )
}

fn quantizer_ground_truth() -> Outcome {
    let start = Instant::now();
    let size = 25;
    let cfg = QuantizationConfig::for_size(size - 1);
    let one = quantize(&Symbol::parse("1", None).unwrap(), size, size, &cfg).unwrap();
    let e1 = one.matrix.max_diff(&OperatorMatrix::identity(size));
    let x = quantize(&Symbol::parse("x", None).unwrap(), size, size, &cfg).unwrap();
    let e2 = x.matrix.max_diff(&NamedOperator::MultiplyX.matrix_of(size, size).unwrap());
    let h = quantize(&Symbol::parse("x^2 + xi^2", None).unwrap(), size, size, &cfg).unwrap();
    let e3 = h.matrix.max_diff(&NamedOperator::Harmonic.matrix_of(size, size).unwrap());
    let elapsed = start.elapsed();
    outcome(
        e1 < 1e-8 && e2 < 1e-7 && e3 < 1e-7 && within(elapsed, Duration::from_secs(120)),
        format!("a=1 {e1:.2e} (< 1e-8), a=x {e2:.2e} (< 1e-7), a=x^2+xi^2 {e3:.2e} (< 1e-7), {elapsed:.2?} (< 2 min)"),
    )
}

fn diagonal_example() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [-2.0, -1.0, 1.0, 2.0] {
        let k = NamedOperator::HarmonicPower(s).matrix_of(128, 128).unwrap();
        let rep = classify(&k, &ClassifierConfig::new(s / 2.0, 2, 4)).unwrap();
        let r0 = rep.diagonal_slopes[0].unwrap_or(f64::NAN);
        let r1 = rep.diagonal_slopes[1].unwrap_or(f64::NAN);
        let ok = rep.pass && (r0 - s / 2.0).abs() <= 0.05 && (r1 - (s / 2.0 - 1.0)).abs() <= 0.1;
        pass &= ok;
        parts.push(format!("s={s}: pass={} slope0 {r0:.4} slope1 {r1:.4}", rep.pass));
    }
    outcome(pass, parts.join("; "))
}

fn off_diagonal_mechanism() -> Outcome {
    let a = harmonic_symbol(1.0);
    let b = oscillator_conjugation(&a).unwrap();
    let cfg = QuantizationConfig::for_size(16);
    let ka = quantize(&a, 17, 17, &cfg).unwrap().matrix;
    let kb = quantize(&b, 17, 17, &cfg).unwrap().matrix;
    let lhs = ka.map(|m, n, z| z * 2.0 * (m as f64 - n as f64));
    let err = lhs.max_diff(&kb);
    outcome(err < 1e-6, format!("max |2(m-n)K - K~| = {err:.2e} (< 1e-6)"))
}

fn derivative_identity() -> Outcome {
    let cfg = QuantizationConfig::for_size(17);
    let rx = quantize_derivative_check(&Symbol::parse("x", None).unwrap(), 17, 17, &cfg)
        .unwrap()
        .residual;
    let rh = quantize_derivative_check(&harmonic_symbol(1.0), 17, 17, &cfg)
        .unwrap()
        .residual;
    outcome(
        rx < 1e-6 && rh < 1e-6,
        format!("residual a=x {rx:.2e}, a=<x,xi> {rh:.2e} (< 1e-6)"),
    )
}

fn commutator_shortcuts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let size = 40;
    let pad = 3;
    let h = NamedOperator::Harmonic.padded(size, pad).unwrap();
    let z = NamedOperator::Shift.padded(size, pad).unwrap();
    let (mut eh, mut ez): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let band = rng.gen_range(0..=2);
        let total = size + pad;
        let mut data = Vec::with_capacity(total * total);
        for m in 0..total {
            for n in 0..total {
                data.push(if m.abs_diff(n) <= band {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                });
            }
        }
        let a = OperatorMatrix::new(total, total, data)
            .unwrap()
            .with_band(Some(band))
            .with_pad(pad);
        eh = eh.max(commutator_with_h(&a).max_diff(&commutator(&a, &h).unwrap()));
        ez = ez.max(commutator_with_z(&a).unwrap().max_diff(&commutator(&a, &z).unwrap()));
    }
    outcome(
        eh < 1e-12 && ez < 1e-12,
        format!("20 random banded matrices: [A,H] {eh:.2e}, [A,Z] {ez:.2e} (< 1e-12)"),
    )
}

fn beals_concordance() -> Outcome {
    let start = Instant::now();
    let size = 96;
    let pad = 5;
    let s_list = [-2.0, 0.0, 2.0];
    let quantized = {
        let cfg = QuantizationConfig::for_size(size + pad - 1);
        let q = quantize(&harmonic_symbol(1.0), size + pad, size + pad, &cfg).unwrap();
        q.matrix.with_pad(pad)
    };
    let corpus: Vec<(&str, OperatorMatrix, f64)> = vec![
        ("HarmonicPower(1)", NamedOperator::HarmonicPower(1.0).padded(size, pad).unwrap(), 1.0),
        ("HarmonicPower(-1)", NamedOperator::HarmonicPower(-1.0).padded(size, pad).unwrap(), -1.0),
        ("Shift", NamedOperator::Shift.padded(size, pad).unwrap(), 0.0),
        ("Creation", NamedOperator::Creation.padded(size, pad).unwrap(), 1.0),
        ("quantize(<x,xi>)", quantized, 1.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, k, r) in &corpus {
        let c = classify(k, &ClassifierConfig::new(r / 2.0, 2, 4)).unwrap();
        let b = beals_test(k, *r, 2, 2, &s_list).unwrap();
        pass &= c.pass && b.pass;
        parts.push(format!("{name}@{r}: classify {} beals {}", c.pass, b.pass));
        if !c.pass {
            parts.push(format!("  {:?}", c.failures));
        }
    }
    let witness = OperatorMatrix::diagonal(size + pad, |n| 1.0 + n as f64).with_pad(pad);
    let c = classify(&witness, &ClassifierConfig::new(0.0, 2, 4)).unwrap();
    let b = beals_test(&witness, 0.0, 2, 2, &s_list).unwrap();
    pass &= !c.pass && !b.pass;
    parts.push(format!("diag(1+n)@0: classify {} beals {}", c.pass, b.pass));
    let elapsed = start.elapsed();
    pass &= within(elapsed, Duration::from_secs(300));
    parts.push(format!("{elapsed:.2?} (< 5 min)"));
    outcome(pass, parts.join("; "))
}

fn l2_membership() -> Outcome {
    let blocks = [16, 32, 64, 128];
    let increments = |k: &OperatorMatrix| -> Vec<f64> {
        frobenius_tail(k, &blocks)
            .unwrap()
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect()
    };
    let g = increments(&OperatorMatrix::generated(128, -0.75, 4.0));
    let id = increments(&OperatorMatrix::identity(128));
    let decreasing = g.windows(2).all(|w| w[1] < w[0]);
    let nondecreasing = id.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        decreasing && nondecreasing,
        format!("SM^-0.75 increments {g:.4?}; identity increments {id:?}"),
    )
}

fn schur_dominance() -> Outcome {
    let size = 64;
    let cfg = QuantizationConfig::for_size(size - 1);
    let corpus: Vec<(&str, OperatorMatrix)> = vec![
        ("HarmonicPower(1)", NamedOperator::HarmonicPower(1.0).matrix_of(size, size).unwrap()),
        ("HarmonicPower(-1)", NamedOperator::HarmonicPower(-1.0).matrix_of(size, size).unwrap()),
        ("Harmonic", NamedOperator::Harmonic.matrix_of(size, size).unwrap()),
        ("Shift", NamedOperator::Shift.matrix_of(size, size).unwrap()),
        ("ShiftAdjoint", NamedOperator::ShiftAdjoint.matrix_of(size, size).unwrap()),
        ("Creation", NamedOperator::Creation.matrix_of(size, size).unwrap()),
        ("Annihilation", NamedOperator::Annihilation.matrix_of(size, size).unwrap()),
        ("MultiplyX", NamedOperator::MultiplyX.matrix_of(size, size).unwrap()),
        ("DerivativeX", NamedOperator::DerivativeX.matrix_of(size, size).unwrap()),
        ("Identity", NamedOperator::Identity.matrix_of(size, size).unwrap()),
        ("generated(0,4)", OperatorMatrix::generated(size, 0.0, 4.0)),
        ("generated(-0.75,2)", OperatorMatrix::generated(size, -0.75, 2.0)),
        ("quantize(<x,xi>^-2)", quantize(&harmonic_symbol(-2.0), size, size, &cfg).unwrap().matrix),
    ];
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut failing = Vec::new();
    for (name, k) in &corpus {
        let (s, l) = (schur_norm_bound(k), l2_norm(k));
        worst = worst.min(s - l);
        if s < l {
            pass = false;
            failing.push(*name);
        }
    }
    outcome(
        pass,
        format!("{} matrices, min(schur - l2) = {worst:.3e}, failing {failing:?}", corpus.len()),
    )
}

fn counterexample() -> Outcome {
    let rep = counterexample_2d().unwrap();
    let slope_ok = rep.max_abs_slope_in_n2 <= 0.05;
    let box_ok = rep.box_constant <= 2.0;
    let band_ok = rep.stated_form_error < 1e-12;
    outcome(
        slope_ok && box_ok && band_ok,
        format!(
            "slope in n2 {:.2e} (0 +- 0.05) {}; box constant {:.4} (<= 2) {}; band value vs 2/(sqrt(n1+3)+sqrt(n1+1)) off by {:.3e} (< 1e-12) {}, vs 1/(sqrt(n1+2)+sqrt(n1+1)) off by {:.1e}",
            rep.max_abs_slope_in_n2,
            if slope_ok { "ok" } else { "FAIL" },
            rep.box_constant,
            if box_ok { "ok" } else { "FAIL" },
            rep.stated_form_error,
            if band_ok { "ok" } else { "FAIL" },
            rep.closed_form_error,
        ),
    )
}

fn roundtrip() -> Outcome {
    let sym = harmonic_symbol(-2.0);
    let grid: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let error = |size: usize| -> f64 {
        let cfg = QuantizationConfig::for_size(size - 1);
        let k = quantize(&sym, size, size, &cfg).unwrap().matrix;
        let a = dequantize_symbol(&k, &grid, &grid, &QuadratureRule::for_products(size));
        let mut worst: f64 = 0.0;
        for (i, &x) in grid.iter().enumerate() {
            for (j, &xi) in grid.iter().enumerate() {
                let want = 1.0 / (1.0 + x * x + xi * xi);
                worst = worst.max((a[i][j] - want).norm() / want);
            }
        }
        worst
    };
    let (e48, e96) = (error(48), error(96));
    outcome(
        e48 <= 2e-2 && e96 <= 0.5 * e48,
        format!("relative error {e48:.3e} at 48 (<= 2e-2), {e96:.3e} at 96 (<= half)"),
    )
}

fn appendix_sanity() -> Outcome {
    let size = 64;
    let grid: Vec<f64> = (0..=16).map(|i| -4.0 + 0.5 * i as f64).collect();
    let quad = QuadratureRule::for_products(size);
    let cfg = QuantizationConfig::for_size(size - 1);
    let corpus: Vec<(&str, OperatorMatrix)> = vec![
        ("Identity", NamedOperator::Identity.matrix_of(size, size).unwrap()),
        ("Shift", NamedOperator::Shift.matrix_of(size, size).unwrap()),
        ("ShiftAdjoint", NamedOperator::ShiftAdjoint.matrix_of(size, size).unwrap()),
        ("HarmonicPower(0)", NamedOperator::HarmonicPower(0.0).matrix_of(size, size).unwrap()),
        ("generated(0,8)", OperatorMatrix::generated(size, 0.0, 8.0)),
        (
            "quantize(x/<x,xi>)",
            quantize(&Symbol::parse("x * bracket(-1)", Some(0.0)).unwrap(), size, size, &cfg)
                .unwrap()
                .matrix,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, k) in &corpus {
        let a = dequantize_symbol(k, &grid, &grid, &quad);
        let sup = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        let bound = 10.0 * schur_norm_bound(k);
        pass &= sup <= bound;
        parts.push(format!("{name}: sup|a| {sup:.3} vs 10*schur {bound:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("basis exactness", basis_exactness),
        ("quantizer ground truth", quantizer_ground_truth),
        ("diagonal example", diagonal_example),
        ("off-diagonal mechanism", off_diagonal_mechanism),
        ("derivative identity", derivative_identity),
        ("commutator shortcuts", commutator_shortcuts),
        ("Beals concordance", beals_concordance),
        ("l2 membership", l2_membership),
        ("Schur dominance", schur_dominance),
        ("two-dimensional counterexample", counterexample),
        ("roundtrip", roundtrip),
        ("bounded symbol sanity", appendix_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "{tag} criterion {:>2} {name} [{:.2?}]: {}",
            i + 1,
            start.elapsed(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
