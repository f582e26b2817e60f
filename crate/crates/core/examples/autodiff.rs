//! Fits a logistic regression with the tape directly, then checks one
//! gradient against central differences.
//!
//! ```text
//! cargo run --example autodiff
//! ```

use subtreegen::autodiff::{grad_check, Mask, Tape, Tensor, Var};

fn loss(tape: &mut Tape, w: Var, x: &Tensor, y: &Tensor) -> Var {
    let x = tape.constant(x.clone());
    let logits = tape.matmul(x, w).unwrap();
    let mask = Mask::from_indices(y.rows(), 1, (0..y.rows()).collect());
    tape.bce_with_logits_masked(logits, y.data(), &mask)
        .unwrap()
}

fn main() {
    // Points above the line x0 + x1 = 1 are positive; the last column is a bias.
    let pts = [
        (0.1, 0.2),
        (0.9, 0.8),
        (0.4, 0.3),
        (0.7, 0.9),
        (0.2, 0.6),
        (0.8, 0.5),
    ];
    let x = Tensor::new(6, 3, pts.iter().flat_map(|&(a, b)| [a, b, 1.0]).collect()).unwrap();
    let y = Tensor::new(
        6,
        1,
        pts.iter().map(|&(a, b)| f64::from(a + b > 1.0)).collect(),
    )
    .unwrap();

    let mut w = Tensor::zeros(3, 1);
    for step in 0..=2000 {
        let mut tape = Tape::new();
        let wv = tape.leaf(w.clone());
        let l = loss(&mut tape, wv, &x, &y);
        let value = tape.value(l).item();
        let g = tape.backward(l).unwrap();
        let g = g.get(wv).unwrap();
        if step % 500 == 0 {
            println!("step {step:4}  loss {value:.5}");
        }
        w = Tensor::new(
            3,
            1,
            w.data()
                .iter()
                .zip(g.data())
                .map(|(a, d)| a - 0.5 * d)
                .collect(),
        )
        .unwrap();
    }
    println!("weights {:?}", w.data());

    let mut tape = Tape::new();
    let wv = tape.leaf(w.clone());
    let l = loss(&mut tape, wv, &x, &y);
    let analytic = tape.backward(l).unwrap().get(wv).unwrap().data().to_vec();
    let f = |theta: &[f64]| {
        let mut t = Tape::new();
        let wv = t.leaf(Tensor::new(3, 1, theta.to_vec()).unwrap());
        let l = loss(&mut t, wv, &x, &y);
        t.value(l).item()
    };
    let report = grad_check(f, &analytic, w.data(), 1e-6);
    println!(
        "gradient check: max relative error {:.2e}",
        report.max_rel_err
    );
}
