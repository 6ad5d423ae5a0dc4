use deeptriangle::optim::AmsgradConfig;
use deeptriangle::{Amsgrad, Error, Tape, Tensor};
use proptest::prelude::*;

fn with_grad(value: f64, grad: f64) -> Tensor {
    let mut t = Tensor::vector(vec![value]).with_grad();
    t.accumulate_grad(&[grad]).unwrap();
    t
}

#[test]
fn first_step_closed_form() {
    let cfg = AmsgradConfig::default();
    let mut opt = Amsgrad::new(cfg);
    let mut p = with_grad(1.0, 0.3);
    opt.step(&mut [&mut p]).unwrap();
    // With bias correction the first step reduces to lr·g / (|g| + ε/√(1-β₂)).
    let expected = -cfg.learning_rate * 0.3 / (0.3 + cfg.epsilon / (1.0 - cfg.beta2).sqrt());
    let delta = p.data()[0] - 1.0;
    assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
    assert!((delta + 5e-4).abs() < 1e-6);
    assert_eq!(p.grad().unwrap(), &[0.0]);
    assert_eq!(opt.steps_taken(), 1);
}

#[test]
fn zero_gradient_leaves_parameters() {
    let mut opt = Amsgrad::new(AmsgradConfig::default());
    let mut p = with_grad(0.7, 0.0);
    let mut q = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0])
        .unwrap()
        .with_grad();
    q.zero_grad();
    opt.step(&mut [&mut p, &mut q]).unwrap();
    assert_eq!(p.data(), &[0.7]);
    assert_eq!(q.data(), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(opt.steps_taken(), 1);
}

#[test]
fn running_max_holds_after_sign_flip() {
    let mut opt = Amsgrad::new(AmsgradConfig::default());
    let mut p = with_grad(0.0, 0.5);
    opt.step(&mut [&mut p]).unwrap();
    let after_one = opt.max_second_moment(0).unwrap().to_vec();
    p.accumulate_grad(&[-0.5]).unwrap();
    opt.step(&mut [&mut p]).unwrap();
    let after_two = opt.max_second_moment(0).unwrap();
    // v grows from 2.5e-4 to about 5.0e-4 with the same |g|, so the max moves
    // up; it never drops below the previous value.
    assert!(after_two[0] >= after_one[0]);
    let v = opt.second_moment(0).unwrap()[0];
    assert_eq!(after_two[0], v.max(after_one[0]));
}

#[test]
fn missing_gradient_is_rejected() {
    let mut opt = Amsgrad::new(AmsgradConfig::default());
    let mut p = Tensor::vector(vec![1.0]).with_grad();
    assert!(matches!(
        opt.step(&mut [&mut p]),
        Err(Error::MissingGradient { index: 0 })
    ));
}

#[test]
fn changed_parameter_set_is_rejected() {
    let mut opt = Amsgrad::new(AmsgradConfig::default());
    let mut p = with_grad(1.0, 0.1);
    opt.step(&mut [&mut p]).unwrap();
    let mut a = with_grad(1.0, 0.1);
    let mut b = with_grad(1.0, 0.1);
    assert!(matches!(
        opt.step(&mut [&mut a, &mut b]),
        Err(Error::Contract(_))
    ));
}

#[test]
fn quadratic_converges() {
    let target = 1.0;
    let mut opt = Amsgrad::new(AmsgradConfig::default());
    let mut x = Tensor::vector(vec![0.0]).with_grad();
    let mut steps = 0;
    while steps < 20_000 && (x.data()[0] - target).abs() >= 1e-3 {
        let mut tape = Tape::new();
        let v = tape.leaf(&x);
        let a = tape.constant(vec![1], vec![target]).unwrap();
        let d = tape.sub(v, a).unwrap();
        let l = tape.square(d);
        tape.backward(l)
            .unwrap()
            .accumulate_into(v, &mut x)
            .unwrap();
        opt.step(&mut [&mut x]).unwrap();
        steps += 1;
    }
    assert!(
        (x.data()[0] - target).abs() < 1e-3,
        "x = {} after {steps}",
        x.data()[0]
    );
}

#[test]
fn without_bias_correction_step_is_plain() {
    let cfg = AmsgradConfig {
        bias_correction: false,
        ..Default::default()
    };
    let mut opt = Amsgrad::new(cfg);
    let mut p = with_grad(0.0, 2.0);
    opt.step(&mut [&mut p]).unwrap();
    let m = 0.1 * 2.0;
    let v: f64 = 0.001 * 4.0;
    let expected = -cfg.learning_rate * m / (v.sqrt() + cfg.epsilon);
    assert!((p.data()[0] - expected).abs() < 1e-12 * expected.abs());
}

proptest! {
    #[test]
    fn max_second_moment_never_decreases(grads in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let mut opt = Amsgrad::new(AmsgradConfig::default());
        let mut p = Tensor::vector(vec![0.0]).with_grad();
        let mut last = 0.0;
        for g in grads {
            p.accumulate_grad(&[g]).unwrap();
            opt.step(&mut [&mut p]).unwrap();
            let now = opt.max_second_moment(0).unwrap()[0];
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn constant_gradient_step_is_bounded(g in prop_oneof![-5.0f64..-1e-3, 1e-3f64..5.0], steps in 1usize..300) {
        let cfg = AmsgradConfig::default();
        let mut opt = Amsgrad::new(cfg);
        let mut p = Tensor::vector(vec![0.0]).with_grad();
        let mut prev = 0.0;
        for t in 1..=steps {
            p.accumulate_grad(&[g]).unwrap();
            opt.step(&mut [&mut p]).unwrap();
            let step = (p.data()[0] - prev).abs();
            prev = p.data()[0];
            // lr_t·m̂/√v̂ with m̂ = (1-β₁ᵗ)g and v̂ = (1-β₂ᵗ)g² is exactly lr.
            prop_assert!(step <= cfg.learning_rate * (1.0 + 1e-9), "step {} at t = {}", step, t);
        }
    }
}
