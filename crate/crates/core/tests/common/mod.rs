#![allow(dead_code)]

use deeptriangle::autograd::{Tape, Tensor, Var};
use deeptriangle::layers::Parameterized;
use deeptriangle::model::{Dimensions, DropoutPlan, ModelParams};
use deeptriangle::triangle::{
    build_samples, CellRecord, CompanyCode, Sample, Triangle, ValidationRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Largest `|analytic - numeric| / max(1, |numeric|)` over every element of
/// every parameter, using central differences.
pub fn gradient_error<F>(params: &[Tensor<f64>], f: F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    gradient_error_by(params, f, |a, n| (a - n).abs() / n.abs().max(1.0))
}

/// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`.
pub fn relative_gradient_error<F>(params: &[Tensor<f64>], f: F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    gradient_error_by(params, f, |a, n| {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    })
}

fn gradient_error_by<F, E>(params: &[Tensor<f64>], f: F, measure: E) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
    E: Fn(f64, f64) -> f64,
{
    let eval = |ps: &[Tensor<f64>]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.leaf(p)).collect();
        let out = f(&mut tape, &vars);
        (tape, vars, out)
    };
    let (tape, vars, out) = eval(params);
    let grads = tape.backward(out).expect("scalar output");
    let mut worst: f64 = 0.0;
    for (k, p) in params.iter().enumerate() {
        let analytic = grads
            .wrt(vars[k])
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; p.len()]);
        for (e, &a) in analytic.iter().enumerate() {
            let mut plus = params.to_vec();
            plus[k].data_mut()[e] += FD_STEP;
            let mut minus = params.to_vec();
            minus[k].data_mut()[e] -= FD_STEP;
            let (tp, _, op) = eval(&plus);
            let (tm, _, om) = eval(&minus);
            let numeric = (tp.value(op)[0] - tm.value(om)[0]) / (2.0 * FD_STEP);
            let err = measure(a, numeric);
            worst = worst.max(err);
        }
    }
    worst
}

pub fn random_tensor(shape: Vec<usize>, rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(shape, data).unwrap().with_grad()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full `size x size` triangle from cumulative paid rows; incurred is paid
/// plus `reserve(i, j)`.
pub fn triangle_from_cumulative(
    company: u32,
    level: usize,
    rows: &[Vec<f64>],
    premium: &[f64],
    reserve: impl Fn(usize, usize) -> f64,
) -> Triangle {
    let cells = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &paid)| {
                    Some(CellRecord {
                        cumulative_paid: paid,
                        incurred: paid + reserve(i + 1, j + 1),
                    })
                })
                .collect()
        })
        .collect();
    Triangle::new(
        CompanyCode(company),
        "test",
        level,
        1988,
        premium.to_vec(),
        cells,
    )
    .unwrap()
}

/// Random positive cumulative triangle with increasing rows.
pub fn random_triangle(size: usize, company: u32, rng: &mut impl Rng) -> Triangle {
    let rows: Vec<Vec<f64>> = (0..size)
        .map(|_| {
            let mut c = rng.random_range(50.0..500.0);
            (0..size)
                .map(|_| {
                    let v = c;
                    c *= rng.random_range(1.0..1.6);
                    v
                })
                .collect()
        })
        .collect();
    let premium: Vec<f64> = (0..size).map(|_| rng.random_range(800.0..1200.0)).collect();
    triangle_from_cumulative(company, 0, &rows, &premium, |i, j| (10 * i + j) as f64)
}

fn small_triangle(level: usize, scale: f64) -> Triangle {
    let size = 4;
    let cells = (1..=size)
        .map(|i| {
            let mut cum = 0.0;
            (1..=size)
                .map(|j| {
                    cum += scale * (40.0 + 7.0 * i as f64) / j as f64;
                    Some(CellRecord {
                        cumulative_paid: cum,
                        incurred: cum + 30.0 / j as f64,
                    })
                })
                .collect()
        })
        .collect();
    Triangle::new(
        CompanyCode(level as u32),
        "x",
        level,
        2000,
        vec![100.0; size],
        cells,
    )
    .unwrap()
}

fn network_loss(params: &ModelParams<f64>, samples: &[&Sample]) -> f64 {
    let mut p = params.clone();
    p.loss_and_grad(samples, &DropoutPlan::inference(), &mut rng(0))
        .unwrap()
}

/// Worst `|analytic - numeric| / max(|analytic|, |numeric|, 1e-7)` over every
/// parameter of a network with 2-unit GRUs, a 3-wide embedding and 2-unit
/// heads, on the samples of two 4x4 triangles.
pub fn miniature_network_error() -> f64 {
    let dims = Dimensions {
        levels: 2,
        embedding_dim: 3,
        encoder_units: 2,
        decoder_units: 2,
        head_hidden_units: 2,
        sequence_length: 3,
    };
    let mut params = ModelParams::<f64>::seeded(dims, 3);
    let samples: Vec<Sample> = [small_triangle(0, 1.0), small_triangle(1, 0.6)]
        .iter()
        .flat_map(|t| build_samples(t, 2001, ValidationRule::All).unwrap())
        .collect();
    let refs: Vec<&Sample> = samples.iter().collect();
    let base = params.clone();
    params.zero_grad();
    params
        .loss_and_grad(&refs, &DropoutPlan::inference(), &mut rng(0))
        .unwrap();

    let mut worst: f64 = 0.0;
    for (k, t) in params.tensors().iter().enumerate() {
        let analytic = t.grad().unwrap();
        for (e, &a) in analytic.iter().enumerate() {
            let mut plus = base.clone();
            plus.tensors_mut()[k].data_mut()[e] += FD_STEP;
            let mut minus = base.clone();
            minus.tensors_mut()[k].data_mut()[e] -= FD_STEP;
            let numeric =
                (network_loss(&plus, &refs) - network_loss(&minus, &refs)) / (2.0 * FD_STEP);
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7));
        }
    }
    worst
}
