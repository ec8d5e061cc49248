//! Self-checks behind `freecool validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Models;
use crate::nn::{Activation, Gradients, Mlp, Tape};
use crate::psychro::{
    closed_form_props, steady_state_iterative, MoistAirState, PsychroConstants, SteadyStateInput, Tolerance,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerance<f64>,
    pub grad_nets: usize,
    /// Parameters probed per network.
    pub grad_params: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            tol: Tolerance::default(),
            grad_nets: 20,
            grad_params: 300,
        }
    }
}

/// Random solver input: outside 15–45 °C at any RH, flow 2000–10000 m³/h,
/// Δt 0–15 °C, α 0–0.9, IT load 0–60 kW.
pub fn random_input<R: Rng + ?Sized>(rng: &mut R) -> SteadyStateInput<f64> {
    let outside = MoistAirState {
        t: rng.random_range(15.0..=45.0),
        rh: rng.random_range(0.0..=100.0),
    };
    SteadyStateInput {
        supply_init: outside,
        outside,
        vdot_s: rng.random_range(2000.0..=10000.0),
        delta_t: rng.random_range(0.0..=15.0),
        alpha: rng.random_range(0.0..=0.9),
        p_it: rng.random_range(0.0..=60.0),
        eta: 1.0,
    }
}

/// Iterative vs closed-form supply state, and the moisture identity.
pub fn check_psychro(air: &PsychroConstants<f64>, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut max_dt, mut max_drh, mut max_dw) = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = 0;
    for _ in 0..opts.samples {
        let input = random_input(&mut rng);
        let iter = steady_state_iterative(air, &input, &opts.tol);
        let closed = closed_form_props(air, &input).and_then(|p| air.state_from_props(p.h, p.w));
        match (iter, closed) {
            (Ok(i), Ok(c)) => {
                max_dt = max_dt.max((i.condition.state.t - c.state.t).abs());
                max_drh = max_drh.max((i.condition.state.rh - c.state.rh).abs());
                let w_o = air.humidity_ratio(&input.outside).unwrap_or(f64::NAN);
                max_dw = max_dw.max((i.props.w - w_o).abs());
            }
            _ => errors += 1,
        }
    }
    vec![
        CheckResult {
            name: "psychro: iterative matches closed form".into(),
            passed: errors == 0 && max_dt < 0.01 && max_drh < 0.1,
            detail: format!(
                "{} inputs, max |dt| {max_dt:.2e} °C, max |drh| {max_drh:.2e} %, {errors} solver errors",
                opts.samples
            ),
        },
        CheckResult {
            name: "psychro: supply moisture equals outside".into(),
            passed: errors == 0 && max_dw < 1e-9,
            detail: format!("max |w_s - w_o| {max_dw:.2e} kg/kg"),
        },
    ]
}

fn batch_loss(net: &Mlp<f64>, xs: &[Vec<f64>], acts: &[usize], ys: &[f64]) -> f64 {
    let mut l = 0.0;
    for ((x, &a), &y) in xs.iter().zip(acts).zip(ys) {
        let r = net.forward(x).unwrap()[a] - y;
        l += r * r;
    }
    l / xs.len() as f64
}

/// Sign of every ReLU pre-activation over the batch.
fn relu_pattern(net: &Mlp<f64>, xs: &[Vec<f64>]) -> Vec<bool> {
    let mut out = Vec::new();
    for x in xs {
        let mut h = x.clone();
        for layer in net.layers() {
            h = (0..layer.outputs)
                .map(|j| layer.bias[j] + layer.row(j).iter().zip(&h).map(|(w, v)| w * v).sum::<f64>())
                .collect();
            if layer.activation == Activation::Relu {
                out.extend(h.iter().map(|v| *v > 0.0));
                h.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
    }
    out
}

/// Magnitude below which gradient agreement is judged absolutely. Central
/// differences at h = 1e-5 carry about 1e-11 of rounding noise, so relative
/// error is meaningless for gradients much smaller than this.
pub const GRAD_FLOOR: f64 = 1e-4;

/// Backprop against central differences on random DQN-shaped networks with a
/// squared TD-style loss over a small batch.
pub fn check_gradients(opts: &ValidateOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut probed = 0usize;
    for _ in 0..opts.grad_nets {
        let mut net = Mlp::<f64>::new(&[5, 128, 64, 32, 880], &mut rng).unwrap();
        // Non-zero biases so every parameter class is exercised.
        for layer in net.layers_mut() {
            layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let acts: Vec<usize> = (0..4).map(|_| rng.random_range(0..880)).collect();
        let ys: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut grads = Gradients::zeros_like(&net);
        let mut tape = Tape::new(&net);
        let mut d_out = vec![0.0; 880];
        for ((x, &a), &y) in xs.iter().zip(&acts).zip(&ys) {
            net.forward_tape(x, &mut tape, None).unwrap();
            d_out.iter_mut().for_each(|d| *d = 0.0);
            d_out[a] = 2.0 * (tape.output()[a] - y) / xs.len() as f64;
            net.backward(&mut tape, &d_out, &mut grads).unwrap();
        }
        let analytic: Vec<f64> = grads.values().collect();
        let n = analytic.len();
        let base_pattern = relu_pattern(&net, &xs);
        for _ in 0..opts.grad_params {
            let k = rng.random_range(0..n);
            let orig = net.params().nth(k).unwrap();
            let set = |net: &mut Mlp<f64>, v: f64| *net.params_mut().nth(k).unwrap() = v;
            set(&mut net, orig + h);
            let plus = batch_loss(&net, &xs, &acts, &ys);
            let kink = relu_pattern(&net, &xs) != base_pattern;
            set(&mut net, orig - h);
            let minus = batch_loss(&net, &xs, &acts, &ys);
            let kink = kink || relu_pattern(&net, &xs) != base_pattern;
            set(&mut net, orig);
            if kink {
                continue;
            }
            let fd = (plus - minus) / (2.0 * h);
            let g = analytic[k];
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(GRAD_FLOOR);
            worst = worst.max(rel);
            probed += 1;
        }
    }
    CheckResult {
        name: "nn: backprop matches finite differences".into(),
        passed: worst < 1e-5 && probed > 0,
        detail: format!("{} nets, {probed} parameters, max relative error {worst:.2e}", opts.grad_nets),
    }
}

pub fn check_power(models: &Models) -> Vec<CheckResult> {
    let c = &models.air;
    let coil = &models.coil;
    let golden = c.cp * c.rho * (10000.0 / 3600.0) * 15.0 / coil.xi;
    let p = coil.power(c, 10000.0, 15.0);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let lin_v = rel(coil.power(c, 8000.0, 7.0), 2.0 * coil.power(c, 4000.0, 7.0));
    let lin_t = rel(coil.power(c, 6000.0, 12.0), 3.0 * coil.power(c, 6000.0, 4.0));
    let mut fan_ok = true;
    let mut prev = -1.0;
    for i in 0..=100 {
        let v = models.fan.vdot_max * i as f64 / 100.0;
        let pf = models.fan.power(v).unwrap_or(f64::NAN);
        fan_ok &= pf >= prev;
        prev = pf;
    }
    fan_ok &= models.fan.power(0.0) == Ok(0.0) && models.fan.power(models.fan.vdot_max) == Ok(models.fan.p_max);
    vec![
        CheckResult {
            name: "power: coil at 10000 m³/h and 15 °C".into(),
            passed: rel(p, golden) < 1e-9,
            detail: format!("{p} kW"),
        },
        CheckResult {
            name: "power: coil linear in flow and Δt".into(),
            passed: lin_v < 1e-12 && lin_t < 1e-12,
            detail: format!("relative deviations {lin_v:.1e}, {lin_t:.1e}"),
        },
        CheckResult {
            name: "power: fan monotone with fixed endpoints".into(),
            passed: fan_ok,
            detail: format!("p_max {} kW at {} m³/h", models.fan.p_max, models.fan.vdot_max),
        },
    ]
}

pub fn run_all(models: &Models, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut out = check_psychro(&models.air, opts);
    out.push(check_gradients(opts));
    out.extend(check_power(models));
    out
}
