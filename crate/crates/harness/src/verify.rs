//! Numerical verification suites. Each check runs a seeded batch of random
//! instances and reports the worst observed deviation against a fixed bound.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use pcgraph::pcg::{embed_layers, feedforward_init, hierarchical_embed};
use pcgraph::topology::MADDS_PER_NONZERO;
use pcgraph::{
    ActivationKind, Backend, Clamp, ConnectionKind, InferenceConfig, InitMode, LayerSpec, Mask, PcgModel,
    PcgState, PcnModel, PcnState, PredictionConvention,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::HarnessError;

pub const EXACT_INSTANCES: usize = 50;
pub const ITERATIVE_STEPS: usize = 2000;
pub const ITERATIVE_STEP_SIZE: f64 = 0.05;
pub const ITERATIVE_GAP_TOL: f64 = 1e-4;
pub const ITERATIVE_ENERGY_TOL: f64 = 1e-8;
pub const ENERGY_INSTANCES: usize = 100;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const DYNAMICS_INSTANCES: usize = 20;
pub const DYNAMICS_STEPS: usize = 20;
pub const GRADIENT_INSTANCES: usize = 20;
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;
pub const CLOSURE_STEPS: usize = 100;
pub const FEEDFORWARD_TOL: f64 = 1e-12;

/// Weight gain for the random layered instances: uniform entries with
/// variance `gain² / max(fan_in, fan_out)`. At this gain zero-initialized
/// descent with the step size above settles well inside its step budget.
pub const INSTANCE_GAIN: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    fn bound(name: &str, worst: f64, tol: f64, count: usize) -> Self {
        Self::new(name, worst < tol, format!("{count} instances, worst {worst:.3e} (bound {tol:e})"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    Theorem2,
    Gradients,
    Cost,
    Closure,
    FeedForward,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Theorem1, Suite::Theorem2, Suite::Gradients, Suite::Cost, Suite::Closure, Suite::FeedForward];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Gradients => "gradients",
            Suite::Cost => "cost",
            Suite::Closure => "closure",
            Suite::FeedForward => "feedforward",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.tag() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| HarnessError::Config(format!("unknown suite '{s}'")))
    }
}

pub fn run(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Theorem1 => vec![exact_equivalence(seed), iterative_convergence(seed)],
        Suite::Theorem2 => vec![energy_identity(seed), dynamics_identity(seed)],
        Suite::Gradients => gradient_checks(seed),
        Suite::Cost => cost_model(seed),
        Suite::Closure => vec![mask_closure(seed)],
        Suite::FeedForward => vec![feedforward_errors(seed)],
    }
}

// ---- random instances -------------------------------------------------------

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Layer sizes with `2..=max_depth` weight layers and widths in `1..=max_width`.
pub fn random_sizes(rng: &mut impl Rng, max_depth: usize, max_width: usize) -> Vec<usize> {
    let depth = rng.random_range(2..=max_depth);
    (0..=depth).map(|_| rng.random_range(1..=max_width)).collect()
}

pub fn random_pcn(
    rng: &mut impl Rng,
    sizes: &[usize],
    act: ActivationKind,
    conv: PredictionConvention,
    gain: f64,
) -> PcnModel {
    let spec = LayerSpec::new(sizes.to_vec()).expect("valid sizes");
    let weights = (0..spec.depth())
        .map(|l| {
            let bound = gain * (3.0 / sizes[l].max(sizes[l + 1]) as f64).sqrt();
            Array2::from_shape_fn((sizes[l + 1], sizes[l]), |_| rng.random_range(-bound..bound))
        })
        .collect();
    PcnModel::new(spec, weights, act, conv).expect("consistent shapes")
}

pub fn random_graph(
    rng: &mut impl Rng,
    spec: &LayerSpec,
    kinds: &[ConnectionKind],
    act: ActivationKind,
    conv: PredictionConvention,
) -> PcgModel {
    let mask = Mask::build(spec, &kinds.iter().copied().collect::<BTreeSet<_>>());
    let n = spec.node_count();
    let mut w = Array2::from_shape_fn((n, n), |_| rng.random_range(-0.6..0.6));
    mask.apply(&mut w);
    PcgModel::new(w, mask, act, conv, spec.input_width(), spec.output_width())
        .and_then(|g| g.with_partition(spec.clone()))
        .expect("consistent graph")
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0))
}

fn random_pcn_state(rng: &mut impl Rng, spec: &LayerSpec, clamp: Clamp) -> PcnState {
    PcnState { activations: spec.sizes().iter().map(|&n| random_vec(rng, n)).collect(), clamp }
}

/// Instance `k` of the layered equivalence batch: conventions alternate,
/// activations alternate between tanh and sigmoid every two instances.
fn layered_instance(rng: &mut ChaCha8Rng, k: usize) -> (PcnModel, Array1<f64>) {
    let conv = PredictionConvention::ALL[k % 2];
    let act = [ActivationKind::Tanh, ActivationKind::Sigmoid][(k / 2) % 2];
    let sizes = random_sizes(rng, 4, 16);
    let model = random_pcn(rng, &sizes, act, conv, INSTANCE_GAIN);
    let x = random_vec(rng, sizes[0]);
    (model, x)
}

/// Central differences of `f` around `x`.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute gap when both norms are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn max_gap<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

// ---- checks ---------------------------------------------------------------

/// Testing-mode exact solver equals the forward pass bit for bit.
pub fn exact_equivalence(seed: u64) -> Check {
    let mut rng = rng(seed, 1);
    let mut mismatches = 0;
    for k in 0..EXACT_INSTANCES {
        let (model, x) = layered_instance(&mut rng, k);
        let reference = model.to_fnn().forward(&x);
        let exact = model.infer(&x, None, &InferenceConfig::exact());
        let same = match (exact, reference) {
            (Ok(out), Ok(reference)) => {
                out.state.activations.iter().zip(&reference).all(|(a, b)| {
                    a.len() == b.len() && a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
                })
            }
            _ => false,
        };
        mismatches += usize::from(!same);
    }
    Check::new(
        "exact solver equals forward pass bitwise",
        mismatches == 0,
        format!("{EXACT_INSTANCES} instances, {mismatches} mismatches"),
    )
}

/// Zero-initialized descent reaches the forward pass on the same instances.
pub fn iterative_convergence(seed: u64) -> Check {
    let mut rng = rng(seed, 1);
    let cfg = InferenceConfig::gradient_descent(ITERATIVE_STEPS, ITERATIVE_STEP_SIZE).with_init(InitMode::Zero);
    let (mut worst_gap, mut worst_energy) = (0.0f64, 0.0f64);
    for k in 0..EXACT_INSTANCES {
        let (model, x) = layered_instance(&mut rng, k);
        let (gap, energy) = match (model.infer(&x, None, &cfg), model.to_fnn().forward(&x)) {
            (Ok(out), Ok(reference)) => (
                max_gap(out.state.activations.iter().flatten(), reference.iter().flatten()),
                model.energy(&out.state).unwrap_or(f64::INFINITY),
            ),
            _ => (f64::INFINITY, f64::INFINITY),
        };
        worst_gap = worst_gap.max(gap);
        worst_energy = worst_energy.max(energy);
    }
    Check::new(
        "descent converges to forward pass",
        worst_gap < ITERATIVE_GAP_TOL && worst_energy < ITERATIVE_ENERGY_TOL,
        format!(
            "{EXACT_INSTANCES} instances, worst gap {worst_gap:.3e} (bound {ITERATIVE_GAP_TOL:e}), \
             worst energy {worst_energy:.3e} (bound {ITERATIVE_ENERGY_TOL:e})"
        ),
    )
}

/// Graph energy minus layered energy equals the input-only constant.
pub fn energy_identity(seed: u64) -> Check {
    let mut rng = rng(seed, 2);
    let mut worst = 0.0f64;
    for k in 0..ENERGY_INSTANCES {
        let conv = PredictionConvention::ALL[k % 2];
        let act = ActivationKind::ALL[(k / 2) % ActivationKind::ALL.len()];
        let sizes = random_sizes(&mut rng, 4, 8);
        let pcn = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let pcg = hierarchical_embed(&pcn);
        let clamp = if rng.random_bool(0.5) { Clamp::Training } else { Clamp::Testing };
        let state = random_pcn_state(&mut rng, pcn.spec(), clamp);
        let x = &state.activations[0];
        let constant = 0.5
            * match conv {
                PredictionConvention::MatrixActivation => {
                    x.iter().map(|v| (v - act.apply(0.0)).powi(2)).sum::<f64>()
                }
                PredictionConvention::ActivationMatrix => x.iter().map(|v| v * v).sum::<f64>(),
            };
        let gap = PcgState::from_pcn(pcn.spec(), &state)
            .and_then(|flat| Ok(pcg.energy(&flat)? - pcn.energy(&state)? - constant))
            .map_or(f64::INFINITY, f64::abs);
        worst = worst.max(gap);
    }
    Check::bound("graph energy equals layered energy plus constant", worst, IDENTITY_TOL, ENERGY_INSTANCES)
}

/// Interleaved activation and weight updates agree through the index map.
pub fn dynamics_identity(seed: u64) -> Check {
    let mut rng = rng(seed, 3);
    let mut worst = 0.0f64;
    for k in 0..DYNAMICS_INSTANCES {
        let conv = PredictionConvention::ALL[k % 2];
        let act = [ActivationKind::Tanh, ActivationKind::Sigmoid][(k / 2) % 2];
        let sizes = random_sizes(&mut rng, 4, 6);
        let mut pcn = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let mut pcg = hierarchical_embed(&pcn);
        let spec = pcn.spec().clone();
        let x = random_vec(&mut rng, sizes[0]);
        let y = random_vec(&mut rng, *sizes.last().expect("nonempty"));
        let result = (|| -> pcgraph::Result<f64> {
            let mut layered = pcn.init_state(&x, Some(&y), InitMode::Gaussian { std: 0.5, seed: k as u64 })?;
            let mut flat = PcgState::from_pcn(&spec, &layered)?;
            let mut local = 0.0f64;
            for step in 0..DYNAMICS_STEPS {
                let backend = if step % 2 == 0 { Backend::Dense } else { Backend::Sparse };
                pcn.descend(&mut layered, 0.1)?;
                pcg.descend(&mut flat, 0.1, backend)?;
                let mapped = embed_layers(&spec, &layered.activations)?;
                local = local.max(max_gap(mapped.iter(), flat.activations.iter()));
                pcn = pcn.learn_step(&layered, 0.05)?;
                pcg = pcg.learn_step(&flat, 0.05)?;
                for (l, w) in pcn.weights().iter().enumerate() {
                    let r0 = spec.layer_range(l + 1).start;
                    let c0 = spec.layer_range(l).start;
                    for ((i, j), v) in w.indexed_iter() {
                        local = local.max((pcg.weights()[[r0 + i, c0 + j]] - v).abs());
                    }
                }
            }
            Ok(local)
        })();
        worst = worst.max(result.unwrap_or(f64::INFINITY));
    }
    Check::new(
        "graph updates follow layered updates",
        worst < IDENTITY_TOL,
        format!("{DYNAMICS_INSTANCES} instances x {DYNAMICS_STEPS} steps, worst {worst:.3e} (bound {IDENTITY_TOL:e})"),
    )
}

fn with_flat_activations(state: &PcnState, flat: &[f64]) -> PcnState {
    let mut out = state.clone();
    for (v, &f) in out.activations.iter_mut().flat_map(|a| a.iter_mut()).zip(flat) {
        *v = f;
    }
    out
}

fn with_flat_weights(model: &PcnModel, flat: &[f64]) -> PcnModel {
    let mut values = flat.iter().copied();
    let weights = model
        .weights()
        .iter()
        .map(|w| Array2::from_shape_fn(w.dim(), |_| values.next().expect("enough values")))
        .collect();
    PcnModel::new(model.spec().clone(), weights, model.activation(), model.convention()).expect("same shapes")
}

fn graph_with_values(g: &PcgModel, ones: &[(usize, usize)], vals: &[f64]) -> PcgModel {
    let mut w = g.weights().clone();
    for (&(r, c), &v) in ones.iter().zip(vals) {
        w[[r, c]] = v;
    }
    PcgModel::new(w, g.mask().clone(), g.activation(), g.convention(), g.input_width(), g.output_width())
        .expect("same mask")
}

/// All four closed-form gradients against central differences.
pub fn gradient_checks(seed: u64) -> Vec<Check> {
    let mut rng = rng(seed, 4);
    let mut worst = [0.0f64; 4];
    for k in 0..GRADIENT_INSTANCES {
        let conv = PredictionConvention::ALL[k % 2];
        let act = [ActivationKind::Tanh, ActivationKind::Sigmoid][(k / 2) % 2];
        let clamp = [Clamp::Training, Clamp::Testing][(k / 4) % 2];

        let sizes = random_sizes(&mut rng, 3, 6);
        let model = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let state = random_pcn_state(&mut rng, model.spec(), clamp);
        let analytic: Vec<f64> =
            model.activation_gradients(&state).expect("valid").iter().flatten().copied().collect();
        let flat: Vec<f64> = state.activations.iter().flatten().copied().collect();
        let mut numeric = central_differences(&flat, FD_STEP, |a| {
            model.energy(&with_flat_activations(&state, a)).expect("valid")
        });
        let mut idx = 0;
        for (l, layer) in state.activations.iter().enumerate() {
            for _ in 0..layer.len() {
                if state.is_clamped(l) {
                    numeric[idx] = 0.0;
                }
                idx += 1;
            }
        }
        worst[0] = worst[0].max(relative_error(&analytic, &numeric));

        let analytic_w: Vec<f64> = model.weight_gradients(&state).expect("valid").iter().flatten().copied().collect();
        let flat_w: Vec<f64> = model.weights().iter().flatten().copied().collect();
        let numeric_w = central_differences(&flat_w, FD_STEP, |w| {
            with_flat_weights(&model, w).energy(&state).expect("valid")
        });
        worst[1] = worst[1].max(relative_error(&analytic_w, &numeric_w));

        let kinds: &[ConnectionKind] = match k % 4 {
            0 => &[ConnectionKind::Forward],
            1 => &[ConnectionKind::Forward, ConnectionKind::ForwardSkip, ConnectionKind::Lateral],
            2 => &[ConnectionKind::AllToAll],
            _ => &[ConnectionKind::Forward, ConnectionKind::Backward, ConnectionKind::SelfLoop],
        };
        let spec = LayerSpec::new(random_sizes(&mut rng, 3, 4)).expect("valid");
        let g = random_graph(&mut rng, &spec, kinds, act, conv);
        let gstate = PcgState { activations: random_vec(&mut rng, spec.node_count()), clamp };
        let free = g.free_nodes(clamp);
        let analytic = g.activation_gradient(&gstate).expect("valid").to_vec();
        let numeric: Vec<f64> = central_differences(&gstate.activations.to_vec(), FD_STEP, |a| {
            g.energy(&PcgState { activations: Array1::from(a.to_vec()), clamp }).expect("valid")
        })
        .into_iter()
        .enumerate()
        .map(|(i, v)| if free.contains(&i) { v } else { 0.0 })
        .collect();
        worst[2] = worst[2].max(relative_error(&analytic, &numeric));

        let grad_w = g.weight_gradient(&gstate).expect("valid");
        let ones: Vec<(usize, usize)> = g.mask().iter_ones().collect();
        let values: Vec<f64> = ones.iter().map(|&(r, c)| g.weights()[[r, c]]).collect();
        let numeric_w = central_differences(&values, FD_STEP, |v| {
            graph_with_values(&g, &ones, v).energy(&gstate).expect("valid")
        });
        let analytic_w: Vec<f64> = ones.iter().map(|&(r, c)| grad_w[[r, c]]).collect();
        let leaked = grad_w.indexed_iter().any(|((r, c), v)| !g.mask().get(r, c) && *v != 0.0);
        let err = relative_error(&analytic_w, &numeric_w);
        worst[3] = worst[3].max(if leaked { f64::INFINITY } else { err });
    }
    let names = [
        "layered activation gradient vs finite differences",
        "layered weight gradient vs finite differences",
        "graph activation gradient vs finite differences",
        "graph weight gradient vs finite differences",
    ];
    names.iter().zip(worst).map(|(name, w)| Check::bound(name, w, FD_TOL, GRADIENT_INSTANCES)).collect()
}

/// Masks used by the cost check, with their nonzero counts on `[2,3,3,2]`.
pub const COST_MASKS: [(&[ConnectionKind], u64); 3] = [
    (&[ConnectionKind::Forward], 21),
    (&[ConnectionKind::Lateral], 16),
    (&[ConnectionKind::Forward, ConnectionKind::Backward], 42),
];
pub const COST_STEPS: usize = 17;
pub const COST_BATCH: usize = 4;

/// Sparse inference over one batch spends exactly `d·c·T` multiply-adds per sample.
pub fn cost_model(seed: u64) -> Vec<Check> {
    let spec = LayerSpec::new(vec![2, 3, 3, 2]).expect("valid");
    let mut rng = rng(seed, 5);
    COST_MASKS
        .iter()
        .map(|&(kinds, d)| {
            let g = random_graph(&mut rng, &spec, kinds, ActivationKind::Tanh, PredictionConvention::MatrixActivation);
            let mut measured = 0u64;
            let mut steps_ok = true;
            for b in 0..COST_BATCH {
                let cfg = InferenceConfig::gradient_descent(COST_STEPS, 0.05)
                    .with_tolerance(0.0)
                    .with_init(InitMode::Gaussian { std: 1.0, seed: seed.wrapping_add(b as u64) })
                    .with_backend(Backend::Sparse);
                let x = random_vec(&mut rng, 2);
                let y = random_vec(&mut rng, 2);
                match g.infer(&x, Some(&y), &cfg) {
                    Ok(out) => {
                        measured += out.madds;
                        steps_ok &= out.steps == COST_STEPS;
                    }
                    Err(_) => steps_ok = false,
                }
            }
            let expected = d * MADDS_PER_NONZERO * (COST_STEPS * COST_BATCH) as u64;
            let tags: Vec<&str> = kinds.iter().map(|k| k.tag()).collect();
            Check::new(
                &format!("multiply-adds for mask {}", tags.join("+")),
                steps_ok && g.nonzeros() as u64 == d && measured == expected,
                format!(
                    "d={} c={MADDS_PER_NONZERO} T={COST_STEPS} batch={COST_BATCH}: measured {measured}, expected {expected}",
                    g.nonzeros()
                ),
            )
        })
        .collect()
}

/// Masked weights stay exactly zero through interleaved inference and learning.
pub fn mask_closure(seed: u64) -> Check {
    let spec = LayerSpec::new(vec![3, 4, 4, 2]).expect("valid");
    let masks: [&[ConnectionKind]; 3] = [
        &[ConnectionKind::Forward, ConnectionKind::ForwardSkip],
        &[ConnectionKind::Forward, ConnectionKind::Lateral],
        &[ConnectionKind::AllToAll],
    ];
    let mut rng = rng(seed, 6);
    let mut leaks = 0usize;
    let mut failures = 0usize;
    for kinds in masks {
        let mut g = random_graph(&mut rng, &spec, kinds, ActivationKind::Tanh, PredictionConvention::MatrixActivation);
        let cfg = InferenceConfig::gradient_descent(5, 0.05).with_init(InitMode::Zero);
        for _ in 0..CLOSURE_STEPS {
            let x = random_vec(&mut rng, 3);
            let y = random_vec(&mut rng, 2);
            match g.infer(&x, Some(&y), &cfg).and_then(|out| g.learn_step(&out.state, 0.05)) {
                Ok(next) => g = next,
                Err(_) => failures += 1,
            }
        }
        leaks += g
            .weights()
            .indexed_iter()
            .filter(|((r, c), w)| !g.mask().get(*r, *c) && w.to_bits() != 0.0f64.to_bits())
            .count();
    }
    Check::new(
        "masked weights stay zero",
        leaks == 0 && failures == 0,
        format!("3 masks x {CLOSURE_STEPS} steps, {leaks} nonzero masked entries, {failures} failed steps"),
    )
}

/// Training-mode feedforward initialization leaves only the output error.
pub fn feedforward_errors(seed: u64) -> Check {
    let mut rng = rng(seed, 7);
    let (mut worst, mut nonzero) = (0.0f64, 0usize);
    let mut count = 0;
    for k in 0..20 {
        let conv = PredictionConvention::ALL[k % 2];
        let act = [ActivationKind::Tanh, ActivationKind::Sigmoid][(k / 2) % 2];
        let sizes = random_sizes(&mut rng, 4, 8);
        let pcn = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let x = random_vec(&mut rng, sizes[0]);
        let y = random_vec(&mut rng, *sizes.last().expect("nonempty"));
        let state = pcn.feedforward_init(&x, Some(&y)).expect("valid");
        let errors = pcn.layer_errors(&state).expect("valid").errors;
        let last = errors.len() - 1;
        nonzero += errors[1..last].iter().flatten().filter(|v| **v != 0.0).count();
        let mu = pcn.to_fnn().forward(&x).expect("valid").pop().expect("nonempty");
        let diff = &y - &mu;
        worst = worst.max((pcn.energy(&state).expect("valid") - 0.5 * diff.dot(&diff)).abs());

        let spec = LayerSpec::new(sizes.clone()).expect("valid");
        let g = random_graph(&mut rng, &spec, &[ConnectionKind::Forward, ConnectionKind::ForwardSkip], act, conv);
        let gs = feedforward_init(&g, &spec, &x, Some(&y)).expect("feedforward mask");
        let eval = g.evaluate(&gs, Backend::Dense).expect("valid");
        nonzero += g.free_nodes(Clamp::Training).filter(|&i| eval.errors[i] != 0.0).count();
        count += 1;
    }
    Check::new(
        "feedforward init leaves only output error",
        worst < FEEDFORWARD_TOL && nonzero == 0,
        format!(
            "{count} layered + {count} skip-connected instances, {nonzero} nonzero hidden errors, \
             worst energy gap {worst:.3e} (bound {FEEDFORWARD_TOL:e})"
        ),
    )
}
