use nblora::completion::*;
use nblora::optim::OptimConfig;

fn windowed_worst_rise(vals: &[f64], warmup: usize) -> f64 {
    let w = 200;
    let mean = |t: usize| -> f64 { vals[t..t + w].iter().sum::<f64>() / w as f64 };
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut t = warmup;
    while t + 2 * w <= vals.len() {
        worst = worst.max(mean(t + w) - mean(t));
        t += 1;
    }
    worst
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8000);
    let variant = if args.get(2).map(|s| s == "I").unwrap_or(false) { Variant::I } else { Variant::II };
    let (p, truth) = generate_problem(150, 100, 10, 0.1, 0.2, 42, CompletionMode::Penalty { gamma: 0.9 });
    let opts = SolveOptions { variant, optim: OptimConfig::new(0.1, 0.01, steps, 0.1), init_seed: 42 };
    let (_, trace) = solve(&p, &truth, &opts).unwrap();
    let fit: Vec<f64> = trace.records.iter().map(|r| r.fit_rmse).collect();
    let test: Vec<f64> = trace.records.iter().map(|r| r.test_rmse).collect();
    let warmup = (0.1 * steps as f64).ceil() as usize;
    println!(
        "{variant:?}@{steps}: worst windowed-mean rise fit={:+.5} test={:+.5}",
        windowed_worst_rise(&fit, warmup),
        windowed_worst_rise(&test, warmup)
    );
    let last = trace.records.last().unwrap();
    let sig = &last.singular_values;
    println!(
        "  final: fit={:.4} test={:.4} nuc={:.2} numrank={} tail/s10={:.3}",
        last.fit_rmse, last.test_rmse, last.nuclear_norm, last.numerical_rank,
        sig[10..].iter().cloned().fold(0.0, f64::max) / sig[9]
    );
}
