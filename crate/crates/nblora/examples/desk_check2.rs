use nblora::completion::*;
use nblora::optim::OptimConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let wd: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let variant = if args.get(3).map(|s| s == "I").unwrap_or(false) { Variant::I } else { Variant::II };
    let (p, truth) = generate_problem(150, 100, 10, 0.1, 0.2, 42, CompletionMode::Penalty { gamma: 0.9 });
    let opts = SolveOptions { variant, optim: OptimConfig::new(0.1, wd, steps, 0.1), init_seed: 42 };
    let (_, trace) = solve(&p, &truth, &opts).unwrap();
    for rec in trace.records.iter().step_by(100) {
        println!(
            "t={:5} fit={:.4} test={:.4} nuc={:.1} numrank={:2} s1={:.1} s10={:.2} s11={:.2}",
            rec.step, rec.fit_rmse, rec.test_rmse, rec.nuclear_norm, rec.numerical_rank,
            rec.singular_values[0], rec.singular_values[9], rec.singular_values[10]
        );
    }
}
