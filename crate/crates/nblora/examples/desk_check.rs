use nblora::completion::*;
use nblora::optim::OptimConfig;
use nblora::svd::{schatten_norm, SchattenP};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let wd: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let (p, truth) = generate_problem(150, 100, 10, 0.1, 0.2, 42, CompletionMode::Penalty { gamma: 0.9 });
    let true_nuc = schatten_norm(&truth.w_true, SchattenP::One);
    println!("true nuclear = {true_nuc:.3}, steps={steps}, wd={wd}");
    for variant in [Variant::I, Variant::II] {
        let t0 = Instant::now();
        let opts = SolveOptions { variant, optim: OptimConfig::new(0.1, wd, steps, 0.1), init_seed: 42 };
        let (_, trace) = solve(&p, &truth, &opts).unwrap();
        let last = trace.records.last().unwrap();
        let sig = &last.singular_values;
        let tail_max = sig[10..].iter().cloned().fold(0.0, f64::max);
        println!(
            "{variant:?}: {:.1}s fit={:.4} test={:.4} nuc={:.2} ratio={:.3} numrank={} s10={:.3} tail/s10={:.3}",
            t0.elapsed().as_secs_f64(), last.fit_rmse, last.test_rmse, last.nuclear_norm,
            last.nuclear_norm / true_nuc, last.numerical_rank, sig[9], tail_max / sig[9]
        );
        let warm = (0.1 * steps as f64) as usize;
        let recs = &trace.records;
        let mut worst_fit: f64 = 0.0;
        let mut worst_test: f64 = 0.0;
        let mut at = 0;
        for t in warm..recs.len().saturating_sub(200) {
            if recs[t + 200].test_rmse - recs[t].test_rmse > worst_test { at = t; }
            worst_fit = worst_fit.max(recs[t + 200].fit_rmse - recs[t].fit_rmse);
            worst_test = worst_test.max(recs[t + 200].test_rmse - recs[t].test_rmse);
        }
        println!("   worst 200-step rise: fit {worst_fit:.5} test {worst_test:.5} (at {at})");
        for t in [warm, 400, 600, 800, 1000, 1400, steps] {
            if t < recs.len() {
                println!("   t={t}: fit={:.4} test={:.4} nuc={:.1}", recs[t].fit_rmse, recs[t].test_rmse, recs[t].nuclear_norm);
            }
        }
    }
}
