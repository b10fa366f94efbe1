use nblora::merge::*;
use std::time::Instant;

fn main() {
    let cfg = MergeConfig { seed: 7, ..MergeConfig::default() };
    let t0 = Instant::now();
    let rows = run_sweep(&cfg).unwrap();
    println!("sweep took {:.1}s", t0.elapsed().as_secs_f64());
    for method in [AdapterMethod::Nb, AdapterMethod::Lora] {
        print!("{:>5}: ", method.name());
        for &sigma in &cfg.sigma_list {
            let accs: Vec<f64> = rows.iter()
                .filter(|r| r.method == method && r.sigma == sigma)
                .map(|r| r.accuracy).collect();
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            print!("s={sigma}: {mean:.3}  ");
        }
        println!();
    }
    // adapters norms for diagnostics
    let ds = generate_tasks(&cfg);
    let nb = train_all(&ds, AdapterMethod::Nb, &cfg).unwrap();
    let lora_raw: Vec<_> = (0..cfg.tasks).map(|k| train_adapter(&ds, k, AdapterMethod::Lora, &cfg).unwrap()).collect();
    println!("bound B = {:.4}", ds.bound);
    println!("nb norms: {:?}", nb.iter().map(|w| (w.frob_norm() * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("lora raw norms: {:?}", lora_raw.iter().map(|w| (w.frob_norm() * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("base (no adapters) accuracy: {:.3}", accuracy(&ds, &ds.w_pt));
}
