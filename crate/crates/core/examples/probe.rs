// Scratch experiment probe (not part of the deliverable surface).
use affinity_lab::objective::ObjectiveConfig;
use affinity_lab::optimize::{optimize_instance, RunConfig};
use affinity_lab::scene::{generate_scene, SceneSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let step_size: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(20);
    let warmup: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(200);

    let spec = SceneSpec::single_instance();
    let t0 = std::time::Instant::now();

    let mut sym_fill = Vec::new();
    let mut asym_fill = Vec::new();
    let mut sym_iou = Vec::new();
    let mut asym_iou = Vec::new();

    for seed in 0..seeds {
        let scene = generate_scene(seed, &spec).unwrap();
        let mut results = Vec::new();
        for symmetric in [true, false] {
            let mut obj = ObjectiveConfig::preset(if symmetric {
                "symmetric-depth-5x"
            } else {
                "asymmetric-depth-5x"
            })
            .unwrap();
            obj.warmup_steps = warmup;
            let cfg = RunConfig {
                steps,
                step_size,
                seed,
                record_every: steps.max(1),
                objective: obj,
                ..RunConfig::default()
            };
            let (logits, trace) = optimize_instance(&scene, 0, &cfg).unwrap();
            let m = trace.final_record().metrics;
            results.push(m);
            if std::env::var("PROBE_DUMP").is_ok() && seed < 3 {
                let dir = std::path::PathBuf::from("/tmp/probe_masks");
                std::fs::create_dir_all(&dir).unwrap();
                let tag = if symmetric { "sym" } else { "asym" };
                affinity_lab::io::save_prob_png(
                    &dir.join(format!("s{seed}_{tag}.png")),
                    &logits.probabilities(),
                )
                .unwrap();
                affinity_lab::io::save_mask_png(
                    &dir.join(format!("s{seed}_gt.png")),
                    &scene.instances[0].mask,
                )
                .unwrap();
            }
        }
        println!(
            "seed {seed:2}: sym fill {:.3} iou {:.3} bf {:.3} | asym fill {:.3} iou {:.3} bf {:.3}",
            results[0].fill_ratio,
            results[0].iou_gt,
            results[0].boundary_f,
            results[1].fill_ratio,
            results[1].iou_gt,
            results[1].boundary_f,
        );
        sym_fill.push(results[0].fill_ratio);
        asym_fill.push(results[1].fill_ratio);
        sym_iou.push(results[0].iou_gt);
        asym_iou.push(results[1].iou_gt);
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let wins = sym_iou
        .iter()
        .zip(&asym_iou)
        .filter(|(s, a)| a > s)
        .count();
    println!("---");
    println!(
        "step_size {step_size} steps {steps} warmup {warmup}: mean fill sym {:.3} asym {:.3} (diff {:.3}), mean iou sym {:.3} asym {:.3}, asym wins {}/{}, elapsed {:.1}s",
        mean(&sym_fill),
        mean(&asym_fill),
        mean(&sym_fill) - mean(&asym_fill),
        mean(&sym_iou),
        mean(&asym_iou),
        wins,
        seeds,
        t0.elapsed().as_secs_f64()
    );
}
