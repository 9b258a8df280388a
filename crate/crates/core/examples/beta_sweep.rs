//! Train one policy per reward weight on the toy corpus and print how
//! coverage and coherence move.
//!
//! cargo run --release --example beta_sweep -- [steps] [betas...]

use teachplay::coherence::LexicalBaseline;
use teachplay::datasets::{toy_corpus, toy_dialogues};
use teachplay::student::RuleStudent;
use teachplay::trainer::{anchors_for_corpus, anchors_from_dialogues, train, GammaSchedule, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(2000, |s| s.parse().expect("steps must be an integer"));
    let mut betas: Vec<f64> = args.map(|s| s.parse().expect("beta must be a number")).collect();
    if betas.is_empty() {
        betas = vec![0.0, 0.7, 1.0];
    }
    let corpus = toy_corpus();
    let anchors = anchors_for_corpus(anchors_from_dialogues(&toy_dialogues()), &corpus);
    println!("beta   r_cov first->last     r_coh first->last     mean_len  clipped");
    for beta in betas {
        let cfg = TrainConfig {
            beta,
            learning_rate: 0.1,
            steps,
            seed: 1,
            gamma_schedule: GammaSchedule {
                mle_batches_per_cycle: 0,
                rl_batches_per_cycle: 1,
            },
            ..TrainConfig::default()
        };
        let out = match train(cfg, &corpus, &anchors, &LexicalBaseline, &RuleStudent::default()) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("beta={beta}: {e}");
                std::process::exit(1);
            }
        };
        let l = &out.log;
        println!(
            "{beta:<5}  {:.4} -> {:.4}      {:.4} -> {:.4}      {:>6.1}    {}",
            l.first_mean(100, |r| r.mean_r_cov),
            l.last_mean(100, |r| r.mean_r_cov),
            l.first_mean(100, |r| r.mean_r_coh),
            l.last_mean(100, |r| r.mean_r_coh),
            l.last_mean(100, |r| r.mean_len),
            l.records.iter().map(|r| r.n_clipped).sum::<usize>(),
        );
    }
}
