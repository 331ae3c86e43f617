//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`.

mod common;

use std::path::Path;
use std::time::Instant;

use distill_parse::cli::{self, Cli};
use distill_parse::costs::distillation_term;
use distill_parse::decoders::cle_decode_with;
use distill_parse::ensemble::{VoteFile, VoteSource};
use distill_parse::eval::{Punctuation, ENGLISH_PUNCT_TAGS};
use distill_parse::scorers::ScorerConfig;
use distill_parse::synth::{generate, SynthConfig};
use distill_parse::training::TrainConfig;
use distill_parse::{
    cle_decode, cost_augmented_decode, distillation_cost, eisner_decode, evaluate, hamming_cost, mbr_parse,
    per_arc_cost, read_conll, tally_votes, train, tree_score, ArcScoreMatrix, ConllFormat, CostSpec, Decoder,
    ParseTree, ScorerModel, Sentence, Token, VoteTable,
};
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn decoder_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for n in 1..=6 {
        for _ in 0..100 {
            let s = random_matrix(n, &mut rng);
            let score = |t: &ParseTree| tree_score(&s, t).unwrap();
            let eisner = score(&eisner_decode(&s));
            let best_projective = brute_max(n, ParseTree::is_projective, score);
            if eisner != best_projective {
                return Err(format!("eisner n={n}: {eisner} vs brute force {best_projective}"));
            }
            let cle = score(&cle_decode(&s));
            let best_single_root = brute_max(n, |t| t.root_children() == 1, score);
            if cle != best_single_root {
                return Err(format!("cle n={n}: {cle} vs brute force {best_single_root}"));
            }
            let multi = score(&cle_decode_with(&s, false));
            let best_any = brute_max(n, |_| true, score);
            if multi != best_any {
                return Err(format!("cle multi-root n={n}: {multi} vs brute force {best_any}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} matrices, n = 1..6, eisner / cle / cle-multiroot exact"))
}

fn mbr_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..50 {
        let n = rng.gen_range(1..=5);
        let voters = rng.gen_range(1..=6);
        let parses: Vec<ParseTree> = (0..voters).map(|_| random_tree(n, &mut rng)).collect();
        let votes = tally_votes(&parses, n).unwrap();
        for (decoder, projective) in [(Decoder::Cle { single_root: false }, false), (Decoder::Eisner, true)] {
            let risk = votes.expected_hamming_times_n(&mbr_parse(&votes, decoder));
            let best = -brute_max(n, |t| !projective || t.is_projective(), |t| {
                -(votes.expected_hamming_times_n(t) as f64)
            });
            if risk as f64 != best {
                return Err(format!("case {case} ({decoder}): risk x N {risk}, brute-force minimum {best}"));
            }
        }
    }
    Ok("50 ensembles, n <= 5, N <= 6, expected Hamming x N equal to brute-force minimum".into())
}

/// The ambiguous attachment of "including": heads and their votes out of 21,
/// with the reference head "changes".
fn table_fixture() -> (Sentence, VoteTable, Vec<(&'static str, usize, f64)>) {
    let words = "It will go for work ranging from refinery modification to changes in the distribution \
                 system , including the way service stations pump fuel into cars .";
    let forms: Vec<&str> = words.split_whitespace().collect();
    let heads = vec![3, 3, 0, 3, 4, 5, 6, 9, 7, 6, 10, 11, 15, 15, 12, 11, 11, 19, 17, 21, 22, 19, 22, 22, 24, 3];
    let tokens = forms.iter().map(|f| Token::new(*f, "X")).collect();
    let gold = ParseTree::unlabeled(heads.clone()).unwrap();
    let sentence = Sentence::new("table", tokens, Some(gold)).unwrap();
    let including = 17;
    let rows = [("go", 3, 3, 0.143),
        ("work", 5, 2, 0.191),
        ("modification", 9, 4, 0.096),
        ("changes", 11, 6, 0.000),
        ("system", 15, 2, 0.191),
        ("pump", 22, 4, 0.096),
        ("stations", 21, 0, 0.286)];
    let mut counts: Vec<(usize, usize, u32)> = rows
        .iter()
        .filter(|r| r.2 > 0)
        .map(|&(_, h, c, _)| (h, including, c))
        .collect();
    for (m, &h) in heads.iter().enumerate() {
        if m + 1 != including {
            counts.push((h, m + 1, 21));
        }
    }
    let votes = VoteTable::from_head_counts(heads.len(), 21, &counts).unwrap();
    let expected = rows.iter().map(|&(w, h, _, c)| (w, h, c)).collect();
    (sentence, votes, expected)
}

fn table_reproduction() -> Outcome {
    let (sentence, votes, rows) = table_fixture();
    let gold = sentence.gold.as_ref().unwrap();
    let costs = per_arc_cost(gold, &CostSpec::Distillation(&votes)).unwrap();
    let mut shown = Vec::new();
    for (word, h, expected) in rows {
        let got = costs.get(h, 17);
        if (got - expected).abs() > 0.001 {
            return Err(format!("{word}: cost {got:.4}, table {expected:.3}"));
        }
        shown.push(format!("{word}={got:.3}"));
    }
    Ok(shown.join(" "))
}

fn distillation_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = rng.gen_range(1..=8);
        let voters = rng.gen_range(1..=21);
        let gold = random_tree(n, &mut rng);
        let pred = random_tree(n, &mut rng);
        let votes = random_votes(&gold, voters, &mut rng);
        let fail = |what: &str| Err(format!("case {case}: {what}"));
        for m in 1..=n {
            let g = gold.head(m);
            if distillation_term(&votes, g, g, m) != 0.0 {
                return fail("nonzero cost on a gold arc");
            }
            for h in (0..=n).filter(|&h| h != m) {
                let c = distillation_term(&votes, g, h, m);
                if c > votes.posterior(g, m) {
                    return fail("cost above the gold-head posterior");
                }
                if votes.posterior(h, m) >= votes.posterior(g, m) && c != 0.0 {
                    return fail("cost on a head the ensemble prefers");
                }
                for h2 in (0..=n).filter(|&h2| h2 != m) {
                    if votes.posterior(h, m) >= votes.posterior(h2, m) && c > distillation_term(&votes, g, h2, m) {
                        return fail("cost increases with the predicted-head posterior");
                    }
                }
            }
        }
        let unanimous = tally_votes(&vec![gold.clone(); voters], n).unwrap();
        if distillation_cost(&gold, &pred, &unanimous).unwrap() != hamming_cost(&gold, &pred).unwrap() {
            return fail("unanimous-correct votes differ from the Hamming cost");
        }
    }
    Ok("1000 (gold, pred, votes) triples, properties 1-5 hold exactly".into())
}

fn augmented_value(scores: &ArcScoreMatrix, costs: &ArcScoreMatrix, tree: &ParseTree) -> f64 {
    tree.arcs().map(|(h, m)| scores.get(h, m) + costs.get(h, m)).sum()
}

fn cost_augmented() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let n = rng.gen_range(1..=5);
        let scores = random_matrix(n, &mut rng);
        let gold = random_tree(n, &mut rng);
        let votes = random_votes(&gold, rng.gen_range(1..=10), &mut rng);
        for spec in [CostSpec::Hamming, CostSpec::Distillation(&votes)] {
            let costs = per_arc_cost(&gold, &spec).unwrap();
            for decoder in [Decoder::Eisner, Decoder::default(), Decoder::Cle { single_root: false }] {
                let witness = cost_augmented_decode(&scores, &gold, &spec, decoder).unwrap();
                let got = augmented_value(&scores, &costs, &witness);
                let best = brute_max(n, |t| decoder.admits(t), |t| augmented_value(&scores, &costs, t));
                let direct = tree_score(&scores, &witness).unwrap() + spec.cost(&gold, &witness).unwrap();
                if got != best || (direct - got).abs() > 1e-12 {
                    return Err(format!("case {case} {:?} {decoder}: {got} vs brute force {best}", spec.kind()));
                }
            }
        }
    }
    Ok("50 fixtures x {hamming, distill} x {eisner, cle, cle-multiroot} equal brute-force argmax".into())
}

fn gradient_checks() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + k);
        let train: Vec<Sentence> = (0..3).map(|i| random_sentence(&format!("g{i}"), 4, &mut rng)).collect();
        let upstream = ArcScoreMatrix::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let embeddings = (k % 2 == 0).then(|| random_embeddings(3, &mut rng));
        let configs = [
            ScorerConfig { linear_init: 0.5, init_seed: k, ..ScorerConfig::linear() },
            small_bilstm(k),
        ];
        for config in configs {
            let variant = config.variant;
            let mut model = ScorerModel::new(config, &train, embeddings.as_ref()).unwrap();
            let result = gradient_check(&mut model, &train[0], &upstream, 1e-5);
            if result.pretrained_gradient != 0.0 {
                return Err(format!("config {k} {variant}: pretrained block has gradient"));
            }
            if !(result.relative_error < 1e-4) {
                return Err(format!(
                    "config {k} {variant}: relative error {:.3e} over {} parameters",
                    result.relative_error, result.parameters
                ));
            }
            worst = worst.max(result.relative_error);
        }
    }
    Ok(format!("20 configs x {{linear, bilstm}}, worst relative error {worst:.2e}"))
}

fn convex_training() -> Outcome {
    let treebank = generate(&SynthConfig {
        sentences: 50,
        seed: 7,
        attachment_noise: 0.0,
        ..SynthConfig::default()
    });
    let config = TrainConfig {
        decoder: Decoder::Eisner,
        epochs: 50,
        seed: 7,
        ..TrainConfig::linear()
    };
    let outcome = train(&treebank, None, &config, None).map_err(|e| e.to_string())?;
    match outcome.log.iter().find(|r| r.mean_loss == 0.0 && r.train_uas == 100.0) {
        Some(r) => Ok(format!("mean hinge loss 0 and train UAS 100 at epoch {}", r.epoch)),
        None => {
            let last = outcome.log.last().unwrap();
            Err(format!("after 50 epochs: mean loss {}, train UAS {}", last.mean_loss, last.train_uas))
        }
    }
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let cli = Cli::try_parse_from(std::iter::once("distill-parse").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    cli::run(cli).map_err(|e| format!("{}: {e}", args[0]))
}

fn read(path: &Path) -> Vec<Sentence> {
    read_conll(std::io::BufReader::new(std::fs::File::open(path).unwrap()), ConllFormat::ConllX).unwrap()
}

fn dev_uas(gold: &Path, pred: &Path) -> f64 {
    let pred: Vec<ParseTree> = read(pred).into_iter().map(|s| s.gold.unwrap()).collect();
    evaluate(&read(gold), &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap().uas
}

fn distillation_pipeline() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (train_path, dev_path, votes_path) = (p("train.conll"), p("dev.conll"), p("votes.txt"));
    let common = ["--language", "english", "--seed", "11"];
    let with = |args: &[&str]| -> Vec<String> {
        let training = args[0] != "parse";
        let epochs: &[&str] = if training { &["--epochs", "5"] } else { &[] };
        args.iter().chain(common.iter()).chain(epochs).map(|s| s.to_string()).collect()
    };
    let call = |args: Vec<String>| run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run_cli(&["synth", "--output", &train_path, "--sentences", "500", "--seed", "21"])?;
    run_cli(&["synth", "--output", &dev_path, "--sentences", "200", "--seed", "22"])?;
    call(with(&["jackknife", "--treebank", &train_path, "--folds", "2", "--models", "4", "--votes", &votes_path]))?;

    let votes = cli::read_votes(Path::new(&votes_path)).map_err(|e| e.to_string())?;
    votes.leakage_audit().map_err(|e| format!("leakage audit: {e}"))?;
    let treebank = read(Path::new(&train_path));
    if votes.source != VoteSource::Jackknife || treebank.iter().any(|s| votes.get(&s.id).is_none()) {
        return Err("votes do not cover the training set".into());
    }
    for s in votes.sentences() {
        for m in 1..=s.table.len() {
            let total: f64 = (0..=s.table.len()).filter(|&h| h != m).map(|h| s.table.posterior(h, m)).sum();
            if (total - 1.0).abs() > 1e-12 || s.table.ensemble_size() != 2 {
                return Err(format!("sentence {}: posteriors of word {m} sum to {total}", s.id));
            }
        }
    }

    call(with(&["distill", "--treebank", &train_path, "--votes", &votes_path, "--model", &p("distilled.model")]))?;
    call(with(&["parse", "--model", &p("distilled.model"), "--treebank", &dev_path, "--output", &p("distilled.conll")]))?;
    let distilled = dev_uas(Path::new(&dev_path), Path::new(&p("distilled.conll")));

    let oracle = VoteFile::from_gold(&treebank, 4).map_err(|e| e.to_string())?;
    oracle
        .write(std::fs::File::create(p("oracle.txt")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    call(with(&["distill", "--treebank", &train_path, "--votes", &p("oracle.txt"), "--model", &p("cd.model")]))?;
    call(with(&["train", "--treebank", &train_path, "--model", &p("ch.model")]))?;
    for name in ["cd", "ch"] {
        call(with(&[
            "parse",
            "--model",
            &p(&format!("{name}.model")),
            "--treebank",
            &dev_path,
            "--output",
            &p(&format!("{name}.conll")),
        ]))?;
    }
    let cd = dev_uas(Path::new(&dev_path), Path::new(&p("cd.conll")));
    let ch = dev_uas(Path::new(&dev_path), Path::new(&p("ch.conll")));
    check(
        cd == ch,
        format!("jackknife 2 folds / 4 models, audit clean; distilled dev UAS {distilled:.2}; unanimous C_D {cd:.2} vs C_H {ch:.2}"),
    )
}

fn ensemble_trend() -> Outcome {
    let trials: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|t| {
            let synth = |sentences, seed| SynthConfig { sentences, seed, attachment_noise: 0.0, ..SynthConfig::default() };
            let train_set = generate(&synth(40, 5000 + t));
            let dev = generate(&synth(1000, 5050 + t));
            let parses: Vec<(f64, Vec<ParseTree>)> = (0..5u64)
                .map(|j| {
                    let config = TrainConfig {
                        decoder: Decoder::Eisner,
                        epochs: 20,
                        seed: t * 100 + j,
                        learning_rate: 0.005,
                        train_labeler: false,
                        scorer: ScorerConfig {
                            lstm_dim: 16,
                            lstm_layers: 1,
                            compose_dim: 16,
                            hidden_dim: 16,
                            word_dim: 16,
                            pos_dim: 8,
                            labeler_hidden: 8,
                            ..ScorerConfig::bilstm()
                        },
                        ..TrainConfig::bilstm()
                    };
                    let model = train(&train_set, None, &config, None).unwrap().model;
                    let trees: Vec<ParseTree> = dev.iter().map(|s| model.parse(s, Decoder::Eisner)).collect();
                    let uas = evaluate(&dev, &trees, Punctuation::Include, ENGLISH_PUNCT_TAGS).unwrap().uas;
                    (uas, trees)
                })
                .collect();
            let best = parses.iter().map(|p| p.0).fold(0.0, f64::max);
            let consensus: Vec<ParseTree> = (0..dev.len())
                .map(|i| {
                    let members: Vec<ParseTree> = parses.iter().map(|p| p.1[i].clone()).collect();
                    mbr_parse(&tally_votes(&members, dev[i].len()).unwrap(), Decoder::Eisner)
                })
                .collect();
            let uas = evaluate(&dev, &consensus, Punctuation::Include, ENGLISH_PUNCT_TAGS).unwrap().uas;
            (uas, best)
        })
        .collect();
    let wins = trials.iter().filter(|(c, b)| c >= b).count();
    let detail: Vec<String> = trials.iter().map(|(c, b)| format!("{c:.2}/{b:.2}")).collect();
    check(wins >= 8, format!("consensus matched or beat best member in {wins}/10 trials (consensus/best: {})", detail.join(" ")))
}

fn sentence(id: &str, tags: &[&str], heads: &[usize], labels: &[&str]) -> Sentence {
    let tokens = tags.iter().map(|t| Token::new("w", *t)).collect();
    let tree = ParseTree::new(heads.to_vec(), labels.iter().map(|l| l.to_string()).collect()).unwrap();
    Sentence::new(id, tokens, Some(tree)).unwrap()
}

fn evaluation() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 0.01;
    let labels = ["det", "nsubj", "root", "obj"];
    for (last_tag, mode, uas, uem) in [
        ("NN", Punctuation::Exclude, 87.5, 50.0),
        (".", Punctuation::Exclude, 100.0, 50.0),
        (".", Punctuation::Include, 87.5, 50.0),
    ] {
        let gold = vec![
            sentence("a", &["DT", "NN", "VBD", last_tag], &[2, 3, 0, 3], &labels),
            sentence("b", &["DT", "NN", "VBD", "NN"], &[2, 3, 0, 3], &labels),
        ];
        let pred = vec![
            ParseTree::new(vec![2, 3, 0, 2], labels.iter().map(|l| l.to_string()).collect()).unwrap(),
            gold[1].gold.clone().unwrap(),
        ];
        let r = evaluate(&gold, &pred, mode, ENGLISH_PUNCT_TAGS).map_err(|e| e.to_string())?;
        if !close(r.uas, uas) || !close(r.las, uas) || !close(r.uem, uem) {
            return Err(format!("fixture ({last_tag}, {mode}): {r:?}"));
        }
    }
    let gold = vec![sentence("c", &["DT", "NN", "VBD"], &[2, 3, 0], &["det", "nsubj", "root"])];
    let pred = vec![ParseTree::new(vec![2, 3, 0], vec!["det".into(), "obj".into(), "root".into()]).unwrap()];
    let r = evaluate(&gold, &pred, Punctuation::Include, ENGLISH_PUNCT_TAGS).map_err(|e| e.to_string())?;
    if !close(r.uas, 100.0) || !close(r.las, 66.67) || !close(r.uem, 100.0) {
        return Err(format!("label fixture: {r:?}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..1000 {
        let count = rng.gen_range(1..=4);
        let gold: Vec<Sentence> = (0..count)
            .map(|i| random_sentence(&format!("r{i}"), rng.gen_range(1..=7), &mut rng))
            .collect();
        let pred: Vec<ParseTree> = gold
            .iter()
            .map(|s| {
                let g = s.gold.as_ref().unwrap();
                let labels: Vec<String> = g
                    .labels()
                    .iter()
                    .map(|l| if rng.gen_bool(0.3) { "dep".to_string() } else { l.clone() })
                    .collect();
                let heads = if rng.gen_bool(0.5) { g.heads().to_vec() } else { random_heads(s.len(), &mut rng) };
                ParseTree::new(heads, labels).unwrap()
            })
            .collect();
        for mode in [Punctuation::Include, Punctuation::Exclude] {
            let r = evaluate(&gold, &pred, mode, &["RB"]).unwrap();
            if r.las > r.uas || r.uas > 100.0 || r.uem > 100.0 {
                return Err(format!("random case {case}: {r:?}"));
            }
        }
    }
    Ok("hand-counted fixtures within 0.01; LAS <= UAS on 1000 random fixtures".into())
}

fn main() {
    // Statistical criteria print their verdict but do not set the exit status.
    let soft = ["ensemble trend"];
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("decoder oracle equivalence", decoder_oracle),
        ("MBR reduction", mbr_reduction),
        ("distillation cost table fixture", table_reproduction),
        ("distillation cost properties", distillation_properties),
        ("cost-augmented decoding", cost_augmented),
        ("gradient check", gradient_checks),
        ("convex separable training", convex_training),
        ("end-to-end distillation pipeline", distillation_pipeline),
        ("ensemble trend", ensemble_trend),
        ("evaluation correctness", evaluation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let seconds = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}: {name} ({seconds:.1}s) - {detail}", i + 1),
            Err(detail) if soft.contains(name) => {
                println!("FAIL  criterion {:>2}: {name} ({seconds:.1}s) [soft] - {detail}", i + 1)
            }
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name} ({seconds:.1}s) - {detail}", i + 1)
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
