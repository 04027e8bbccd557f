use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _, Result};
use passlab::analysis::{self, drop as drops, judgments as human, GroupBy, Source};
use passlab::corpus::{write_plaintext, CorpusReader, ReadError};
use passlab::intervention::{apply_intervention_to_file, write_report, InterventionError, SpecFile};
use passlab::scoring::{self, ExternalScorer, NGramModel, Scorer};
use passlab::stimuli::{self, FillerItem, SentencePair};
use passlab::voice::{tally_sentence, write_counts_report, VoiceCounts};

use crate::config::{
    existing, overlay, write_manifest, ClassifyArgs, EvaluateArgs, InterveneArgs, JudgmentsArgs, ListsArgs, ReportArgs, RunConfig,
    ScorerKind,
};
use crate::usage;

const DEFAULT_ORDER: usize = 3;
const DEFAULT_DISCOUNT: f64 = 0.75;

pub struct Context {
    config: RunConfig,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Context {
    pub fn new(config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let config = match config {
            Some(p) => RunConfig::load(&p)?,
            None => RunConfig::default(),
        };
        if let Some(rng) = &config.rng {
            passlab::rng::check_algorithm(rng).map_err(usage)?;
        }
        Ok(Context { seed: seed.or(config.seed), out: out.or_else(|| config.out.clone()), config })
    }

    fn out_dir(&self) -> Result<PathBuf> {
        self.out.clone().ok_or_else(|| usage("no output directory: pass --out or set `out` in the config"))
    }

    fn seed_or(&self, fallback: u64) -> u64 {
        self.seed.unwrap_or(fallback)
    }

    /// Manifest skeleton for `command` with the resolved seed and output directory.
    fn manifest(&self, command: &str, seed: u64, out: &Path) -> RunConfig {
        RunConfig { command: Some(command.into()), seed: Some(seed), out: Some(out.to_path_buf()), ..Default::default() }
    }
}

fn create_out(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.canonicalize()?)
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn required(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}

pub fn classify(ctx: &Context, flags: ClassifyArgs) -> Result<()> {
    let mut args = overlay(ctx.config.classify.clone(), flags)?;
    let input = existing(&required(&args.input, "input")?, "input corpus")?;
    if args.lemmas.is_empty() {
        return Err(usage("no lemmas given (--lemmas drop,last)"));
    }
    let out = ctx.out_dir()?;

    let mut counts: BTreeMap<String, VoiceCounts> = args.lemmas.iter().map(|l| (l.trim().to_lowercase(), VoiceCounts::default())).collect();
    let mut malformed = 0usize;
    for item in CorpusReader::open(&input)? {
        match item {
            Ok(s) => tally_sentence(&s, &mut counts),
            Err(ReadError::Malformed(d)) => {
                log::warn!("{d}");
                malformed += 1;
            }
            Err(ReadError::Io(e)) => return Err(e.into()),
        }
    }
    if malformed > 0 {
        log::warn!("{malformed} malformed sentences skipped");
    }

    let out = create_out(&out)?;
    let mut w = writer(&out.join("counts.tsv"))?;
    write_counts_report(&mut w, &counts)?;
    w.flush()?;

    args.input = Some(input.clone());
    let mut m = ctx.manifest("classify", ctx.seed_or(0), &out);
    m.classify = Some(args);
    write_manifest(&out, m, &[&input])?;
    Ok(())
}

fn intervention_exit(e: InterventionError) -> anyhow::Error {
    match e {
        InterventionError::Io(_) | InterventionError::Corpus(_) => anyhow!(e),
        validation => usage(validation.to_string()),
    }
}

pub fn intervene(ctx: &Context, flags: InterveneArgs) -> Result<()> {
    let from_flag = flags.spec.is_some();
    let mut args = overlay(ctx.config.intervene.clone(), flags)?;
    let input = existing(&required(&args.input, "input")?, "input corpus")?;
    let mut spec_inputs = Vec::new();
    let mut spec_file = match (&args.inline_spec, &args.spec) {
        (Some(inline), _) if !from_flag => inline.clone(),
        (_, Some(path)) => {
            let path = existing(path, "spec file")?;
            let spec = SpecFile::load(&path).map_err(intervention_exit)?;
            spec_inputs.push(path);
            spec
        }
        _ => return Err(usage("missing --spec")),
    };
    if let Some(seed) = ctx.seed {
        spec_file.spec.set_seed(seed);
    }
    spec_file.spec.validate().map_err(intervention_exit)?;
    let out = ctx.out_dir()?;

    // Plan into a scratch file inside the output directory, then rename, so a
    // failed validation leaves no corpus behind.
    let out = create_out(&out)?;
    let target = out.join("corpus.conllu");
    let scratch = out.join(".corpus.conllu.partial");
    let report = match apply_intervention_to_file(&input, &scratch, &spec_file.spec) {
        Ok(r) => r,
        Err(e) => {
            let _ = fs::remove_file(&scratch);
            return Err(intervention_exit(e));
        }
    };
    fs::rename(&scratch, &target)?;
    write_report(&out, "report", &report)?;
    if args.plaintext.unwrap_or(false) {
        let mut w = writer(&out.join("corpus.txt"))?;
        let sentences = CorpusReader::open(&target)?.filter_map(Result::ok);
        write_plaintext(sentences, &mut w)?;
        w.flush()?;
    }
    print!("{}", report.summary());

    let seed = spec_file.spec.seed();
    args.input = Some(input.clone());
    args.spec = spec_inputs.first().cloned();
    args.inline_spec = Some(spec_file);
    let mut m = ctx.manifest("intervene", seed, &out);
    m.intervene = Some(args);
    let mut hashed: Vec<&Path> = vec![&input];
    hashed.extend(spec_inputs.iter().map(PathBuf::as_path));
    write_manifest(&out, m, &hashed)?;
    Ok(())
}

fn load_suite(path: Option<&Path>) -> Result<Vec<SentencePair>> {
    let pairs = match path {
        Some(p) => stimuli::import_suite(BufReader::new(File::open(p)?)).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => stimuli::shipped_pairs(),
    };
    if pairs.is_empty() {
        return Err(usage("suite is empty"));
    }
    Ok(pairs)
}

/// Sentences for training: raw text from CoNLL-U, otherwise one per line.
fn training_sentences(path: &Path) -> Result<Vec<String>> {
    if path.extension().is_some_and(|e| e == "conllu") {
        Ok(CorpusReader::open(path)?.filter_map(Result::ok).map(|s| s.raw_text).collect())
    } else {
        Ok(io::BufRead::lines(BufReader::new(File::open(path)?)).collect::<io::Result<_>>()?)
    }
}

fn train_builtin(path: &Path, order: usize, discount: f64) -> Result<NGramModel<f64>> {
    let sentences = training_sentences(path)?;
    NGramModel::train(sentences, order, discount).map_err(|e| usage(format!("cannot train n-gram model: {e}")))
}

pub fn evaluate(ctx: &Context, flags: EvaluateArgs) -> Result<()> {
    let mut args = overlay(ctx.config.evaluate.clone(), flags)?;
    let suite_path = args.suite.as_deref().map(|p| existing(p, "suite")).transpose()?;
    let blimp_path = args.blimp.as_deref().map(|p| existing(p, "minimal-pair file")).transpose()?;
    let kind = args.scorer.unwrap_or(ScorerKind::Builtin);
    let mut hashed: Vec<PathBuf> = suite_path.iter().chain(&blimp_path).cloned().collect();
    let train_path = match kind {
        ScorerKind::Builtin => {
            let p = existing(&required(&args.train, "train")?, "training text")?;
            hashed.push(p.clone());
            Some(p)
        }
        ScorerKind::External => {
            if args.scorer_cmd.as_deref().is_none_or(|c| c.trim().is_empty()) {
                return Err(usage("--scorer external needs --scorer-cmd"));
            }
            None
        }
    };
    let pairs = load_suite(suite_path.as_deref())?;
    let blimp = match &blimp_path {
        Some(p) => Some(scoring::read_minimal_pairs(BufReader::new(File::open(p)?)).map_err(|e| usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let out = ctx.out_dir()?;

    let mut scorer: Box<dyn Scorer> = match kind {
        ScorerKind::Builtin => {
            let order = *args.order.get_or_insert(DEFAULT_ORDER);
            let discount = *args.discount.get_or_insert(DEFAULT_DISCOUNT);
            Box::new(train_builtin(train_path.as_deref().unwrap(), order, discount)?)
        }
        ScorerKind::External => Box::new(ExternalScorer::spawn(args.scorer_cmd.as_deref().unwrap()).context("launching scorer")?),
    };
    let scores = scoring::score_suite(scorer.as_mut(), &pairs);
    for f in &scores.failures {
        log::warn!("pair {}: {}", f.pair_id, f.error);
    }
    if scores.scored.is_empty() {
        return Err(anyhow!("every pair failed to score"));
    }
    let blimp_acc = blimp.as_ref().map(|b| scoring::minimal_pair_accuracy(scorer.as_mut(), b));
    drop(scorer);

    let out = create_out(&out)?;
    scoring::write_score_table(writer(&out.join("scores.csv"))?, &scores)?;
    let obs = drops::model_observations(&scores, &pairs);
    let (records, diagnostics) = analysis::passive_drop(&obs, Source::Model);
    drops::write_drop_table(writer(&out.join("drops.csv"))?, &records)?;
    let by_verb = analysis::group_drops(&records, GroupBy::Verb);
    let by_class = analysis::group_drops(&records, GroupBy::Class);
    drops::write_group_table(writer(&out.join("drops_by_verb.csv"))?, &by_verb)?;
    drops::write_group_table(writer(&out.join("drops_by_class.csv"))?, &by_class)?;
    drops::write_plot_data(writer(&out.join("plot_class_drops.csv"))?, "model", &by_class)?;
    let mut fw = csv::Writer::from_writer(writer(&out.join("failures.csv"))?);
    fw.write_record(["pair_id", "error"])?;
    for f in &scores.failures {
        fw.write_record([f.pair_id.as_str(), &f.error.to_string()])?;
    }
    fw.flush()?;

    let mut summary = String::new();
    writeln!(summary, "scorer: {}", scores.scorer_id)?;
    writeln!(summary, "pairs scored: {} of {}; failures: {}", scores.scored.len(), pairs.len(), scores.failures.len())?;
    for g in &by_class {
        writeln!(summary, "class {:<18} mean drop {:>10.4} ({} pairs)", g.group, g.mean_drop, g.n_pairs)?;
    }
    for d in &diagnostics {
        writeln!(summary, "note: {d}")?;
    }
    if let Some((acc, failures)) = &blimp_acc {
        writeln!(
            summary,
            "minimal-pair accuracy: {:.4} ({} of {}, {} ties, {} failed)",
            acc.accuracy(),
            acc.correct,
            acc.total,
            acc.ties,
            failures.len()
        )?;
        fs::write(out.join("blimp.toml"), toml::to_string(acc)?)?;
    }
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");

    args.suite = suite_path;
    args.train = train_path;
    args.blimp = blimp_path;
    args.scorer = Some(kind);
    let mut m = ctx.manifest("evaluate", ctx.seed_or(0), &out);
    m.evaluate = Some(args);
    let hashed: Vec<&Path> = hashed.iter().map(PathBuf::as_path).collect();
    write_manifest(&out, m, &hashed)?;
    Ok(())
}

fn load_fillers(path: Option<&Path>) -> Result<Vec<FillerItem>> {
    match path {
        Some(p) => stimuli::load_fillers(p).map_err(|e| usage(e.to_string())),
        None => Ok(stimuli::shipped_fillers()),
    }
}

pub fn lists(ctx: &Context, flags: ListsArgs) -> Result<()> {
    let mut args = overlay(ctx.config.lists.clone(), flags)?;
    let classes_path = args.classes.as_deref().map(|p| existing(p, "class file")).transpose()?;
    let fillers_path = args.fillers.as_deref().map(|p| existing(p, "filler file")).transpose()?;
    let classes = match &classes_path {
        Some(p) => stimuli::load_classes(p).map_err(|e| usage(e.to_string()))?,
        None => stimuli::shipped_classes(),
    };
    let pairs = stimuli::generate_pairs(&classes).map_err(|e| usage(e.to_string()))?;
    let fillers = load_fillers(fillers_path.as_deref())?;
    let seed = ctx.seed_or(0);
    let lists = stimuli::build_lists(&pairs, &fillers, seed).map_err(|e| usage(e.to_string()))?;
    let out = create_out(&ctx.out_dir()?)?;

    let mut w = writer(&out.join("suite.jsonl"))?;
    stimuli::export_suite(&mut w, &pairs)?;
    w.flush()?;
    let mut items = csv::Writer::from_writer(writer(&out.join("items.csv"))?);
    items.write_record(["item_id", "kind", "class", "verb", "expected_acceptable", "attention", "text"])?;
    for p in &pairs {
        for (v, text) in [(stimuli::Voice::Active, &p.active), (stimuli::Voice::Passive, &p.passive)] {
            items.write_record([
                p.item_id(v),
                v.to_string(),
                p.class.clone(),
                p.verb.clone(),
                String::new(),
                String::new(),
                text.clone(),
            ])?;
        }
    }
    for f in &fillers {
        items.write_record([
            f.id.clone(),
            "filler".into(),
            String::new(),
            String::new(),
            f.expected_acceptable.to_string(),
            f.is_attention_check.to_string(),
            f.text.clone(),
        ])?;
    }
    items.flush()?;
    let dir = out.join("lists");
    fs::create_dir_all(&dir)?;
    for list in &lists {
        let mut w = writer(&dir.join(format!("{}.csv", list.id)))?;
        list.write_csv(&mut w)?;
        w.flush()?;
    }
    println!("{} pairs, {} fillers, {} lists", pairs.len(), fillers.len(), lists.len());

    args.classes = classes_path.clone();
    args.fillers = fillers_path.clone();
    let mut m = ctx.manifest("lists", seed, &out);
    m.lists = Some(args);
    let hashed: Vec<&Path> = classes_path.iter().chain(&fillers_path).map(PathBuf::as_path).collect();
    write_manifest(&out, m, &hashed)?;
    Ok(())
}

pub fn judgments(ctx: &Context, flags: JudgmentsArgs) -> Result<()> {
    let mut args = overlay(ctx.config.judgments.clone(), flags)?;
    let input = existing(&required(&args.input, "input")?, "judgment file")?;
    let suite_path = args.suite.as_deref().map(|p| existing(p, "suite")).transpose()?;
    let fillers_path = args.fillers.as_deref().map(|p| existing(p, "filler file")).transpose()?;
    let iterations = *args.iterations.get_or_insert(1000);
    let level = *args.level.get_or_insert(0.95);
    let splits = *args.splits.get_or_insert(10);
    let policy = human::ExclusionPolicy { attention_hard: *args.attention_hard.get_or_insert(false), ..Default::default() };
    if iterations < analysis::stats::MIN_ITERATIONS {
        return Err(usage(format!("--iterations must be at least {}", analysis::stats::MIN_ITERATIONS)));
    }
    if !(level > 0.0 && level < 1.0) || splits == 0 {
        return Err(usage("--level must lie in (0, 1) and --splits must be positive"));
    }
    let pairs = load_suite(suite_path.as_deref())?;
    let fillers = load_fillers(fillers_path.as_deref())?;
    let mut table = analysis::read_judgments(File::open(&input)?).map_err(usage)?;
    for r in &table.rejected {
        eprintln!("{}:{}: rejected: {}", input.display(), r.line, r.message);
    }
    if *args.strict.get_or_insert(false) && !table.rejected.is_empty() {
        return Err(usage(format!("{} malformed judgment rows", table.rejected.len())));
    }
    let unknown = analysis::annotate(&mut table.rows, &pairs, &fillers);
    for id in &unknown {
        log::warn!("item {id} matches no stimulus");
    }
    let seed = ctx.seed_or(0);
    let out = create_out(&ctx.out_dir()?)?;

    let mut rw = csv::Writer::from_writer(writer(&out.join("rejected_rows.csv"))?);
    rw.write_record(["line", "message"])?;
    for r in &table.rejected {
        rw.write_record([r.line.to_string(), r.message.clone()])?;
    }
    rw.flush()?;

    let ex = analysis::exclude_participants(&table.rows, policy);
    let mut ew = csv::Writer::from_writer(writer(&out.join("exclusions.csv"))?);
    ew.write_record(["participant_id", "filler_rows", "unexpected", "failed_attention", "excluded", "reason"])?;
    for c in &ex.checks {
        ew.write_record([
            c.participant_id.clone(),
            c.filler_rows.to_string(),
            c.unexpected.to_string(),
            c.failed_attention.to_string(),
            c.excluded.to_string(),
            c.reason.clone().unwrap_or_default(),
        ])?;
    }
    ew.flush()?;

    let obs = analysis::human_observations(&ex.kept);
    let (records, diagnostics) = analysis::passive_drop(&obs, Source::Human);
    drops::write_drop_table(writer(&out.join("drops.csv"))?, &records)?;
    let stats_err = |e: analysis::StatsError| anyhow!("bootstrap: {e}");
    let by_class = analysis::group_drops_with_ci(&obs, Source::Human, GroupBy::Class, iterations, level, seed).map_err(stats_err)?;
    let by_verb = analysis::group_drops_with_ci(&obs, Source::Human, GroupBy::Verb, iterations, level, seed).map_err(stats_err)?;
    drops::write_group_table(writer(&out.join("drops_by_class.csv"))?, &by_class)?;
    drops::write_group_table(writer(&out.join("drops_by_verb.csv"))?, &by_verb)?;
    drops::write_plot_data(writer(&out.join("plot_class_drops.csv"))?, "human", &by_class)?;

    // Per-item means.
    let mut item_scores: BTreeMap<&str, (&human::JudgmentRow, Vec<f64>)> = BTreeMap::new();
    for r in &ex.kept {
        item_scores.entry(&r.item_id).or_insert_with(|| (r, Vec::new())).1.push(f64::from(r.score));
    }
    let mut iw = csv::Writer::from_writer(writer(&out.join("items.csv"))?);
    iw.write_record(["item_id", "kind", "pair_id", "verb", "class", "n", "mean"])?;
    for (id, (r, v)) in &item_scores {
        let kind = if r.is_filler { "filler".to_string() } else { r.voice.map(|v| v.to_string()).unwrap_or_default() };
        let mean = passlab::scalar::mean(v).unwrap();
        iw.write_record([
            id.to_string(),
            kind,
            r.pair_id.clone().unwrap_or_default(),
            r.verb.clone().unwrap_or_default(),
            r.class.clone().unwrap_or_default(),
            v.len().to_string(),
            mean.to_string(),
        ])?;
    }
    iw.flush()?;

    // Split-half reliability over critical items, overall and per class.
    let critical: Vec<&human::JudgmentRow> = ex.kept.iter().filter(|r| !r.is_filler && r.pair_id.is_some()).collect();
    let classes: BTreeSet<&str> = critical.iter().filter_map(|r| r.class.as_deref()).collect();
    type Observations<'a> = Vec<(&'a str, &'a str, f64)>;
    let mut scopes: Vec<(String, Observations)> =
        vec![("all".into(), critical.iter().map(|r| (r.participant_id.as_str(), r.item_id.as_str(), f64::from(r.score))).collect())];
    for c in classes {
        let o = critical
            .iter()
            .filter(|r| r.class.as_deref() == Some(c))
            .map(|r| (r.participant_id.as_str(), r.item_id.as_str(), f64::from(r.score)))
            .collect();
        scopes.push((c.to_string(), o));
    }
    let mut summary = String::new();
    let mut relw = csv::Writer::from_writer(writer(&out.join("reliability.csv"))?);
    relw.write_record(["scope", "usable_splits", "mean_r", "corrected"])?;
    for (scope, o) in &scopes {
        match analysis::split_half_reliability(o, splits, seed) {
            Ok(sh) => {
                relw.write_record([scope.clone(), sh.split_r.len().to_string(), sh.mean_r.to_string(), sh.corrected.to_string()])?;
                writeln!(summary, "reliability {scope:<18} r = {:.4}, corrected = {:.4}", sh.mean_r, sh.corrected)?;
            }
            Err(e) => {
                relw.write_record([scope.clone(), "0".into(), String::new(), String::new()])?;
                writeln!(summary, "reliability {scope:<18} unavailable: {e}")?;
            }
        }
    }
    relw.flush()?;

    let participants: BTreeSet<&str> = table.rows.iter().map(|r| r.participant_id.as_str()).collect();
    let mut head = String::new();
    writeln!(head, "participants: {}; excluded: {}; without fillers: {}", participants.len(), ex.excluded.len(), ex.no_fillers.len())?;
    writeln!(head, "rows: {} accepted, {} rejected", table.rows.len(), table.rejected.len())?;
    if let Some((a, p, d)) = analysis::overall_drop(&obs) {
        writeln!(head, "mean active {a:.2}, mean passive {p:.2}, overall drop {d:.2}")?;
    }
    for g in &by_class {
        let ci = g.ci.map(|c| format!(" [{:.2}, {:.2}]", c.low, c.high)).unwrap_or_default();
        writeln!(head, "class {:<18} drop {:>7.2}{ci}", g.group, g.mean_drop)?;
    }
    for d in &diagnostics {
        writeln!(summary, "note: {d}")?;
    }
    if !unknown.is_empty() {
        writeln!(summary, "note: {} item ids match no stimulus", unknown.len())?;
    }
    let summary = head + &summary;
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");

    args.input = Some(input.clone());
    args.suite = suite_path.clone();
    args.fillers = fillers_path.clone();
    let mut m = ctx.manifest("judgments", seed, &out);
    m.judgments = Some(args);
    let mut hashed: Vec<&Path> = vec![&input];
    hashed.extend(suite_path.iter().chain(&fillers_path).map(PathBuf::as_path));
    write_manifest(&out, m, &hashed)?;
    Ok(())
}

fn drops_file(path: &Path, what: &str) -> Result<PathBuf> {
    let path = existing(path, what)?;
    let file = if path.is_dir() { path.join("drops.csv") } else { path };
    existing(&file, what)
}

fn read_drops(path: &Path) -> Result<Vec<analysis::PassiveDropRecord<f64>>> {
    drops::read_drop_table(File::open(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn report(ctx: &Context, flags: ReportArgs) -> Result<()> {
    let mut args = overlay(ctx.config.report.clone(), flags)?;
    let base_path = drops_file(&required(&args.baseline, "baseline")?, "baseline drops")?;
    let after_path = drops_file(&required(&args.intervened, "intervened")?, "intervened drops")?;
    let human_path = args.human.as_deref().map(|p| drops_file(p, "human drops")).transpose()?;
    let baseline = read_drops(&base_path)?;
    let intervened = read_drops(&after_path)?;
    let mutating: BTreeSet<String> = args.mutating.iter().map(|m| m.trim().to_lowercase()).collect();
    let rows = analysis::intervention_delta(&baseline, &intervened, &mutating).map_err(|e| usage(e.to_string()))?;
    let out = create_out(&ctx.out_dir()?)?;

    drops::write_delta_table(writer(&out.join("delta.csv"))?, &rows)?;
    let mut pw = csv::Writer::from_writer(writer(&out.join("plot_delta.csv"))?);
    pw.write_record(["panel", "x", "y", "mutating"])?;
    let mut summary = String::new();
    writeln!(summary, "{:<14}{:>12}{:>12}{:>12}  mutating", "verb", "baseline", "intervened", "delta")?;
    for r in rows.iter().filter(|r| r.level == "verb") {
        pw.write_record(["delta", r.verb.as_str(), &r.delta.to_string(), &r.mutating.to_string()])?;
        writeln!(summary, "{:<14}{:>12.4}{:>12.4}{:>12.4}  {}", r.verb, r.baseline, r.intervened, r.delta, r.mutating)?;
    }
    pw.flush()?;
    if let Some(h) = &human_path {
        let humans = read_drops(h)?;
        match analysis::correlate_drops(&humans, &intervened) {
            Ok(p) => writeln!(summary, "human/model correlation: r({}) = {:.4}, p = {:.4e}", p.n.saturating_sub(2), p.r, p.p)?,
            Err(e) => writeln!(summary, "human/model correlation unavailable: {e}")?,
        }
    }
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");

    args.baseline = Some(base_path.clone());
    args.intervened = Some(after_path.clone());
    args.human = human_path.clone();
    let mut m = ctx.manifest("report", ctx.seed_or(0), &out);
    m.report = Some(args);
    let mut hashed: Vec<&Path> = vec![&base_path, &after_path];
    hashed.extend(human_path.as_deref());
    write_manifest(&out, m, &hashed)?;
    Ok(())
}

pub fn serve_ngram(train: &Path, order: usize, discount: f64) -> Result<()> {
    let train = existing(train, "training text")?;
    let mut model = train_builtin(&train, order, discount)?;
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    scoring::serve_protocol(&mut model, stdin, stdout)?;
    Ok(())
}
