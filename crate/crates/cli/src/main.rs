mod config;

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use udblend::blend::{blend_treebank, BlendError, BlendOptions};
use udblend::conllu::{
    parse_conllu, serialize_conllu_with, split_folds, validate_tree, ConlluError, ConlluOptions,
    Treebank,
};
use udblend::enhance::{EnhanceError, Enhancer, RuleConfig};
use udblend::eval::{evaluate_all, EvalError, EvalOptions, EvalReport, Metric};
use udblend::par;
use udblend::search::{search_best, ParserGroup, SearchError};

use config::{
    split_list, BlendArgs, Cli, Command, ConfigFile, EnhanceArgs, EvaluateArgs, Merge, SearchArgs,
    SplitFoldsArgs, ValidateArgs,
};

const STDIO: &str = "-";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<ConlluError> for CliError {
    fn from(e: ConlluError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnknownMetric(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn blend_error_kind(e: &BlendError) -> fn(String) -> CliError {
    match e {
        BlendError::AtSentence { source, .. } => blend_error_kind(source),
        BlendError::NoSuchDonor { .. } | BlendError::NoPredictions => CliError::Usage,
        BlendError::NoRoot(_) | BlendError::MissingArc { .. } | BlendError::Graph { .. } => {
            CliError::Internal
        }
        _ => CliError::Data,
    }
}

impl From<BlendError> for CliError {
    fn from(e: BlendError) -> Self {
        blend_error_kind(&e)(e.to_string())
    }
}

fn enhance_error_kind(e: &EnhanceError) -> fn(String) -> CliError {
    match e {
        EnhanceError::AtSentence { source, .. } => enhance_error_kind(source),
        EnhanceError::InvalidTree { .. } => CliError::Data,
        _ => CliError::Usage,
    }
}

impl From<EnhanceError> for CliError {
    fn from(e: EnhanceError) -> Self {
        enhance_error_kind(&e)(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        let kind = match &e {
            SearchError::NoGroups | SearchError::EmptyGroup(_) => CliError::Usage,
            SearchError::Misaligned { .. } | SearchError::Eval(_) => CliError::Data,
            SearchError::Blend { source, .. } => blend_error_kind(source),
            SearchError::EmptyCombination
            | SearchError::Arity { .. }
            | SearchError::CountTooLarge { .. } => CliError::Internal,
        };
        kind(e.to_string())
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{} is required", flag)))
}

fn read_text(path: &str) -> Result<String, CliError> {
    let mut text = String::new();
    if path == STDIO {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Data(format!("stdin: {}", e)))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {}", path, e)))?;
    }
    Ok(text)
}

fn write_text(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        None | Some(STDIO) => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Data(format!("stdout: {}", e)))
        }
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {}", path, e)))
        }
    }
}

struct Context {
    conllu: ConlluOptions,
}

impl Context {
    fn load(&self, path: &str) -> Result<Treebank, CliError> {
        let text = read_text(path)?;
        parse_conllu(&text, &self.conllu).map_err(|e| CliError::Data(format!("{}: {}", path, e)))
    }

    fn serialize(&self, tb: &Treebank) -> String {
        serialize_conllu_with(tb, &self.conllu)
    }
}

fn blend(ctx: &Context, args: BlendArgs) -> Result<(), CliError> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage("--inputs is required".to_owned()));
    }
    let inputs = args
        .inputs
        .iter()
        .map(|path| ctx.load(path))
        .collect::<Result<Vec<_>, _>>()?;
    let defaults = BlendOptions::default();
    let options = BlendOptions {
        root_fallback: args.root_fallback.unwrap_or(defaults.root_fallback),
        donor: args.donor.unwrap_or(defaults.donor),
    };
    let refs: Vec<&Treebank> = inputs.iter().collect();
    let blended = blend_treebank(&refs, &options)?;
    log::info!(
        "blended {} sentences from {} inputs",
        blended.len(),
        refs.len()
    );
    write_text(args.output.as_deref(), &ctx.serialize(&blended))
}

fn parse_group(arg: &str) -> Result<(String, Vec<String>), CliError> {
    let (name, paths) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("group '{}' is not NAME=file,...", arg)))?;
    let paths = split_list(paths);
    if name.is_empty() || paths.is_empty() {
        return Err(CliError::Usage(format!(
            "group '{}' is not NAME=file,...",
            arg
        )));
    }
    Ok((name.to_owned(), paths))
}

fn search(ctx: &Context, args: SearchArgs) -> Result<(), CliError> {
    if let Some(metric) = &args.metric {
        if metric.parse::<Metric>()? != Metric::Las {
            return Err(CliError::Usage(format!(
                "search supports --metric las only, not '{}'",
                metric
            )));
        }
    }
    if args.groups.is_empty() {
        return Err(CliError::Usage(
            "at least one --group is required".to_owned(),
        ));
    }
    let dev = ctx.load(&required(args.dev, "dev")?)?;
    let mut groups = Vec::new();
    for arg in &args.groups {
        let (name, paths) = parse_group(arg)?;
        if groups.iter().any(|g: &ParserGroup| g.name == name) {
            return Err(CliError::Usage(format!("group '{}' given twice", name)));
        }
        let outputs = paths
            .iter()
            .map(|p| ctx.load(p))
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(ParserGroup::new(name, outputs));
    }

    let options = BlendOptions {
        root_fallback: args
            .root_fallback
            .unwrap_or_else(|| BlendOptions::default().root_fallback),
        ..BlendOptions::default()
    };
    let outcome = search_best(&groups, &dev, &options, &EvalOptions::default())?;
    log::info!(
        "best of {} combinations: {} (LAS {:.2})",
        outcome.evaluated(),
        outcome.best.combination.describe(&groups),
        outcome.best.las
    );

    let mut report = String::from("counts\tlas\trank\n");
    for entry in &outcome.ranking {
        let _ = writeln!(
            report,
            "{}\t{:.2}\t{}",
            entry.combination.describe(&groups),
            entry.las,
            entry.rank
        );
    }
    write_text(args.report.as_deref(), &report)
}

fn enhance(ctx: &Context, args: EnhanceArgs) -> Result<(), CliError> {
    let mut cfg = RuleConfig::full();
    if let Some(rules) = &args.rules {
        cfg = cfg.with_rules(&split_list(rules))?;
    }
    if let Some(filters) = &args.filters {
        cfg.enabled_filters = split_list(filters);
    }
    if let Some(labels) = &args.allowed_labels {
        cfg.allowed_labels = split_list(labels);
    }
    let enhancer = Enhancer::default();
    if let Some(unknown) = cfg
        .enabled_filters
        .iter()
        .find(|f| !enhancer.registry.contains(f))
    {
        return Err(EnhanceError::UnknownFilter(unknown.clone()).into());
    }

    let tb = ctx.load(args.input.as_deref().unwrap_or(STDIO))?;
    let enhanced = enhancer.enhance_treebank(&tb, &cfg)?;
    write_text(args.output.as_deref(), &ctx.serialize(&enhanced))
}

fn report_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from("metric\tprecision\trecall\tf1\tmatched\tsystem\tgold\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{:.2}\t{:.2}\t{:.2}\t{}\t{}\t{}",
            r.metric.name(),
            r.precision,
            r.recall,
            r.f1,
            r.matched,
            r.system_total,
            r.gold_total
        );
    }
    out
}

fn evaluate(ctx: &Context, args: EvaluateArgs) -> Result<(), CliError> {
    let metrics: Vec<Metric> = match &args.metrics {
        Some(list) => split_list(list)
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, _>>()?,
        None => Metric::ALL.to_vec(),
    };
    if metrics.is_empty() {
        return Err(CliError::Usage("--metrics names no metric".to_owned()));
    }
    let format = args.format.as_deref().unwrap_or("tsv");
    if format != "tsv" && format != "json" {
        return Err(CliError::Usage(format!("unknown format '{}'", format)));
    }
    let gold = required(args.gold, "gold")?;
    let system = required(args.system, "system")?;
    if gold == STDIO && system == STDIO {
        return Err(CliError::Usage(
            "gold and system cannot both be stdin".to_owned(),
        ));
    }
    let gold = ctx.load(&gold)?;
    let system = ctx.load(&system)?;
    let options = EvalOptions {
        strip_subtypes: !args.keep_subtypes,
    };
    let reports = evaluate_all(&gold, &system, &metrics, &options)?;

    let text = if format == "json" {
        let mut json = serde_json::to_string_pretty(&reports)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        json.push('\n');
        json
    } else {
        report_tsv(&reports)
    };
    write_text(args.output.as_deref(), &text)
}

fn split(ctx: &Context, args: SplitFoldsArgs) -> Result<(), CliError> {
    let k = required(args.k, "k")?;
    if k < 2 {
        return Err(CliError::Usage("--k must be at least 2".to_owned()));
    }
    let outdir = required(args.outdir, "outdir")?;
    let tb = ctx.load(args.input.as_deref().unwrap_or(STDIO))?;
    let folds = split_folds(&tb, k)?;
    std::fs::create_dir_all(&outdir)
        .map_err(|e| CliError::Data(format!("{}: {}", outdir.display(), e)))?;
    for (idx, (train, heldout)) in folds.iter().enumerate() {
        for (part, data) in [("train", train), ("heldout", heldout)] {
            let path = outdir.join(format!("fold{}.{}.conllu", idx + 1, part));
            write_text(path.to_str(), &ctx.serialize(data))?;
        }
        log::info!(
            "fold {}: {} train, {} heldout",
            idx + 1,
            train.len(),
            heldout.len()
        );
    }
    Ok(())
}

fn validate(ctx: &Context, args: ValidateArgs) -> Result<(), CliError> {
    let path = args.input.unwrap_or_else(|| STDIO.to_owned());
    let tb = ctx.load(&path)?;
    let mut report = String::new();
    let mut bad = 0;
    for s in &tb.sentences {
        let violations = validate_tree(s);
        if !violations.is_empty() {
            bad += 1;
        }
        for v in violations {
            let _ = writeln!(report, "{}\t{}", s.sent_id, v);
        }
    }
    write_text(None, &report)?;
    if bad > 0 {
        return Err(CliError::Data(format!(
            "{}: {} of {} sentences are not trees",
            path,
            bad,
            tb.len()
        )));
    }
    log::info!("{}: {} sentences, all trees", path, tb.len());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(Path::new(path))?,
        None => ConfigFile::default(),
    };
    let quiet = cli.quiet || file.quiet.unwrap_or(false);
    let level = if quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .try_init();

    let mut conllu = ConlluOptions::default();
    if let Some(key) = cli.sem_label_key.or(file.sem_label_key) {
        conllu.sem_label_key = key;
    }
    let ctx = Context { conllu };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(0);

    par::with_jobs(jobs, || match cli.command {
        Command::Blend(args) => blend(&ctx, args.merge(file.blend)),
        Command::Search(args) => search(&ctx, args.merge(file.search)),
        Command::Enhance(args) => enhance(&ctx, args.merge(file.enhance)),
        Command::Evaluate(args) => evaluate(&ctx, args.merge(file.evaluate)),
        Command::SplitFolds(args) => split(&ctx, args.merge(file.split_folds)),
        Command::Validate(args) => validate(&ctx, args.merge(file.validate)),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
