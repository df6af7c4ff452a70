//! Command-line options and their TOML counterparts.
//!
//! Every flag of a subcommand can also be set in the table of the same
//! name in the config file. Flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "udblend",
    version,
    about = "Blend parser outputs, add enhanced dependencies and score treebanks"
)]
pub struct Cli {
    /// Only report errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    /// Worker threads; 0 uses one per core.
    #[arg(long, short, global = true)]
    pub jobs: Option<usize>,

    /// TOML file with default options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// MISC key holding semantic labels.
    #[arg(long, global = true)]
    pub sem_label_key: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blend aligned parser outputs into one consensus treebank.
    Blend(BlendArgs),
    /// Try every blending combination of parser groups on a dev treebank.
    Search(SearchArgs),
    /// Add enhanced dependencies to the DEPS column.
    Enhance(EnhanceArgs),
    /// Score a system treebank against gold.
    Evaluate(EvaluateArgs),
    /// Write k train/heldout splits for jackknifing.
    SplitFolds(SplitFoldsArgs),
    /// Report tree violations.
    Validate(ValidateArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BlendArgs {
    /// Comma-separated CoNLL-U files, all with the same sentences.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<String>,
    /// Output file; stdout when omitted or "-".
    #[arg(long)]
    pub output: Option<String>,
    /// Input whose non-syntactic columns are kept (0-based).
    #[arg(long)]
    pub donor: Option<usize>,
    /// Label for re-attached extra roots.
    #[arg(long)]
    pub root_fallback: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SearchArgs {
    /// NAME=file1,file2,... in instance order; repeat per group.
    #[arg(long = "group")]
    pub groups: Vec<String>,
    /// Gold development treebank.
    #[arg(long)]
    pub dev: Option<String>,
    /// Ranking as TSV; stdout when omitted or "-".
    #[arg(long)]
    pub report: Option<String>,
    /// Selection metric; only "las".
    #[arg(long)]
    pub metric: Option<String>,
    /// Label for re-attached extra roots.
    #[arg(long)]
    pub root_fallback: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnhanceArgs {
    /// Input file; stdin when omitted or "-".
    #[arg(long)]
    pub input: Option<String>,
    /// Output file; stdout when omitted or "-".
    #[arg(long)]
    pub output: Option<String>,
    /// Comma-separated rules (head, children); empty for none.
    #[arg(long)]
    pub rules: Option<String>,
    /// Comma-separated filters (labels, advmod1, obj); empty for none.
    #[arg(long)]
    pub filters: Option<String>,
    /// Comma-separated labels kept by the labels filter.
    #[arg(long)]
    pub allowed_labels: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: Option<String>,
    #[arg(long)]
    pub system: Option<String>,
    /// Comma-separated metrics; all when omitted.
    #[arg(long)]
    pub metrics: Option<String>,
    /// tsv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Report file; stdout when omitted or "-".
    #[arg(long)]
    pub output: Option<String>,
    /// Compare deprels with their subtypes.
    #[arg(long)]
    pub keep_subtypes: bool,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SplitFoldsArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Input file; stdin when omitted or "-".
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ValidateArgs {
    /// Input file; stdin when omitted or "-".
    #[arg(long)]
    pub input: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub jobs: Option<usize>,
    pub quiet: Option<bool>,
    pub sem_label_key: Option<String>,
    pub blend: BlendArgs,
    pub search: SearchArgs,
    pub enhance: EnhanceArgs,
    pub evaluate: EvaluateArgs,
    pub split_folds: SplitFoldsArgs,
    pub validate: ValidateArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {}", path.display(), e))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e)))
    }
}

fn vec_or<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

/// Fill options missing on the command line from the config file.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

impl Merge for BlendArgs {
    fn merge(self, file: Self) -> Self {
        BlendArgs {
            inputs: vec_or(self.inputs, file.inputs),
            output: self.output.or(file.output),
            donor: self.donor.or(file.donor),
            root_fallback: self.root_fallback.or(file.root_fallback),
        }
    }
}

impl Merge for SearchArgs {
    fn merge(self, file: Self) -> Self {
        SearchArgs {
            groups: vec_or(self.groups, file.groups),
            dev: self.dev.or(file.dev),
            report: self.report.or(file.report),
            metric: self.metric.or(file.metric),
            root_fallback: self.root_fallback.or(file.root_fallback),
        }
    }
}

impl Merge for EnhanceArgs {
    fn merge(self, file: Self) -> Self {
        EnhanceArgs {
            input: self.input.or(file.input),
            output: self.output.or(file.output),
            rules: self.rules.or(file.rules),
            filters: self.filters.or(file.filters),
            allowed_labels: self.allowed_labels.or(file.allowed_labels),
        }
    }
}

impl Merge for EvaluateArgs {
    fn merge(self, file: Self) -> Self {
        EvaluateArgs {
            gold: self.gold.or(file.gold),
            system: self.system.or(file.system),
            metrics: self.metrics.or(file.metrics),
            format: self.format.or(file.format),
            output: self.output.or(file.output),
            keep_subtypes: self.keep_subtypes || file.keep_subtypes,
        }
    }
}

impl Merge for SplitFoldsArgs {
    fn merge(self, file: Self) -> Self {
        SplitFoldsArgs {
            k: self.k.or(file.k),
            input: self.input.or(file.input),
            outdir: self.outdir.or(file.outdir),
        }
    }
}

impl Merge for ValidateArgs {
    fn merge(self, file: Self) -> Self {
        ValidateArgs {
            input: self.input.or(file.input),
        }
    }
}

/// Comma-separated list; the empty string is the empty list.
pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(str::to_owned)
        .collect()
}
