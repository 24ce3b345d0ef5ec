//! Batch pipelines over the data lab: generation, augmentation, co-occurrence
//! analysis, spectral embedding evaluation, edit distances and reports.
//! Every command is a pure function of its inputs, flags and seed.

pub mod analyze;
pub mod args;
pub mod augment;
pub mod error;
pub mod evaluate;
pub mod files;
pub mod ged;
pub mod generate;
pub mod report;

use clap::Parser;

use args::{Cli, Command, ConfigFile, Globals};
pub use error::{CliError, Result};

/// What a command prints: results on stdout, warnings on stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stdout: Vec<String>,
    pub warnings: Vec<String>,
}

/// Parses arguments. Help and version requests come back as `Ok(Err(text))`.
pub fn parse<I, T>(argv: I) -> Result<std::result::Result<Cli, String>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Ok(cli)),
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => {
            let text = e.to_string();
            Err(CliError::Usage(text.strip_prefix("error: ").unwrap_or(&text).trim_end().to_string()))
        }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let globals = Globals::resolve(&cli, &file)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = globals.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| dispatch(cli.command, file, &globals))
}

fn dispatch(command: Command, file: ConfigFile, globals: &Globals) -> Result<Outcome> {
    let mut out = Outcome::default();
    match command {
        Command::Generate(a) => {
            let job = generate::GenerateJob::resolve(a.overlay(file.generate), globals)?;
            let d = generate::run(&job)?;
            out.stdout.push(format!("wrote {} samples to {}", d.samples.len(), job.out.display()));
        }
        Command::Augment(a) => {
            let job = augment::AugmentJob::resolve(a.overlay(file.augment), globals)?;
            let records = augment::run(&job)?;
            out.stdout.push(format!("wrote {} augmentations to {}", records.len(), job.out.display()));
        }
        Command::Analyze(a) => {
            let job = analyze::AnalyzeJob::resolve(a.overlay(file.analyze), globals)?;
            let rows = analyze::run(&job)?;
            out.stdout.push(format!("wrote {} rows to {}", rows.len(), job.out.display()));
        }
        Command::EmbedEval(a) => {
            // Generation options fall back to the generate section.
            let job = evaluate::EvalJob::resolve(
                a.eval.overlay(file.embed_eval),
                a.generate.overlay(file.generate),
                globals,
            )?;
            let outcome = evaluate::run(&job)?;
            out.warnings = outcome.warnings;
            out.stdout.push(format!(
                "wrote {} summary rows to {}",
                outcome.rows.len(),
                job.out_dir.join("summary.csv").display()
            ));
        }
        Command::Ged(a) => {
            let job = ged::GedJob::resolve(a)?;
            out.stdout.push(ged::run(&job)?.to_string());
        }
        Command::Report(a) => {
            let job = report::ReportJob::resolve(a.overlay(file.report), globals)?;
            for f in report::run(&job)? {
                out.stdout.push(job.out_dir.join(f).display().to_string());
            }
        }
    }
    Ok(out)
}
