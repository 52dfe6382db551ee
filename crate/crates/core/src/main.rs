use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use loudcomp::analysis::{
    average_spectra, loudness_restoration_report, match_loudness, third_octave_spectrum,
    ThirdOctaveSpectrum,
};
use loudcomp::corpus::{self, CompensateOptions, TableCache};
use loudcomp::spectrum::{Calibration, Window};
use loudcomp::stoi::stoi;
use loudcomp::synth::speech_like;
use loudcomp::wav::{read_wav, write_wav, WritePolicy};
use loudcomp::{
    Audiogram, Direction, EarModel, Error, GainTable, ProcessorConfig, Result, TableSpec,
};

#[derive(Parser)]
#[command(
    name = "loudcomp",
    version,
    about = "Hearing-loss compensation by loudness restoration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or export gain tables.
    #[command(subcommand)]
    Table(TableCommand),
    /// Compensate one WAV file.
    Compensate(CompensateArgs),
    /// Compensate every file of a corpus.
    Corpus(CorpusArgs),
    /// STOI of a processed file against its clean reference.
    Stoi {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        processed: PathBuf,
    },
    /// Third-octave band levels of a file or of every WAV in a directory.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// Power-average all files into one spectrum.
        #[arg(long)]
        average: bool,
        #[arg(long, default_value_t = 100.0)]
        full_scale_spl: f64,
    },
    /// Gain in dB that makes the target as loud as the reference.
    MatchLoudness {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Listener audiogram; a normal ear when omitted.
        #[arg(long)]
        audiogram: Option<PathBuf>,
        #[arg(long, default_value_t = 100.0)]
        full_scale_spl: f64,
    },
    /// Per-channel loudness restoration of a processed file.
    RestoreReport {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        processed: PathBuf,
        #[arg(long)]
        audiogram: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        full_scale_spl: f64,
    },
    /// Write a synthetic speech-like corpus with LJSpeech-style metadata.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 3.0)]
        seconds: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 22050)]
        sample_rate: u32,
    },
}

#[derive(Subcommand)]
enum TableCommand {
    /// Build a table; stored in the cache when --out is omitted.
    Build {
        #[arg(long)]
        audiogram: PathBuf,
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 22050)]
        sample_rate: u32,
    },
    /// Write a table as CSV.
    Export {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Hann,
    Rect,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Float,
    Clip,
    Normalize,
}

#[derive(Args)]
struct ProcessingArgs {
    /// Audiogram JSON; required unless --table is given.
    #[arg(long, required_unless_present = "table")]
    audiogram: Option<PathBuf>,
    /// Prebuilt table; overrides --audiogram and --inverse.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    inverse: bool,
    #[arg(long, default_value_t = 100.0)]
    full_scale_spl: f64,
    #[arg(long, value_enum, default_value = "hann")]
    window: WindowArg,
    #[arg(long, value_enum, default_value = "float")]
    write_policy: PolicyArg,
    /// Samples between exact spectrum recomputations.
    #[arg(long, default_value_t = 4096)]
    resync_interval: usize,
    /// Score outputs with STOI against their inputs.
    #[arg(long)]
    stoi: bool,
    /// Build tables without reading or writing the cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct CompensateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    processing: ProcessingArgs,
}

#[derive(Args)]
struct CorpusArgs {
    /// `id|text|normalized_text` lines or a plain file list.
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long)]
    wav_dir: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 22050)]
    sample_rate: u32,
    #[command(flatten)]
    processing: ProcessingArgs,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn load_audiogram(path: &Path) -> Result<Audiogram> {
    Audiogram::from_json(&read_text(path)?)
}

fn load_table(path: &Path) -> Result<GainTable> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    GainTable::from_bytes(&bytes)
}

fn direction(inverse: bool) -> Direction {
    if inverse {
        Direction::Inverse
    } else {
        Direction::Compensate
    }
}

fn table_for(
    audiogram: &Audiogram,
    direction: Direction,
    sample_rate: u32,
    use_cache: bool,
) -> Result<GainTable> {
    let spec = TableSpec::with_sample_rate(sample_rate);
    match TableCache::from_env().filter(|_| use_cache) {
        Some(cache) => {
            let (table, hit) = cache.load_or_build(audiogram, direction, spec)?;
            eprintln!(
                "table {} ({})",
                if hit {
                    "loaded from cache"
                } else {
                    "built and cached"
                },
                cache.dir().display()
            );
            Ok(table)
        }
        None => GainTable::for_audiogram(audiogram, direction, spec),
    }
}

/// Table and audiogram digest for a run at `sample_rate`.
fn resolve_table(args: &ProcessingArgs, sample_rate: u32) -> Result<(GainTable, String)> {
    match (&args.table, &args.audiogram) {
        (Some(path), audiogram) => {
            let table = load_table(path)?;
            let digest = match audiogram {
                Some(a) => load_audiogram(a)?.digest(),
                None => String::new(),
            };
            Ok((table, digest))
        }
        (None, Some(path)) => {
            let a = load_audiogram(path)?;
            let t = table_for(&a, direction(args.inverse), sample_rate, !args.no_cache)?;
            Ok((t, a.digest()))
        }
        (None, None) => Err(Error::validation(
            "audiogram",
            "--audiogram or --table is required",
        )),
    }
}

fn options(args: &ProcessingArgs) -> CompensateOptions {
    CompensateOptions {
        processor: ProcessorConfig {
            window: match args.window {
                WindowArg::Hann => Window::Hann,
                WindowArg::Rect => Window::Rect,
            },
            full_scale_spl: args.full_scale_spl,
            resync_interval: args.resync_interval,
            ..ProcessorConfig::default()
        },
        policy: match args.write_policy {
            PolicyArg::Float => WritePolicy::Float,
            PolicyArg::Clip => WritePolicy::Clip,
            PolicyArg::Normalize => WritePolicy::Normalize,
        },
        compute_stoi: args.stoi,
    }
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd =
        std::fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry
            .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
            .path();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::validation(
            "in",
            format!("no .wav files in {}", dir.display()),
        ));
    }
    Ok(files)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Table(TableCommand::Build {
            audiogram,
            inverse,
            out,
            sample_rate,
        }) => {
            let a = load_audiogram(&audiogram)?;
            let table = match &out {
                Some(path) => {
                    let t = GainTable::for_audiogram(
                        &a,
                        direction(inverse),
                        TableSpec::with_sample_rate(sample_rate),
                    )?;
                    create(path)?
                        .write_all(&t.to_bytes())
                        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
                    t
                }
                None => table_for(&a, direction(inverse), sample_rate, true)?,
            };
            println!(
                "{} table: {} bins x {} levels, {} saturated cells, sha256 {}",
                table.direction().as_str(),
                table.n_bins(),
                table.levels().count,
                table.saturated_count(),
                table.digest()
            );
        }
        Command::Table(TableCommand::Export { table, csv }) => {
            let t = load_table(&table)?;
            t.write_csv(create(&csv)?)
                .map_err(|e| Error::io(format!("writing {}", csv.display()), e))?;
        }
        Command::Compensate(args) => {
            let rate = read_wav(&args.input)?.sample_rate;
            let (table, _) = resolve_table(&args.processing, rate)?;
            let id = args
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let entry = corpus::compensate_file(
                &id,
                &args.input,
                &args.out,
                &table,
                &options(&args.processing),
            )?;
            println!(
                "{}",
                serde_json::to_string_pretty(&entry).expect("entry serialises")
            );
        }
        Command::Corpus(args) => {
            let items = corpus::read_metadata(&args.metadata, &args.wav_dir)?;
            let (table, digest) = resolve_table(&args.processing, args.sample_rate)?;
            let m = corpus::run_corpus(
                &items,
                &args.out_dir,
                &table,
                &digest,
                args.jobs,
                &options(&args.processing),
            )?;
            eprintln!(
                "{} processed, {} skipped, {} failed; manifest {}",
                m.processed,
                m.skipped,
                m.failed,
                args.out_dir.join(corpus::MANIFEST_NAME).display()
            );
            for e in m.entries.iter().filter(|e| e.error.is_some()) {
                eprintln!("  {}: {}", e.id, e.error.as_deref().unwrap_or_default());
            }
            if m.failed > 0 {
                return Err(Error::PartialCorpus {
                    failed: m.failed,
                    total: m.entries.len(),
                });
            }
        }
        Command::Stoi { clean, processed } => {
            let score = stoi(&read_wav(&clean)?, &read_wav(&processed)?)?;
            println!("file,stoi");
            println!("{},{}", processed.display(), score.value);
        }
        Command::Spectrum {
            input,
            csv,
            average,
            full_scale_spl,
        } => {
            let cal = Calibration::new(full_scale_spl);
            let files = if input.is_dir() {
                wav_files(&input)?
            } else {
                vec![input]
            };
            let spectra = files
                .iter()
                .map(|f| third_octave_spectrum(&read_wav(f)?, cal))
                .collect::<Result<Vec<ThirdOctaveSpectrum>>>()?;
            let io = |e| Error::io(format!("writing {}", csv.display()), e);
            if average || spectra.len() == 1 {
                average_spectra(&spectra, cal)?
                    .write_csv(create(&csv)?)
                    .map_err(io)?;
            } else {
                let mut out = std::io::BufWriter::new(create(&csv)?);
                writeln!(out, "file,band_hz,level_db").map_err(io)?;
                for (f, s) in files.iter().zip(&spectra) {
                    for (c, l) in s.centres.iter().zip(&s.levels) {
                        writeln!(out, "{},{c},{l}", f.display()).map_err(io)?;
                    }
                }
                out.flush().map_err(io)?;
            }
        }
        Command::MatchLoudness {
            reference,
            target,
            audiogram,
            full_scale_spl,
        } => {
            let ear = match audiogram {
                Some(p) => EarModel::impaired(load_audiogram(&p)?),
                None => EarModel::normal(),
            };
            let g = match_loudness(
                &read_wav(&reference)?,
                &read_wav(&target)?,
                &ear,
                Calibration::new(full_scale_spl),
            )?;
            println!("{g:.4}");
        }
        Command::RestoreReport {
            original,
            processed,
            audiogram,
            csv,
            full_scale_spl,
        } => {
            let ear = EarModel::impaired(load_audiogram(&audiogram)?);
            let r = loudness_restoration_report(
                &read_wav(&original)?,
                &read_wav(&processed)?,
                &ear,
                Calibration::new(full_scale_spl),
            )?;
            r.write_csv(create(&csv)?)
                .map_err(|e| Error::io(format!("writing {}", csv.display()), e))?;
            println!(
                "scored channels {}, median |err| {:.4}, p90 |err| {:.4}",
                r.scored_channels(),
                r.median_abs_error,
                r.p90_abs_error
            );
        }
        Command::Synth {
            out_dir,
            count,
            seconds,
            seed,
            sample_rate,
        } => {
            if seconds.is_nan() || seconds <= 0.0 || count == 0 {
                return Err(Error::validation(
                    "synth",
                    "need count >= 1 and seconds > 0",
                ));
            }
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
            let meta = out_dir.join("metadata.csv");
            let mut lines = String::new();
            for i in 0..count {
                let id = format!("synth-{:04}", i + 1);
                let x = speech_like(seconds, sample_rate, seed.wrapping_add(i as u64));
                write_wav(&out_dir.join(format!("{id}.wav")), &x, WritePolicy::Float)?;
                lines.push_str(&format!(
                    "{id}|synthetic utterance {}|synthetic utterance {}\n",
                    i + 1,
                    i + 1
                ));
            }
            std::fs::write(&meta, lines)
                .map_err(|e| Error::io(format!("writing {}", meta.display()), e))?;
            println!("{count} files, metadata {}", meta.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
