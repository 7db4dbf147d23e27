use std::fs;
use std::io::Write as _;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use avoidance::builtin;
use avoidance::freeness::{enumerate_free_words, EnumerationOptions};
use avoidance::verify::{
    self, check_synchronization, verify_conjugacy_avoidance, verify_formula_exclusion, verify_image_freeness,
    BacktrackOutcome, BacktrackReport, CheckReport, Named, PaperConfig, Report, SourceFamily, Verdict,
};
use avoidance::words::StabilizationLimits;
use avoidance::{
    circular_formula, contained_conjugacy_classes, count_free_words, divides, find_occurrence_in_word,
    fixed_point_prefix, image_factor_set, lemma_length_bound, morphic_factor_set, Error, FactorSource, FixedPoint,
    Formula, FreenessSpec, Morphism, Rational, VarBounds, Word,
};

const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "avoidance",
    version,
    about = "Formula avoidance, power-free words and the checks behind them"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on depth-first search nodes.
    #[arg(long, global = true, default_value_t = verify::DEFAULT_NODE_CAP)]
    node_cap: u64,

    /// Cap on iterations when computing factor sets of fixed points.
    #[arg(long, global = true, default_value_t = StabilizationLimits::default().max_iterations)]
    max_iterations: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// A morphism given by built-in name, optionally replaced by a file.
#[derive(clap::Args, Debug)]
struct MorphismArg {
    /// Built-in morphism name (b4, g2, g3, g6, m15, m6), or a label for --morphism-file.
    morphism: String,

    /// Read the morphism from a file of `letter -> image` lines instead.
    #[arg(long)]
    morphism_file: Option<PathBuf>,
}

impl MorphismArg {
    fn load(&self) -> anyhow::Result<Morphism> {
        load_morphism(&self.morphism, self.morphism_file.as_ref())
    }
}

/// Formula text, or `C<t>` for the circular formula on `t` variables.
fn formula_arg(text: &str) -> Result<Formula, String> {
    match text.strip_prefix('C').map(str::parse::<usize>) {
        Some(Ok(t)) => circular_formula(t),
        _ => Formula::parse(text),
    }
    .map_err(|e| e.to_string())
}

fn load_morphism(name: &str, file: Option<&PathBuf>) -> anyhow::Result<Morphism> {
    match file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Morphism::parse(&text)?)
        }
        None => Ok(builtin::morphism(name)?),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prefix of the fixed point of a morphism.
    FixedPoint {
        #[command(flatten)]
        m: MorphismArg,
        #[arg(long, default_value_t = 0)]
        seed_letter: u8,
        /// Minimum prefix length; the first iterate at least this long is printed.
        #[arg(long, default_value_t = 64)]
        min: usize,
    },
    /// Image of a word.
    Apply {
        #[command(flatten)]
        m: MorphismArg,
        word: String,
    },
    /// Factors of one length of a fixed point, or of its image under another morphism.
    Factors {
        #[command(flatten)]
        m: MorphismArg,
        length: usize,
        /// Take factors of the image of the fixed point of this built-in morphism.
        #[arg(long)]
        source: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed_letter: u8,
    },
    /// Conjugacy classes fully contained in a factor set.
    Classes {
        #[command(flatten)]
        m: MorphismArg,
        length: usize,
        #[arg(long)]
        source: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed_letter: u8,
    },
    /// Counts of power-free words by length.
    FreeEnum {
        #[arg(long)]
        alphabet: usize,
        #[arg(long)]
        spec: FreenessSpec,
        #[arg(long)]
        max_len: usize,
        /// Also print every word.
        #[arg(long)]
        words: bool,
        /// Do not fix the first letter.
        #[arg(long)]
        no_symmetry: bool,
    },
    /// Number of power-free words of one length.
    FreeCount {
        #[arg(long)]
        alphabet: usize,
        #[arg(long)]
        spec: FreenessSpec,
        length: usize,
    },
    /// Source length bound ceil(2β'/(β'-β)).
    Bound { target: String, source: String },
    /// First occurrence of a formula in a word.
    Occurs {
        #[arg(long, value_parser = formula_arg)]
        formula: Formula,
        word: String,
        /// Caps such as `a+b<=60, c<=3`.
        #[arg(long)]
        bounds: Option<String>,
    },
    /// Whether one formula divides another.
    Divides {
        #[arg(value_parser = formula_arg)]
        small: Formula,
        #[arg(value_parser = formula_arg)]
        big: Formula,
    },
    /// The circular formula on t variables.
    Circular { t: usize },
    /// Reverse of a formula, in canonical form.
    Reverse {
        #[arg(value_parser = formula_arg)]
        formula: Formula,
    },
    /// Synchronization of a uniform morphism.
    CheckSync {
        #[command(flatten)]
        m: MorphismArg,
        /// Only consider two-letter factors of this built-in fixed point.
        #[arg(long)]
        pairs_from: Option<String>,
    },
    /// No conjugacy class of length at least --min in the image of a fixed point.
    CheckClasses {
        #[command(flatten)]
        m: MorphismArg,
        #[arg(long)]
        min: usize,
        #[arg(long, default_value = "b4")]
        source: String,
    },
    /// Power-freeness of images of power-free words.
    CheckFreeness {
        #[command(flatten)]
        m: MorphismArg,
        #[arg(long)]
        alphabet: usize,
        /// Source spec.
        #[arg(long)]
        spec: FreenessSpec,
        #[arg(long)]
        target: FreenessSpec,
        /// Check source words up to this length instead of the computed bound.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// No bounded occurrence of formulas in images of a word family.
    CheckExclusion {
        #[command(flatten)]
        m: MorphismArg,
        #[arg(long = "formula", required = true, value_parser = formula_arg)]
        formulas: Vec<Formula>,
        #[arg(long)]
        bounds: String,
        /// Source alphabet of power-free words.
        #[arg(long, conflicts_with = "source")]
        alphabet: Option<usize>,
        #[arg(long, requires = "alphabet")]
        spec: Option<FreenessSpec>,
        /// Built-in morphism whose fixed point is the source.
        #[arg(long)]
        source: Option<String>,
    },
    /// Longest words avoiding a formula.
    Backtrack {
        #[arg(long, value_parser = formula_arg)]
        formula: Formula,
        #[arg(long)]
        alphabet: usize,
        #[arg(long, default_value_t = 1000)]
        cap: usize,
    },
    /// Long words with no full conjugacy class of length at least --min.
    Explore {
        #[arg(long)]
        alphabet: usize,
        #[arg(long, default_value_t = 2)]
        min: usize,
        #[arg(long)]
        cap: usize,
    },
    /// Every check, aggregated.
    VerifyPaper {
        /// Replace a morphism: `NAME=PATH`.
        #[arg(long = "morphism-file", value_name = "NAME=PATH")]
        replacements: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        backtrack_cap: usize,
    },
}

struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn render(format: Format, text: String, value: serde_json::Value) -> String {
    match format {
        Format::Text => text,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&value).expect("json values serialize");
            s.push('\n');
            s
        }
    }
}

fn report_output(format: Format, report: Report) -> Output {
    let code = report.verdict.exit_code() as u8;
    let text = match format {
        Format::Text => report.render_text(),
        Format::Json => report.to_json(),
    };
    Output { text, code }
}

fn single(format: Format, check: CheckReport) -> Output {
    report_output(format, Report::new(vec![check]))
}

fn lines<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().map(|s| s + "\n").collect()
}

fn fixed_point(name: &str, seed: u8, limits: StabilizationLimits) -> anyhow::Result<FixedPoint> {
    Ok(FixedPoint::new(builtin::morphism(name)?, seed)?.with_limits(limits))
}

fn strip_spec(s: &str) -> &str {
    let s = s.split(',').next().unwrap_or(s).trim();
    s.strip_suffix('+').unwrap_or(s)
}

fn backtrack_output(format: Format, r: BacktrackReport) -> Output {
    let outcome = match r.outcome {
        BacktrackOutcome::Exhausted => "exhausted",
        BacktrackOutcome::ReachedCap => "reached cap",
        BacktrackOutcome::NodeCapExceeded => "node cap exceeded",
    };
    let code = if r.outcome == BacktrackOutcome::NodeCapExceeded {
        Verdict::Inconclusive.exit_code() as u8
    } else {
        0
    };
    let text = format!(
        "{outcome}, longest {}\nword {}\nnodes {}\n",
        r.max_length, r.longest, r.nodes
    );
    Output {
        text: render(format, text, json!(r)),
        code,
    }
}

fn run(cli: &Cli) -> anyhow::Result<Output> {
    let format = cli.format;
    let node_cap = Some(cli.node_cap);
    let limits = StabilizationLimits {
        max_iterations: cli.max_iterations,
        ..StabilizationLimits::default()
    };
    Ok(match &cli.command {
        Command::FixedPoint { m, seed_letter, min } => {
            let w = fixed_point_prefix(&m.load()?, *seed_letter, *min)?;
            Output::ok(render(
                format,
                format!("{w}\n"),
                json!({ "word": w, "length": w.len() }),
            ))
        }
        Command::Apply { m, word } => {
            let m = m.load()?;
            let w = Word::parse_over(word, m.source_size())?;
            let image = m.apply(&w)?;
            Output::ok(render(format, format!("{image}\n"), json!({ "image": image })))
        }
        Command::Factors {
            m,
            length,
            source,
            seed_letter,
        } => {
            let fs = factor_set_for(m, *length, source.as_deref(), *seed_letter, limits)?;
            let factors: Vec<String> = fs.sorted().into_iter().map(avoidance::words::render_digits).collect();
            let text = lines(factors.iter().cloned());
            Output::ok(render(
                format,
                text,
                json!({ "length": length, "count": factors.len(), "factors": factors, "evidence": fs.evidence() }),
            ))
        }
        Command::Classes {
            m,
            length,
            source,
            seed_letter,
        } => {
            let fs = factor_set_for(m, *length, source.as_deref(), *seed_letter, limits)?;
            let classes = contained_conjugacy_classes(&fs)?;
            let reps: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
            let text = if reps.is_empty() {
                "none\n".to_string()
            } else {
                lines(reps.iter().cloned())
            };
            Output::ok(render(format, text, json!({ "length": length, "classes": classes })))
        }
        Command::FreeEnum {
            alphabet,
            spec,
            max_len,
            words,
            no_symmetry,
        } => {
            let mut listed = Vec::new();
            let options = EnumerationOptions {
                symmetry: !no_symmetry && !words,
                node_cap,
            };
            let report = enumerate_free_words(*alphabet, spec, *max_len, options, |w| {
                if *words {
                    listed.push(avoidance::words::render_digits(w));
                }
                ControlFlow::Continue(())
            })?;
            let mut text = lines(report.counts.iter().enumerate().map(|(n, c)| format!("{n} {c}")));
            if *words {
                text.push_str(&lines(listed.iter().cloned()));
            }
            let code = if report.is_complete() {
                0
            } else {
                Verdict::Inconclusive.exit_code() as u8
            };
            Output {
                text: render(
                    format,
                    text,
                    json!({ "spec": spec, "alphabet": alphabet, "report": report, "words": listed }),
                ),
                code,
            }
        }
        Command::FreeCount { alphabet, spec, length } => {
            let n = count_free_words(*alphabet, spec, *length)?;
            Output::ok(render(format, format!("{n}\n"), json!(n)))
        }
        Command::Bound { target, source } => {
            let t: Rational = strip_spec(target).parse()?;
            let s: Rational = strip_spec(source).parse()?;
            let b = lemma_length_bound(&FreenessSpec::above(t)?, s)?;
            Output::ok(render(format, format!("{b}\n"), json!(b)))
        }
        Command::Occurs { formula, word, bounds } => {
            let w = Word::parse(word)?;
            let bounds = match bounds {
                Some(b) => VarBounds::parse(b)?,
                None => VarBounds::unbounded(),
            };
            let found = find_occurrence_in_word(formula, &w, &bounds)?;
            let text = match &found {
                Some(a) => format!("{}\n", a.render_digits()),
                None => "none\n".into(),
            };
            let value = json!({
                "formula": formula,
                "word": w,
                "assignment": found.as_ref().map(|a| a.render_digits()),
                "locations": found.as_ref().map(|a| a.locations().to_vec()),
            });
            Output::ok(render(format, text, value))
        }
        Command::Divides { small, big } => {
            let found = divides(small, big);
            let text = match &found {
                Some(a) => format!("yes: {}\n", a.render_variables()),
                None => "no\n".into(),
            };
            let value = json!({ "small": small, "big": big, "witness": found.as_ref().map(|a| a.render_variables()) });
            Output::ok(render(format, text, value))
        }
        Command::Circular { t } => {
            let f = circular_formula(*t)?;
            Output::ok(render(format, format!("{f}\n"), json!(f)))
        }
        Command::Reverse { formula } => {
            let r = formula.reverse();
            Output::ok(render(format, format!("{r}\n"), json!(r)))
        }
        Command::CheckSync { m, pairs_from } => {
            let morphism = m.load()?;
            let pairs = match pairs_from {
                Some(name) => Some(fixed_point(name, 0, limits)?.factor_set(2)?),
                None => None,
            };
            single(
                format,
                check_synchronization(Named::new(&m.morphism, &morphism), pairs.as_ref())?,
            )
        }
        Command::CheckClasses { m, min, source } => {
            let morphism = m.load()?;
            let src = builtin::morphism(source)?;
            let check = verify_conjugacy_avoidance(
                Named::new(&m.morphism, &morphism),
                Named::new(source, &src),
                *min,
                limits,
            )?;
            single(format, check)
        }
        Command::CheckFreeness {
            m,
            alphabet,
            spec,
            target,
            max_len,
        } => {
            let morphism = m.load()?;
            let check = verify_image_freeness(
                Named::new(&m.morphism, &morphism),
                *alphabet,
                spec,
                target,
                *max_len,
                node_cap,
            )?;
            single(format, check)
        }
        Command::CheckExclusion {
            m,
            formulas,
            bounds,
            alphabet,
            spec,
            source,
        } => {
            let morphism = m.load()?;
            let family = match (alphabet, source) {
                (Some(k), None) => SourceFamily::FreeWords {
                    alphabet: *k,
                    spec: spec.context("--alphabet needs --spec")?,
                },
                (None, Some(name)) => SourceFamily::FixedPoint {
                    name: name.clone(),
                    word: fixed_point(name, 0, limits)?,
                },
                _ => bail!("give either --alphabet with --spec, or --source"),
            };
            let check = verify_formula_exclusion(
                Named::new(&m.morphism, &morphism),
                formulas,
                &VarBounds::parse(bounds)?,
                &family,
                node_cap,
            )?;
            single(format, check)
        }
        Command::Backtrack { formula, alphabet, cap } => {
            backtrack_output(format, verify::backtrack_avoidance(formula, *alphabet, *cap, node_cap)?)
        }
        Command::Explore { alphabet, min, cap } => {
            backtrack_output(format, verify::explore_conjecture(*alphabet, *min, *cap, node_cap)?)
        }
        Command::VerifyPaper {
            replacements,
            backtrack_cap,
        } => {
            let mut config = PaperConfig {
                node_cap,
                backtrack_cap: *backtrack_cap,
                limits,
                ..PaperConfig::default()
            };
            for r in replacements {
                let (name, path) = r.split_once('=').context("expected NAME=PATH")?;
                let m = load_morphism(name, Some(&PathBuf::from(path)))?;
                *config
                    .morphism_mut(name)
                    .with_context(|| format!("unknown morphism {name:?}"))? = m;
            }
            report_output(format, verify::verify_paper(&config)?)
        }
    })
}

fn factor_set_for(
    m: &MorphismArg,
    length: usize,
    source: Option<&str>,
    seed: u8,
    limits: StabilizationLimits,
) -> anyhow::Result<avoidance::FactorSet> {
    let morphism = m.load()?;
    Ok(match source {
        Some(name) => image_factor_set(&morphism, &fixed_point(name, seed, limits)?, length)?,
        None => morphic_factor_set(&morphism, seed, length, limits)?,
    })
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotStabilized { .. } | Error::IncompleteFactorSet(_)) => Verdict::Inconclusive.exit_code() as u8,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &out.text).with_context(|| format!("writing {}", path.display())),
                None => std::io::stdout()
                    .write_all(out.text.as_bytes())
                    .context("writing output"),
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_USAGE);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
