//! Pipeline driver: ingest -> rank -> evaluate -> search -> fit-prob ->
//! auroc -> report, configured by a TOML file with one-to-one flag
//! overrides. Every command is deterministic given the same config and
//! store; all randomness flows from the single config seed.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use courtrank::dataset::{build_store, load_store, parse_raw_files, MatchStore};
use courtrank::eval::{
    evaluate_years, write_report_json, write_report_tsv, EvalReport, Predictor, SliceSet,
};
use courtrank::plot::{Chart, Series};
use courtrank::prob::{
    bin_hit_rates, build_tree, fit_logistic, mirror_scored, p_victory, ranked_outcomes, roc_curve,
    scored_sample, write_model_report, ScoreModel,
};
use courtrank::ranking::WeightParams;
use courtrank::search::{coordinate_search, ParamEvaluator, TestSet, TestSetEvaluator};
use courtrank::{Error, Result};

use config::{apply_params_overrides, parse_year_span, PredictorChoice, RunConfig};

#[derive(Parser)]
#[command(
    name = "courtrank",
    version,
    about = "Match-graph player ratings and backtests"
)]
struct Cli {
    /// TOML run configuration; flags override it one-to-one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,

    /// Seed for all sampled randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Weight parameter overrides: age=4,decay=5,surface=0.3,round=1.7
    #[arg(long, global = true)]
    params: Option<String>,

    /// Evaluation years, e.g. 2005-2013.
    #[arg(long, global = true)]
    years: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse season files and write the three-table store.
    Ingest {
        /// Directory of per-season delimited files.
        #[arg(long)]
        raw_dir: Option<PathBuf>,
    },
    /// Write the rating table for one target tournament.
    Rank {
        /// Tournament id in the store.
        #[arg(long, conflicts_with = "tournament_name")]
        tournament: Option<u32>,
        /// Tournament name (requires --year).
        #[arg(long, requires = "year")]
        tournament_name: Option<String>,
        #[arg(long)]
        year: Option<i32>,
        /// Predictor kind to rank with (defaults to the config's).
        #[arg(long)]
        predictor: Option<String>,
    },
    /// Backtest one predictor over the evaluation years.
    Evaluate {
        #[arg(long)]
        predictor: Option<String>,
    },
    /// Coordinate-ascent search for the best weight parameters.
    Search {
        /// Replace the backtest evaluator with a built-in synthetic
        /// objective whose optimum is age=4 decay=5 surface=0.3
        /// round=1.7 (test hook; needs no store).
        #[arg(long)]
        synthetic: bool,
    },
    /// Fit the victory-probability model (global and per-leaf scales).
    FitProb {
        #[arg(long)]
        predictor: Option<String>,
    },
    /// Score a predictor's victory probabilities with ROC/AUC.
    Auroc {
        #[arg(long)]
        predictor: Option<String>,
        /// Route each match through its (surface, category) leaf.
        #[arg(long)]
        tree: bool,
        /// Also score the mirrored sample (each tuple duplicated with
        /// the opposite label and complementary score).
        #[arg(long)]
        mirror: bool,
    },
    /// Collate the three-predictor comparison tables.
    Report,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter { .. } => 2,
        Error::Io { .. } => 3,
        Error::UnmappedLayout { .. } | Error::MalformedRow { .. } => 4,
        Error::AmbiguousPlayer { .. }
        | Error::UnknownSeries { .. }
        | Error::UnknownRound { .. }
        | Error::UnknownSurface { .. }
        | Error::Integrity { .. }
        | Error::UnknownTournament { .. } => 5,
        Error::NoConvergence { .. } => 6,
        Error::Evaluator { .. } => 7,
        Error::InsufficientBins { .. } | Error::SingleClassRoc | Error::AurocMismatch { .. } => 8,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

struct Ctx {
    config: RunConfig,
    out_dir: PathBuf,
    store_dir: PathBuf,
    seed: u64,
    params: WeightParams,
    years: Option<Vec<i32>>,
}

fn build_ctx(cli: &Cli) -> Result<Ctx> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(years) = &cli.years {
        let (a, b) = parse_year_span(years)?;
        config.year_start = Some(a);
        config.year_end = Some(b);
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir());
    let store_dir = cli.store.clone().unwrap_or_else(|| config.store_dir());
    let seed = cli.seed.unwrap_or_else(|| config.seed_value());
    let mut params = config.predictor_section().params;
    if let Some(raw) = &cli.params {
        params = apply_params_overrides(params, raw)?;
    }
    params.validate()?;
    let years = config.years().ok();
    Ok(Ctx {
        config,
        out_dir,
        store_dir,
        seed,
        params,
        years,
    })
}

impl Ctx {
    fn years(&self) -> Result<&[i32]> {
        self.years
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter {
                message: "evaluation years not set (year_start/year_end in config, or --years A-B)"
                    .to_string(),
            })
    }

    fn load_store(&self) -> Result<MatchStore> {
        if !self.store_dir.is_dir() {
            return Err(Error::InvalidParameter {
                message: format!(
                    "store directory {} does not exist",
                    self.store_dir.display()
                ),
            });
        }
        load_store(&self.store_dir)
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::Io {
            path: self.out_dir.clone(),
            source: e,
        })
    }

    fn predictor_choice(&self, flag: Option<&str>) -> Result<PredictorChoice> {
        match flag {
            Some(raw) => raw.parse(),
            None => Ok(self.config.predictor_section().kind),
        }
    }

    fn predictor(&self, kind: PredictorChoice) -> Predictor {
        let section = self.config.predictor_section();
        let base = match kind {
            PredictorChoice::Official => Predictor::official(),
            PredictorChoice::Uniform => Predictor::uniform(section.uniform_age_years),
            PredictorChoice::Parametric => Predictor::parametric(self.params),
        };
        base.with_config(self.config.pagerank_config())
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = build_ctx(&cli)?;
    match &cli.command {
        Command::Ingest { raw_dir } => cmd_ingest(&ctx, raw_dir.as_deref()),
        Command::Rank {
            tournament,
            tournament_name,
            year,
            predictor,
        } => cmd_rank(
            &ctx,
            *tournament,
            tournament_name.as_deref(),
            *year,
            predictor.as_deref(),
        ),
        Command::Evaluate { predictor } => cmd_evaluate(&ctx, predictor.as_deref()),
        Command::Search { synthetic } => cmd_search(&ctx, *synthetic),
        Command::FitProb { predictor } => cmd_fit_prob(&ctx, predictor.as_deref()),
        Command::Auroc {
            predictor,
            tree,
            mirror,
        } => cmd_auroc(&ctx, predictor.as_deref(), *tree, *mirror),
        Command::Report => cmd_report(&ctx),
    }
}

fn cmd_ingest(ctx: &Ctx, raw_dir: Option<&Path>) -> Result<()> {
    let raw_dir = raw_dir
        .map(Path::to_path_buf)
        .or_else(|| ctx.config.raw_dir.clone())
        .ok_or_else(|| Error::InvalidParameter {
            message: "ingest needs --raw-dir (or raw_dir in config)".to_string(),
        })?;
    if !raw_dir.is_dir() {
        return Err(Error::InvalidParameter {
            message: format!("raw directory {} does not exist", raw_dir.display()),
        });
    }
    let ingest_config = ctx.config.ingest_config();
    let rows = parse_raw_files(&raw_dir, &ingest_config)?;
    let store = build_store(&rows, &ingest_config)?;
    store.write(&ctx.store_dir)?;
    println!(
        "ingested {} rows -> {} players, {} tournaments, {} matches ({} completed)",
        rows.len(),
        store.players().len(),
        store.tournaments().len(),
        store.matches().len(),
        store.matches().iter().filter(|m| m.completed).count()
    );
    println!("store written to {}", ctx.store_dir.display());
    Ok(())
}

fn cmd_rank(
    ctx: &Ctx,
    tournament: Option<u32>,
    tournament_name: Option<&str>,
    year: Option<i32>,
    predictor: Option<&str>,
) -> Result<()> {
    let kind = ctx.predictor_choice(predictor)?;
    if kind == PredictorChoice::Official {
        return Err(Error::InvalidParameter {
            message: "rank needs a pagerank predictor (uniform or parametric)".to_string(),
        });
    }
    let store = ctx.load_store()?;
    let id = match (tournament, tournament_name) {
        (Some(id), _) => {
            store
                .tournament(id)
                .ok_or_else(|| Error::UnknownTournament {
                    name: format!("id {id}"),
                })?;
            id
        }
        (None, Some(name)) => {
            let year = year.expect("clap enforces --year with --tournament-name");
            store
                .find_tournament(name, year)
                .ok_or_else(|| Error::UnknownTournament {
                    name: format!("{name} ({year})"),
                })?
                .tournament_id
        }
        (None, None) => {
            return Err(Error::InvalidParameter {
                message: "rank needs --tournament <id> or --tournament-name <name> --year <y>"
                    .to_string(),
            })
        }
    };
    ctx.ensure_out()?;
    let table = courtrank::eval::rank_tournament(&store, id, &ctx.predictor(kind))?;
    let path = ctx.out_dir.join(format!("rating_{id}.tsv"));
    table.write_tsv(&store, &path)?;
    let tournament = store.tournament(id).expect("checked above");
    println!(
        "ranked {} players for {} ({}): {}",
        table.entries.len(),
        tournament.name,
        tournament.year,
        path.display()
    );
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, predictor: Option<&str>) -> Result<()> {
    let kind = ctx.predictor_choice(predictor)?;
    let store = ctx.load_store()?;
    let years = ctx.years()?;
    ctx.ensure_out()?;
    let predictor = ctx.predictor(kind);
    let report = evaluate_years(&store, years, &predictor, &SliceSet::default())?;
    let tsv = ctx.out_dir.join(format!("eval_{}.tsv", report.predictor));
    let json = ctx.out_dir.join(format!("eval_{}.json", report.predictor));
    write_report_tsv(&report, &tsv)?;
    write_report_json(&report, &json)?;
    print_report_summary(&report);
    println!("written: {} and {}", tsv.display(), json.display());
    Ok(())
}

fn print_report_summary(report: &EvalReport) {
    println!(
        "{}: {} matches, pooled hit rate {}, mean of years {}",
        report.predictor,
        report.evaluated_matches,
        format_rate(report.overall_pooled),
        format_rate(report.overall_mean_of_years),
    );
    if report.skipped_no_rank > 0 {
        println!(
            "  skipped (no rank on either side): {}",
            report.skipped_no_rank
        );
    }
    for (year, cell) in &report.per_year {
        println!("  {year}: {}", format_rate(cell.rate()));
    }
}

fn format_rate(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.3}%", r * 100.0),
        None => "-".to_string(),
    }
}

/// Synthetic separable objective used by the search test hook.
fn synthetic_objective(params: &WeightParams) -> Result<f64> {
    let err = (params.age_years as f64 - 4.0).powi(2)
        + (params.decay_lambda - 5.0).powi(2)
        + (params.surface_factor - 0.3).powi(2)
        + (params.round_base - 1.7).powi(2);
    Ok(1.0 / (1.0 + err))
}

fn cmd_search(ctx: &Ctx, synthetic: bool) -> Result<()> {
    ctx.ensure_out()?;
    let section = ctx.config.search_section();
    let state = if synthetic {
        let mut evaluator = synthetic_objective;
        coordinate_search(&section.grid, &mut evaluator, section.init)?
    } else {
        let store = ctx.load_store()?;
        let years = ctx.years()?;
        let test_set = TestSet::sample(&store, years, section.per_year, ctx.seed);
        if test_set.tournaments.is_empty() {
            return Err(Error::InvalidParameter {
                message: "test set is empty for the configured years".to_string(),
            });
        }
        println!(
            "test set: {} tournaments over {} years (seed {})",
            test_set.tournaments.len(),
            years.len(),
            ctx.seed
        );
        let mut evaluator = TestSetEvaluator::new(&store, &test_set, ctx.config.pagerank_config());
        // Warm the cache with the init vector so the trace starts from
        // a scored incumbent.
        evaluator.evaluate(&section.init)?;
        coordinate_search(&section.grid, &mut evaluator, section.init)?
    };
    let trace_path = ctx.out_dir.join("search_trace.tsv");
    state.write_trace_tsv(&trace_path)?;
    println!(
        "best: {} (score {:.6}) after {} rounds, converged: {}",
        state.best, state.best_score, state.rounds, state.converged
    );
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn cmd_fit_prob(ctx: &Ctx, predictor: Option<&str>) -> Result<()> {
    let kind = ctx.predictor_choice(predictor)?;
    let store = ctx.load_store()?;
    let years = ctx.years()?;
    ctx.ensure_out()?;
    let section = ctx.config.prob_section();
    let predictor = ctx.predictor(kind);
    let label = predictor.kind.to_string();

    let outcomes = ranked_outcomes(&store, years, &predictor)?;
    let bins = bin_hit_rates(&outcomes);
    let global = fit_logistic(&bins, &section.fit)?;
    let tree = build_tree(&outcomes, section.leaf_threshold, &section.fit)?;

    let model_path = ctx.out_dir.join(format!("prob_model_{label}.txt"));
    write_model_report(&global, Some(&tree), &bins, &model_path)?;

    // Empirical bins plus the fitted curve.
    let max_diff = bins.last().map(|b| b.diff).unwrap_or(1);
    let curve: Vec<(f64, f64)> = (0..=max_diff)
        .map(|d| (d as f64, p_victory(Some(1), Some(1 + d), &global)))
        .collect();
    let chart = Chart {
        title: format!("hit rate by rank gap ({label})"),
        x_label: "rank difference".to_string(),
        y_label: "P(better-ranked wins)".to_string(),
        series: vec![
            Series {
                label: "empirical bins".to_string(),
                points: bins.iter().map(|b| (b.diff as f64, b.rate())).collect(),
                line: false,
            },
            Series {
                label: format!("fitted a = {:.3}", global.a),
                points: curve,
                line: true,
            },
        ],
    };
    let plot_path = ctx.out_dir.join(format!("prob_fit_{label}.svg"));
    chart.write(&plot_path)?;

    println!(
        "fitted a = {:.3} over {} bins (residual {:.6}{})",
        global.a,
        global.n_points,
        global.fit_residual,
        if global.degenerate {
            ", degenerate"
        } else {
            ""
        }
    );
    println!("model: {}", model_path.display());
    println!("plot: {}", plot_path.display());
    Ok(())
}

fn cmd_auroc(ctx: &Ctx, predictor: Option<&str>, tree: bool, mirror: bool) -> Result<()> {
    let kind = ctx.predictor_choice(predictor)?;
    let store = ctx.load_store()?;
    let years = ctx.years()?;
    ctx.ensure_out()?;
    let section = ctx.config.prob_section();
    let predictor = ctx.predictor(kind);
    let label = predictor.kind.to_string();

    let outcomes = ranked_outcomes(&store, years, &predictor)?;
    let bins = bin_hit_rates(&outcomes);
    let global = fit_logistic(&bins, &section.fit)?;
    let tree_model;
    let model = if tree {
        tree_model = build_tree(&outcomes, section.leaf_threshold, &section.fit)?;
        ScoreModel::Tree(&tree_model)
    } else {
        ScoreModel::Global(&global)
    };

    let scored = scored_sample(&outcomes, &model);
    let roc = roc_curve(&scored)?;
    let suffix = if tree { "_tree" } else { "" };
    let roc_path = ctx.out_dir.join(format!("roc_{label}{suffix}.tsv"));
    roc.write_tsv(&roc_path)?;

    let mut series = vec![
        Series {
            label: format!("{label}{suffix} auroc = {:.4}", roc.auroc),
            points: roc.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
            line: true,
        },
        Series {
            label: "chance".to_string(),
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            line: true,
        },
    ];
    println!("auroc ({label}{suffix}): {:.4}", roc.auroc);

    if mirror {
        let mirrored = roc_curve(&mirror_scored(&scored))?;
        let mirrored_path = ctx
            .out_dir
            .join(format!("roc_{label}{suffix}_mirrored.tsv"));
        mirrored.write_tsv(&mirrored_path)?;
        println!("auroc ({label}{suffix}, mirrored): {:.4}", mirrored.auroc);
        series.push(Series {
            label: format!("mirrored auroc = {:.4}", mirrored.auroc),
            points: mirrored.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
            line: true,
        });
    }

    let chart = Chart {
        title: format!("ROC ({label}{suffix})"),
        x_label: "false positive rate".to_string(),
        y_label: "true positive rate".to_string(),
        series,
    };
    let plot_path = ctx.out_dir.join(format!("roc_{label}{suffix}.svg"));
    chart.write(&plot_path)?;
    println!("roc: {} and {}", roc_path.display(), plot_path.display());
    Ok(())
}

fn cmd_report(ctx: &Ctx) -> Result<()> {
    let store = ctx.load_store()?;
    let years = ctx.years()?;
    ctx.ensure_out()?;

    let predictors = [
        PredictorChoice::Official,
        PredictorChoice::Uniform,
        PredictorChoice::Parametric,
    ];
    let mut reports = Vec::new();
    for kind in predictors {
        let predictor = ctx.predictor(kind);
        reports.push(evaluate_years(
            &store,
            years,
            &predictor,
            &SliceSet::default(),
        )?);
    }

    let mut out = String::new();
    out.push_str("# section: year\nyear\tofficial\tuniform\tparametric\n");
    for year in years {
        out.push_str(&format!("{year}"));
        for report in &reports {
            let rate = report.per_year.get(year).and_then(|c| c.rate());
            out.push_str(&format!("\t{}", format_rate(rate)));
        }
        out.push('\n');
    }
    out.push_str("TOTAL_POOLED");
    for report in &reports {
        out.push_str(&format!("\t{}", format_rate(report.overall_pooled)));
    }
    out.push_str("\nTOTAL_MEAN_YEARS");
    for report in &reports {
        out.push_str(&format!("\t{}", format_rate(report.overall_mean_of_years)));
    }
    out.push('\n');

    let surface_keys: Vec<String> = collect_keys(&reports, |r| {
        r.by_surface.keys().map(|k| k.to_string()).collect()
    });
    push_slice_section(&mut out, "surface", &surface_keys, &reports, |r, key| {
        r.by_surface
            .iter()
            .find(|(k, _)| k.to_string() == *key)
            .and_then(|(_, c)| c.rate())
    });
    let category_keys: Vec<String> = collect_keys(&reports, |r| {
        r.by_category.keys().map(|k| k.to_string()).collect()
    });
    push_slice_section(&mut out, "category", &category_keys, &reports, |r, key| {
        r.by_category
            .iter()
            .find(|(k, _)| k.to_string() == *key)
            .and_then(|(_, c)| c.rate())
    });
    let band_keys: Vec<String> = collect_keys(&reports, |r| {
        r.by_rank_band.keys().map(|k| k.to_string()).collect()
    });
    push_slice_section(&mut out, "rank_band", &band_keys, &reports, |r, key| {
        r.by_rank_band
            .iter()
            .find(|(k, _)| k.to_string() == *key)
            .and_then(|(_, c)| c.rate())
    });

    let comparison_path = ctx.out_dir.join("comparison.tsv");
    fs::write(&comparison_path, &out).map_err(|e| Error::Io {
        path: comparison_path.clone(),
        source: e,
    })?;

    let mut by_name = BTreeMap::new();
    for report in &reports {
        by_name.insert(report.predictor.clone(), report);
    }
    let json_path = ctx.out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&by_name).map_err(|e| Error::Integrity {
        message: format!("report serialization failed: {e}"),
    })?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::Io {
        path: json_path.clone(),
        source: e,
    })?;

    for report in &reports {
        print_report_summary(report);
    }
    println!(
        "written: {} and {}",
        comparison_path.display(),
        json_path.display()
    );
    Ok(())
}

fn collect_keys(reports: &[EvalReport], f: impl Fn(&EvalReport) -> Vec<String>) -> Vec<String> {
    let mut keys: Vec<String> = reports.iter().flat_map(&f).collect();
    keys.sort();
    keys.dedup();
    keys
}

fn push_slice_section(
    out: &mut String,
    name: &str,
    keys: &[String],
    reports: &[EvalReport],
    rate_of: impl Fn(&EvalReport, &String) -> Option<f64>,
) {
    if keys.is_empty() {
        return;
    }
    out.push_str(&format!(
        "# section: {name}\n{name}\tofficial\tuniform\tparametric\n"
    ));
    for key in keys {
        out.push_str(key);
        for report in reports {
            out.push_str(&format!("\t{}", format_rate(rate_of(report, key))));
        }
        out.push('\n');
    }
}
