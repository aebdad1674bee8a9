//! End-to-end runs of the binary against a small season fixture:
//! ingest, rank, evaluate, search, fit-prob, auroc, report, plus the
//! error exits.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_courtrank"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Three seasons, four events each, outcomes mostly by strength with a
/// deterministic sprinkling of upsets.
fn write_fixture(raw: &Path) {
    fs::create_dir_all(raw).unwrap();
    let players = [
        "Alpha A.",
        "Bravo B.",
        "Charlie C.",
        "Delta D.",
        "Echo E.",
        "Foxtrot F.",
        "Golf G.",
        "Hotel H.",
        "India I.",
        "Juliet J.",
        "Kilo K.",
        "Lima L.",
    ];
    let series = [
        "Grand Slam",
        "Masters",
        "International Gold",
        "International",
    ];
    let surfaces = ["Hard", "Clay", "Grass", "Hard"];
    let rounds = [
        "1st Round",
        "2nd Round",
        "Quarterfinals",
        "Semifinals",
        "The Final",
    ];
    for year in 2004..=2006 {
        let mut content = String::from(
            "Tournament,Series,Date,Surface,Round,Best of,Winner,Loser,WRank,LRank,W1,L1,W2,L2,Comment\n",
        );
        for event in 0..4usize {
            let month = 2 * event + 2;
            let mut m = 0usize;
            for i in 0..players.len() {
                for j in (i + 1)..players.len().min(i + 4) {
                    let upset = (i + j + event + year as usize).is_multiple_of(5);
                    let (w, l) = if upset { (j, i) } else { (i, j) };
                    let day = 1 + m % 12;
                    content.push_str(&format!(
                        "Event {event},{},{year}-{month:02}-{day:02},{},{},3,{},{},{},{},6,3,6,2,Completed\n",
                        series[event],
                        surfaces[event],
                        rounds[m % rounds.len()],
                        players[w],
                        players[l],
                        w + 1,
                        l + 1,
                    ));
                    m += 1;
                }
            }
        }
        fs::write(raw.join(format!("{year}.csv")), content).unwrap();
    }
}

#[test]
fn full_pipeline_runs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    write_fixture(&cwd.join("raw"));

    // Ingest twice: identical store bytes.
    let out = run(&["ingest", "--raw-dir", "raw", "--store", "store"], cwd);
    assert_ok(&out);
    assert!(stdout_of(&out).contains("players"));
    let first: Vec<u8> = ["players.tsv", "tournaments.tsv", "matches.tsv"]
        .iter()
        .flat_map(|f| fs::read(cwd.join("store").join(f)).unwrap())
        .collect();
    assert_ok(&run(
        &["ingest", "--raw-dir", "raw", "--store", "store"],
        cwd,
    ));
    let second: Vec<u8> = ["players.tsv", "tournaments.tsv", "matches.tsv"]
        .iter()
        .flat_map(|f| fs::read(cwd.join("store").join(f)).unwrap())
        .collect();
    assert_eq!(first, second);

    // Rank a late tournament by name; the table exports rank, player,
    // score.
    let out = run(
        &[
            "rank",
            "--store",
            "store",
            "--out",
            "out",
            "--tournament-name",
            "Event 2",
            "--year",
            "2006",
            "--predictor",
            "parametric",
            "--params",
            "age=2,decay=5,surface=0.3,round=1.7",
        ],
        cwd,
    );
    assert_ok(&out);
    let rating = fs::read_dir(cwd.join("out"))
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().starts_with("rating_"))
        .expect("rating table written");
    let table = fs::read_to_string(rating.path()).unwrap();
    assert!(table.starts_with("rank\tplayer\tscore\n"));
    assert!(table.lines().count() > 5);

    // Identity parameters reproduce the uniform predictor's table.
    let out = run(
        &[
            "rank",
            "--store",
            "store",
            "--out",
            "ident",
            "--tournament-name",
            "Event 2",
            "--year",
            "2006",
            "--predictor",
            "parametric",
            "--params",
            "age=1,decay=1e-300,surface=1,round=1",
        ],
        cwd,
    );
    assert_ok(&out);
    let out = run(
        &[
            "rank",
            "--store",
            "store",
            "--out",
            "unif",
            "--tournament-name",
            "Event 2",
            "--year",
            "2006",
            "--predictor",
            "uniform",
        ],
        cwd,
    );
    assert_ok(&out);
    let read_single = |d: &str| {
        let dir = cwd.join(d);
        let entry = fs::read_dir(&dir).unwrap().next().unwrap().unwrap();
        fs::read(entry.path()).unwrap()
    };
    assert_eq!(read_single("ident"), read_single("unif"));

    // Evaluate all three predictors.
    for predictor in ["official", "uniform", "parametric"] {
        let out = run(
            &[
                "evaluate",
                "--store",
                "store",
                "--out",
                "out",
                "--years",
                "2005-2006",
                "--predictor",
                predictor,
                "--params",
                "age=2,decay=5,surface=0.3,round=1.7",
            ],
            cwd,
        );
        assert_ok(&out);
        assert!(stdout_of(&out).contains("pooled hit rate"));
        assert!(cwd
            .join("out")
            .join(format!("eval_{predictor}.tsv"))
            .is_file());
        assert!(cwd
            .join("out")
            .join(format!("eval_{predictor}.json"))
            .is_file());
    }

    // Probability fit and AUROC (tree-routed and mirrored variants).
    let out = run(
        &[
            "fit-prob",
            "--store",
            "store",
            "--out",
            "out",
            "--years",
            "2005-2006",
            "--predictor",
            "parametric",
            "--params",
            "age=2,decay=5,surface=0.3,round=1.7",
        ],
        cwd,
    );
    assert_ok(&out);
    assert!(stdout_of(&out).contains("fitted a ="));
    assert!(cwd.join("out/prob_model_parametric.txt").is_file());
    assert!(cwd.join("out/prob_fit_parametric.svg").is_file());

    let out = run(
        &[
            "auroc",
            "--store",
            "store",
            "--out",
            "out",
            "--years",
            "2005-2006",
            "--predictor",
            "parametric",
            "--params",
            "age=2,decay=5,surface=0.3,round=1.7",
            "--tree",
            "--mirror",
        ],
        cwd,
    );
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("auroc (parametric_tree):"));
    assert!(text.contains("mirrored"));
    assert!(cwd.join("out/roc_parametric_tree.tsv").is_file());
    assert!(cwd.join("out/roc_parametric_tree_mirrored.tsv").is_file());
    let roc = fs::read_to_string(cwd.join("out/roc_parametric_tree.tsv")).unwrap();
    assert!(roc.starts_with("threshold\tfpr\ttpr\n"));
    assert!(roc.lines().last().unwrap().starts_with("auroc\t"));

    // The comparison report.
    let out = run(
        &[
            "report",
            "--store",
            "store",
            "--out",
            "out",
            "--years",
            "2005-2006",
            "--params",
            "age=2,decay=5,surface=0.3,round=1.7",
        ],
        cwd,
    );
    assert_ok(&out);
    let comparison = fs::read_to_string(cwd.join("out/comparison.tsv")).unwrap();
    assert!(comparison.contains("year\tofficial\tuniform\tparametric"));
    assert!(comparison.contains("TOTAL_POOLED"));
    assert!(cwd.join("out/report.json").is_file());
}

#[test]
fn synthetic_search_prints_the_known_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["search", "--synthetic", "--out", "out"], dir.path());
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(
        text.contains("age=4 decay=5 surface=0.3 round=1.7"),
        "stdout: {text}"
    );
    let trace = fs::read_to_string(dir.path().join("out/search_trace.tsv")).unwrap();
    assert!(trace.starts_with("round\tcoordinate\tvalue\tscore"));
}

#[test]
fn search_over_a_store_is_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    write_fixture(&cwd.join("raw"));
    assert_ok(&run(
        &["ingest", "--raw-dir", "raw", "--store", "store"],
        cwd,
    ));
    let config = "\
store = \"store\"\n\
year_start = 2005\n\
year_end = 2006\n\
seed = 9\n\
[search]\n\
per_year = 2\n\
[search.grid]\n\
years = [1, 2]\n\
decay = [0.2, 5.0]\n\
surface = [0.3, 1.0]\n\
round_base = [1.0, 1.7]\n\
[search.init]\n\
age_years = 1\n\
decay_lambda = 0.2\n\
surface_factor = 1.0\n\
round_base = 1.0\n";
    fs::write(cwd.join("run.toml"), config).unwrap();
    let first = run(&["search", "--config", "run.toml", "--out", "a"], cwd);
    assert_ok(&first);
    let second = run(&["search", "--config", "run.toml", "--out", "b"], cwd);
    assert_ok(&second);
    let result_lines = |out: &Output| -> Vec<String> {
        stdout_of(out)
            .lines()
            .filter(|l| !l.starts_with("trace:"))
            .map(|l| l.to_string())
            .collect()
    };
    assert_eq!(result_lines(&first), result_lines(&second));
    assert_eq!(
        fs::read(cwd.join("a/search_trace.tsv")).unwrap(),
        fs::read(cwd.join("b/search_trace.tsv")).unwrap()
    );
}

#[test]
fn error_paths_use_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();

    // Usage error: ingest without a raw directory.
    let out = run(&["ingest"], cwd);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flag is a clap usage error.
    let out = run(&["evaluate", "--bogus"], cwd);
    assert_eq!(out.status.code(), Some(2));

    write_fixture(&cwd.join("raw"));
    assert_ok(&run(
        &["ingest", "--raw-dir", "raw", "--store", "store"],
        cwd,
    ));

    // Unknown tournament names the id.
    let out = run(
        &[
            "rank",
            "--store",
            "store",
            "--out",
            "out",
            "--tournament",
            "9999",
        ],
        cwd,
    );
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9999"));

    // Unmapped layout reports the file.
    fs::create_dir_all(cwd.join("weird")).unwrap();
    fs::write(cwd.join("weird/2001.csv"), "Alpha,Beta\n1,2\n").unwrap();
    let out = run(&["ingest", "--raw-dir", "weird", "--store", "s2"], cwd);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2001.csv"));

    // Config rejects unknown keys.
    fs::write(cwd.join("bad.toml"), "bogus_key = true\n").unwrap();
    let out = run(&["report", "--config", "bad.toml"], cwd);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}
