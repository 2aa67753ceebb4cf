//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints one PASS or FAIL line; exits non-zero if any fails.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sod_core::dataset::load_corpus;
use sod_core::harness::{evaluate, sweep, sweep_to_csv, write_evaluation, RunConfig};
use sod_core::metrics::{bleu, gleu, meteor, rates, rouge_l, tokenize, MetricScore, RateScore, TokenSeq};
use sod_core::retrieval::{chunk_documents, ChunkIndex, DocChunk, DEFAULT_TOP_K};
use sod_core::stats::{build_report, margin_of_error, p_value, t_statistic, ModelSamples, Sample};
use sod_core::transpile::{transpile, SourceDialect};
use sod_core::workbook::{compare, execute, CellValue, ChartMeta, Sheet, Workbook};
use sod_core::xwapi::{parse_script, serialize_script, validate_script, ActionCatalog, Coord, RangeRef};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_path() -> PathBuf {
    root().join("data/sodbench.jsonl")
}

fn p_value_fidelity() -> Check {
    let start = Instant::now();
    let a = p_value(0.122);
    let b = p_value(-1.205);
    let took = start.elapsed();
    ensure!((0.902..=0.904).contains(&a), "p_value(0.122) = {a}");
    ensure!((0.227..=0.229).contains(&b), "p_value(-1.205) = {b}");
    ensure!(took < Duration::from_millis(1), "took {took:?}");
    Ok(())
}

fn three_models() -> Vec<ModelSamples> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..3)
        .map(|m| ModelSamples {
            model: format!("model-{m}"),
            metrics: MetricScore::NAMES
                .iter()
                .map(|k| {
                    let v = (0..40).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0) * (1.0 + m as f64) / 3.0).collect();
                    (k.to_string(), v)
                })
                .collect(),
        })
        .collect()
}

fn pairwise_shape() -> Check {
    let models = three_models();
    let report = build_report(&models, Vec::new()).map_err(|e| e.to_string())?;
    ensure!(report.models.len() == 3, "{} model rows", report.models.len());
    ensure!(report.pairs.len() == 12, "{} pair rows", report.pairs.len());
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for k in MetricScore::NAMES {
            let sample = |m: &ModelSamples| {
                let v = &m.metrics.iter().find(|(n, _)| n == k).unwrap().1;
                Sample::new(&m.model, v.clone())
            };
            let (a, b) = (sample(&models[i]), sample(&models[j]));
            let ab = t_statistic(&a, &b).map_err(|e| e.to_string())?;
            let ba = t_statistic(&b, &a).map_err(|e| e.to_string())?;
            ensure!((ab + ba).abs() <= 1e-12, "t({i},{j}) = {ab}, t({j},{i}) = {ba}");
            let row = report
                .pairs
                .iter()
                .find(|p| p.a == models[i].model && p.b == models[j].model && p.metric == k)
                .ok_or(format!("no row for {i},{j},{k}"))?;
            ensure!(row.t.is_some_and(|t| (t - ab).abs() <= 1e-12), "report t {:?} vs {ab}", row.t);
        }
    }
    Ok(())
}

/// `n` values with sample standard deviation exactly 1 (n even).
fn unit_sd(n: usize) -> Sample {
    let a = ((n as f64 - 1.0) / n as f64).sqrt();
    Sample::new("u", (0..n).map(|i| if i % 2 == 0 { a } else { -a }).collect())
}

fn moe_properties() -> Check {
    let start = Instant::now();
    let flat = margin_of_error(&Sample::new("c", vec![0.42; 30]), 1.96).map_err(|e| e.to_string())?;
    ensure!(flat == 0.0, "MOE of constant sample = {flat}");
    let m100 = margin_of_error(&unit_sd(100), 1.96).map_err(|e| e.to_string())?;
    ensure!((m100 - 0.196).abs() <= 1e-9, "MOE(1, 100) = {m100}");
    let m400 = margin_of_error(&unit_sd(400), 1.96).map_err(|e| e.to_string())?;
    ensure!((m400 - m100 / 2.0).abs() <= 1e-9, "MOE(1, 400) = {m400}");
    ensure!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
    Ok(())
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let check = |c: &TokenSeq, r: &TokenSeq| -> Check {
        let cases = [
            ("bleu", bleu(c, &[r.clone()], 4), common::oracle_bleu(c, r)),
            ("gleu", gleu(c, &[r.clone()], 4), common::oracle_gleu(c, r)),
            ("rouge_l", rouge_l(c, r), common::oracle_rouge_l(c, r)),
            ("meteor", meteor(c, r), common::oracle_meteor(c, r)),
        ];
        for (name, got, want) in cases {
            let got = got.map_err(|e| e.to_string())?;
            ensure!((got - want).abs() <= 1e-9, "{name}({:?}, {:?}) = {got}, oracle {want}", c.tokens(), r.tokens());
        }
        Ok(())
    };
    for _ in 0..50 {
        let c = common::random_tokens(&mut rng, 12);
        let r = common::random_tokens(&mut rng, 12);
        check(&c, &r)?;
    }
    let rl = rouge_l(&tokenize("a b c d"), &tokenize("a c b d")).map_err(|e| e.to_string())?;
    ensure!(rl == 0.75, "rouge_l fixed case = {rl}");

    let same = tokenize("copy the range to column b");
    let other = tokenize("freeze panes above row two");
    ensure!(bleu(&same, &[same.clone()], 4) == Ok(1.0), "bleu identity");
    ensure!(gleu(&same, &[same.clone()], 4) == Ok(1.0), "gleu identity");
    ensure!(rouge_l(&same, &same) == Ok(1.0), "rouge identity");
    let m = meteor(&same, &same).map_err(|e| e.to_string())?;
    ensure!((m - (1.0 - 0.5 * (1.0f64 / same.len() as f64).powi(3))).abs() <= 1e-12, "meteor identity {m}");
    ensure!(gleu(&same, &[other.clone()], 4) == Ok(0.0), "gleu disjoint");
    ensure!(rouge_l(&same, &other) == Ok(0.0), "rouge disjoint");
    ensure!(meteor(&same, &other) == Ok(0.0), "meteor disjoint");
    let b = bleu(&same, &[other.clone()], 4).map_err(|e| e.to_string())?;
    ensure!((b - common::oracle_bleu(&same, &other)).abs() <= 1e-12, "bleu disjoint {b}");
    check(&same, &other)?;
    ensure!(start.elapsed() < Duration::from_secs(5), "took {:?}", start.elapsed());
    Ok(())
}

fn rates_fidelity() -> Check {
    let score = RateScore::new(20, 12, 4).map_err(|e| e.to_string())?;
    let got = rates(&score).map_err(|e| e.to_string())?;
    ensure!(got == (0.60, 0.20), "rates = {got:?}");
    Ok(())
}

fn parser_round_trip() -> Check {
    let catalog = ActionCatalog::seed();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for i in 0..100 {
        let script = common::random_script(&catalog, &mut rng);
        let text = serialize_script(&script);
        let back = parse_script(&text, &catalog).map_err(|e| format!("generated #{i}: {e}\n{text}"))?;
        ensure!(back == script, "generated #{i} changed:\n{text}");
        ensure!(serialize_script(&back) == text, "generated #{i} text changed");
    }
    let corpus = load_corpus(corpus_path()).map_err(|e| e.to_string())?;
    for inst in &corpus.instances {
        let script = parse_script(&inst.code, &catalog).map_err(|e| format!("{}: {e}", inst.id))?;
        ensure!(serialize_script(&script) == inst.code, "{} does not round-trip", inst.id);
        let again = parse_script(&serialize_script(&script), &catalog).map_err(|e| e.to_string())?;
        ensure!(again == script, "{} AST changed", inst.id);
        let errors: Vec<_> = validate_script(&script, &catalog).into_iter().filter(|d| d.is_error()).collect();
        ensure!(errors.is_empty(), "{}: {:?}", inst.id, errors);
    }
    Ok(())
}

fn macro_transpilation() -> Check {
    let catalog = ActionCatalog::seed();
    let want = "- - Write(range=\"Sheet1!A1\", value=\"Hello\")\n\
                - - CopyPaste(source=\"Sheet1!A1:A5\", destination=\"Sheet1!B1:B5\")";
    let mut books = Vec::new();
    for (file, dialect) in [("copy_hello.bas", SourceDialect::Vba), ("copy_hello.gs", SourceDialect::Gas)] {
        let src = fs::read_to_string(root().join("fixtures").join(file)).map_err(|e| e.to_string())?;
        let (script, _) = transpile(&src, dialect, &catalog).map_err(|e| format!("{file}: {e}"))?;
        let got = serialize_script(&script);
        ensure!(got == want, "{file} produced:\n{got}");
        books.push(execute(&script, Workbook::blank()).map_err(|e| e.to_string())?);
    }
    let diff = compare(&books[0], &books[1], 1e-6);
    ensure!(diff.equivalent, "{diff}");
    Ok(())
}

const PROFIT: &str = "\
- - Write(range=\"Sheet1!D1\", value=\"Profit\")
- - Write(range=\"Sheet1!D2\", value=\"=B2-C2\")
- - AutoFill(source=\"Sheet1!D2\", destination=\"Sheet1!D2:D11\")
- - CreateChart(source=\"Sheet1!A1:D11\", destSheet=\"Sheet1\", chartType=\"Line\", chartName=\"Weekly Trends\")
- - SetChartLegend(chartName=\"Weekly Trends\", position=\"bottom\")";

const SALES: [f64; 10] = [1200.0, 1350.5, 980.0, 1500.0, 1420.25, 1100.0, 1675.0, 1590.0, 1310.0, 1800.75];
const COGS: [f64; 10] = [700.0, 810.0, 1020.5, 905.0, 880.0, 640.0, 990.0, 1005.25, 760.0, 1110.0];

fn sales_fixture() -> Workbook {
    let mut sheet = Sheet::new("Sheet1");
    for (c, h) in ["Week", "Sales", "COGS"].iter().enumerate() {
        sheet.set(Coord::new(c as u32 + 1, 1), CellValue::Text(h.to_string()));
    }
    for i in 0..10 {
        let row = i as u32 + 2;
        sheet.set(Coord::new(1, row), CellValue::Text(format!("Week {}", i + 1)));
        sheet.set(Coord::new(2, row), CellValue::Number(SALES[i]));
        sheet.set(Coord::new(3, row), CellValue::Number(COGS[i]));
    }
    Workbook { sheets: vec![sheet] }
}

fn profit_end_to_end() -> Check {
    let catalog = ActionCatalog::seed();
    let script = parse_script(PROFIT, &catalog).map_err(|e| e.to_string())?;
    ensure!(script.groups.len() == 5, "{} groups", script.groups.len());
    let actual = execute(&script, sales_fixture()).map_err(|e| e.to_string())?;

    // Hand-built oracle: the fixture plus literal differences and the chart.
    let mut oracle = sales_fixture();
    let s = &mut oracle.sheets[0];
    s.set(Coord::new(4, 1), CellValue::Text("Profit".into()));
    let hand = [500.0, 540.5, -40.5, 595.0, 540.25, 460.0, 685.0, 584.75, 550.0, 690.75];
    for (i, d) in hand.iter().enumerate() {
        ensure!(*d == SALES[i] - COGS[i], "oracle row {i} is wrong");
        s.set(Coord::new(4, i as u32 + 2), CellValue::Number(*d));
    }
    s.charts.push(ChartMeta {
        name: "Weekly Trends".into(),
        chart_type: "Line".into(),
        source: RangeRef::new(Some("Sheet1".into()), Coord::new(1, 1), Coord::new(4, 11)),
        dest_sheet: "Sheet1".into(),
        legend_position: Some("bottom".into()),
    });
    let diff = compare(&oracle, &actual, 1e-6);
    ensure!(diff.equivalent, "{diff}");

    let sheet = actual.sheet("Sheet1").ok_or("Sheet1 missing")?;
    for row in 2..=11u32 {
        let cell = sheet.get(Coord::new(4, row));
        ensure!(cell.formula_source() == Some(&format!("=B{row}-C{row}")), "D{row} = {cell:?}");
    }
    ensure!(sheet.charts.len() == 1, "{} charts", sheet.charts.len());
    let chart = &sheet.charts[0];
    ensure!(chart.name == "Weekly Trends" && chart.chart_type == "Line", "{chart:?}");
    ensure!(chart.legend_position.as_deref() == Some("bottom"), "{chart:?}");
    Ok(())
}

fn written_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for f in ["records.csv", "records.jsonl", "report.md", "report.json"] {
        out.push((f.to_string(), fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?));
    }
    Ok(out)
}

fn hermetic_evaluation() -> Check {
    let corpus = load_corpus(corpus_path()).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (run, workers) in [(0, 4), (1, 4), (2, 1), (3, 8)] {
        let mut config = RunConfig::baseline(corpus_path());
        config.workers = workers;
        let start = Instant::now();
        let outcome = evaluate(&config, &corpus, false).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure!(took < Duration::from_secs(60), "run {run} took {took:?}");
        ensure!(outcome.records.len() == 107, "{} records", outcome.records.len());
        ensure!(outcome.error_count() == 0, "{} errors", outcome.error_count());
        let model = &outcome.report.models[0];
        let keys: Vec<&str> = model.metrics.iter().map(|(k, _)| k.as_str()).collect();
        ensure!(model.n == 107 && keys == MetricScore::NAMES, "report row {model:?}");
        ensure!(
            outcome.report.to_markdown().contains("| Model | N | BLEU | GLEU | ROUGE-L | METEOR |"),
            "report header missing"
        );
        let dir = tmp.path().join(format!("run{run}"));
        write_evaluation(&dir, &outcome).map_err(|e| e.to_string())?;
        outputs.push(written_files(&dir)?);
    }
    for (i, o) in outputs.iter().enumerate().skip(1) {
        for ((name, a), (_, b)) in outputs[0].iter().zip(o) {
            ensure!(a == b, "{name} differs between run 0 and run {i}");
        }
    }
    Ok(())
}

fn sweep_plateau() -> Check {
    let corpus = load_corpus(corpus_path()).map_err(|e| e.to_string())?;
    let config = RunConfig::baseline(corpus_path());
    let shots: Vec<usize> = (1..=19).collect();
    let rows = sweep(&config, &corpus, None, &shots, 20, false).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 19 * 4, "{} rows", rows.len());
    for m in MetricScore::NAMES {
        let per: Vec<_> = rows.iter().filter(|r| r.metric == m).collect();
        ensure!(per.len() == 19, "{m}: {} rows", per.len());
        ensure!(per.iter().all(|r| r.n == 20), "{m}: not every row has 20 scores");
        ensure!(
            per.iter().all(|r| r.mean == per[0].mean && r.moe == per[0].moe),
            "{m}: rows differ across shot counts"
        );
    }
    let csv = sweep_to_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    ensure!(lines[0] == "shots,metric,mean,moe" && lines.len() == 77, "csv shape: {} lines", lines.len());
    ensure!(lines[1].starts_with("1,bleu,") && lines[76].starts_with("19,meteor,"), "csv order");
    Ok(())
}

fn retrieval_rank_one() -> Check {
    let docs = [
        ("charts.md", "Create a chart from a source range.\n\nSet the legend position of a chart to bottom or right."),
        ("filters.md", "Filter a range on one column.\n\nCriteria such as <2000 hide rows that fail the test."),
        ("pivots.md", "Pivot tables summarize the source data by rows and columns.\n\nValues are summed."),
        ("sheets.md", "Add a new worksheet with a name.\n\nFreeze panes above the selected cell."),
    ];
    let chunks = chunk_documents(&docs, 80, 10).map_err(|e| e.to_string())?;
    ensure!(chunks.len() >= 6, "{} chunks", chunks.len());
    let target = chunks[3].clone();
    let top = |index: &ChunkIndex| -> Result<(String, f64), String> {
        let hits = index.retrieve(&target.text, DEFAULT_TOP_K).map_err(|e| e.to_string())?;
        let (c, s) = hits.first().ok_or("no hits")?;
        Ok((c.id.clone(), *s))
    };
    let base = ChunkIndex::tfidf(chunks.clone()).map_err(|e| e.to_string())?;
    let (id, score) = top(&base)?;
    ensure!(id == target.id && (score - 1.0).abs() <= 1e-9, "rank 1 is {id} at {score}");

    let noise: Vec<DocChunk> = (0..100)
        .map(|i| DocChunk {
            id: format!("noise.md#{i:04}"),
            source_doc: "noise.md".into(),
            start: 0,
            text: format!("zq{i}alpha xv{i}beta kw{i}gamma"),
            vector: None,
        })
        .collect();
    let mut refit = chunks.clone();
    refit.extend(noise.iter().cloned());
    let refit = ChunkIndex::tfidf(refit).map_err(|e| e.to_string())?;
    let (id, score) = top(&refit)?;
    ensure!(id == target.id && (score - 1.0).abs() <= 1e-9, "after refit rank 1 is {id} at {score}");

    let mut grown = base;
    for c in noise {
        grown.add(c).map_err(|e| e.to_string())?;
    }
    let (id, score) = top(&grown)?;
    ensure!(id == target.id && (score - 1.0).abs() <= 1e-9, "after add rank 1 is {id} at {score}");
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("p-value fidelity", p_value_fidelity),
        ("pairwise table shape", pairwise_shape),
        ("margin-of-error properties", moe_properties),
        ("metric oracle equivalence", metric_oracles),
        ("exec and pass rates", rates_fidelity),
        ("parser round-trip", parser_round_trip),
        ("macro transpilation", macro_transpilation),
        ("profit script end-to-end", profit_end_to_end),
        ("hermetic evaluation run", hermetic_evaluation),
        ("sweep harness", sweep_plateau),
        ("retrieval rank one", retrieval_rank_one),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
