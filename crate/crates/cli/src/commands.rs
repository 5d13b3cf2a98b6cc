use std::fs::File;
use std::io::BufReader;

use anyhow::{bail, Context, Result};
use coexposure::calibration::{fit_alpha_eta, simulated_gaps, CalibrationResult, GapRow};
use coexposure::coexposure::capital_report;
use coexposure::concentration::ConcentrationReport;
use coexposure::ingest::{write_exposures, ExposureLoader};
use coexposure::irb::check_risk_inputs;
use coexposure::monte_carlo::simulate_lender;
use coexposure::scenario::{self, generate_ds1_like, generate_ds2_like, synthetic_loans};
use coexposure::{borrower_projection, Network};
use serde::Serialize;

use crate::config::{GenKind, RunConfig, WeightScheme};
use crate::output::Sink;

/// Loads every configured input file and applies the weighting scheme.
fn load(cfg: &RunConfig) -> Result<Network> {
    if cfg.input.exposures.is_empty() {
        bail!("no input: pass --input or set input.exposures in the config");
    }
    let mut loader = ExposureLoader::new();
    for path in &cfg.input.exposures {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        loader.read(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    }
    let net = loader.finish()?;
    Ok(match cfg.input.weight_scheme {
        WeightScheme::Step => net.apply_step_weights(&cfg.weights)?,
        WeightScheme::Pd => net.apply_pd_weights()?,
    })
}

pub fn gen(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net: Network = match cfg.gen.kind {
        GenKind::Ds1 => generate_ds1_like(&cfg.gen.ds1, cfg.seed)?,
        GenKind::Ds2 => generate_ds2_like(&cfg.gen.ds2, &synthetic_loans(cfg.gen.issuers, cfg.seed))?,
    };
    sink.csv("exposures.csv", |out| Ok(write_exposures(&net, out)?))
}

pub fn metrics(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    let (report, impact) = ConcentrationReport::from_network(&net)?;
    sink.csv("lender_stats.csv", |out| Ok(report.write_csv(out)?))?;
    sink.json("lender_stats.json", &report)?;
    sink.csv("impact.csv", |out| Ok(impact.write_csv(out)?))?;
    sink.json("impact.json", &impact.to_json())?;
    let graph = borrower_projection(&net, cfg.scenario.top_k.min(net.n_borrowers()))?;
    sink.csv("borrower_edges.csv", |out| Ok(graph.write_csv(out)?))
}

pub fn randomize(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    let res = scenario::randomize_within_risk(&net, cfg.scenario.trials, cfg.seed)?;
    let hist = res.histogram(cfg.scenario.bins);

    #[derive(Serialize)]
    struct Bin {
        lo: f64,
        hi: f64,
        count: usize,
    }
    let bins: Vec<Bin> = hist
        .counts
        .iter()
        .enumerate()
        .map(|(b, &count)| Bin { lo: hist.edges[b], hi: hist.edges[b + 1], count })
        .collect();
    sink.csv_rows("histogram.csv", &bins)?;
    sink.json("randomization.json", &res)
}

pub fn downgrade(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    if cfg.input.weight_scheme != WeightScheme::Step {
        bail!("downgrade reweights by risk category and needs the step weighting scheme");
    }
    let ids: Vec<&str> = cfg.scenario.downgrade_borrowers.iter().map(String::as_str).collect();
    let rep = scenario::downgrade(&net, &ids, cfg.scenario.downgrade_to, &cfg.weights)?;
    sink.csv("downgrade.csv", |out| {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lender".to_string(), "base_di".into()];
        header.extend(rep.borrower_ids.iter().map(|b| format!("single_{b}")));
        header.extend(["joint".into(), "convexity".into(), "convexity_pct".into()]);
        w.write_record(&header)?;
        for (i, lender) in rep.lender_ids.iter().enumerate() {
            let mut row = vec![lender.clone(), rep.base_di[i].to_string()];
            row.extend(rep.singles.iter().map(|s| s[i].to_string()));
            row.push(rep.joint[i].to_string());
            row.push(rep.convexity.as_ref().map(|c| c[i].to_string()).unwrap_or_default());
            row.push(rep.convexity_pct.as_ref().and_then(|c| c[i]).map(|p| p.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    })?;
    sink.json("downgrade.json", &rep)
}

pub fn grow_overlap(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    let t = scenario::grow_overlap(&net, cfg.scenario.steps, cfg.scenario.trials, cfg.seed)?;
    if t.truncated {
        log::warn!("some trials ran out of eligible borrower pairs before {} steps", cfg.scenario.steps);
    }

    #[derive(Serialize)]
    struct Step {
        step: usize,
        mean_di_sys: f64,
        std_err: f64,
        trials: usize,
    }
    let rows: Vec<Step> = (0..t.mean.len())
        .map(|s| Step { step: s, mean_di_sys: t.mean[s], std_err: t.std_err[s], trials: t.trials_at_step[s] })
        .collect();
    sink.csv_rows("trajectory.csv", &rows)?;
    sink.json("trajectory.json", &t)
}

pub fn stress(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    let recs = scenario::borrower_stress(&net, cfg.scenario.factor)?;
    sink.csv_rows("stress.csv", &recs)
}

pub fn capital(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    check_risk_inputs(&net)?;
    let rep = capital_report(&net, &cfg.capital, &cfg.coexposure)?;
    sink.csv("capital.csv", |out| Ok(rep.write_csv(out)?))?;
    sink.json("capital.json", &rep)
}

#[derive(Serialize)]
struct SimRow {
    lender: String,
    el: f64,
    var: f64,
    ul: f64,
    iterations: usize,
    q: f64,
    poorly_resolved: bool,
}

#[derive(Serialize)]
struct PdRow<'a> {
    borrower: &'a str,
    pd: f64,
    stressed_pd: f64,
}

fn write_pds(cfg: &RunConfig, net: &Network, sink: &mut Sink) -> Result<()> {
    let map = cfg.simulation.to_sim(cfg.seed).pd_map::<f64>();
    let rows: Vec<PdRow> = net
        .borrowers()
        .iter()
        .filter_map(|b| b.pd.map(|pd| PdRow { borrower: &b.id, pd, stressed_pd: map(pd) }))
        .collect();
    sink.csv_rows("borrower_pd.csv", &rows)
}

pub fn simulate(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let net = load(cfg)?;
    check_risk_inputs(&net)?;
    let sim = cfg.simulation.to_sim(cfg.seed);
    let mut rows = Vec::with_capacity(net.n_lenders());
    let mut results = Vec::with_capacity(net.n_lenders());
    for (i, lender) in net.lenders().iter().enumerate() {
        let r = simulate_lender(&net, i, &sim)?;
        rows.push(SimRow {
            lender: lender.id.clone(),
            el: r.el,
            var: r.var,
            ul: r.ul,
            iterations: r.iterations,
            q: r.q,
            poorly_resolved: r.poorly_resolved,
        });
        results.push(r);
    }
    sink.csv_rows("simulation.csv", &rows)?;
    write_pds(cfg, &net, sink)?;
    sink.json("simulation.json", &results)
}

pub fn calibrate(cfg: &RunConfig, sink: &mut Sink) -> Result<CalibrationResult> {
    let net = load(cfg)?;
    check_risk_inputs(&net)?;
    let (lenders, rows, _) = simulated_gaps(&net, &cfg.capital, cfg.coexposure.stress_factor, &cfg.simulation.to_sim(cfg.seed))?;
    sink.csv_rows("gaps.csv", &rows)?;
    let gaps: Vec<f64> = rows.iter().map(|r: &GapRow| r.gap).collect();
    let fit = fit_alpha_eta(&lenders, &gaps, &cfg.calibration)?;
    write_pds(cfg, &net, sink)?;
    sink.json("calibration.json", &fit)?;
    Ok(fit)
}
