use opinionlab::analysis::{analyze_pair, homophily_table};
use opinionlab::config::{DatasetFormat, DatasetSection, RunConfig};
use opinionlab::dynamics::spread;
use opinionlab::figures::export_figure_data;
use opinionlab::generator::{assortativity, calibrate_homophily, generate, Calibration, HomophilySpec};
use opinionlab::io::{self, archive, Dataset};
use opinionlab::observer::outcome_labels;
use opinionlab::{Error, OpinionSnapshot, Result, SocialGraph};
use serde_json::{json, Value};

use crate::output::{join, Output};
use crate::Common;

pub fn run(command: &str, args: &Common) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.dataset {
        cfg.dataset = Some(DatasetSection {
            dir: Some(dir.clone()),
            format: DatasetFormat::Canonical,
            opinions: None,
            edges: None,
        });
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    let mut out = Output::create(&cfg.output)?;
    let details = match command {
        "simulate" => simulate(&cfg, &mut out)?,
        "generate" => generate_cmd(&cfg, &mut out)?,
        "observe" => observe(&cfg, &mut out)?,
        "analyze" => analyze(&cfg, &mut out, args.homophily, false)?,
        "report" => analyze(&cfg, &mut out, args.homophily, true)?,
        other => return Err(Error::Config(format!("unknown command {other}"))),
    };
    out.finish(command, cfg.seed, &cfg.hash(), details)
}

fn load_dataset(cfg: &RunConfig) -> Result<Option<Dataset>> {
    let Some(ds) = &cfg.dataset else {
        return Ok(None);
    };
    let data = match ds.format {
        DatasetFormat::Canonical => io::ingest_dir(ds.dir.as_deref().expect("validated"))?,
        DatasetFormat::Wide => archive::import(
            ds.opinions.as_deref().expect("validated"),
            ds.edges.as_deref().expect("validated"),
        )?,
    };
    Ok(Some(data))
}

/// Synthetic population from the config, calibrating the homophily bias
/// first when a target assortativity is set.
fn population(cfg: &RunConfig) -> Result<(SocialGraph, OpinionSnapshot, Option<Calibration>)> {
    let pop = cfg.population_spec();
    let mut hom = cfg.homophily_spec();
    let calibration = match hom.target_assortativity {
        Some(t) => {
            let c = calibrate_homophily(&pop, t, cfg.homophily.tolerance, cfg.seed)?;
            hom = HomophilySpec::with_bias(c.bias);
            Some(c)
        }
        None => None,
    };
    let (g, s) = generate(&pop, &hom, cfg.seed)?;
    Ok((g, s, calibration))
}

/// Starting graph and opinions: the dataset's first snapshot when one is
/// configured, a generated population otherwise.
fn starting_point(cfg: &RunConfig) -> Result<(SocialGraph, OpinionSnapshot, Option<Vec<u64>>, Value)> {
    match load_dataset(cfg)? {
        Some(data) => {
            let first = data.snapshots[0].clone();
            let report = serde_json::to_value(&data.report)?;
            Ok((data.graph, first, Some(data.external_ids), json!({ "ingest": report })))
        }
        None => {
            let (g, s, cal) = population(cfg)?;
            Ok((g, s, None, json!({ "calibration": cal })))
        }
    }
}

fn write_snapshots(out: &mut Output, dir: &str, snaps: &[OpinionSnapshot], ids: Option<&[u64]>) -> Result<()> {
    for s in snaps {
        let path = out.file(&join(dir, &format!("snapshot_{}.csv", s.time_index())));
        io::write_snapshot_csv(&path, s, ids)?;
    }
    Ok(())
}

fn write_edges(out: &mut Output, dir: &str, graph: &SocialGraph, ids: Option<&[u64]>) -> Result<()> {
    let path = out.file(&join(dir, io::EDGES_FILE));
    io::write_edges_csv(&path, graph, ids)
}

fn simulate(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let (graph, initial, ids, origin) = starting_point(cfg)?;
    let dynamics = cfg.dynamics()?;
    let traj = dynamics.run(&graph, &initial, cfg.observations)?;
    write_snapshots(out, "", &traj.snapshots, ids.as_deref())?;
    write_edges(out, "", &graph, ids.as_deref())?;
    let spreads: Vec<f64> = traj.snapshots.iter().map(spread).collect();
    out.json(
        "simulation.json",
        &json!({
            "agents": graph.len(),
            "edges": graph.edge_count(),
            "spread": spreads,
            "group_populations": traj.snapshots.iter().map(|s| s.group_populations()).collect::<Vec<_>>(),
            "provenance": traj.provenance,
        }),
    )?;
    Ok(origin)
}

fn generate_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let (graph, snap, calibration) = population(cfg)?;
    let snap = snap.with_time_index(1);
    write_snapshots(out, "", std::slice::from_ref(&snap), None)?;
    write_edges(out, "", &graph, None)?;
    let summary = json!({
        "agents": graph.len(),
        "edges": graph.edge_count(),
        "assortativity": assortativity(&graph, &snap)?,
        "group_populations": snap.group_populations(),
        "calibration": calibration,
    });
    out.json("generation.json", &summary)?;
    Ok(Value::Null)
}

fn observe(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let (graph, initial, ids, origin) = starting_point(cfg)?;
    let exp = cfg.experiment()?;
    let res = exp.run(&graph, &initial, cfg.observations)?;
    write_snapshots(out, "latent", &res.latent.snapshots, ids.as_deref())?;
    write_edges(out, "latent", &graph, ids.as_deref())?;
    // Observed agents keep the ids they had in the latent population.
    let observed_ids: Vec<u64> = res
        .analysis_agents
        .iter()
        .map(|&a| ids.as_ref().map_or(a as u64, |m| m[a as usize]))
        .collect();
    write_snapshots(out, "observed", &res.observed_snapshots, Some(&observed_ids))?;
    write_edges(out, "observed", &res.analysis_graph, Some(&observed_ids))?;
    let labels = outcome_labels();
    for p in &res.pairs {
        let mut text = format!("latent,{}\n", labels.join(","));
        for (k, row) in p.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            text.push_str(&format!("{},{}\n", labels[k], cells.join(",")));
        }
        out.text(&format!("confusion_{}_{}.csv", p.time_before, p.time_after), &text)?;
    }
    out.json(
        "observe_summary.json",
        &json!({
            "agents": graph.len(),
            "observable_agents": res.analysis_agents.len(),
            "pairs": res.pairs,
            "agreement": res.pairs.iter().map(|p| p.agreement()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(origin)
}

fn analyze(cfg: &RunConfig, out: &mut Output, homophily: bool, figures: bool) -> Result<Value> {
    let data = load_dataset(cfg)?
        .ok_or_else(|| Error::Config("analysis needs a dataset (--dataset or a [dataset] section)".into()))?;
    if data.snapshots.len() < 2 && !homophily {
        return Err(Error::Config(
            "analysis needs at least two snapshots (or --homophily)".into(),
        ));
    }
    let opts = &cfg.analysis;
    let homophily_of = |s: &OpinionSnapshot| homophily_table(&data.graph, s, &opts.degree_strata, opts.support_floor);
    if homophily {
        let t = homophily_of(&data.snapshots[0])?;
        out.table("", &t)?;
    }
    let mut summaries = Vec::new();
    for w in data.snapshots.windows(2) {
        let pa = analyze_pair(&data.graph, &w[0], &w[1], opts)?;
        let dir = format!("pair_{}_{}", w[0].time_index(), w[1].time_index());
        for t in pa.tables() {
            out.table(&dir, &t)?;
        }
        if figures {
            let h = homophily_of(&w[0])?;
            let fig_dir = join("figures", &dir);
            let bundle = export_figure_data(&out.dir().join(&fig_dir), &pa.records, opts, Some(&h))?;
            for f in &bundle.families {
                out.file(&join(&fig_dir, &f.file));
            }
            out.file(&join(&fig_dir, "bundle.json"));
        }
        summaries.push(pa.summary);
    }
    out.json(
        "epoc_summary.json",
        &json!({
            "ingest": data.report,
            "pairs": summaries,
        }),
    )?;
    Ok(json!({ "ingest": data.report.to_string() }))
}
